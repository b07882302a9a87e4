use std::process::{Command, Output};

fn cointurn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cointurn"))
        .args(args)
        .env_remove("COINTURN_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a CSV with `#` header lines and a column-name row removed.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn exact_constant_half_has_v_equal_n() {
    let o = cointurn(&["exact", "--schedule", "kind=constant,c=0.5", "--to", "50"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("# cointurn "));
    assert!(text.contains("# schedule-input: kind=constant,c=0.5\n"));
    let r = rows(&text);
    assert_eq!(r.len(), 50);
    for row in &r {
        let n: f64 = row[0].parse().unwrap();
        let v: f64 = row[3].parse().unwrap();
        assert!((v - n).abs() < 1e-9);
        let var: f64 = row[5].parse().unwrap();
        assert!((var - n).abs() < 1e-9);
    }
}

#[test]
fn exact_harmonic_v_tracks_log() {
    let o = cointurn(&["exact", "--schedule", "kind=harmonic_heating,c=1", "--from", "1000", "--to", "100000", "--step", "9900"]);
    assert!(o.status.success());
    let ratios: Vec<f64> = rows(&stdout(&o))
        .iter()
        .map(|r| r[3].parse::<f64>().unwrap() / r[0].parse::<f64>().unwrap().ln())
        .collect();
    assert!(ratios.windows(2).all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs()), "{ratios:?}");
}

#[test]
fn exact_divergent_schedule_leaves_coefficients_empty() {
    let o = cointurn(&["exact", "--schedule", "kind=critical_cooling,c=0.4", "--to", "10"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("# a_n: divergent"));
    assert!(rows(&text).iter().all(|r| r[2].is_empty() && !r[5].is_empty()));
}

#[test]
fn simulate_endpoints_are_deterministic_across_workers() {
    let args = ["simulate", "--schedule", "kind=critical_cooling,c=1", "--n", "500", "--trials", "300", "--seed", "9"];
    let one = cointurn(&[&["--workers", "1"][..], &args[..]].concat());
    let four = cointurn(&[&["--workers", "4"][..], &args[..]].concat());
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
    let text = stdout(&one);
    assert!(text.contains("# seed: 9\n"));
    let r = rows(&text);
    assert_eq!(r.len(), 300);
    for row in &r {
        let s: i64 = row[1].parse().unwrap();
        assert!(s.abs() <= 500 && s % 2 == 0);
    }
}

#[test]
fn simulate_cooling_paths_are_lipschitz() {
    let o = cointurn(&["simulate", "--schedule", "kind=power_cooling,a=1,gamma=0.5", "--n", "400", "--trials", "5", "--grid", "37"]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 5 * 38);
    for w in r.windows(2) {
        if w[0][0] != w[1][0] {
            continue;
        }
        let (t0, v0): (f64, f64) = (w[0][1].parse().unwrap(), w[0][2].parse().unwrap());
        let (t1, v1): (f64, f64) = (w[1][1].parse().unwrap(), w[1][2].parse().unwrap());
        assert!((v1 - v0).abs() <= (t1 - t0) + 1e-12);
    }
}

#[test]
fn simulate_reads_schedule_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("p.csv"), "n,p\n2,0\n3,1\n").unwrap();
    let cfg = dir.path().join("walk.cfg");
    std::fs::write(&cfg, "# frozen then one flip\nkind=custom\ntable=p.csv\ntail=constant:0\n").unwrap();
    let o = cointurn(&["simulate", "--schedule", cfg.to_str().unwrap(), "--n", "6", "--trials", "2", "--y1", "+1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for row in rows(&stdout(&o)) {
        assert_eq!(row[1], "-2");
        assert_eq!(row[2], "-1");
    }
}

#[test]
fn diffusive_mode_beyond_horizon_is_rejected() {
    let o = cointurn(&["simulate", "--schedule", "kind=constant,c=0.3", "--n", "100", "--grid", "4", "--mode", "diffusive", "--scale", "10000"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn zigzag_values_are_bounded_by_time() {
    let o = cointurn(&["zigzag", "--c", "1.5", "--T", "2", "--eps", "0.001", "--trials", "20", "--grid", "50", "--seed", "3"]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 20 * 51);
    for row in &r {
        let t: f64 = row[1].parse().unwrap();
        let v: f64 = row[2].parse().unwrap();
        assert!(v.abs() <= t + 1e-12);
    }
    let again = cointurn(&["zigzag", "--c", "1.5", "--T", "2", "--eps", "0.001", "--trials", "20", "--grid", "50", "--seed", "3"]);
    assert_eq!(o.stdout, again.stdout);
}

#[test]
fn zigzag_atom_counts_have_poisson_mean() {
    let o = cointurn(&["zigzag", "--c", "2", "--eps", "0.01", "--trials", "4000"]);
    assert!(o.status.success());
    let atoms: Vec<f64> = rows(&stdout(&o)).iter().map(|r| r[3].parse().unwrap()).collect();
    let mean = atoms.iter().sum::<f64>() / atoms.len() as f64;
    let mu = 2.0 * 100f64.ln();
    // Poisson: sd of the mean is sqrt(mu / trials)
    assert!((mean - mu).abs() < 4.0 * (mu / 4000.0).sqrt(), "{mean} vs {mu}");
}

#[test]
fn out_dir_variable_sets_default_destination() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_cointurn"))
        .args(["zigzag", "--c", "1", "--trials", "2"])
        .env("COINTURN_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(dir.path().join("zigzag.csv")).unwrap();
    assert_eq!(rows(&text).len(), 2);
}

#[test]
fn scan_emits_one_row_per_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let list = dir.path().join("list.txt");
    std::fs::write(
        &list,
        "kind=constant,c=0.3\n# skipped\nkind=critical_cooling,c=1\nkind=power_heating,c=1,gamma=0.5\n",
    )
    .unwrap();
    let out = dir.path().join("scan.csv");
    let o = cointurn(&["scan", "--list", list.to_str().unwrap(), "--horizon", "5000", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(out).unwrap();
    let regimes: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.rsplit(',').nth(4).unwrap())
        .collect();
    assert_eq!(regimes, ["bounded-band", "critical-cooling", "heating"]);
}

#[test]
fn verify_single_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = cointurn(&["verify", "--filter", "2,14", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let json = std::fs::read_to_string(out).unwrap();
    assert!(json.contains("\"id\": 2"));
    assert!(!json.contains("\"id\": 1,"));
    assert!(json.contains("\"anchor\""));
    assert!(String::from_utf8_lossy(&o.stderr).contains("PASS criterion 14"));
}

#[test]
fn verify_exit_code_follows_report() {
    let o = cointurn(&["verify", "--filter", "13"]);
    let text = stdout(&o);
    let overall = text.lines().find(|l| l.starts_with("  \"pass\"")).unwrap().to_string();
    let expected = if overall.contains("true") { 0 } else { 1 };
    assert_eq!(o.status.code(), Some(expected));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(cointurn(&["verify", "--filter", "99"]).status.code(), Some(2));
    assert_eq!(cointurn(&["exact", "--schedule", "kind=constant,c=2", "--to", "3"]).status.code(), Some(2));
    assert_eq!(cointurn(&["exact", "--schedule", "kind=constant,c=0.2,oops=1", "--to", "3"]).status.code(), Some(2));
    assert_eq!(cointurn(&["zigzag", "--c", "1", "--eps", "2"]).status.code(), Some(2));
    assert_eq!(cointurn(&["bogus"]).status.code(), Some(2));
}
