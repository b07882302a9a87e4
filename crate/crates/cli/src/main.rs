//! `cointurn`: experiment runner for coin-turning walks.
//!
//! Tabular outputs are CSV with a `#` comment header echoing the tool
//! version, the resolved configuration and the master seed. Exit status is
//! 0 on success, 1 on a failed run or failed verification, 2 on usage errors.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use cointurn::exact::{self, CoeffOptions, CoeffTable, ExactError};
use cointurn::schedule::classify;
use cointurn::simulate::{self, RescaleMode};
use cointurn::verify::{self, VerifyConfig};
use cointurn::{zigzag, Schedule, Sign};
use rayon::prelude::*;

const VERSION: &str = env!("CARGO_PKG_VERSION");
const OUT_DIR_VAR: &str = "COINTURN_OUT_DIR";

#[derive(Parser)]
#[command(name = "cointurn", version, about = "Coin-turning walk experiments")]
struct Cli {
    /// Worker threads for trial fan-out (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Table of p_n, a_n, v_n, Z, Var(S_n) over a range of n.
    Exact(ExactArgs),
    /// Sample walks: endpoints, or rescaled paths on a grid.
    Simulate(SimulateArgs),
    /// Sample zigzag paths: per-trial summaries, or values on a grid.
    Zigzag(ZigzagArgs),
    /// Run the verification suite and write a JSON report.
    Verify(VerifyArgs),
    /// Regime verdict for every schedule in a list.
    Scan(ScanArgs),
}

#[derive(Args)]
struct ExactArgs {
    /// Schedule config (`kind=...,key=value`) or a file holding one.
    #[arg(long)]
    schedule: String,
    #[arg(long, default_value_t = 1)]
    from: usize,
    #[arg(long)]
    to: usize,
    #[arg(long, default_value_t = 1)]
    step: usize,
    /// Truncation tolerance for the martingale coefficients.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    /// S_{nt}/n, linearly interpolated.
    Cooling,
    /// S_{Z(nt)}/sqrt(n).
    Diffusive,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    schedule: String,
    /// Walk length.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Emit paths at t = 0, 1/K, ..., 1 instead of endpoints.
    #[arg(long, value_name = "K")]
    grid: Option<usize>,
    #[arg(long, value_enum, default_value = "cooling")]
    mode: Mode,
    /// Time scale of the rescaling; defaults to n (cooling) or the largest
    /// integer level below v_n (diffusive).
    #[arg(long)]
    scale: Option<usize>,
    /// Fix Y_1 (`+1` or `-1`) instead of drawing it.
    #[arg(long, allow_hyphen_values = true)]
    y1: Option<Sign>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ZigzagArgs {
    /// Intensity of the point process c/x.
    #[arg(long)]
    c: f64,
    /// Horizon.
    #[arg(long = "T", default_value_t = 1.0)]
    horizon: f64,
    /// Truncation level: atoms below it are not sampled.
    #[arg(long, default_value_t = 1e-4)]
    eps: f64,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Emit values at t = 0, T/K, ..., T instead of summaries.
    #[arg(long, value_name = "K")]
    grid: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = verify::DEFAULT_SEED)]
    seed: u64,
    /// Comma-separated criterion ids; 14 reruns the selection and compares reports.
    #[arg(long, value_delimiter = ',')]
    filter: Option<Vec<u32>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    /// File with one schedule config per line.
    #[arg(long)]
    list: Option<PathBuf>,
    /// Inline schedule config; may be repeated.
    #[arg(long)]
    schedule: Vec<String>,
    /// Number of terms inspected per schedule.
    #[arg(long, default_value_t = 100_000)]
    horizon: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(anyhow::Error),
    Run(anyhow::Error),
    /// Verification ran and at least one criterion failed.
    Verdict,
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Run(e)
    }
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(w) = cli.workers {
        if w == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Exact(a) => run_exact(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Zigzag(a) => run_zigzag(a),
        Command::Verify(a) => run_verify(a),
        Command::Scan(a) => run_scan(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Verdict) => ExitCode::from(1),
    }
}

/// Reads a schedule from a file path if one exists, else parses the text.
fn load_schedule(arg: &str) -> Result<(Schedule, String), Failure> {
    let path = Path::new(arg);
    let (text, base) = if path.is_file() {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))
            .map_err(usage)?;
        (text, path.parent().map(Path::to_path_buf))
    } else {
        (arg.to_string(), None)
    };
    let map = cointurn::schedule::ConfigMap::parse(&text).map_err(usage)?;
    let s = Schedule::from_config(&map, base.as_deref()).map_err(usage)?;
    Ok((s, one_line(&text)))
}

fn one_line(text: &str) -> String {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join(", ")
}

/// `--out`, else `$COINTURN_OUT_DIR/<default_name>`, else stdout.
fn open_output(out: Option<&Path>, default_name: &str) -> Result<Box<dyn Write>, Failure> {
    let path = match out {
        Some(p) => Some(p.to_path_buf()),
        None => std::env::var_os(OUT_DIR_VAR).map(|d| PathBuf::from(d).join(default_name)),
    };
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            let f = fs::File::create(&p).with_context(|| format!("creating {}", p.display()))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

fn write_header(w: &mut dyn Write, command: &str, config: &[(&str, String)], seed: Option<u64>) -> io::Result<()> {
    writeln!(w, "# cointurn {VERSION}")?;
    writeln!(w, "# command: {command}")?;
    for (k, v) in config {
        writeln!(w, "# {k}: {v}")?;
    }
    if let Some(seed) = seed {
        writeln!(w, "# seed: {seed}")?;
    }
    Ok(())
}

fn csv_writer(w: Box<dyn Write>) -> csv::Writer<Box<dyn Write>> {
    csv::WriterBuilder::new().has_headers(false).from_writer(w)
}

fn finish(mut w: csv::Writer<Box<dyn Write>>) -> Result<(), Failure> {
    w.flush().context("writing output")?;
    Ok(())
}

fn run_exact(a: ExactArgs) -> Result<(), Failure> {
    if a.from == 0 || a.to < a.from || a.step == 0 {
        return Err(usage(anyhow!("need 1 <= --from <= --to and --step >= 1")));
    }
    if !(a.tol > 0.0) {
        return Err(usage(anyhow!("--tol must be positive")));
    }
    let (s, raw) = load_schedule(&a.schedule)?;
    let opts = CoeffOptions::with_tol(a.tol);
    let table = match CoeffTable::covering(&s, a.to, &opts) {
        Ok(t) => Some(t),
        Err(ExactError::Divergent { .. }) => None,
        Err(e) => return Err(Failure::Run(e.into())),
    };
    let var = exact::variance_series(&s, a.to);

    let mut out = open_output(a.out.as_deref(), "exact.csv")?;
    let config = [
        ("schedule-input", raw),
        ("schedule", s.to_config()),
        ("range", format!("from={},to={},step={}", a.from, a.to, a.step)),
        ("tol", a.tol.to_string()),
    ];
    write_header(&mut out, "exact", &config, None).context("writing output")?;
    if table.is_none() {
        writeln!(out, "# a_n: divergent series, coefficient columns left empty").context("writing output")?;
    }
    let mut w = csv_writer(out);
    w.write_record(["n", "p_n", "a_n", "v_n", "Z", "var_exact", "ratio"]).context("writing output")?;
    for n in (a.from..=a.to).step_by(a.step) {
        let mut row = vec![n.to_string(), s.prob(n).to_string()];
        match &table {
            Some(t) => {
                let d = exact::diag_from(t, n);
                // Z(n): first m inside the table with v_m >= n
                let z = t.first_reaching(n as f64).map(|z| z.to_string()).unwrap_or_default();
                row.extend([d.a_n.to_string(), d.v_n.to_string(), z, var[n].to_string(), d.ratio.to_string()]);
            }
            None => row.extend([String::new(), String::new(), String::new(), var[n].to_string(), String::new()]),
        }
        w.write_record(&row).context("writing output")?;
    }
    finish(w)
}

fn run_simulate(a: SimulateArgs) -> Result<(), Failure> {
    if a.n == 0 || a.trials == 0 {
        return Err(usage(anyhow!("--n and --trials must be at least 1")));
    }
    if a.grid == Some(0) || a.scale == Some(0) {
        return Err(usage(anyhow!("--grid and --scale must be at least 1")));
    }
    let (s, raw) = load_schedule(&a.schedule)?;
    let opts = CoeffOptions::default();
    let mode = match a.mode {
        Mode::Cooling => RescaleMode::Cooling {
            scale: a.scale.unwrap_or(a.n),
        },
        Mode::Diffusive => {
            let scale = match a.scale {
                Some(k) => k,
                None => {
                    let v = exact::v_cum(&s, a.n, &opts).map_err(|e| Failure::Run(e.into()))?;
                    (v.floor() as usize).max(1)
                }
            };
            RescaleMode::Diffusive { scale }
        }
    };

    let mut out = open_output(a.out.as_deref(), "simulate.csv")?;
    let mut config = vec![
        ("schedule-input", raw),
        ("schedule", s.to_config()),
        ("n", a.n.to_string()),
        ("trials", a.trials.to_string()),
        ("y1", a.y1.map(|y| y.to_string()).unwrap_or_else(|| "random".into())),
    ];
    match a.grid {
        None => {
            write_header(&mut out, "simulate", &config, Some(a.seed)).context("writing output")?;
            let mut w = csv_writer(out);
            w.write_record(["trial", "S_n", "Y_n"]).context("writing output")?;
            let ends = simulate::sample_endpoints(&s, a.n, a.trials, a.seed, a.y1);
            for (t, e) in ends.iter().enumerate() {
                w.write_record([t.to_string(), e.s_n.to_string(), e.y_n.to_string()])
                    .context("writing output")?;
            }
            finish(w)
        }
        Some(k) => {
            let grid: Vec<f64> = (0..=k).map(|i| i as f64 / k as f64).collect();
            let (mode_name, scale) = match mode {
                RescaleMode::Cooling { scale } => ("cooling", scale),
                RescaleMode::Diffusive { scale } => ("diffusive", scale),
            };
            config.push(("mode", mode_name.into()));
            config.push(("scale", scale.to_string()));
            config.push(("grid", k.to_string()));
            // validate the horizon once before fanning out
            let probe = simulate::trial_walk(&s, a.n, a.seed, 0, a.y1);
            simulate::rescaled_path(&probe, &s, mode, &grid, &opts).map_err(|e| usage(anyhow!(e)))?;
            let paths: Vec<Vec<(f64, f64)>> = (0..a.trials as u64)
                .into_par_iter()
                .map(|t| {
                    let w = simulate::trial_walk(&s, a.n, a.seed, t, a.y1);
                    simulate::rescaled_path(&w, &s, mode, &grid, &opts).map(|r| r.samples)
                })
                .collect::<Result<_, _>>()
                .map_err(|e| Failure::Run(e.into()))?;
            write_header(&mut out, "simulate", &config, Some(a.seed)).context("writing output")?;
            let mut w = csv_writer(out);
            w.write_record(["trial", "t", "value"]).context("writing output")?;
            for (trial, samples) in paths.iter().enumerate() {
                for &(t, v) in samples {
                    w.write_record([trial.to_string(), t.to_string(), v.to_string()])
                        .context("writing output")?;
                }
            }
            finish(w)
        }
    }
}

fn run_zigzag(a: ZigzagArgs) -> Result<(), Failure> {
    if a.trials == 0 || a.grid == Some(0) {
        return Err(usage(anyhow!("--trials and --grid must be at least 1")));
    }
    if !(a.c > 0.0 && a.eps > 0.0 && a.eps < a.horizon && a.horizon.is_finite()) {
        return Err(usage(anyhow!("need c > 0 and 0 < eps < T")));
    }
    let (c, horizon, eps) = (a.c, a.horizon, a.eps);
    let mut out = open_output(a.out.as_deref(), "zigzag.csv")?;
    let mut config = vec![
        ("c", c.to_string()),
        ("T", horizon.to_string()),
        ("eps", eps.to_string()),
        ("trials", a.trials.to_string()),
    ];
    match a.grid {
        None => {
            let rows = zigzag::zigzag_ensemble(c, horizon, eps, a.trials, a.seed, |z| {
                (
                    z.eval(horizon).expect("horizon is in range"),
                    z.zeros(eps, horizon).expect("window is valid"),
                    z.pm.atoms.len(),
                )
            })
            .map_err(|e| Failure::Run(e.into()))?;
            write_header(&mut out, "zigzag", &config, Some(a.seed)).context("writing output")?;
            writeln!(out, "# zeros counted on [eps, T]").context("writing output")?;
            let mut w = csv_writer(out);
            w.write_record(["trial", "endpoint", "zeros", "atoms"]).context("writing output")?;
            for (t, (end, zeros, atoms)) in rows.iter().enumerate() {
                w.write_record([t.to_string(), end.to_string(), zeros.to_string(), atoms.to_string()])
                    .context("writing output")?;
            }
            finish(w)
        }
        Some(k) => {
            config.push(("grid", k.to_string()));
            let grid: Vec<f64> = (0..=k).map(|i| horizon * i as f64 / k as f64).collect();
            let paths = zigzag::zigzag_ensemble(c, horizon, eps, a.trials, a.seed, |z| {
                grid.iter()
                    .map(|&t| z.eval(t.min(horizon)).expect("grid inside horizon"))
                    .collect::<Vec<_>>()
            })
            .map_err(|e| Failure::Run(e.into()))?;
            write_header(&mut out, "zigzag", &config, Some(a.seed)).context("writing output")?;
            let mut w = csv_writer(out);
            w.write_record(["trial", "t", "value"]).context("writing output")?;
            for (trial, vals) in paths.iter().enumerate() {
                for (t, v) in grid.iter().zip(vals) {
                    w.write_record([trial.to_string(), t.to_string(), v.to_string()])
                        .context("writing output")?;
                }
            }
            finish(w)
        }
    }
}

fn run_verify(a: VerifyArgs) -> Result<(), Failure> {
    let (filter, determinism) = match a.filter {
        None => (None, true),
        Some(ids) => {
            if ids.is_empty() {
                return Err(usage(anyhow!("--filter needs at least one criterion id")));
            }
            if let Some(bad) = ids.iter().find(|id| **id != 14 && !verify::CRITERIA.contains(id)) {
                return Err(usage(anyhow!("unknown criterion {bad}; valid ids are 1 to 14")));
            }
            let det = ids.contains(&14);
            let rest: Vec<u32> = ids.into_iter().filter(|&id| id != 14).collect();
            (Some(rest), det)
        }
    };
    let cfg = VerifyConfig { seed: a.seed, filter };
    let outcome = verify::run_suite(&cfg);
    let json = outcome.report.to_json();
    for c in &outcome.report.criteria {
        eprintln!("{} criterion {:>2} {}", if c.pass { "PASS" } else { "FAIL" }, c.id, c.name);
    }
    let mut pass = outcome.report.pass;
    if determinism {
        let same = verify::run_suite(&cfg).report.to_json() == json;
        eprintln!("{} criterion 14 determinism", if same { "PASS" } else { "FAIL" });
        pass &= same;
    }
    let mut out = open_output(a.out.as_deref(), "verify.json")?;
    writeln!(out, "{json}").context("writing output")?;
    out.flush().context("writing output")?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Verdict)
    }
}

fn run_scan(a: ScanArgs) -> Result<(), Failure> {
    if a.horizon == 0 {
        return Err(usage(anyhow!("--horizon must be at least 1")));
    }
    let mut inputs: Vec<String> = Vec::new();
    if let Some(list) = &a.list {
        let text = fs::read_to_string(list)
            .with_context(|| format!("reading {}", list.display()))
            .map_err(usage)?;
        inputs.extend(
            text.lines()
                .map(|l| l.split('#').next().unwrap_or("").trim())
                .filter(|l| !l.is_empty())
                .map(str::to_string),
        );
    }
    inputs.extend(a.schedule.iter().cloned());
    if inputs.is_empty() {
        return Err(usage(anyhow!("give schedules with --list or --schedule")));
    }
    let base = a.list.as_deref().and_then(Path::parent);
    let schedules = inputs
        .iter()
        .map(|text| {
            let map = cointurn::schedule::ConfigMap::parse(text)?;
            Schedule::from_config(&map, base)
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(usage)?;
    let verdicts: Vec<_> = schedules
        .par_iter()
        .map(|s| classify(s, a.horizon))
        .collect();

    let mut out = open_output(a.out.as_deref(), "scan.csv")?;
    write_header(&mut out, "scan", &[("horizon", a.horizon.to_string())], None).context("writing output")?;
    let mut w = csv_writer(out);
    w.write_record(["schedule", "mixing", "regime", "sum_p", "sum_q", "sum_min", "scaled_prob"])
        .context("writing output")?;
    for (s, v) in schedules.iter().zip(&verdicts) {
        let d = &v.diagnostics;
        w.write_record([
            s.to_config(),
            v.mixing.as_str().to_string(),
            v.regime.as_str().to_string(),
            d.sum_p.to_string(),
            d.sum_q.to_string(),
            d.sum_min.to_string(),
            d.scaled_prob.to_string(),
        ])
        .context("writing output")?;
    }
    finish(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_line_drops_comments_and_blank_lines() {
        assert_eq!(one_line("kind=constant\n# note\n\nc=0.3 # trailing\n"), "kind=constant, c=0.3");
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn unreadable_schedule_is_a_usage_error() {
        assert!(matches!(load_schedule("kind=nope"), Err(Failure::Usage(_))));
        assert!(matches!(load_schedule("kind=constant,c=0.3,bogus=1"), Err(Failure::Usage(_))));
    }
}
