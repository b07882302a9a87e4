//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria 1 to 13 come from the verification suite and must also finish
//! inside their runtime limit. Criterion 14 reruns the suite with the same
//! seed and compares the JSON reports byte for byte.

use std::process::ExitCode;
use std::time::Instant;

use cointurn::verify::{run_suite, runtime_limit, VerifyConfig};

fn num(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e6) {
        format!("{v:.4e}")
    } else {
        format!("{}", (v * 1e6).round() / 1e6)
    }
}

fn main() -> ExitCode {
    let cfg = VerifyConfig::default();
    let first = run_suite(&cfg);
    let mut all_pass = true;
    for (c, (_, elapsed)) in first.report.criteria.iter().zip(&first.timings) {
        let secs = elapsed.as_secs_f64();
        let in_time = secs < runtime_limit(c.id);
        let pass = c.pass && in_time;
        all_pass &= pass;
        println!(
            "{} criterion {:>2} {} ({:.2}s, limit {:.0}s)",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            secs,
            c.runtime_limit_s
        );
        for check in &c.checks {
            let thr = check
                .threshold
                .iter()
                .map(|&v| num(v))
                .collect::<Vec<_>>()
                .join(", ");
            println!(
                "       [{}] {} = {} {} [{}]{}",
                if check.pass { "ok" } else { "x" },
                check.label,
                num(check.value),
                check.comparator,
                thr,
                check.note.as_deref().map(|n| format!(" ({n})")).unwrap_or_default()
            );
        }
        if !in_time {
            println!("       [x] runtime {secs:.2}s exceeds {:.0}s", c.runtime_limit_s);
        }
    }

    let start = Instant::now();
    let second = run_suite(&cfg);
    let identical = first.report.to_json() == second.report.to_json();
    all_pass &= identical;
    println!(
        "{} criterion 14 determinism: byte-identical JSON across runs ({:.2}s)",
        if identical { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );

    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
