//! Acceptance gate: one PASS/FAIL line per criterion, with the worst check,
//! the tolerance and the wall-clock time against the budget.

use std::process::ExitCode;
use std::time::Instant;

use gerbecalc::criteria::{self, CRITERIA};

const SEED: u64 = 20_240_601;

fn main() -> ExitCode {
    let mut failed = 0;
    for (id, _, _) in CRITERIA {
        let start = Instant::now();
        let out = criteria::run(id, SEED).expect("known criterion");
        let secs = start.elapsed().as_secs_f64();
        let in_time = secs < out.budget;
        let worst = out
            .checks
            .iter()
            .find(|c| !c.pass)
            .or_else(|| {
                out.checks.iter().max_by(|a, b| {
                    (a.metric / a.tolerance.max(f64::MIN_POSITIVE))
                        .total_cmp(&(b.metric / b.tolerance.max(f64::MIN_POSITIVE)))
                })
            })
            .expect("at least one check");
        let ok = out.pass && in_time;
        failed += usize::from(!ok);
        println!(
            "{} criterion {:>2} {:<28} {:>3} checks  worst {} = {:.3e} (tol {:.1e})  {:.2}s / {}s{}",
            if ok { "PASS" } else { "FAIL" },
            id,
            out.name,
            out.checks.len(),
            worst.fixture,
            worst.metric,
            worst.tolerance,
            secs,
            out.budget,
            match (&worst.error, in_time) {
                (Some(e), _) => format!("  error: {e}"),
                (None, false) => "  over budget".into(),
                _ => String::new(),
            }
        );
    }
    println!(
        "{} of {} criteria passed",
        CRITERIA.len() - failed,
        CRITERIA.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
