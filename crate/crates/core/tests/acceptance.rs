//! Runs the ten reproducibility checks and prints one PASS/FAIL line each.
//!
//! This target has no libtest harness so the lines always reach stdout.

use std::process::ExitCode;
use std::time::Instant;

use kcycle::suite::{run, CRITERIA};

fn main() -> ExitCode {
    let mut failed = 0;
    for (id, title) in CRITERIA {
        let start = Instant::now();
        match run(id) {
            Ok(outcome) => {
                println!(
                    "{} ({:.1}s)",
                    outcome.summary_line(),
                    start.elapsed().as_secs_f64()
                );
                for line in &outcome.details {
                    println!("       {line}");
                }
                if !outcome.passed {
                    failed += 1;
                }
            }
            Err(e) => {
                println!("FAIL [{id:>2}] {title}: error {e}");
                failed += 1;
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        CRITERIA.len() - failed,
        CRITERIA.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
