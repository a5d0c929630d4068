//! One PASS/FAIL line per acceptance criterion; exits nonzero on any failure.

mod common;

use std::process::ExitCode;
use std::time::Instant;

fn main() -> ExitCode {
    let started = Instant::now();
    let mut failed = 0;
    for (name, check) in common::CRITERIA {
        let t0 = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name} ({secs:.2}s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name} ({secs:.2}s): {why}");
            }
        }
    }
    let total = started.elapsed();
    if total < common::RUNTIME_BUDGET {
        println!("PASS runtime_budget: {:.2}s < {}s", total.as_secs_f64(), common::RUNTIME_BUDGET.as_secs());
    } else {
        failed += 1;
        println!("FAIL runtime_budget: {:.2}s >= {}s", total.as_secs_f64(), common::RUNTIME_BUDGET.as_secs());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
