//! Runs every acceptance criterion, one pass/fail line each, followed by
//! the measured values. Exits non-zero if any criterion fails.

use autocorr::acceptance::{run_criterion, Faults, CRITERIA};

fn main() {
    let mut failed = Vec::new();
    for (id, _) in CRITERIA {
        let r = run_criterion(id, &Faults::none());
        println!("{}", r.summary());
        for c in &r.checks {
            println!("{c}");
        }
        if !r.passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", CRITERIA.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
