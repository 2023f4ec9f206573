// Runs every seeded property check on a batch of random models.

use kmdp::verify::{run_check, CheckKind, RunOptions};

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let options = RunOptions::default();
    for kind in CheckKind::ALL {
        let report = run_check(kind, 2024, 25, &options);
        println!(
            "{:<12} {:>3} instances  max discrepancy {:.2e}  {}",
            kind.name(),
            report.instances,
            report.max_discrepancy,
            if report.passed { "ok" } else { "FAILED" }
        );
        if !report.passed {
            return Err(format!("check {kind} failed").into());
        }
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
