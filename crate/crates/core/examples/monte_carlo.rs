// Seeded sampling against the exact assessment.

use kmdp::measure::{assess_policy, default_start};
use kmdp::{estimate_value, KilledModel, MarkovPolicy};

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let model = KilledModel::load(concat!(env!("CARGO_MANIFEST_DIR"), "/data/machine.json"))?;
    let mu = default_start(&model);
    let uniform = MarkovPolicy::uniform(&model);
    let exact = assess_policy(&model, &mu, &uniform)?;
    for samples in [1_000, 10_000, 50_000] {
        let est = estimate_value(&model, &mu, &uniform, samples, 17)?;
        println!(
            "N={samples:<6} mean {:.4} ± {:.4}  exact {exact:.4}  ({:.1} SE)  kill rates {:?}",
            est.mean,
            est.std_error,
            (est.mean - exact).abs() / est.std_error,
            est.kill_rate
        );
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
