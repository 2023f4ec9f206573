// Dropping the first epoch: the derived model starts one stage later, and a policy's
// assessment decomposes over its first action and the derived model.

use std::sync::Arc;

use kmdp::measure::assess_state;
use kmdp::policy::Policy;
use kmdp::solver::fundamental_rhs;
use kmdp::{derived_model, KilledModel, MarkovPolicy};

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let model = KilledModel::load(concat!(env!("CARGO_MANIFEST_DIR"), "/data/machine.json"))?;
    let derived = derived_model(&model)?;
    println!(
        "original stages {}..={}, derived stages {}..={}",
        model.first_stage(),
        model.last_stage(),
        derived.first_stage(),
        derived.last_stage()
    );
    println!(
        "derived model file:\n{}",
        derived
            .to_file()
            .to_json_pretty()
            .lines()
            .take(12)
            .collect::<Vec<_>>()
            .join("\n")
    );

    let uniform: Arc<dyn Policy> = Arc::new(MarkovPolicy::uniform(&model));
    for x in model.live_states(model.first_stage()) {
        let direct = assess_state(&model, x, &uniform)?;
        let decomposed = fundamental_rhs(&model, x, uniform.clone())?;
        println!(
            "from {:<5} direct {direct:.6}  via first step {decomposed:.6}",
            model.state_id(0, x)
        );
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
