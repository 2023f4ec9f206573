// Extracting simple policies with slack: every stage may settle for an action within `chi_t`
// of the best, and the result is guaranteed within `sum chi` of optimal.

use kmdp::measure::assess_per_state;
use kmdp::{backward_induction, extract_simple_policy, KilledModel};

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let model = KilledModel::load(concat!(env!("CARGO_MANIFEST_DIR"), "/data/machine.json"))?;
    let solution = backward_induction(&model);
    let nu = solution.initial_value();
    for chi in [[0.0, 0.0, 0.0], [0.0, 1.5, 0.0], [2.0, 2.0, 2.0]] {
        let extracted = extract_simple_policy(&model, &solution, &chi)?;
        let omega = assess_per_state(&model, &extracted.policy)?;
        println!("slacks {chi:?}, certificate {}", extracted.epsilon);
        for x in model.live_states(model.first_stage()) {
            let loss = nu.get(x) - omega[x];
            println!(
                "  {:<5} optimal {:.4}  achieved {:.4}  loss {loss:.4}",
                model.state_id(0, x),
                nu.get(x),
                omega[x]
            );
            assert!(loss <= extracted.epsilon + 1e-9);
        }
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
