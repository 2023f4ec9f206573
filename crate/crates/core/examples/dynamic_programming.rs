// Solving in two pieces: values at an interior stage serve as terminal rewards for the
// earlier piece, and optimal policies of both pieces splice into an optimal policy.

use std::sync::Arc;

use kmdp::measure::assess_state;
use kmdp::policy::splice;
use kmdp::solver::{dp_value, ValueFunction};
use kmdp::{backward_induction, KilledModel};

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let model = KilledModel::load(concat!(env!("CARGO_MANIFEST_DIR"), "/data/machine.json"))?;
    let (m, n) = (model.first_stage(), model.last_stage());
    let r = ValueFunction::terminal(&model);
    let full = dp_value(&model, m, n, &r)?;
    for t in m + 1..n {
        let inner = dp_value(&model, t, n, &r)?;
        let composed = dp_value(&model, m, t, &inner)?;
        let head = model.window(m, t, Some(inner.values()))?;
        let tail = model.window(t, n, None)?;
        let pieces = splice(
            Arc::new(backward_induction(&head).optimal_policy()),
            t,
            Arc::new(backward_induction(&tail).optimal_policy()),
        );
        for x in model.live_states(m) {
            println!(
                "split at {t}, from {:<5} one piece {:.6}  two pieces {:.6}  spliced policy {:.6}",
                model.state_id(m, x),
                full.get(x),
                composed.get(x),
                assess_state(&model, x, &pieces)?
            );
        }
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
