// The two-action reference model: one decision, a 10% or 40% chance of being killed.
//
// Lists the outcome law of each point policy, assesses it, and compares with the solver.

use kmdp::measure::{enumerate_outcomes, point_mass};
use kmdp::{assess_outcome, backward_induction, KilledModel, SimplePolicy};

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let model = KilledModel::load(concat!(env!("CARGO_MANIFEST_DIR"), "/data/m1.json"))?;
    let start = point_mass(&model, 0);
    let mut best = f64::NEG_INFINITY;
    for which in 0..2 {
        let phi = SimplePolicy::from_fn(&model, |_, _, acts| acts[which]);
        let law = enumerate_outcomes(&model, &start, &phi)?;
        println!("policy {}:", model.action_id(1, which));
        let mut omega = 0.0;
        for (outcome, mass) in law.iter() {
            let value = assess_outcome(&model, outcome)?;
            println!(
                "  {:<10} mass {mass:.2}  value {value:>5}",
                outcome.display(&model)
            );
            omega += mass * value;
        }
        println!("  assessment {omega:.4}");
        best = best.max(omega);
    }
    let solution = backward_induction(&model);
    let nu = solution.initial_value().get(0);
    let choice = solution
        .optimal_policy()
        .action(1, 0)
        .expect("s0 has actions");
    println!(
        "solver: value {nu:.4}, action {}",
        model.action_id(1, choice)
    );
    assert!((nu - best).abs() < 1e-12);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
