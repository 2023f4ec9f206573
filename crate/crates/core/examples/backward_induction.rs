// Solves a three-epoch maintenance model and prints the value tables stage by stage.

use kmdp::solver::{operator_t, ValueFunction};
use kmdp::{backward_induction, KilledModel};

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let model = KilledModel::load(concat!(env!("CARGO_MANIFEST_DIR"), "/data/machine.json"))?;
    let solution = backward_induction(&model);
    let policy = solution.optimal_policy();
    for t in (model.first_stage()..=model.last_stage()).rev() {
        let row: Vec<String> = model
            .states(t)
            .iter()
            .zip(solution.value(t).values())
            .map(|(s, v)| format!("{}={v:.3}", s.id))
            .collect();
        println!("stage {t}: {}", row.join("  "));
        if t > model.first_stage() {
            let choices: Vec<String> = model
                .live_states(t - 1)
                .map(|x| {
                    let a = policy.action(t, x).expect("live states have actions");
                    format!("{} -> {}", model.state_id(t - 1, x), model.action_id(t, a))
                })
                .collect();
            println!("  decide at {t}: {}", choices.join(", "));
        }
    }

    // The same values by applying the one-step operator by hand.
    let mut nu = ValueFunction::terminal(&model);
    for _ in 0..model.epochs() {
        nu = operator_t(&model, &nu)?.values;
    }
    assert_eq!(nu.values(), solution.initial_value().values());
    println!(
        "value of the initial distribution: {:.4}",
        solution
            .initial_value()
            .dot(model.initial_distribution().unwrap_or(&[1.0]))
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
