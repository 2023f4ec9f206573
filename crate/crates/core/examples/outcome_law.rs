// Exact outcome law of a randomized policy: kill probabilities and one-dimensional marginals.

use kmdp::measure::{default_start, enumerate_outcomes, expectation};
use kmdp::{assess_outcome, KilledModel, MarkovPolicy};

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let model = KilledModel::load(concat!(env!("CARGO_MANIFEST_DIR"), "/data/machine.json"))?;
    let mu = default_start(&model);
    let uniform = MarkovPolicy::uniform(&model);
    let law = enumerate_outcomes(&model, &mu, &uniform)?;
    println!(
        "{} outcomes, total mass {:.12}",
        law.len(),
        law.total_mass()
    );

    for t in model.first_stage() + 1..=model.last_stage() {
        let killed = expectation(&law, |o| if o.kill_stage() == Some(t) { 1.0 } else { 0.0 });
        println!("P(killed at stage {t}) = {killed:.5}");
    }
    let survived = expectation(&law, |o| if o.is_killed() { 0.0 } else { 1.0 });
    println!("P(survive) = {survived:.5}");

    let marginals = law.marginals(&model);
    for t in model.first_stage()..=model.last_stage() {
        let row: Vec<String> = model
            .states(t)
            .iter()
            .enumerate()
            .map(|(x, s)| format!("{}={:.4}", s.id, marginals.state(t, x)))
            .collect();
        println!("x_{t}: {}", row.join("  "));
    }

    let omega = expectation(&law, |o| {
        assess_outcome(&model, o).expect("enumerated outcomes are consistent")
    });
    println!("assessment of the uniform policy: {omega:.4}");
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
