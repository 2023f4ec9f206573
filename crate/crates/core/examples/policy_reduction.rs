// A history-dependent policy reduced to a Markov policy with the same marginals, then to a
// simple policy that is at least as good from every initial state.

use kmdp::measure::{assess_per_state, assess_policy, default_start, enumerate_outcomes};
use kmdp::policy::{dominate_simple, markovize, FnPolicy};
use kmdp::{History, KilledModel};

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let model = KilledModel::load(concat!(env!("CARGO_MANIFEST_DIR"), "/data/machine.json"))?;
    let mu = default_start(&model);

    // Keeps pushing a worn machine until it has been repaired once.
    let stubborn = FnPolicy(|h: History<'_>| {
        let t = h.stage() + 1;
        let action = |id: &str| {
            model
                .action_index(t, id)
                .expect("action exists at every stage")
        };
        let repaired = (1..t)
            .any(|s| h.actions.get((s - 1) as usize) == model.action_index(s, "repair").as_ref());
        Ok(match model.state_id(h.stage(), h.current_state()) {
            "ok" => vec![(action("run"), 0.5), (action("idle"), 0.5)],
            _ if repaired => vec![(action("repair"), 0.8), (action("push"), 0.2)],
            _ => vec![(action("push"), 0.9), (action("repair"), 0.1)],
        })
    });

    let theta = markovize(&model, &mu, &stubborn)?;
    let phi = dominate_simple(&model, &theta)?;
    let drift = enumerate_outcomes(&model, &mu, &stubborn)?
        .marginals(&model)
        .max_difference(&enumerate_outcomes(&model, &mu, &theta)?.marginals(&model));
    println!(
        "history-dependent: {:.6}",
        assess_policy(&model, &mu, &stubborn)?
    );
    println!(
        "Markov:            {:.6}  (largest marginal gap {drift:.1e})",
        assess_policy(&model, &mu, &theta)?
    );
    println!(
        "simple:            {:.6}",
        assess_policy(&model, &mu, &phi)?
    );
    let by_state_theta = assess_per_state(&model, &theta)?;
    let by_state_phi = assess_per_state(&model, &phi)?;
    for x in model.live_states(0) {
        println!(
            "  from {:<5} Markov {:.4}  simple {:.4}",
            model.state_id(0, x),
            by_state_theta[x],
            by_state_phi[x]
        );
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
