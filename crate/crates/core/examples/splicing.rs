// Running one policy up to a split stage and another afterwards. The assessment splits into
// the head's part and the tail's assessment weighted by where the head leaves the process.

use std::sync::Arc;

use kmdp::measure::{assess_per_state, assess_policy, default_start, for_each_outcome, Fate};
use kmdp::policy::{splice, Policy};
use kmdp::{KilledModel, MarkovPolicy, SimplePolicy};

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let model = KilledModel::load(concat!(env!("CARGO_MANIFEST_DIR"), "/data/machine.json"))?;
    let mu = default_start(&model);
    let split = 2;

    let head: Arc<dyn Policy> = Arc::new(MarkovPolicy::uniform(&model));
    let tail_model = model.window(split, model.last_stage(), None)?;
    let tail: Arc<dyn Policy> = Arc::new(SimplePolicy::from_fn(&tail_model, |_, _, acts| acts[0]));
    let spliced = splice(head.clone(), split, tail.clone());
    let whole = assess_policy(&model, &mu, &spliced)?;

    // Head on [m, split] with no terminal reward, and the law of x_split it leaves behind.
    let zeros = vec![0.0; model.states(split).len()];
    let head_model = model.window(model.first_stage(), split, Some(&zeros))?;
    let mut reach = vec![0.0; model.states(split).len()];
    for_each_outcome(&head_model, &mu, &head, usize::MAX, |h, fate, mass, _| {
        if fate == Fate::Survived {
            reach[h.current_state()] += mass;
        }
    })?;
    let head_part = assess_policy(&head_model, &mu, &head)?;
    let tail_values = assess_per_state(&tail_model, &tail)?;
    let tail_part: f64 = model
        .live_states(split)
        .map(|y| reach[y] * tail_values[y])
        .sum();

    println!("spliced policy:  {whole:.6}");
    println!(
        "head + tail:     {head_part:.6} + {tail_part:.6} = {:.6}",
        head_part + tail_part
    );
    let folded = assess_policy(
        &model.window(model.first_stage(), split, Some(&tail_values))?,
        &mu,
        &head,
    )?;
    println!("head with tail values as terminal reward: {folded:.6}");
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
