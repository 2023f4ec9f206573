// Building a model in code and reading the validator's complaints about a broken one.

use indexmap::IndexMap;
use kmdp::model::{validate, ActionEntry, Horizon, StateEntry};
use kmdp::{build_model, ModelFile};

fn state(id: &str, killed: bool, r: Option<f64>) -> StateEntry {
    StateEntry {
        id: id.into(),
        killed,
        r,
    }
}

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let mut file = ModelFile {
        horizon: Horizon { m: 0, n: 1 },
        states: vec![
            vec![state("start", false, None)],
            vec![state("lost", true, None), state("won", false, Some(5.0))],
        ],
        actions: vec![vec![ActionEntry {
            id: "bet".into(),
            owner: "start".into(),
            q: 0.0,
            p: IndexMap::from([("won".to_string(), 0.5), ("lost".to_string(), 0.5)]),
        }]],
        crash: None,
        mu: None,
        allow_zero_kill: false,
    };
    let model = build_model(&file)?;
    println!(
        "valid model with crash value {:?} at stage 1",
        model.crash(1)
    );

    file.actions[0][0].p.insert("won".into(), 0.7);
    file.actions[0][0].q = f64::NAN;
    for violation in validate(&file) {
        println!("violation: {violation}");
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
