//! Finite-horizon Markov decision models with killing.
//!
//! A model runs over stages `m..=n`. Every stage after the first has one killed state: an
//! action taken at stage `t - 1` may end the process there, collecting its running reward and
//! the crash value of the killed state instead of continuing. This crate
//!
//! * loads and validates models from JSON ([`model`]);
//! * enumerates the exact law of outcomes under any policy and assesses policies
//!   ([`measure`]);
//! * solves the optimality equations by backward induction and extracts simple policies with
//!   an optimality certificate ([`solver`]);
//! * reduces history-dependent policies to Markov and then simple ones ([`policy`]);
//! * estimates assessments by seeded sampling ([`sim`]);
//! * checks all of the above against brute-force oracles on random models ([`verify`]).
//!
//! ```
//! use kmdp::{backward_induction, KilledModel};
//!
//! let model = KilledModel::from_json(r#"{
//!     "horizon": {"m": 0, "n": 1},
//!     "states": [[{"id": "s"}], [{"id": "dead", "killed": true}, {"id": "home", "r": 1}]],
//!     "actions": [[
//!         {"id": "walk", "owner": "s", "q": 0, "p": {"home": 0.9, "dead": 0.1}},
//!         {"id": "run", "owner": "s", "q": 1, "p": {"home": 0.5, "dead": 0.5}}
//!     ]]
//! }"#).unwrap();
//! let solution = backward_induction(&model);
//! // walk: 0.9 * 1; run: 1 + 0.5 * 1 + 0.5 * (-1) with the automatic crash value -1.
//! assert_eq!(solution.initial_value().get(0), 1.0);
//! assert_eq!(solution.optimal_policy().action(1, 0), Some(1));
//! ```

pub mod cli;
pub mod error;
pub mod measure;
pub mod model;
pub mod policy;
pub mod sim;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use measure::{assess_outcome, assess_policy, assess_state, enumerate_outcomes, OutcomeLaw};
pub use model::{build_model, derived_model, AugmentedOutcome, KilledModel, ModelFile, Stage, Way};
pub use policy::{History, MarkovPolicy, Policy, SimplePolicy};
pub use sim::{estimate_value, SimulationResult};
pub use solver::{backward_induction, extract_simple_policy, Solution, ValueFunction};
