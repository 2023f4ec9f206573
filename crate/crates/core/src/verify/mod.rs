//! Independent oracles and seeded property checks.
//!
//! A check run draws `count` instances from a seed. Each instance is a random model plus the
//! inputs of one identity (policies, initial distribution, slacks, split stage), all of it
//! serializable, so a failing instance can be dumped and replayed bit for bit.

mod checks;
mod generate;
mod oracle;

pub use checks::{
    check_dp_principle, check_extraction, check_fundamental, check_markov_property, check_oracle,
    check_sufficiency, check_uniform_optimality,
};
pub use generate::{
    instance_seed, mix, random_markov, random_model, random_model_file, random_mu, random_slacks,
    GeneratorParams, HashedHistoryPolicy, ParityPolicy, PolicyRecipe,
};
pub use oracle::{brute_force_value, simple_policy_count, DEFAULT_POLICY_CAP};

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_model, KilledModel, ModelFile, Stage};
use crate::policy::Policy;
use crate::solver::{backward_induction, extract_simple_policy};

/// Tolerance of every check.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Oracle,
    Fundamental,
    Extraction,
    Sufficiency,
    Markov,
    Dp,
    Uniform,
}

impl CheckKind {
    pub const ALL: [CheckKind; 7] = [
        CheckKind::Oracle,
        CheckKind::Fundamental,
        CheckKind::Extraction,
        CheckKind::Sufficiency,
        CheckKind::Markov,
        CheckKind::Dp,
        CheckKind::Uniform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Oracle => "oracle",
            CheckKind::Fundamental => "fundamental",
            CheckKind::Extraction => "extraction",
            CheckKind::Sufficiency => "sufficiency",
            CheckKind::Markov => "markov",
            CheckKind::Dp => "dp",
            CheckKind::Uniform => "uniform",
        }
    }
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CheckKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CheckKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown check `{s}`")))
    }
}

/// Inputs of one check instance besides the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum Inputs {
    Oracle,
    Fundamental {
        policy: PolicyRecipe,
    },
    Extraction {
        chi: Vec<f64>,
    },
    Sufficiency {
        mu: Vec<f64>,
        policy: PolicyRecipe,
    },
    Markov {
        mu: Vec<f64>,
        split: Stage,
        head: PolicyRecipe,
        /// Policy of the window from `split` to the last stage.
        tail: PolicyRecipe,
    },
    Dp,
    Uniform {
        /// Branch policy per initial state id.
        family: IndexMap<String, PolicyRecipe>,
        epsilon: f64,
        grid: Vec<Vec<f64>>,
    },
}

/// A self-contained check instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub seed: u64,
    pub model: ModelFile,
    #[serde(flatten)]
    pub inputs: Inputs,
}

impl Instance {
    pub fn kind(&self) -> CheckKind {
        match self.inputs {
            Inputs::Oracle => CheckKind::Oracle,
            Inputs::Fundamental { .. } => CheckKind::Fundamental,
            Inputs::Extraction { .. } => CheckKind::Extraction,
            Inputs::Sufficiency { .. } => CheckKind::Sufficiency,
            Inputs::Markov { .. } => CheckKind::Markov,
            Inputs::Dp => CheckKind::Dp,
            Inputs::Uniform { .. } => CheckKind::Uniform,
        }
    }

    /// Draws an instance of `kind` from `seed`.
    pub fn generate(kind: CheckKind, seed: u64, params: &GeneratorParams) -> Result<Instance> {
        let mut params = *params;
        if kind == CheckKind::Dp {
            params.min_epochs = params.min_epochs.max(2);
            params.max_epochs = params.max_epochs.max(params.min_epochs);
        }
        let file = random_model_file(mix(seed), &params);
        let model = build_model(&file)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let random_policy = |rng: &mut ChaCha8Rng| {
            if rng.random_bool(0.2) {
                PolicyRecipe::Parity
            } else {
                PolicyRecipe::HashedHistory { seed: rng.random() }
            }
        };
        let inputs = match kind {
            CheckKind::Oracle => Inputs::Oracle,
            CheckKind::Fundamental => Inputs::Fundamental {
                policy: random_policy(&mut rng),
            },
            CheckKind::Extraction => Inputs::Extraction {
                chi: random_slacks(&model, rng.random(), 1.0),
            },
            CheckKind::Sufficiency => Inputs::Sufficiency {
                mu: random_mu(&model, rng.random()),
                policy: random_policy(&mut rng),
            },
            CheckKind::Markov => Inputs::Markov {
                mu: random_mu(&model, rng.random()),
                split: rng.random_range(model.first_stage()..=model.last_stage()),
                head: random_policy(&mut rng),
                tail: random_policy(&mut rng),
            },
            CheckKind::Dp => Inputs::Dp,
            CheckKind::Uniform => {
                let solution = backward_induction(&model);
                let exact = rng.random_bool(0.3);
                let mut family = IndexMap::new();
                let mut epsilon: f64 = 0.0;
                let m = model.first_stage();
                for x in model.live_states(m) {
                    let chi = if exact {
                        vec![0.0; model.epochs()]
                    } else {
                        random_slacks(&model, rng.random(), 1.0)
                    };
                    let extracted = extract_simple_policy(&model, &solution, &chi)?;
                    epsilon = epsilon.max(extracted.epsilon);
                    family.insert(
                        model.state_id(m, x).to_string(),
                        PolicyRecipe::Document {
                            rules: extracted.policy.to_document(&model),
                        },
                    );
                }
                let grid = (0..5).map(|_| random_mu(&model, rng.random())).collect();
                Inputs::Uniform {
                    family,
                    epsilon,
                    grid,
                }
            }
        };
        Ok(Instance {
            seed,
            model: file,
            inputs,
        })
    }

    /// Runs the check and returns its discrepancy.
    pub fn discrepancy(&self) -> Result<f64> {
        let model = build_model(&self.model)?;
        match &self.inputs {
            Inputs::Oracle => check_oracle(&model),
            Inputs::Fundamental { policy } => check_fundamental(&model, &policy.build(&model)?),
            Inputs::Extraction { chi } => check_extraction(&model, chi),
            Inputs::Sufficiency { mu, policy } => {
                check_sufficiency(&model, mu, &policy.build(&model)?)
            }
            Inputs::Markov {
                mu,
                split,
                head,
                tail,
            } => {
                let tail = if *split < model.last_stage() {
                    tail.build(&model.window(*split, model.last_stage(), None)?)?
                } else {
                    tail.build(&model)?
                };
                check_markov_property(&model, mu, head.build(&model)?, tail, *split)
            }
            Inputs::Dp => {
                let mut worst: f64 = 0.0;
                for t in model.first_stage() + 1..=model.last_stage() {
                    worst = worst.max(check_dp_principle(&model, t)?);
                }
                Ok(worst)
            }
            Inputs::Uniform {
                family,
                epsilon,
                grid,
            } => {
                let branches = branches(&model, family)?;
                check_uniform_optimality(&model, &branches, *epsilon, grid)
            }
        }
    }
}

fn branches(
    model: &KilledModel,
    family: &IndexMap<String, PolicyRecipe>,
) -> Result<Vec<(usize, Arc<dyn Policy>)>> {
    let m = model.first_stage();
    family
        .iter()
        .map(|(id, recipe)| {
            let x = model
                .state_index(m, id)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown initial state `{id}`")))?;
            Ok((x, recipe.build(model)?))
        })
        .collect()
}

/// A failing instance with what it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub check: CheckKind,
    pub index: u64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub discrepancy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    pub instance: Instance,
}

impl Counterexample {
    /// Re-runs the dumped instance.
    pub fn replay(&self) -> Result<f64> {
        self.instance.discrepancy()
    }
}

/// Outcome of a check run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: CheckKind,
    pub seed: u64,
    pub instances: u64,
    pub failures: u64,
    pub max_discrepancy: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// First failing instance, when any.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub counterexample: Option<Counterexample>,
}

/// Options of a check run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub params: GeneratorParams,
    pub tolerance: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            params: GeneratorParams::default(),
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

/// Runs `count` seeded instances of a check in parallel. The report depends only on the
/// arguments.
pub fn run_check(kind: CheckKind, seed: u64, count: u64, options: &RunOptions) -> CheckReport {
    let run = |index: u64| -> (Option<Instance>, Result<f64>) {
        match Instance::generate(kind, instance_seed(seed, index), &options.params) {
            Ok(instance) => {
                let result = instance.discrepancy();
                (Some(instance), result)
            }
            Err(e) => (None, Err(e)),
        }
    };
    let outcomes: Vec<(u64, Result<f64>)> =
        (0..count).into_par_iter().map(|i| (i, run(i).1)).collect();
    let fails = |r: &Result<f64>| match r {
        Ok(d) => d.is_nan() || *d > options.tolerance,
        Err(_) => true,
    };
    let failures = outcomes.iter().filter(|(_, r)| fails(r)).count() as u64;
    let max_discrepancy = outcomes
        .iter()
        .filter_map(|(_, r)| r.as_ref().ok())
        .fold(0.0, |a: f64, &b| a.max(b));
    let counterexample = outcomes
        .iter()
        .find(|(_, r)| fails(r))
        .and_then(|(index, _)| {
            let (instance, result) = run(*index);
            let instance = instance?;
            let (discrepancy, error) = match result {
                Ok(d) => (Some(d), None),
                Err(e) => (None, Some(e.to_string())),
            };
            Some(Counterexample {
                check: kind,
                index: *index,
                tolerance: options.tolerance,
                discrepancy,
                error,
                instance,
            })
        });
    CheckReport {
        check: kind,
        seed,
        instances: count,
        failures,
        max_discrepancy,
        tolerance: options.tolerance,
        passed: failures == 0,
        counterexample,
    }
}
