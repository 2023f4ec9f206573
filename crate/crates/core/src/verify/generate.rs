//! Seeded random models, initial distributions and policies.

use std::sync::Arc;

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{ActionEntry, Horizon, KilledModel, ModelFile, Stage, StateEntry};
use crate::policy::{ActionDist, History, LoadedPolicy, MarkovPolicy, Policy, PolicyDocument};

/// Size and value ranges of generated models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub first_stage: Stage,
    pub min_epochs: usize,
    pub max_epochs: usize,
    /// Cap on `|X_t|`, killed state included.
    pub max_states: usize,
    /// Cap on `|A_t|`.
    pub max_actions: usize,
    /// Rewards are uniform in `[-reward_bound, reward_bound]`.
    pub reward_bound: f64,
    /// Kill masses are uniform in `(min_kill, max_kill]`.
    pub min_kill: f64,
    pub max_kill: f64,
    /// Generate classical models: every kill mass is zero.
    pub zero_kill: bool,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            first_stage: 0,
            min_epochs: 1,
            max_epochs: 4,
            max_states: 4,
            max_actions: 3,
            reward_bound: 5.0,
            min_kill: 0.05,
            max_kill: 0.5,
            zero_kill: false,
        }
    }
}

/// SplitMix64 finalizer, used to derive independent seeds and to hash histories.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of instance `index` of a run seeded with `seed`.
pub fn instance_seed(seed: u64, index: u64) -> u64 {
    mix(mix(seed) ^ index)
}

/// Splits `total` into `count` random nonnegative parts.
fn split_mass(rng: &mut ChaCha8Rng, count: usize, total: f64) -> Vec<f64> {
    let weights: Vec<f64> = (0..count).map(|_| rng.random_range(0.05..1.0)).collect();
    let sum: f64 = weights.iter().sum();
    let mut parts: Vec<f64> = weights.iter().map(|w| total * w / sum).collect();
    let head: f64 = parts[..count - 1].iter().sum();
    parts[count - 1] = total - head;
    parts
}

/// A random valid model file. Every stage after the first has one killed state at a random
/// position; crash values are left to the automatic rule.
pub fn random_model_file(seed: u64, params: &GeneratorParams) -> ModelFile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let epochs = rng.random_range(params.min_epochs..=params.max_epochs.max(params.min_epochs));
    let m = params.first_stage;
    let n = m + epochs as Stage;
    let live_cap = (params.max_states - 1).min(params.max_actions).max(1);
    let bound = params.reward_bound;
    let mut states: Vec<Vec<StateEntry>> = Vec::new();
    let mut live: Vec<Vec<String>> = Vec::new();
    let mut killed_ids: Vec<Option<String>> = Vec::new();
    for t in m..=n {
        let count = rng.random_range(1..=live_cap);
        let ids: Vec<String> = (0..count).map(|i| format!("x{t}_{i}")).collect();
        let mut entries: Vec<StateEntry> = ids
            .iter()
            .map(|id| StateEntry {
                id: id.clone(),
                killed: false,
                r: (t == n).then(|| rng.random_range(-bound..=bound)),
            })
            .collect();
        let killed = (t > m).then(|| {
            let id = format!("k{t}");
            let at = rng.random_range(0..=entries.len());
            entries.insert(
                at,
                StateEntry {
                    id: id.clone(),
                    killed: true,
                    r: None,
                },
            );
            id
        });
        states.push(entries);
        live.push(ids);
        killed_ids.push(killed);
    }
    let mut actions = Vec::new();
    for t in m + 1..=n {
        let owners = &live[(t - m - 1) as usize];
        let count = rng.random_range(owners.len()..=params.max_actions.max(owners.len()));
        let mut owner_of: Vec<usize> = (0..owners.len()).collect();
        owner_of.extend((owners.len()..count).map(|_| rng.random_range(0..owners.len())));
        owner_of.sort_unstable();
        let targets = &live[(t - m) as usize];
        let killed = killed_ids[(t - m) as usize]
            .as_ref()
            .expect("stages after the first have a killed state");
        let stage_actions = owner_of
            .iter()
            .enumerate()
            .map(|(j, &o)| {
                let kill = if params.zero_kill {
                    0.0
                } else {
                    params.max_kill - rng.random::<f64>() * (params.max_kill - params.min_kill)
                };
                let mut p = IndexMap::new();
                for (id, mass) in
                    targets
                        .iter()
                        .zip(split_mass(&mut rng, targets.len(), 1.0 - kill))
                {
                    p.insert(id.clone(), mass);
                }
                p.insert(killed.clone(), kill);
                ActionEntry {
                    id: format!("a{t}_{j}"),
                    owner: owners[o].clone(),
                    q: rng.random_range(-bound..=bound),
                    p,
                }
            })
            .collect();
        actions.push(stage_actions);
    }
    ModelFile {
        horizon: Horizon { m, n },
        states,
        actions,
        crash: None,
        mu: None,
        allow_zero_kill: params.zero_kill,
    }
}

pub fn random_model(seed: u64, params: &GeneratorParams) -> KilledModel {
    crate::model::build_model(&random_model_file(seed, params)).expect("generated models are valid")
}

/// Random initial distribution over the non-killed states of the first stage; some states may
/// get no mass.
pub fn random_mu(model: &KilledModel, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = model.first_stage();
    let live: Vec<usize> = model.live_states(m).collect();
    let mut weights: Vec<f64> = live
        .iter()
        .map(|_| {
            if rng.random_bool(0.25) {
                0.0
            } else {
                rng.random_range(0.05..1.0)
            }
        })
        .collect();
    if weights.iter().all(|&w| w == 0.0) {
        let pick = rng.random_range(0..weights.len());
        weights[pick] = 1.0;
    }
    let sum: f64 = weights.iter().sum();
    let mut mu = vec![0.0; model.states(m).len()];
    for (&x, w) in live.iter().zip(weights) {
        mu[x] = w / sum;
    }
    mu
}

/// Uniform slacks in `[0, bound]`, one per epoch.
pub fn random_slacks(model: &KilledModel, seed: u64, bound: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..model.epochs())
        .map(|_| rng.random::<f64>() * bound)
        .collect()
}

/// `A(x)` for every state of the decision stages, copied out of a model.
#[derive(Debug, Clone)]
struct Availability {
    first_stage: Stage,
    table: Vec<Vec<Vec<usize>>>,
}

impl Availability {
    fn of(model: &KilledModel) -> Self {
        let table = (model.first_stage()..model.last_stage())
            .map(|s| {
                (0..model.states(s).len())
                    .map(|x| model.available(s, x).to_vec())
                    .collect()
            })
            .collect();
        Availability {
            first_stage: model.first_stage(),
            table,
        }
    }

    fn at(&self, h: &History<'_>) -> Result<&[usize]> {
        let slot = h.stage() - self.first_stage;
        self.table
            .get(slot as usize)
            .filter(|_| slot >= 0)
            .and_then(|row| row.get(h.current_state()))
            .map(Vec::as_slice)
            .filter(|acts| !acts.is_empty())
            .ok_or_else(|| {
                crate::Error::Policy(format!(
                    "no actions at stage {} in state index {}",
                    h.stage(),
                    h.current_state()
                ))
            })
    }
}

/// Randomized policy whose rule is a pseudorandom function of the whole history.
#[derive(Debug, Clone)]
pub struct HashedHistoryPolicy {
    seed: u64,
    available: Availability,
}

impl HashedHistoryPolicy {
    pub fn new(model: &KilledModel, seed: u64) -> Self {
        HashedHistoryPolicy {
            seed,
            available: Availability::of(model),
        }
    }
}

impl Policy for HashedHistoryPolicy {
    fn decide(&self, history: History<'_>) -> Result<ActionDist> {
        let acts = self.available.at(&history)?;
        let mut h = mix(self.seed ^ (history.start_stage as u64).wrapping_mul(0x100_0000_01b3));
        for &x in history.states {
            h = mix(h ^ x as u64);
        }
        for &a in history.actions {
            h = mix(h ^ (a as u64).wrapping_add(0x5555));
        }
        let mut weights: Vec<f64> = acts
            .iter()
            .map(|_| {
                h = mix(h);
                let u = (h >> 11) as f64 / (1u64 << 53) as f64;
                if u < 0.25 {
                    0.0
                } else {
                    u
                }
            })
            .collect();
        if weights.iter().all(|&w| w == 0.0) {
            weights[(h % acts.len() as u64) as usize] = 1.0;
        }
        let sum: f64 = weights.iter().sum();
        Ok(acts
            .iter()
            .zip(weights)
            .filter(|(_, w)| *w > 0.0)
            .map(|(&a, w)| (a, w / sum))
            .collect())
    }
}

/// Deterministic history-dependent policy: in `A(x)` it takes the entry whose position has the
/// parity of the previous action index (the first entry at the start).
#[derive(Debug, Clone)]
pub struct ParityPolicy {
    available: Availability,
}

impl ParityPolicy {
    pub fn new(model: &KilledModel) -> Self {
        ParityPolicy {
            available: Availability::of(model),
        }
    }
}

impl Policy for ParityPolicy {
    fn decide(&self, history: History<'_>) -> Result<ActionDist> {
        let acts = self.available.at(&history)?;
        let parity = history.actions.last().map_or(0, |a| a % 2);
        Ok(vec![(acts[parity % acts.len()], 1.0)])
    }
}

/// Random Markov policy with some zero weights.
pub fn random_markov(model: &KilledModel, seed: u64) -> MarkovPolicy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    MarkovPolicy::from_fn(model, |acts| {
        let mut w: Vec<f64> = acts
            .iter()
            .map(|_| {
                if rng.random_bool(0.3) {
                    0.0
                } else {
                    rng.random()
                }
            })
            .collect();
        if w.iter().all(|&v| v == 0.0) {
            w[0] = 1.0;
        }
        let sum: f64 = w.iter().sum();
        acts.iter()
            .zip(w)
            .filter(|(_, v)| *v > 0.0)
            .map(|(&a, v)| (a, v / sum))
            .collect()
    })
}

/// Serializable description of a policy, rebuilt against a model on demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyRecipe {
    Uniform,
    Document { rules: PolicyDocument },
    HashedHistory { seed: u64 },
    Parity,
}

impl PolicyRecipe {
    pub fn build(&self, model: &KilledModel) -> Result<Arc<dyn Policy>> {
        Ok(match self {
            PolicyRecipe::Uniform => Arc::new(MarkovPolicy::uniform(model)),
            PolicyRecipe::Document { rules } => match LoadedPolicy::from_document(model, rules)? {
                LoadedPolicy::Simple(p) => Arc::new(p),
                LoadedPolicy::Markov(p) => Arc::new(p),
            },
            PolicyRecipe::HashedHistory { seed } => {
                Arc::new(HashedHistoryPolicy::new(model, *seed))
            }
            PolicyRecipe::Parity => Arc::new(ParityPolicy::new(model)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::enumerate_outcomes;

    #[test]
    fn generated_models_respect_caps() {
        let params = GeneratorParams::default();
        for seed in 0..200 {
            let model = random_model(seed, &params);
            assert!((1..=4).contains(&model.epochs()));
            for t in model.first_stage()..=model.last_stage() {
                assert!(model.states(t).len() <= 4);
                if t > model.first_stage() {
                    assert!(model.actions(t).len() <= 3);
                    for a in 0..model.actions(t).len() {
                        let kill = model.kill_mass(t, a);
                        assert!(kill > 0.05 && kill <= 0.5, "kill mass {kill}");
                    }
                }
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let params = GeneratorParams::default();
        assert_eq!(random_model_file(7, &params), random_model_file(7, &params));
        assert_ne!(random_model_file(7, &params), random_model_file(8, &params));
    }

    #[test]
    fn zero_kill_generation() {
        let params = GeneratorParams {
            zero_kill: true,
            ..GeneratorParams::default()
        };
        let model = random_model(3, &params);
        assert!(model.allows_zero_kill());
        for t in model.first_stage() + 1..=model.last_stage() {
            assert!((0..model.actions(t).len()).all(|a| model.kill_mass(t, a) == 0.0));
        }
    }

    #[test]
    fn random_mu_is_a_distribution_on_live_states() {
        let model = random_model(11, &GeneratorParams::default());
        let mu = random_mu(&model, 5);
        assert!((mu.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(mu.iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn recipes_yield_valid_policies() {
        let params = GeneratorParams {
            min_epochs: 3,
            ..GeneratorParams::default()
        };
        for seed in 0..20 {
            let model = random_model(seed, &params);
            let mu = random_mu(&model, seed);
            for recipe in [
                PolicyRecipe::Uniform,
                PolicyRecipe::HashedHistory { seed },
                PolicyRecipe::Parity,
            ] {
                let pi = recipe.build(&model).unwrap();
                let law = enumerate_outcomes(&model, &mu, &pi).unwrap();
                assert!((law.total_mass() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn recipes_round_trip_through_json() {
        let recipe = PolicyRecipe::HashedHistory { seed: 42 };
        let text = serde_json::to_string(&recipe).unwrap();
        assert_eq!(text, r#"{"kind":"hashed_history","seed":42}"#);
        assert_eq!(serde_json::from_str::<PolicyRecipe>(&text).unwrap(), recipe);
    }
}
