//! The augmented path space: exact enumeration of the outcome law induced by an initial
//! distribution and a policy, outcome assessment and policy assessment.
//!
//! Under a policy, each epoch `t` picks `a_t ~ pi(.|h_{t-1})` and then either moves to a
//! non-killed `y` with mass `p(y|a_t)` or is killed with mass `p(x*_t|a_t)`. A killed
//! outcome collects its running rewards up to and including `a_t` plus `c(x*_t)` and
//! stops; a surviving way collects all running rewards plus `r(x_n)`.
//!
//! Enumeration is depth-first in declaration order. Factors below
//! [`STRUCTURAL_ZERO`](crate::model::STRUCTURAL_ZERO) are pruned.

use crate::error::{Error, Result};
use crate::model::{AugmentedOutcome, KilledModel, Stage, Way, STRUCTURAL_ZERO};
use crate::policy::{check_distribution, History, Policy};

/// Default cap on the number of enumerated outcomes.
pub const DEFAULT_OUTCOME_CAP: usize = 10_000_000;

/// Point mass on initial state `x`.
pub fn point_mass(model: &KilledModel, x: usize) -> Vec<f64> {
    let mut mu = vec![0.0; model.states(model.first_stage()).len()];
    mu[x] = 1.0;
    mu
}

/// Initial distribution of the model, or the point mass on its first non-killed initial
/// state when the model fixes none.
pub fn default_start(model: &KilledModel) -> Vec<f64> {
    match model.initial_distribution() {
        Some(mu) => mu.to_vec(),
        None => {
            let m = model.first_stage();
            point_mass(model, model.live_states(m).next().unwrap_or(0))
        }
    }
}

/// How an enumerated path ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fate {
    Survived,
    Killed {
        fatal_action: Option<usize>,
        stage: Stage,
    },
}

struct Walker<'a, V> {
    model: &'a KilledModel,
    policy: &'a dyn Policy,
    cap: usize,
    emitted: usize,
    states: Vec<usize>,
    actions: Vec<usize>,
    visit: V,
}

impl<V> Walker<'_, V>
where
    V: FnMut(History<'_>, Fate, f64, f64),
{
    fn emit(&mut self, fate: Fate, mass: f64, value: f64) -> Result<()> {
        self.emitted += 1;
        if self.emitted > self.cap {
            return Err(Error::Explosion {
                what: "outcomes",
                cap: self.cap,
            });
        }
        let m = self.model.first_stage();
        (self.visit)(
            History::new(m, &self.states, &self.actions),
            fate,
            mass,
            value,
        );
        Ok(())
    }

    fn start(&mut self, mu: &[f64]) -> Result<()> {
        let m = self.model.first_stage();
        if mu.len() != self.model.states(m).len() {
            return Err(Error::InvalidArgument(format!(
                "initial distribution has {} entries, stage {m} has {} states",
                mu.len(),
                self.model.states(m).len()
            )));
        }
        for (x, &w) in mu.iter().enumerate() {
            if w < STRUCTURAL_ZERO {
                continue;
            }
            self.states.clear();
            self.actions.clear();
            self.states.push(x);
            if self.model.is_killed(m, x) {
                let c = self.model.crash(m).unwrap_or(0.0);
                self.emit(
                    Fate::Killed {
                        fatal_action: None,
                        stage: m,
                    },
                    w,
                    c,
                )?;
            } else {
                self.walk(w, 0.0)?;
            }
        }
        Ok(())
    }

    fn walk(&mut self, mass: f64, value: f64) -> Result<()> {
        let model = self.model;
        let t = model.first_stage() + self.actions.len() as Stage;
        let x = *self.states.last().expect("walk starts from a state");
        if t == model.last_stage() {
            return self.emit(Fate::Survived, mass, value + model.terminal_reward(x));
        }
        let dist = self.policy.decide(History::new(
            model.first_stage(),
            &self.states,
            &self.actions,
        ))?;
        check_distribution(model, t, x, &dist)?;
        let next = t + 1;
        let killed = model.killed_state(next);
        for &(a, pa) in &dist {
            if pa < STRUCTURAL_ZERO {
                continue;
            }
            let action = model.action(next, a);
            let reached = value + action.reward;
            let weight = mass * pa;
            for (y, &p) in action.transitions.iter().enumerate() {
                if p < STRUCTURAL_ZERO {
                    continue;
                }
                if killed == Some(y) {
                    let c = model.crash(next).unwrap_or(0.0);
                    self.emit(
                        Fate::Killed {
                            fatal_action: Some(a),
                            stage: next,
                        },
                        weight * p,
                        reached + c,
                    )?;
                } else {
                    self.actions.push(a);
                    self.states.push(y);
                    self.walk(weight * p, reached)?;
                    self.states.pop();
                    self.actions.pop();
                }
            }
        }
        Ok(())
    }
}

/// Visits every outcome in the support with its mass and assessment.
pub fn for_each_outcome(
    model: &KilledModel,
    mu: &[f64],
    policy: &dyn Policy,
    cap: usize,
    visit: impl FnMut(History<'_>, Fate, f64, f64),
) -> Result<()> {
    let mut walker = Walker {
        model,
        policy,
        cap,
        emitted: 0,
        states: Vec::with_capacity(model.epochs() + 1),
        actions: Vec::with_capacity(model.epochs()),
        visit,
    };
    walker.start(mu)
}

/// Support of the outcome law with exact masses, in enumeration order.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeLaw {
    outcomes: Vec<(AugmentedOutcome, f64)>,
}

impl OutcomeLaw {
    pub fn iter(&self) -> impl Iterator<Item = (&AugmentedOutcome, f64)> {
        self.outcomes.iter().map(|(o, w)| (o, *w))
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.outcomes.iter().map(|(_, w)| w).sum()
    }

    pub fn mass_of(&self, outcome: &AugmentedOutcome) -> f64 {
        self.outcomes
            .iter()
            .filter(|(o, _)| o == outcome)
            .map(|(_, w)| w)
            .sum()
    }

    /// One-dimensional marginal laws of every `x_t` (killed states included) and `a_t`.
    pub fn marginals(&self, model: &KilledModel) -> Marginals {
        let m = model.first_stage();
        let mut marginals = Marginals {
            first_stage: m,
            states: (m..=model.last_stage())
                .map(|t| vec![0.0; model.states(t).len()])
                .collect(),
            actions: (m + 1..=model.last_stage())
                .map(|t| vec![0.0; model.actions(t).len()])
                .collect(),
        };
        for (outcome, w) in self.iter() {
            let way = outcome.way();
            let offset = (way.start_stage - m) as usize;
            for (i, &x) in way.states.iter().enumerate() {
                marginals.states[offset + i][x] += w;
            }
            for (i, &a) in way.actions.iter().enumerate() {
                marginals.actions[offset + i][a] += w;
            }
            if let AugmentedOutcome::Killed {
                fatal_action: Some(a),
                stage,
                ..
            } = outcome
            {
                let slot = (stage - m) as usize;
                marginals.actions[slot - 1][*a] += w;
                if let Some(k) = model.killed_state(*stage) {
                    marginals.states[slot][k] += w;
                }
            }
        }
        marginals
    }
}

/// Marginal laws of the coordinates `x_m, a_{m+1}, x_{m+1}, ..., a_n, x_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    pub first_stage: Stage,
    /// `states[t - m][x] = P{x_t = x}`.
    pub states: Vec<Vec<f64>>,
    /// `actions[t - m - 1][a] = P{a_t = a}`.
    pub actions: Vec<Vec<f64>>,
}

impl Marginals {
    pub fn state(&self, t: Stage, x: usize) -> f64 {
        self.states[(t - self.first_stage) as usize][x]
    }

    pub fn action(&self, t: Stage, a: usize) -> f64 {
        self.actions[(t - self.first_stage - 1) as usize][a]
    }

    /// Largest absolute difference between two sets of marginals of the same model.
    pub fn max_difference(&self, other: &Marginals) -> f64 {
        let flat = |m: &Marginals| -> Vec<f64> {
            m.states
                .iter()
                .chain(&m.actions)
                .flatten()
                .copied()
                .collect()
        };
        flat(self)
            .iter()
            .zip(flat(other))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Enumerates the outcome law with the default cap.
pub fn enumerate_outcomes(
    model: &KilledModel,
    mu: &[f64],
    policy: &dyn Policy,
) -> Result<OutcomeLaw> {
    enumerate_outcomes_capped(model, mu, policy, DEFAULT_OUTCOME_CAP)
}

pub fn enumerate_outcomes_capped(
    model: &KilledModel,
    mu: &[f64],
    policy: &dyn Policy,
    cap: usize,
) -> Result<OutcomeLaw> {
    let mut outcomes = Vec::new();
    for_each_outcome(model, mu, policy, cap, |h, fate, mass, _| {
        let prefix = Way {
            start_stage: h.start_stage,
            states: h.states.to_vec(),
            actions: h.actions.to_vec(),
        };
        let outcome = match fate {
            Fate::Survived => AugmentedOutcome::Survived(prefix),
            Fate::Killed {
                fatal_action,
                stage,
            } => AugmentedOutcome::Killed {
                prefix,
                fatal_action,
                stage,
            },
        };
        outcomes.push((outcome, mass));
    })?;
    Ok(OutcomeLaw { outcomes })
}

/// Assessment of an outcome: running rewards plus the terminal reward of a surviving way,
/// or running rewards up to the kill plus the crash value of the kill stage.
pub fn assess_outcome(model: &KilledModel, outcome: &AugmentedOutcome) -> Result<f64> {
    fn bad<T>(msg: String) -> Result<T> {
        Err(Error::InconsistentOutcome(msg))
    }
    let way = outcome.way();
    let m = model.first_stage();
    if way.start_stage != m {
        return bad(format!(
            "outcome starts at stage {}, model at {m}",
            way.start_stage
        ));
    }
    if way.states.len() != way.actions.len() + 1 {
        return bad("a way alternates states and actions".into());
    }
    let end = way.end_stage();
    if end > model.last_stage() {
        return bad(format!("way runs past stage {}", model.last_stage()));
    }
    let check_state = |t: Stage, x: usize| -> Result<()> {
        if x >= model.states(t).len() {
            return bad(format!("state index {x} out of range at stage {t}"));
        }
        Ok(())
    };
    check_state(m, way.states[0])?;
    let mut value = 0.0;
    for (i, &a) in way.actions.iter().enumerate() {
        let t = m + 1 + i as Stage;
        let (from, to) = (way.states[i], way.states[i + 1]);
        check_state(t, to)?;
        if a >= model.actions(t).len() {
            return bad(format!("action index {a} out of range at stage {t}"));
        }
        if model.action(t, a).owner != from {
            return bad(format!(
                "action `{}` is not available in the preceding state",
                model.action_id(t, a)
            ));
        }
        if model.is_killed(t - 1, from) || model.is_killed(t, to) {
            return bad(format!(
                "way passes through a killed state before stage {t}"
            ));
        }
        value += model.action(t, a).reward;
    }
    match outcome {
        AugmentedOutcome::Survived(_) => {
            if end != model.last_stage() {
                return bad(format!(
                    "surviving way ends at stage {end}, expected {}",
                    model.last_stage()
                ));
            }
            Ok(value + model.terminal_reward(way.last_state()))
        }
        AugmentedOutcome::Killed {
            fatal_action,
            stage,
            ..
        } => {
            let crash = |t: Stage| {
                model.crash(t).ok_or(Error::InconsistentOutcome(format!(
                    "stage {t} has no killed state"
                )))
            };
            match fatal_action {
                None => {
                    if *stage != m || !way.actions.is_empty() || !model.is_killed(m, way.states[0])
                    {
                        return bad(
                            "a kill without a fatal action must start in a killed initial state"
                                .into(),
                        );
                    }
                    crash(m)
                }
                Some(a) => {
                    if *stage != end + 1 || *stage > model.last_stage() {
                        return bad(format!(
                            "kill stage {stage} does not follow a prefix ending at {end}"
                        ));
                    }
                    let x = way.last_state();
                    if model.is_killed(end, x) {
                        return bad("prefix ends in a killed state".into());
                    }
                    if *a >= model.actions(*stage).len() || model.action(*stage, *a).owner != x {
                        return bad(
                            "fatal action is not available in the last state of the prefix".into(),
                        );
                    }
                    Ok(value + model.action(*stage, *a).reward + crash(*stage)?)
                }
            }
        }
    }
}

/// `sum over the support of mass * xi(outcome)`.
pub fn expectation(law: &OutcomeLaw, mut xi: impl FnMut(&AugmentedOutcome) -> f64) -> f64 {
    law.iter().map(|(o, w)| w * xi(o)).sum()
}

/// Assessment `omega(mu, pi)`: the expected outcome assessment.
pub fn assess_policy(model: &KilledModel, mu: &[f64], policy: &dyn Policy) -> Result<f64> {
    assess_policy_capped(model, mu, policy, DEFAULT_OUTCOME_CAP)
}

pub fn assess_policy_capped(
    model: &KilledModel,
    mu: &[f64],
    policy: &dyn Policy,
    cap: usize,
) -> Result<f64> {
    let mut total = 0.0;
    for_each_outcome(model, mu, policy, cap, |_, _, mass, value| {
        total += mass * value
    })?;
    Ok(total)
}

/// Assessment from a single initial state. A killed initial state is valued at its crash
/// value.
pub fn assess_state(model: &KilledModel, x: usize, policy: &dyn Policy) -> Result<f64> {
    assess_policy(model, &point_mass(model, x), policy)
}

/// `omega(x, pi)` for every initial state `x`.
pub fn assess_per_state(model: &KilledModel, policy: &dyn Policy) -> Result<Vec<f64>> {
    (0..model.states(model.first_stage()).len())
        .map(|x| assess_state(model, x, policy))
        .collect()
}
