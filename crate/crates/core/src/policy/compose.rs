use std::sync::Arc;

use super::{check_distribution, ActionDist, History, Policy};
use crate::error::{Error, Result};
use crate::model::{KilledModel, Stage, STRUCTURAL_ZERO};

/// Follows the branch policy of the history's initial state.
pub struct Combination {
    first_stage: Stage,
    ids: Vec<String>,
    branches: Vec<Option<Arc<dyn Policy>>>,
}

/// Combines per-initial-state policies into one: `pi(.|h) = pi_{x(h)}(.|h)` where `x(h)` is
/// the first state of `h`. Every initial state charged by `mu` needs a branch.
pub fn combine(
    model: &KilledModel,
    mu: &[f64],
    family: impl IntoIterator<Item = (usize, Arc<dyn Policy>)>,
) -> Result<Combination> {
    let m = model.first_stage();
    let ids: Vec<String> = model.states(m).iter().map(|s| s.id.clone()).collect();
    let mut branches: Vec<Option<Arc<dyn Policy>>> = vec![None; ids.len()];
    for (x, pi) in family {
        if x >= ids.len() {
            return Err(Error::InvalidArgument(format!(
                "initial state index {x} out of range"
            )));
        }
        branches[x] = Some(pi);
    }
    for (x, &w) in mu.iter().enumerate() {
        if w > 0.0 && branches[x].is_none() && !model.is_killed(m, x) {
            return Err(Error::MissingBranch(ids[x].clone()));
        }
    }
    Ok(Combination {
        first_stage: m,
        ids,
        branches,
    })
}

impl Policy for Combination {
    fn decide(&self, history: History<'_>) -> Result<ActionDist> {
        if history.start_stage != self.first_stage {
            return Err(Error::Stage(format!(
                "combination starts at stage {}, history at {}",
                self.first_stage, history.start_stage
            )));
        }
        let x = history.initial_state();
        match &self.branches[x] {
            Some(branch) => branch.decide(history),
            None => Err(Error::MissingBranch(self.ids[x].clone())),
        }
    }
}

/// First-step randomized choice followed by a policy of the derived model.
pub struct Product {
    first_stage: Stage,
    gamma: Vec<ActionDist>,
    tail: Arc<dyn Policy>,
}

/// The product `gamma pi'`: `gamma(.|x)` for the bare initial history `h = x`, and
/// `pi'(.|h')` for `h = x a h'`.
pub fn product(
    model: &KilledModel,
    gamma: Vec<ActionDist>,
    tail: Arc<dyn Policy>,
) -> Result<Product> {
    let m = model.first_stage();
    if gamma.len() != model.states(m).len() {
        return Err(Error::InvalidArgument(format!(
            "first-step rule has {} entries, stage {m} has {} states",
            gamma.len(),
            model.states(m).len()
        )));
    }
    for x in model.live_states(m) {
        check_distribution(model, m, x, &gamma[x])?;
    }
    Ok(Product {
        first_stage: m,
        gamma,
        tail,
    })
}

impl Policy for Product {
    fn decide(&self, history: History<'_>) -> Result<ActionDist> {
        if history.start_stage != self.first_stage {
            return Err(Error::Stage(format!(
                "product starts at stage {}, history at {}",
                self.first_stage, history.start_stage
            )));
        }
        if history.actions.is_empty() {
            Ok(self.gamma[history.current_state()].clone())
        } else {
            self.tail.decide(history.suffix_from(self.first_stage + 1))
        }
    }
}

/// `pi_a(.|h') = pi(.|x a h')`, a policy of the derived model.
pub struct Restricted {
    inner: Arc<dyn Policy>,
    first_stage: Stage,
    state: usize,
    action: usize,
}

/// Restricts `pi` to histories that begin with `x a`, re-rooted at the derived model.
pub fn restrict_after_first(
    model: &KilledModel,
    pi: Arc<dyn Policy>,
    x: usize,
    a: usize,
) -> Result<Restricted> {
    let m = model.first_stage();
    if !model.available(m, x).contains(&a) {
        return Err(Error::InvalidArgument(format!(
            "action index {a} is not available in initial state `{}`",
            model.state_id(m, x)
        )));
    }
    Ok(Restricted {
        inner: pi,
        first_stage: m,
        state: x,
        action: a,
    })
}

impl Policy for Restricted {
    fn decide(&self, history: History<'_>) -> Result<ActionDist> {
        if history.start_stage != self.first_stage + 1 {
            return Err(Error::Stage(format!(
                "restricted policy expects histories from stage {}, got {}",
                self.first_stage + 1,
                history.start_stage
            )));
        }
        let mut states = Vec::with_capacity(history.states.len() + 1);
        states.push(self.state);
        states.extend_from_slice(history.states);
        let mut actions = Vec::with_capacity(history.actions.len() + 1);
        actions.push(self.action);
        actions.extend_from_slice(history.actions);
        self.inner
            .decide(History::new(self.first_stage, &states, &actions))
    }
}

/// Uses `head` while the current stage is before `split`, then `tail` on the history
/// re-rooted at `split`.
pub struct Spliced {
    split: Stage,
    head: Arc<dyn Policy>,
    tail: Arc<dyn Policy>,
}

pub fn splice(head: Arc<dyn Policy>, split: Stage, tail: Arc<dyn Policy>) -> Spliced {
    Spliced { split, head, tail }
}

impl Policy for Spliced {
    fn decide(&self, history: History<'_>) -> Result<ActionDist> {
        if history.stage() < self.split {
            self.head.decide(history)
        } else if history.start_stage <= self.split {
            self.tail.decide(history.suffix_from(self.split))
        } else {
            self.tail.decide(history)
        }
    }
}

/// Drops structurally-zero entries.
pub(crate) fn support(dist: &[(usize, f64)]) -> impl Iterator<Item = (usize, f64)> + '_ {
    dist.iter().copied().filter(|&(_, p)| p >= STRUCTURAL_ZERO)
}
