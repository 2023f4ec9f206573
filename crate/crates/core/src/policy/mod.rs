//! Policies: general history-dependent rules, Markov tables and simple decision rules,
//! plus the constructions that build new policies from old ones.

mod compose;
mod document;
mod sufficiency;

pub use compose::{
    combine, product, restrict_after_first, splice, Combination, Product, Restricted, Spliced,
};
pub use document::{LoadedPolicy, PolicyDocument, Rule};
pub use sufficiency::{dominate_simple, markovize};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{KilledModel, Stage, Way};

/// A distribution over actions of one stage, as `(action index, probability)` pairs.
pub type ActionDist = Vec<(usize, f64)>;

/// A history `x_s a_{s+1} ... a_t x_t` seen by a policy deciding `a_{t+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct History<'a> {
    pub start_stage: Stage,
    pub states: &'a [usize],
    pub actions: &'a [usize],
}

impl<'a> History<'a> {
    pub fn new(start_stage: Stage, states: &'a [usize], actions: &'a [usize]) -> Self {
        debug_assert_eq!(states.len(), actions.len() + 1);
        History {
            start_stage,
            states,
            actions,
        }
    }

    /// Stage of the current (last) state.
    pub fn stage(&self) -> Stage {
        self.start_stage + self.actions.len() as Stage
    }

    pub fn current_state(&self) -> usize {
        self.states[self.states.len() - 1]
    }

    pub fn initial_state(&self) -> usize {
        self.states[0]
    }

    /// The part of the history from stage `k` on.
    pub fn suffix_from(&self, k: Stage) -> History<'a> {
        assert!(
            k >= self.start_stage && k <= self.stage(),
            "stage {k} outside history"
        );
        let skip = (k - self.start_stage) as usize;
        History {
            start_stage: k,
            states: &self.states[skip..],
            actions: &self.actions[skip..],
        }
    }
}

impl Way {
    pub fn history(&self) -> History<'_> {
        History::new(self.start_stage, &self.states, &self.actions)
    }
}

/// A (possibly randomized, possibly history-dependent) decision rule.
///
/// Implementations must be pure functions of the history.
pub trait Policy: Send + Sync {
    /// Distribution of the next action given a history ending in a non-killed state that
    /// has actions.
    fn decide(&self, history: History<'_>) -> Result<ActionDist>;
}

impl<P: Policy + ?Sized> Policy for &P {
    fn decide(&self, history: History<'_>) -> Result<ActionDist> {
        (**self).decide(history)
    }
}

impl<P: Policy + ?Sized> Policy for Arc<P> {
    fn decide(&self, history: History<'_>) -> Result<ActionDist> {
        (**self).decide(history)
    }
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn decide(&self, history: History<'_>) -> Result<ActionDist> {
        (**self).decide(history)
    }
}

/// Any closure of the history is a policy.
pub struct FnPolicy<F>(pub F);

impl<F> Policy for FnPolicy<F>
where
    F: Fn(History<'_>) -> Result<ActionDist> + Send + Sync,
{
    fn decide(&self, history: History<'_>) -> Result<ActionDist> {
        (self.0)(history)
    }
}

/// Randomized rule depending only on the stage and the current state.
///
/// `rules[t - m - 1][x]` is the distribution over `A_t` used in state `x` of `X_{t-1}`;
/// killed and terminal states have empty rules.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovPolicy {
    first_stage: Stage,
    rules: Vec<Vec<ActionDist>>,
}

impl MarkovPolicy {
    /// `first_stage` is the stage of the first state the policy decides in.
    pub fn new(first_stage: Stage, rules: Vec<Vec<ActionDist>>) -> Self {
        MarkovPolicy { first_stage, rules }
    }

    /// Uniform over `A(x)` in every non-killed state.
    pub fn uniform(model: &KilledModel) -> Self {
        Self::from_fn(model, |acts| {
            let w = 1.0 / acts.len() as f64;
            acts.iter().map(|&a| (a, w)).collect()
        })
    }

    /// Builds a table by calling `rule` with `A(x)` for each non-killed state.
    pub fn from_fn(model: &KilledModel, mut rule: impl FnMut(&[usize]) -> ActionDist) -> Self {
        let m = model.first_stage();
        let rules = (m..model.last_stage())
            .map(|s| {
                (0..model.states(s).len())
                    .map(|x| {
                        let acts = model.available(s, x);
                        if acts.is_empty() {
                            Vec::new()
                        } else {
                            rule(acts)
                        }
                    })
                    .collect()
            })
            .collect();
        MarkovPolicy {
            first_stage: m,
            rules,
        }
    }

    pub fn first_stage(&self) -> Stage {
        self.first_stage
    }

    /// Decision stages covered, as `first..=last`.
    pub fn last_decision_stage(&self) -> Stage {
        self.first_stage + self.rules.len() as Stage
    }

    /// Rule used at decision stage `t` in state `x` of `X_{t-1}`.
    pub fn rule(&self, t: Stage, x: usize) -> Option<&ActionDist> {
        let slot = t - self.first_stage - 1;
        if slot < 0 {
            return None;
        }
        self.rules.get(slot as usize).and_then(|r| r.get(x))
    }

    pub fn rules(&self) -> &[Vec<ActionDist>] {
        &self.rules
    }

    /// Checks every rule is a distribution on `A(x)`.
    pub fn check(&self, model: &KilledModel) -> Result<()> {
        for t in model.first_stage() + 1..=model.last_stage() {
            for x in model.live_states(t - 1) {
                let dist = self.rule(t, x).ok_or_else(|| {
                    Error::Policy(format!(
                        "no rule at stage {t} for state `{}`",
                        model.state_id(t - 1, x)
                    ))
                })?;
                check_distribution(model, t - 1, x, dist)?;
            }
        }
        Ok(())
    }
}

impl Policy for MarkovPolicy {
    fn decide(&self, history: History<'_>) -> Result<ActionDist> {
        let t = history.stage() + 1;
        match self.rule(t, history.current_state()) {
            Some(dist) if !dist.is_empty() => Ok(dist.clone()),
            Some(_) => Err(Error::Policy(format!(
                "no rule at stage {t} for state index {}",
                history.current_state()
            ))),
            None => Err(Error::Stage(format!(
                "Markov policy covers decision stages {}..={}, queried at {t}",
                self.first_stage + 1,
                self.last_decision_stage()
            ))),
        }
    }
}

/// The choices `psi_t(x)` of one decision stage `t`, over the states of `X_{t-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionRule {
    pub stage: Stage,
    pub choice: Vec<Option<usize>>,
}

impl DecisionRule {
    pub fn action(&self, x: usize) -> Option<usize> {
        self.choice.get(x).copied().flatten()
    }
}

/// Deterministic memoryless policy: one [`DecisionRule`] per decision stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplePolicy {
    rules: Vec<DecisionRule>,
}

impl SimplePolicy {
    /// Rules must cover consecutive decision stages.
    pub fn new(rules: Vec<DecisionRule>) -> Self {
        debug_assert!(rules.windows(2).all(|w| w[1].stage == w[0].stage + 1));
        SimplePolicy { rules }
    }

    /// Picks `choose(t, x, A(x))` in every non-killed state.
    pub fn from_fn(
        model: &KilledModel,
        mut choose: impl FnMut(Stage, usize, &[usize]) -> usize,
    ) -> Self {
        let rules = (model.first_stage() + 1..=model.last_stage())
            .map(|t| DecisionRule {
                stage: t,
                choice: (0..model.states(t - 1).len())
                    .map(|x| {
                        let acts = model.available(t - 1, x);
                        (!acts.is_empty()).then(|| choose(t, x, acts))
                    })
                    .collect(),
            })
            .collect();
        SimplePolicy { rules }
    }

    pub fn rules(&self) -> &[DecisionRule] {
        &self.rules
    }

    /// Rule of decision stage `t`.
    pub fn rule(&self, t: Stage) -> Option<&DecisionRule> {
        let first = self.rules.first()?.stage;
        if t < first {
            return None;
        }
        self.rules.get((t - first) as usize)
    }

    pub fn action(&self, t: Stage, x: usize) -> Option<usize> {
        self.rule(t)?.action(x)
    }

    /// Concatenates this policy with one covering the following stages.
    pub fn then(&self, later: &SimplePolicy) -> SimplePolicy {
        let mut rules = self.rules.clone();
        rules.extend(later.rules.iter().cloned());
        SimplePolicy::new(rules)
    }

    /// Checks `psi_t(x)` is in `A(x)` for every non-killed state.
    pub fn check(&self, model: &KilledModel) -> Result<()> {
        for t in model.first_stage() + 1..=model.last_stage() {
            for x in model.live_states(t - 1) {
                let a = self.action(t, x).ok_or_else(|| {
                    Error::Policy(format!(
                        "no action at stage {t} for state `{}`",
                        model.state_id(t - 1, x)
                    ))
                })?;
                if !model.available(t - 1, x).contains(&a) {
                    return Err(Error::Policy(format!(
                        "action index {a} is not available in state `{}` at stage {}",
                        model.state_id(t - 1, x),
                        t - 1
                    )));
                }
            }
        }
        Ok(())
    }
}

impl Policy for SimplePolicy {
    fn decide(&self, history: History<'_>) -> Result<ActionDist> {
        let t = history.stage() + 1;
        match self.rule(t) {
            Some(rule) => match rule.action(history.current_state()) {
                Some(a) => Ok(vec![(a, 1.0)]),
                None => Err(Error::Policy(format!(
                    "no action at stage {t} for state index {}",
                    history.current_state()
                ))),
            },
            None => Err(Error::Stage(format!(
                "simple policy has no rule for decision stage {t}"
            ))),
        }
    }
}

impl From<&SimplePolicy> for MarkovPolicy {
    fn from(policy: &SimplePolicy) -> Self {
        let first_stage = policy.rules.first().map(|r| r.stage - 1).unwrap_or(0);
        let rules = policy
            .rules
            .iter()
            .map(|r| {
                r.choice
                    .iter()
                    .map(|c| c.map(|a| vec![(a, 1.0)]).unwrap_or_default())
                    .collect()
            })
            .collect();
        MarkovPolicy { first_stage, rules }
    }
}

/// Checks `dist` is a distribution supported on `A(x)` for `x` in `X_t`.
pub fn check_distribution(
    model: &KilledModel,
    t: Stage,
    x: usize,
    dist: &[(usize, f64)],
) -> Result<()> {
    let invalid = |reason: String| Error::InvalidDecision {
        stage: t,
        state: model.state_id(t, x).to_string(),
        reason,
    };
    let acts = model.available(t, x);
    let mut sum = 0.0;
    for &(a, p) in dist {
        if !p.is_finite() || p < 0.0 {
            return Err(invalid(format!("mass {p} is not a probability")));
        }
        if p > 0.0 && !acts.contains(&a) {
            return Err(invalid(format!("action index {a} is not available")));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > crate::model::PROBABILITY_TOLERANCE {
        return Err(invalid(format!("masses sum to {sum}")));
    }
    Ok(())
}
