//! Reduction of arbitrary policies to Markov and then simple ones without losing value.

use super::compose::support;
use super::{ActionDist, DecisionRule, MarkovPolicy, Policy, SimplePolicy};
use crate::error::{Error, Result};
use crate::measure::enumerate_outcomes;
use crate::model::{KilledModel, STRUCTURAL_ZERO};
use crate::solver::{backup, evaluate_markov};

/// Markov policy with the same one-dimensional marginals as `pi` started from `mu`:
/// `theta(a|x) = P{a_t = a} / P{x_{t-1} = x}`. States `pi` never reaches get a point mass on
/// their first action.
pub fn markovize(model: &KilledModel, mu: &[f64], pi: &dyn Policy) -> Result<MarkovPolicy> {
    let marginals = enumerate_outcomes(model, mu, pi)?.marginals(model);
    let m = model.first_stage();
    let mut tables = Vec::with_capacity(model.epochs());
    for t in m + 1..=model.last_stage() {
        let mut table = vec![ActionDist::new(); model.states(t - 1).len()];
        for x in model.live_states(t - 1) {
            let acts = model.available(t - 1, x);
            let reach = marginals.state(t - 1, x);
            table[x] = if reach < STRUCTURAL_ZERO {
                vec![(acts[0], 1.0)]
            } else {
                acts.iter()
                    .map(|&a| (a, marginals.action(t, a) / reach))
                    .filter(|&(_, w)| w > 0.0)
                    .collect()
            };
        }
        tables.push(table);
    }
    Ok(MarkovPolicy::new(m, tables))
}

/// Simple policy that is at least as good as `theta` from every initial state.
///
/// Working backward with the tail assessments `W_t` of `theta`, each state keeps the first
/// action in the support of `theta(.|x)` whose one-step value against `W_t` reaches the
/// `theta`-average. Comparison is exact first, then within `1e-9 * max(1, |average|)` to
/// absorb rounding in the average.
pub fn dominate_simple(model: &KilledModel, theta: &MarkovPolicy) -> Result<SimplePolicy> {
    theta.check(model)?;
    let tails = evaluate_markov(model, theta)?;
    let m = model.first_stage();
    let mut rules = Vec::with_capacity(model.epochs());
    for t in m + 1..=model.last_stage() {
        let tail = &tails[(t - m) as usize];
        let mut choice = vec![None; model.states(t - 1).len()];
        for x in model.live_states(t - 1) {
            let dist = theta.rule(t, x).expect("checked above");
            let scored: Vec<(usize, f64)> = support(dist)
                .map(|(a, _)| (a, backup(model, t, a, tail)))
                .collect();
            let mean: f64 = dist
                .iter()
                .map(|&(a, w)| w * backup(model, t, a, tail))
                .sum();
            let slack = 1e-9 * mean.abs().max(1.0);
            let pick = scored
                .iter()
                .find(|&&(_, f)| f >= mean)
                .or_else(|| scored.iter().find(|&&(_, f)| f >= mean - slack))
                .ok_or_else(|| {
                    Error::Internal(format!(
                        "no supported action reaches the average at stage {t} in `{}`",
                        model.state_id(t - 1, x)
                    ))
                })?;
            choice[x] = Some(pick.0);
        }
        rules.push(DecisionRule { stage: t, choice });
    }
    Ok(SimplePolicy::new(rules))
}
