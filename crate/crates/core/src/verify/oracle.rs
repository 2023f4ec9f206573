//! Exhaustive search over simple policies.

use crate::error::{Error, Result};
use crate::measure::assess_per_state;
use crate::model::KilledModel;
use crate::policy::{DecisionRule, SimplePolicy};
use crate::solver::ValueFunction;

/// Default cap on the number of simple policies searched.
pub const DEFAULT_POLICY_CAP: u64 = 1_000_000;

/// Number of simple policies of `model`, or `None` on overflow.
pub fn simple_policy_count(model: &KilledModel) -> Option<u64> {
    let mut count: u64 = 1;
    for s in model.first_stage()..model.last_stage() {
        for x in model.live_states(s) {
            count = count.checked_mul(model.available(s, x).len() as u64)?;
        }
    }
    Some(count)
}

/// Pointwise maximum of `omega(x, phi)` over every simple policy `phi`, evaluated by outcome
/// enumeration.
pub fn brute_force_value(model: &KilledModel, cap: u64) -> Result<ValueFunction> {
    match simple_policy_count(model) {
        Some(count) if count <= cap => {}
        _ => {
            return Err(Error::Explosion {
                what: "simple policies",
                cap: cap as usize,
            })
        }
    }
    let m = model.first_stage();
    let slots: Vec<(usize, usize)> = (m..model.last_stage())
        .flat_map(|s| model.live_states(s).map(move |x| ((s - m) as usize, x)))
        .collect();
    let mut digits = vec![0usize; slots.len()];
    let mut best = vec![f64::NEG_INFINITY; model.states(m).len()];
    loop {
        let mut rules: Vec<DecisionRule> = (m + 1..=model.last_stage())
            .map(|t| DecisionRule {
                stage: t,
                choice: vec![None; model.states(t - 1).len()],
            })
            .collect();
        for (&(slot, x), &d) in slots.iter().zip(&digits) {
            rules[slot].choice[x] = Some(model.available(m + slot as i64, x)[d]);
        }
        let values = assess_per_state(model, &SimplePolicy::new(rules))?;
        for (b, v) in best.iter_mut().zip(values) {
            *b = b.max(v);
        }
        // Advance the mixed-radix counter.
        let mut i = 0;
        loop {
            if i == slots.len() {
                return ValueFunction::new(model, m, best);
            }
            let (slot, x) = slots[i];
            digits[i] += 1;
            if digits[i] < model.available(m + slot as i64, x).len() {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}
