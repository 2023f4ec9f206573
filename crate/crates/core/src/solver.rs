//! Backward induction for killed models.
//!
//! Operators are indexed by the stage of their input function:
//!
//! * `U` maps a value function on `X_t` to action assessments on `A_t`:
//!   `Uf(a) = q(a) + sum_{y live} p(y|a) f(y) + p(x*_t|a) c(x*_t)`.
//! * `V` maps action assessments on `A_t` to values on `X_{t-1}`: `Vg(x) = max_{A(x)} g`.
//! * `T = V U`, and `T_psi` is the one-step backup under a fixed decision rule.
//!
//! Starting from `nu_n = r`, `u_t = U nu_t` and `nu_{t-1} = V u_t` give the assessment of
//! the process at every stage.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::assess_state;
use crate::model::{derived_model, KilledModel, Stage, STRUCTURAL_ZERO};
use crate::policy::{
    restrict_after_first, DecisionRule, History, MarkovPolicy, Policy, SimplePolicy,
};

/// Values on the states of one stage. The slot of the killed state always holds its crash
/// value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueFunction {
    stage: Stage,
    values: Vec<f64>,
}

impl ValueFunction {
    /// Values for every state of `X_t`; the killed slot is overwritten with `c(x*_t)`.
    pub fn new(model: &KilledModel, stage: Stage, mut values: Vec<f64>) -> Result<Self> {
        if !model.contains_stage(stage) {
            return Err(Error::Stage(format!("stage {stage} outside the model")));
        }
        if values.len() != model.states(stage).len() {
            return Err(Error::InvalidArgument(format!(
                "value function has {} entries, stage {stage} has {} states",
                values.len(),
                model.states(stage).len()
            )));
        }
        if let (Some(k), Some(c)) = (model.killed_state(stage), model.crash(stage)) {
            values[k] = c;
        }
        Ok(ValueFunction { stage, values })
    }

    /// The terminal reward `r` as a value function on `X_n`.
    pub fn terminal(model: &KilledModel) -> Self {
        Self::new(model, model.last_stage(), model.terminal_rewards().to_vec())
            .expect("terminal rewards cover the last stage")
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn get(&self, x: usize) -> f64 {
        self.values[x]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `mu nu`, the value of an initial distribution.
    pub fn dot(&self, mu: &[f64]) -> f64 {
        mu.iter().zip(&self.values).map(|(w, v)| w * v).sum()
    }
}

/// Assessments `u(a)` of the actions of one stage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionAssessment {
    stage: Stage,
    values: Vec<f64>,
}

impl ActionAssessment {
    pub fn new(model: &KilledModel, stage: Stage, values: Vec<f64>) -> Result<Self> {
        if stage <= model.first_stage() || stage > model.last_stage() {
            return Err(Error::Stage(format!("no actions at stage {stage}")));
        }
        if values.len() != model.actions(stage).len() {
            return Err(Error::InvalidArgument(format!(
                "assessment has {} entries, stage {stage} has {} actions",
                values.len(),
                model.actions(stage).len()
            )));
        }
        Ok(ActionAssessment { stage, values })
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn get(&self, a: usize) -> f64 {
        self.values[a]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn require_action_stage(model: &KilledModel, t: Stage, what: &str) -> Result<()> {
    if t <= model.first_stage() || t > model.last_stage() {
        return Err(Error::Stage(format!(
            "{what} needs an input at stage {}..={}, got {t}",
            model.first_stage() + 1,
            model.last_stage()
        )));
    }
    Ok(())
}

/// One-step expected value of action `a` of `A_t` against `f` on `X_t`, kill term included.
pub(crate) fn backup(model: &KilledModel, t: Stage, a: usize, f: &ValueFunction) -> f64 {
    let action = model.action(t, a);
    let killed = model.killed_state(t);
    let mut total = action.reward;
    for (y, &p) in action.transitions.iter().enumerate() {
        if Some(y) != killed {
            total += p * f.get(y);
        }
    }
    if let Some(k) = killed {
        total += action.transitions[k] * model.crash(t).unwrap_or(0.0);
    }
    total
}

pub fn operator_u(model: &KilledModel, f: &ValueFunction) -> Result<ActionAssessment> {
    let t = f.stage();
    require_action_stage(model, t, "U")?;
    let values = (0..model.actions(t).len())
        .map(|a| backup(model, t, a, f))
        .collect();
    Ok(ActionAssessment { stage: t, values })
}

/// Result of `V`: values on `X_{t-1}` and the first maximizing action of every state.
#[derive(Debug, Clone, PartialEq)]
pub struct Maximized {
    pub values: ValueFunction,
    pub witness: DecisionRule,
}

pub fn operator_v(model: &KilledModel, g: &ActionAssessment) -> Result<Maximized> {
    let t = g.stage();
    require_action_stage(model, t, "V")?;
    let s = t - 1;
    let width = model.states(s).len();
    let mut values = vec![0.0; width];
    let mut choice = vec![None; width];
    for x in 0..width {
        let mut best: Option<(usize, f64)> = None;
        for &a in model.available(s, x) {
            let v = g.get(a);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((a, v));
            }
        }
        if let Some((a, v)) = best {
            values[x] = v;
            choice[x] = Some(a);
        }
    }
    Ok(Maximized {
        values: ValueFunction::new(model, s, values)?,
        witness: DecisionRule { stage: t, choice },
    })
}

/// `T = V U`.
pub fn operator_t(model: &KilledModel, f: &ValueFunction) -> Result<Maximized> {
    operator_v(model, &operator_u(model, f)?)
}

/// `T_psi f(x) = q(psi(x)) + sum_{y live} p(y|psi(x)) f(y) + p(x*|psi(x)) c(x*)`.
pub fn operator_t_psi(
    model: &KilledModel,
    rule: &DecisionRule,
    f: &ValueFunction,
) -> Result<ValueFunction> {
    let t = f.stage();
    require_action_stage(model, t, "T_psi")?;
    if rule.stage != t {
        return Err(Error::Stage(format!(
            "decision rule is for stage {}, input at {t}",
            rule.stage
        )));
    }
    let s = t - 1;
    let mut values = vec![0.0; model.states(s).len()];
    for x in model.live_states(s) {
        let a = rule
            .action(x)
            .filter(|a| model.available(s, x).contains(a))
            .ok_or_else(|| {
                Error::Policy(format!(
                    "rule has no available action for `{}`",
                    model.state_id(s, x)
                ))
            })?;
        values[x] = backup(model, t, a, f);
    }
    ValueFunction::new(model, s, values)
}

/// Everything backward induction computes.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    first_stage: Stage,
    values: Vec<ValueFunction>,
    assessments: Vec<ActionAssessment>,
    witnesses: Vec<DecisionRule>,
}

impl Solution {
    /// `nu_t` on `X_t`.
    pub fn value(&self, t: Stage) -> &ValueFunction {
        &self.values[(t - self.first_stage) as usize]
    }

    /// `u_t` on `A_t`.
    pub fn assessment(&self, t: Stage) -> &ActionAssessment {
        &self.assessments[(t - self.first_stage - 1) as usize]
    }

    /// First maximizing action of every state at decision stage `t`.
    pub fn witness(&self, t: Stage) -> &DecisionRule {
        &self.witnesses[(t - self.first_stage - 1) as usize]
    }

    /// Assessment of the process at the first stage.
    pub fn initial_value(&self) -> &ValueFunction {
        &self.values[0]
    }

    pub fn values(&self) -> &[ValueFunction] {
        &self.values
    }

    pub fn assessments(&self) -> &[ActionAssessment] {
        &self.assessments
    }

    /// The uniform optimal simple policy made of the witnesses.
    pub fn optimal_policy(&self) -> SimplePolicy {
        SimplePolicy::new(self.witnesses.clone())
    }
}

/// Solves the optimality equations from `nu_n = r` down to the first stage.
pub fn backward_induction(model: &KilledModel) -> Solution {
    let epochs = model.epochs();
    let mut values = Vec::with_capacity(epochs + 1);
    let mut assessments = Vec::with_capacity(epochs);
    let mut witnesses = Vec::with_capacity(epochs);
    let mut nu = ValueFunction::terminal(model);
    values.push(nu.clone());
    for _ in 0..epochs {
        let u = operator_u(model, &nu).expect("stage within the model");
        let step = operator_v(model, &u).expect("stage within the model");
        nu = step.values;
        values.push(nu.clone());
        assessments.push(u);
        witnesses.push(step.witness);
    }
    values.reverse();
    assessments.reverse();
    witnesses.reverse();
    Solution {
        first_stage: model.first_stage(),
        values,
        assessments,
        witnesses,
    }
}

/// A simple policy together with its optimality certificate: `omega(x, policy) >=
/// nu(x) - epsilon` for every initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub policy: SimplePolicy,
    pub epsilon: f64,
}

/// Picks, per stage, the first action (declaration order) with `u_t(a) >= nu_{t-1}(x) -
/// chi_t`. `chi[i]` is the slack of decision stage `m + 1 + i`. With a zero slack this is
/// the maximizing witness.
pub fn extract_simple_policy(
    model: &KilledModel,
    solution: &Solution,
    chi: &[f64],
) -> Result<Extraction> {
    if chi.len() != model.epochs() {
        return Err(Error::InvalidArgument(format!(
            "expected {} slacks, got {}",
            model.epochs(),
            chi.len()
        )));
    }
    if let Some(bad) = chi.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "slack {bad} is not a nonnegative number"
        )));
    }
    let mut rules = Vec::with_capacity(chi.len());
    for (i, &slack) in chi.iter().enumerate() {
        let t = model.first_stage() + 1 + i as Stage;
        if slack == 0.0 {
            rules.push(solution.witness(t).clone());
            continue;
        }
        let u = solution.assessment(t);
        let nu = solution.value(t - 1);
        let choice = (0..model.states(t - 1).len())
            .map(|x| {
                model
                    .available(t - 1, x)
                    .iter()
                    .copied()
                    .find(|&a| u.get(a) >= nu.get(x) - slack)
            })
            .collect();
        rules.push(DecisionRule { stage: t, choice });
    }
    Ok(Extraction {
        policy: SimplePolicy::new(rules),
        epsilon: chi.iter().sum(),
    })
}

/// `nu_s^t[f] = T^{t-s} f`: the assessment at stage `s` of the model restricted to
/// `[s, t]` with terminal reward `f`.
pub fn dp_value(
    model: &KilledModel,
    s: Stage,
    t: Stage,
    f: &ValueFunction,
) -> Result<ValueFunction> {
    if s >= t || s < model.first_stage() || t > model.last_stage() {
        return Err(Error::Stage(format!(
            "need {} <= s < t <= {}, got s = {s}, t = {t}",
            model.first_stage(),
            model.last_stage()
        )));
    }
    if f.stage() != t {
        return Err(Error::Stage(format!(
            "terminal function lives at stage {}, expected {t}",
            f.stage()
        )));
    }
    let mut value = f.clone();
    for _ in s..t {
        value = operator_t(model, &value)?.values;
    }
    Ok(value)
}

/// Right-hand side of the fundamental equation at initial state `x`:
/// `sum_a pi(a|x) (q(a) + sum_{y live} p(y|a) omega'(y, pi_a) + p(x*|a) c(x*))`, with
/// `omega'` evaluated on the derived model and `pi_a` the restriction of `pi` after `x a`.
pub fn fundamental_rhs(model: &KilledModel, x: usize, pi: Arc<dyn Policy>) -> Result<f64> {
    let m = model.first_stage();
    if model.is_killed(m, x) {
        return Ok(model.crash(m).unwrap_or(0.0));
    }
    let next = m + 1;
    let derived = if model.epochs() >= 2 {
        Some(derived_model(model)?)
    } else {
        None
    };
    let first = pi.decide(History::new(m, std::slice::from_ref(&x), &[]))?;
    crate::policy::check_distribution(model, m, x, &first)?;
    let killed = model.killed_state(next);
    let mut total = 0.0;
    for &(a, pa) in &first {
        if pa < STRUCTURAL_ZERO {
            continue;
        }
        let action = model.action(next, a);
        let continuation: Arc<dyn Policy> =
            Arc::new(restrict_after_first(model, pi.clone(), x, a)?);
        let mut inner = 0.0;
        for (y, &p) in action.transitions.iter().enumerate() {
            if p < STRUCTURAL_ZERO || Some(y) == killed {
                continue;
            }
            let value = match &derived {
                Some(d) => assess_state(d, y, &continuation)?,
                None => model.terminal_reward(y),
            };
            inner += p * value;
        }
        inner += model.kill_mass(next, a) * model.crash(next).unwrap_or(0.0);
        total += pa * (action.reward + inner);
    }
    Ok(total)
}

/// Assessments `omega_t(., theta)` of a Markov policy from every stage, by backward
/// recursion; entry `t - m` lives on `X_t`.
pub fn evaluate_markov(model: &KilledModel, theta: &MarkovPolicy) -> Result<Vec<ValueFunction>> {
    let mut out = vec![ValueFunction::terminal(model)];
    for t in (model.first_stage() + 1..=model.last_stage()).rev() {
        let f = out.last().expect("seeded with the terminal reward");
        let mut values = vec![0.0; model.states(t - 1).len()];
        for x in model.live_states(t - 1) {
            let dist = theta.rule(t, x).ok_or_else(|| {
                Error::Policy(format!(
                    "no rule at stage {t} for `{}`",
                    model.state_id(t - 1, x)
                ))
            })?;
            values[x] = dist.iter().map(|&(a, w)| w * backup(model, t, a, f)).sum();
        }
        out.push(ValueFunction::new(model, t - 1, values)?);
    }
    out.reverse();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::assess_state;
    use crate::policy::tests::m1;

    #[test]
    fn m1_operators() {
        let model = m1();
        let r = ValueFunction::terminal(&model);
        let u = operator_u(&model, &r).unwrap();
        assert!((u.get(0) - 6.8).abs() < 1e-12);
        assert!((u.get(1) - 4.2).abs() < 1e-12);
        let v = operator_v(&model, &u).unwrap();
        assert!((v.values.get(0) - 6.8).abs() < 1e-12);
        assert_eq!(v.witness.action(0), Some(0));
        let psi = DecisionRule {
            stage: 1,
            choice: vec![Some(0)],
        };
        let tp = operator_t_psi(&model, &psi, &r).unwrap();
        assert_eq!(tp.get(0), v.values.get(0));
    }

    #[test]
    fn m1_backward_induction_and_extraction() {
        let model = m1();
        let sol = backward_induction(&model);
        assert_eq!(sol.value(1).values()[1..], [10.0, 0.0]);
        assert!((sol.initial_value().get(0) - 6.8).abs() < 1e-12);
        let zero = extract_simple_policy(&model, &sol, &[0.0]).unwrap();
        assert_eq!(zero.policy.action(1, 0), Some(0));
        assert_eq!(zero.epsilon, 0.0);
        let slack = extract_simple_policy(&model, &sol, &[3.0]).unwrap();
        assert_eq!(slack.policy.action(1, 0), Some(0));
        assert_eq!(slack.epsilon, 3.0);
    }

    #[test]
    fn constant_assessment_maximizes_to_constant() {
        let model = m1();
        let g = ActionAssessment::new(&model, 1, vec![5.0, 5.0]).unwrap();
        let v = operator_v(&model, &g).unwrap();
        assert_eq!(v.values.get(0), 5.0);
        assert_eq!(v.witness.action(0), Some(0));
    }

    #[test]
    fn zero_everything_gives_zero_assessment() {
        let model = m1().map_rewards(|_, _, _| 0.0);
        let model = model.with_terminal_rewards(vec![0.0, 0.0, 0.0]).unwrap();
        let model = KilledModel::from_json(
            &model
                .to_file()
                .to_json_pretty()
                .replace("\"x*\": -2.0", "\"x*\": 0.0"),
        )
        .unwrap();
        let f = ValueFunction::new(&model, 1, vec![0.0; 3]).unwrap();
        assert_eq!(operator_u(&model, &f).unwrap().values(), &[0.0, 0.0]);
    }

    #[test]
    fn dp_value_single_step_and_errors() {
        let model = m1();
        let r = ValueFunction::terminal(&model);
        let one = dp_value(&model, 0, 1, &r).unwrap();
        assert_eq!(one, operator_t(&model, &r).unwrap().values);
        assert!(matches!(dp_value(&model, 1, 1, &r), Err(Error::Stage(_))));
        assert!(matches!(dp_value(&model, 1, 0, &r), Err(Error::Stage(_))));
    }

    #[test]
    fn m1_fundamental_rhs() {
        let model = m1();
        let a1: Arc<dyn Policy> = Arc::new(SimplePolicy::from_fn(&model, |_, _, acts| acts[0]));
        let rhs = fundamental_rhs(&model, 0, a1.clone()).unwrap();
        assert!((rhs - 6.8).abs() < 1e-12);
        assert!((rhs - assess_state(&model, 0, &a1).unwrap()).abs() < 1e-12);
        let uniform: Arc<dyn Policy> = Arc::new(MarkovPolicy::uniform(&model));
        assert!((fundamental_rhs(&model, 0, uniform).unwrap() - 5.5).abs() < 1e-12);
    }

    #[test]
    fn markov_evaluation_matches_enumeration_on_m1() {
        let model = m1();
        let theta = MarkovPolicy::uniform(&model);
        let w = evaluate_markov(&model, &theta).unwrap();
        assert!((w[0].get(0) - 5.5).abs() < 1e-12);
        assert_eq!(w[1], ValueFunction::terminal(&model));
    }

    #[test]
    fn slack_validation() {
        let model = m1();
        let sol = backward_induction(&model);
        assert!(extract_simple_policy(&model, &sol, &[]).is_err());
        assert!(extract_simple_policy(&model, &sol, &[-1.0]).is_err());
    }
}
