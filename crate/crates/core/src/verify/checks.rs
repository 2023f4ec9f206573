//! Executable identities. Each check returns its discrepancy: the largest absolute gap of an
//! equality, or the largest shortfall of an inequality (zero when it holds).

use std::sync::Arc;

use crate::error::Result;
use crate::measure::{
    assess_per_state, assess_policy, assess_state, enumerate_outcomes, for_each_outcome,
    point_mass, Fate,
};
use crate::model::{KilledModel, Stage};
use crate::policy::{combine, dominate_simple, markovize, splice, Policy};
use crate::solver::{
    backward_induction, dp_value, extract_simple_policy, fundamental_rhs, ValueFunction,
};

use super::oracle::{brute_force_value, DEFAULT_POLICY_CAP};

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Backward induction against exhaustive search over simple policies, at every initial state.
pub fn check_oracle(model: &KilledModel) -> Result<f64> {
    let solution = backward_induction(model);
    let brute = brute_force_value(model, DEFAULT_POLICY_CAP)?;
    Ok(max_gap(solution.initial_value().values(), brute.values()))
}

/// `omega(x, pi)` against the one-step decomposition through the derived model, at every
/// non-killed initial state.
pub fn check_fundamental(model: &KilledModel, pi: &Arc<dyn Policy>) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for x in model.live_states(model.first_stage()) {
        let direct = assess_state(model, x, pi)?;
        let rhs = fundamental_rhs(model, x, pi.clone())?;
        worst = worst.max((direct - rhs).abs());
    }
    Ok(worst)
}

/// The extracted policy is `sum chi`-optimal at every initial state, and exactly optimal with
/// zero slacks.
pub fn check_extraction(model: &KilledModel, chi: &[f64]) -> Result<f64> {
    let solution = backward_induction(model);
    let nu = solution.initial_value();
    let slack = extract_simple_policy(model, &solution, chi)?;
    let omega = assess_per_state(model, &slack.policy)?;
    let shortfall = omega
        .iter()
        .zip(nu.values())
        .map(|(w, v)| (v - slack.epsilon - w).max(0.0))
        .fold(0.0, f64::max);
    let exact = extract_simple_policy(model, &solution, &vec![0.0; model.epochs()])?;
    let gap = max_gap(&assess_per_state(model, &exact.policy)?, nu.values());
    Ok(shortfall.max(gap))
}

/// `pi -> markovize -> dominate_simple`: the Markov policy keeps the value and every
/// one-dimensional marginal of `pi`, and the simple policy is at least as good as it from
/// every initial state.
pub fn check_sufficiency(model: &KilledModel, mu: &[f64], pi: &dyn Policy) -> Result<f64> {
    let theta = markovize(model, mu, pi)?;
    let law_pi = enumerate_outcomes(model, mu, pi)?;
    let law_theta = enumerate_outcomes(model, mu, &theta)?;
    let marginal_gap = law_pi
        .marginals(model)
        .max_difference(&law_theta.marginals(model));
    let omega_pi = assess_policy(model, mu, pi)?;
    let omega_theta = assess_policy(model, mu, &theta)?;
    let phi = dominate_simple(model, &theta)?;
    let per_state_theta = assess_per_state(model, &theta)?;
    let per_state_phi = assess_per_state(model, &phi)?;
    let dominance = per_state_theta
        .iter()
        .zip(&per_state_phi)
        .map(|(t, p)| (t - p).max(0.0))
        .fold(0.0, f64::max);
    let overall = (omega_pi - assess_policy(model, mu, &phi)?).max(0.0);
    Ok((omega_pi - omega_theta)
        .abs()
        .max(marginal_gap)
        .max(dominance)
        .max(overall))
}

/// Splits the horizon at `split`: `head` drives stages before it, `tail` (a policy of the
/// window `[split, n]`) the rest. Checks, for the spliced policy,
///
/// * the conditional form: from each initial state, the expected tail assessment equals the
///   head's law of `x_split` integrated against `omega_split(., tail)`;
/// * the additive form: `omega(mu, spliced) = omega(mu, head with zero terminal reward) +
///   sum_y P{x_split = y} omega_split(y, tail)`;
/// * the terminal-reward form: `omega(mu, spliced)` equals the head's assessment on `[m,
///   split]` with terminal reward `omega_split(., tail)`.
///
/// Outcomes killed up to `split` count towards the head only.
pub fn check_markov_property(
    model: &KilledModel,
    mu: &[f64],
    head: Arc<dyn Policy>,
    tail: Arc<dyn Policy>,
    split: Stage,
) -> Result<f64> {
    let m = model.first_stage();
    let n = model.last_stage();
    if split < m || split > n {
        return Err(crate::Error::Stage(format!(
            "split {split} outside {m}..={n}"
        )));
    }
    let spliced = splice(head.clone(), split, tail.clone());
    let total = assess_policy(model, mu, &spliced)?;
    let tail_values = if split == n {
        ValueFunction::terminal(model).values().to_vec()
    } else {
        assess_per_state(&model.window(split, n, None)?, &tail)?
    };
    let live_at_split: Vec<usize> = model.live_states(split).collect();

    // Law of x_split under the head, per initial state, plus the head's own assessment.
    let (reach, head_values): (Vec<Vec<f64>>, Vec<f64>) = if split == m {
        let c = model.crash(m).unwrap_or(0.0);
        (0..model.states(m).len())
            .map(|x| {
                if model.is_killed(m, x) {
                    (vec![0.0; model.states(m).len()], c)
                } else {
                    (point_mass(model, x), 0.0)
                }
            })
            .unzip()
    } else {
        let zeros = vec![0.0; model.states(split).len()];
        let head_model = model.window(m, split, Some(&zeros))?;
        let mut reach = Vec::new();
        let mut values = Vec::new();
        for x in 0..model.states(m).len() {
            let mut law = vec![0.0; model.states(split).len()];
            let mut value = 0.0;
            for_each_outcome(
                &head_model,
                &point_mass(model, x),
                &head,
                usize::MAX,
                |h, fate, mass, v| {
                    if fate == Fate::Survived {
                        law[h.current_state()] += mass;
                    }
                    value += mass * v;
                },
            )?;
            reach.push(law);
            values.push(value);
        }
        (reach, values)
    };
    let continuation =
        |law: &[f64]| -> f64 { live_at_split.iter().map(|&y| law[y] * tail_values[y]).sum() };

    // Conditional form, per initial state.
    let mut worst: f64 = 0.0;
    for (x, law) in reach.iter().enumerate() {
        let mut expected_tail = 0.0;
        for_each_outcome(
            model,
            &point_mass(model, x),
            &spliced,
            usize::MAX,
            |h, fate, mass, value| {
                let killed_early = matches!(fate, Fate::Killed { stage, .. } if stage <= split);
                if killed_early {
                    return;
                }
                let head_rewards: f64 = h
                    .actions
                    .iter()
                    .enumerate()
                    .take_while(|(i, _)| m + 1 + (*i as Stage) <= split)
                    .map(|(i, &a)| model.action(m + 1 + i as Stage, a).reward)
                    .sum();
                expected_tail += mass * (value - head_rewards);
            },
        )?;
        worst = worst.max((expected_tail - continuation(law)).abs());
    }

    // Additive form.
    let mut nu_bar = vec![0.0; model.states(split).len()];
    let mut head_total = 0.0;
    for (x, &w) in mu.iter().enumerate() {
        for (acc, p) in nu_bar.iter_mut().zip(&reach[x]) {
            *acc += w * p;
        }
        head_total += w * head_values[x];
    }
    worst = worst.max((total - head_total - continuation(&nu_bar)).abs());

    // Terminal-reward form.
    let folded = if split == m {
        mu.iter()
            .enumerate()
            .map(|(x, w)| {
                w * if model.is_killed(m, x) {
                    head_values[x]
                } else {
                    tail_values[x]
                }
            })
            .sum()
    } else {
        assess_policy(&model.window(m, split, Some(&tail_values))?, mu, &head)?
    };
    Ok(worst.max((total - folded).abs()))
}

/// Dynamic programming principle at `t`: `T^{n-m} r = T^{t-m} T^{n-t} r`, and splicing optimal
/// simple policies of `[m, t]` (with terminal reward `nu_t`) and `[t, n]` achieves `nu_m`.
pub fn check_dp_principle(model: &KilledModel, t: Stage) -> Result<f64> {
    let (m, n) = (model.first_stage(), model.last_stage());
    let r = ValueFunction::terminal(model);
    let full = dp_value(model, m, n, &r)?;
    if t == n {
        return Ok(max_gap(full.values(), dp_value(model, m, n, &r)?.values()));
    }
    let inner = dp_value(model, t, n, &r)?;
    let composed = dp_value(model, m, t, &inner)?;
    let mut worst = max_gap(full.values(), composed.values());

    let head_model = model.window(m, t, Some(inner.values()))?;
    let tail_model = model.window(t, n, None)?;
    let optimal = |sub: &KilledModel| {
        extract_simple_policy(sub, &backward_induction(sub), &vec![0.0; sub.epochs()])
            .map(|e| e.policy)
    };
    let spliced = splice(
        Arc::new(optimal(&head_model)?),
        t,
        Arc::new(optimal(&tail_model)?),
    );
    for x in model.live_states(m) {
        worst = worst.max((assess_state(model, x, &spliced)? - full.get(x)).abs());
    }
    Ok(worst)
}

/// The combination of per-initial-state policies, each `epsilon`-optimal from its own state, is
/// `epsilon`-optimal for every initial distribution of `grid`.
pub fn check_uniform_optimality(
    model: &KilledModel,
    family: &[(usize, Arc<dyn Policy>)],
    epsilon: f64,
    grid: &[Vec<f64>],
) -> Result<f64> {
    let nu = backward_induction(model);
    let mut worst: f64 = 0.0;
    for mu in grid {
        let combined = combine(model, mu, family.iter().cloned())?;
        let omega = assess_policy(model, mu, &combined)?;
        worst = worst.max((nu.initial_value().dot(mu) - epsilon - omega).max(0.0));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::tests::m1;
    use crate::policy::{MarkovPolicy, SimplePolicy};
    use crate::verify::generate::{
        random_model, GeneratorParams, HashedHistoryPolicy, ParityPolicy,
    };

    #[test]
    fn m1_checks() {
        let model = m1();
        assert!(check_oracle(&model).unwrap() < 1e-12);
        for which in 0..2 {
            let phi: Arc<dyn Policy> =
                Arc::new(SimplePolicy::from_fn(&model, |_, _, acts| acts[which]));
            assert!(check_fundamental(&model, &phi).unwrap() < 1e-12);
        }
        let uniform: Arc<dyn Policy> = Arc::new(MarkovPolicy::uniform(&model));
        assert!(check_fundamental(&model, &uniform).unwrap() < 1e-12);
        assert!(check_extraction(&model, &[0.7]).unwrap() < 1e-12);
        assert!(check_sufficiency(&model, &[1.0], &uniform).unwrap() < 1e-12);
        assert_eq!(check_dp_principle(&model, 1).unwrap(), 0.0);
    }

    #[test]
    fn degenerate_splits() {
        let params = GeneratorParams {
            min_epochs: 3,
            max_epochs: 3,
            ..GeneratorParams::default()
        };
        let model = random_model(5, &params);
        let mu = crate::verify::generate::random_mu(&model, 1);
        let head: Arc<dyn Policy> = Arc::new(HashedHistoryPolicy::new(&model, 1));
        let whole: Arc<dyn Policy> = Arc::new(HashedHistoryPolicy::new(&model, 2));
        assert!(check_markov_property(&model, &mu, head.clone(), whole, 0).unwrap() < 1e-9);
        let unused: Arc<dyn Policy> = Arc::new(MarkovPolicy::uniform(&model));
        assert!(check_markov_property(&model, &mu, head.clone(), unused, 3).unwrap() < 1e-9);
        let tail: Arc<dyn Policy> = Arc::new(ParityPolicy::new(&model.window(1, 3, None).unwrap()));
        assert!(check_markov_property(&model, &mu, head, tail, 1).unwrap() < 1e-9);
    }

    #[test]
    fn parity_policy_sufficiency() {
        let params = GeneratorParams {
            min_epochs: 3,
            max_epochs: 3,
            ..GeneratorParams::default()
        };
        for seed in 0..10 {
            let model = random_model(seed, &params);
            let mu = crate::verify::generate::random_mu(&model, seed);
            assert!(check_sufficiency(&model, &mu, &ParityPolicy::new(&model)).unwrap() < 1e-9);
        }
    }

    #[test]
    fn single_initial_state_combination_is_its_branch() {
        let model = m1();
        let phi: Arc<dyn Policy> = Arc::new(SimplePolicy::from_fn(&model, |_, _, acts| acts[0]));
        assert_eq!(
            check_uniform_optimality(&model, &[(0, phi)], 0.0, &[vec![1.0]]).unwrap(),
            0.0
        );
    }

    #[test]
    fn suboptimal_family_is_caught() {
        let model = m1();
        let a2: Arc<dyn Policy> = Arc::new(SimplePolicy::from_fn(&model, |_, _, acts| acts[1]));
        let gap = check_uniform_optimality(&model, &[(0, a2)], 0.0, &[vec![1.0]]).unwrap();
        assert!((gap - 2.6).abs() < 1e-12);
    }
}
