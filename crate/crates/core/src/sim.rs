//! Monte Carlo estimation of policy assessments.
//!
//! Trajectory `i` of a run seeded with `seed` draws from its own ChaCha8 stream `(seed, i)`,
//! so estimates do not depend on thread scheduling. Categorical draws invert the cumulative
//! mass in declaration order.

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::assess_outcome;
use crate::model::{AugmentedOutcome, KilledModel, Stage, Way};
use crate::policy::{check_distribution, Policy};

/// Index drawn from `(index, mass)` pairs by cumulative inversion.
fn draw(rng: &mut impl Rng, entries: impl Iterator<Item = (usize, f64)> + Clone) -> Option<usize> {
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    let mut last = None;
    for (i, p) in entries {
        if p <= 0.0 {
            continue;
        }
        cumulative += p;
        last = Some(i);
        if u < cumulative {
            return last;
        }
    }
    last
}

/// Samples one augmented outcome.
pub fn sample_outcome(
    model: &KilledModel,
    mu: &[f64],
    pi: &dyn Policy,
    rng: &mut impl Rng,
) -> Result<AugmentedOutcome> {
    let m = model.first_stage();
    let x0 = draw(rng, mu.iter().copied().enumerate())
        .ok_or_else(|| Error::InvalidArgument("initial distribution has no mass".into()))?;
    let mut way = Way::new(m, x0);
    if model.is_killed(m, x0) {
        return Ok(AugmentedOutcome::Killed {
            prefix: way,
            fatal_action: None,
            stage: m,
        });
    }
    for t in m..model.last_stage() {
        let x = way.last_state();
        let dist = pi.decide(way.history())?;
        check_distribution(model, t, x, &dist)?;
        let a = draw(rng, dist.iter().copied()).expect("checked distribution has mass");
        let next = t + 1;
        let y = draw(
            rng,
            model
                .action(next, a)
                .transitions
                .iter()
                .copied()
                .enumerate(),
        )
        .expect("validated rows have mass");
        if model.is_killed(next, y) {
            return Ok(AugmentedOutcome::Killed {
                prefix: way,
                fatal_action: Some(a),
                stage: next,
            });
        }
        way.push(a, y);
    }
    Ok(AugmentedOutcome::Survived(way))
}

/// Summary of a Monte Carlo run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub samples: u64,
    pub mean: f64,
    pub std_dev: f64,
    pub std_error: f64,
    /// Fraction of samples killed at each stage.
    pub kill_rate: IndexMap<Stage, f64>,
    pub seed: u64,
}

/// Estimates `omega(mu, pi)` from `samples` independent outcomes.
pub fn estimate_value(
    model: &KilledModel,
    mu: &[f64],
    pi: &dyn Policy,
    samples: u64,
    seed: u64,
) -> Result<SimulationResult> {
    if samples < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 samples, got {samples}"
        )));
    }
    if mu.len() != model.states(model.first_stage()).len() {
        return Err(Error::InvalidArgument(
            "initial distribution does not match the first stage".into(),
        ));
    }
    let draws: Vec<(f64, Option<Stage>)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let outcome = sample_outcome(model, mu, pi, &mut rng)?;
            Ok((assess_outcome(model, &outcome)?, outcome.kill_stage()))
        })
        .collect::<Result<_>>()?;
    let n = samples as f64;
    let mean = draws.iter().map(|(v, _)| v).sum::<f64>() / n;
    let variance = draws.iter().map(|(v, _)| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let std_dev = variance.sqrt();
    let mut kill_rate: IndexMap<Stage, f64> = (model.first_stage()..=model.last_stage())
        .filter(|&t| model.killed_state(t).is_some())
        .map(|t| (t, 0.0))
        .collect();
    for (_, stage) in &draws {
        if let Some(rate) = stage.and_then(|t| kill_rate.get_mut(&t)) {
            *rate += 1.0;
        }
    }
    for rate in kill_rate.values_mut() {
        *rate /= n;
    }
    Ok(SimulationResult {
        samples,
        mean,
        std_dev,
        std_error: std_dev / n.sqrt(),
        kill_rate,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::tests::m1;
    use crate::policy::{MarkovPolicy, SimplePolicy};

    #[test]
    fn m1_estimate_is_close() {
        let model = m1();
        let a1 = SimplePolicy::from_fn(&model, |_, _, acts| acts[0]);
        let result = estimate_value(&model, &[1.0], &a1, 100_000, 1).unwrap();
        assert!(
            (result.mean - 6.8).abs() < 5.0 * result.std_error,
            "{result:?}"
        );
        assert!((result.kill_rate[&1] - 0.1).abs() < 0.01);
    }

    #[test]
    fn zero_rewards_estimate_exactly_zero() {
        let model = m1()
            .map_rewards(|_, _, _| 0.0)
            .with_terminal_rewards(vec![0.0; 3])
            .unwrap();
        let mut file = model.to_file();
        file.crash = None;
        let model = crate::model::build_model(&file).unwrap();
        let result =
            estimate_value(&model, &[1.0], &MarkovPolicy::uniform(&model), 1000, 4).unwrap();
        assert_eq!((result.mean, result.std_dev), (0.0, 0.0));
    }

    #[test]
    fn equal_seeds_give_identical_results() {
        let model = m1();
        let uniform = MarkovPolicy::uniform(&model);
        let a = estimate_value(&model, &[1.0], &uniform, 5000, 9).unwrap();
        let b = estimate_value(&model, &[1.0], &uniform, 5000, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(
            a,
            estimate_value(&model, &[1.0], &uniform, 5000, 10).unwrap()
        );
    }

    #[test]
    fn needs_two_samples() {
        let model = m1();
        assert!(estimate_value(&model, &[1.0], &MarkovPolicy::uniform(&model), 1, 0).is_err());
    }
}
