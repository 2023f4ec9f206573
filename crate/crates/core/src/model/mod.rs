//! The killed model: stage-indexed state and action spaces, the owner projection, the
//! transition kernel with per-stage kill atoms, rewards, the crash function and the
//! initial distribution.
//!
//! States and actions are addressed by their index within their stage; indices follow
//! the declaration order of the model document, which is also the tie-break order used
//! everywhere downstream.

mod file;
mod outcome;
mod validate;

pub use file::{ActionEntry, Horizon, ModelFile, StateEntry};
pub use outcome::{AugmentedOutcome, Way};
pub use validate::{validate, Location, Violation};

use indexmap::IndexMap;

use crate::error::{Error, Result};

/// Absolute stage number (`m..=n`).
pub type Stage = i64;

/// Tolerance on probability sums.
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

/// Masses below this are structural zeros when enumerating supports.
pub const STRUCTURAL_ZERO: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct StateInfo {
    pub id: String,
    pub killed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionInfo {
    pub id: String,
    /// Index of the owning state in the previous stage.
    pub owner: usize,
    /// Running reward `q(a)`.
    pub reward: f64,
    /// Successor masses over the states of the action's stage, in declaration order.
    pub transitions: Vec<f64>,
}

/// A validated killed Markov decision model on `[m, n]`.
///
/// Instances are immutable; every constructor goes through validation.
#[derive(Debug, Clone, PartialEq)]
pub struct KilledModel {
    pub(crate) first: Stage,
    pub(crate) last: Stage,
    pub(crate) states: Vec<Vec<StateInfo>>,
    pub(crate) killed: Vec<Option<usize>>,
    pub(crate) actions: Vec<Vec<ActionInfo>>,
    pub(crate) available: Vec<Vec<Vec<usize>>>,
    pub(crate) terminal: Vec<f64>,
    pub(crate) crash: Vec<Option<f64>>,
    pub(crate) mu: Option<Vec<f64>>,
    pub(crate) allow_zero_kill: bool,
}

/// Builds a validated model from its document. Omitted `crash` entries are constructed as
/// the negated cumulative stage maxima of the running reward; an omitted `mu` becomes a
/// point mass on the first non-killed initial state.
pub fn build_model(file: &ModelFile) -> Result<KilledModel> {
    let (violations, model) = validate::resolve(file);
    match violations.into_iter().next() {
        Some(first) => Err(Error::Validation(first)),
        None => Ok(model.expect("resolution without violations yields a model")),
    }
}

/// Builds the derived model: the first state space and first action space are deleted.
pub fn derived_model(model: &KilledModel) -> Result<KilledModel> {
    if model.last - model.first < 2 {
        return Err(Error::Horizon(format!(
            "model on [{}, {}] has a single decision epoch; nothing would remain",
            model.first, model.last
        )));
    }
    model.window(model.first + 1, model.last, None)
}

impl KilledModel {
    pub fn from_json(text: &str) -> Result<Self> {
        build_model(&ModelFile::from_json(text)?)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// First stage `m`.
    pub fn first_stage(&self) -> Stage {
        self.first
    }

    /// Last stage `n`.
    pub fn last_stage(&self) -> Stage {
        self.last
    }

    /// Number of decision epochs, `n - m`.
    pub fn epochs(&self) -> usize {
        (self.last - self.first) as usize
    }

    pub fn contains_stage(&self, t: Stage) -> bool {
        (self.first..=self.last).contains(&t)
    }

    pub fn allows_zero_kill(&self) -> bool {
        self.allow_zero_kill
    }

    fn state_slot(&self, t: Stage) -> usize {
        assert!(
            self.contains_stage(t),
            "stage {t} outside [{}, {}]",
            self.first,
            self.last
        );
        (t - self.first) as usize
    }

    fn action_slot(&self, t: Stage) -> usize {
        assert!(
            t > self.first && t <= self.last,
            "action stage {t} outside [{}, {}]",
            self.first + 1,
            self.last
        );
        (t - self.first - 1) as usize
    }

    /// States of `X_t`.
    pub fn states(&self, t: Stage) -> &[StateInfo] {
        &self.states[self.state_slot(t)]
    }

    /// Actions of `A_t`, `t` in `m+1..=n`.
    pub fn actions(&self, t: Stage) -> &[ActionInfo] {
        &self.actions[self.action_slot(t)]
    }

    pub fn action(&self, t: Stage, a: usize) -> &ActionInfo {
        &self.actions(t)[a]
    }

    /// Index of the killed state of `X_t`, if the stage has one.
    pub fn killed_state(&self, t: Stage) -> Option<usize> {
        self.killed[self.state_slot(t)]
    }

    pub fn is_killed(&self, t: Stage, x: usize) -> bool {
        self.killed_state(t) == Some(x)
    }

    /// Crash value `c(x*_t)`.
    pub fn crash(&self, t: Stage) -> Option<f64> {
        self.crash[self.state_slot(t)]
    }

    /// Kill mass `p(x*_t | a)` of action `a` in `A_t`.
    pub fn kill_mass(&self, t: Stage, a: usize) -> f64 {
        match self.killed_state(t) {
            Some(k) => self.action(t, a).transitions[k],
            None => 0.0,
        }
    }

    /// Actions of `A_{t+1}` owned by state `x` of `X_t`; empty at the last stage and for
    /// killed states.
    pub fn available(&self, t: Stage, x: usize) -> &[usize] {
        if t >= self.last {
            return &[];
        }
        &self.available[self.state_slot(t)][x]
    }

    /// Terminal reward `r(x)` for `x` in `X_n`.
    pub fn terminal_reward(&self, x: usize) -> f64 {
        self.terminal[x]
    }

    pub fn terminal_rewards(&self) -> &[f64] {
        &self.terminal
    }

    /// Initial distribution fixed by the model document, if any. Derived models carry none.
    pub fn initial_distribution(&self) -> Option<&[f64]> {
        self.mu.as_deref()
    }

    pub fn state_index(&self, t: Stage, id: &str) -> Option<usize> {
        self.states(t).iter().position(|s| s.id == id)
    }

    pub fn action_index(&self, t: Stage, id: &str) -> Option<usize> {
        self.actions(t).iter().position(|a| a.id == id)
    }

    pub fn state_id(&self, t: Stage, x: usize) -> &str {
        &self.states(t)[x].id
    }

    pub fn action_id(&self, t: Stage, a: usize) -> &str {
        &self.action(t, a).id
    }

    /// Non-killed states of `X_t` in declaration order.
    pub fn live_states(&self, t: Stage) -> impl Iterator<Item = usize> + '_ {
        let killed = self.killed_state(t);
        (0..self.states(t).len()).filter(move |&x| Some(x) != killed)
    }

    /// The model restricted to `[s, t]`. A killed state at stage `s` is retained as an
    /// action-less initial state valued at its crash value. When `terminal` is given, it
    /// replaces the terminal reward on the non-killed states of `X_t`.
    pub fn window(&self, s: Stage, t: Stage, terminal: Option<&[f64]>) -> Result<KilledModel> {
        if !(self.first <= s && s < t && t <= self.last) {
            return Err(Error::Horizon(format!(
                "window [{s}, {t}] must satisfy {} <= s < t <= {}",
                self.first, self.last
            )));
        }
        let lo = (s - self.first) as usize;
        let hi = (t - self.first) as usize;
        let states = self.states[lo..=hi].to_vec();
        let killed = self.killed[lo..=hi].to_vec();
        let actions = self.actions[lo..hi].to_vec();
        let available = self.available[lo..hi].to_vec();
        let terminal = match terminal {
            Some(values) => {
                if values.len() != states[hi - lo].len() {
                    return Err(Error::InvalidArgument(format!(
                        "terminal reward has {} entries, stage {t} has {} states",
                        values.len(),
                        states[hi - lo].len()
                    )));
                }
                let mut values = values.to_vec();
                if let Some(k) = killed[hi - lo] {
                    values[k] = 0.0;
                }
                values
            }
            None if t == self.last => self.terminal.clone(),
            None => {
                return Err(Error::InvalidArgument(format!(
                    "window ending at interior stage {t} needs a terminal reward"
                )))
            }
        };
        let crash = self.crash[lo..=hi].to_vec();
        let mu = if s == self.first {
            self.mu.clone()
        } else {
            None
        };
        Ok(KilledModel {
            first: s,
            last: t,
            states,
            killed,
            actions,
            available,
            terminal,
            crash,
            mu,
            allow_zero_kill: self.allow_zero_kill,
        })
    }

    /// A copy of the model with a different initial distribution over `X_m`.
    pub fn with_initial_distribution(&self, mu: Vec<f64>) -> Result<KilledModel> {
        let mut file = self.to_file();
        let ids = self.states(self.first).iter().map(|s| s.id.clone());
        file.mu = Some(ids.zip(mu).collect());
        build_model(&file)
    }

    /// A copy of the model with running rewards replaced by `reward(t, a)`; crash values are
    /// kept as they are.
    pub fn map_rewards(&self, mut reward: impl FnMut(Stage, usize, f64) -> f64) -> KilledModel {
        let mut out = self.clone();
        for (slot, stage) in out.actions.iter_mut().enumerate() {
            let t = self.first + 1 + slot as Stage;
            for (a, action) in stage.iter_mut().enumerate() {
                action.reward = reward(t, a, action.reward);
            }
        }
        out
    }

    /// A copy of the model with terminal rewards replaced.
    pub fn with_terminal_rewards(&self, terminal: Vec<f64>) -> Result<KilledModel> {
        self.window(self.first, self.last, Some(&terminal))
    }

    /// Serializes the model with every crash value written out explicitly.
    pub fn to_file(&self) -> ModelFile {
        let mut killed_id_count: IndexMap<&str, usize> = IndexMap::new();
        for t in self.first..=self.last {
            if let Some(k) = self.killed_state(t) {
                *killed_id_count.entry(self.state_id(t, k)).or_default() += 1;
            }
        }
        let mut crash = IndexMap::new();
        let mut states = Vec::new();
        for t in self.first..=self.last {
            let mut entries = Vec::new();
            for (x, s) in self.states(t).iter().enumerate() {
                let r = (t == self.last && !s.killed).then(|| self.terminal[x]);
                entries.push(StateEntry {
                    id: s.id.clone(),
                    killed: s.killed,
                    r,
                });
                if s.killed {
                    let key = if killed_id_count[s.id.as_str()] > 1 {
                        format!("{}@{}", s.id, t)
                    } else {
                        s.id.clone()
                    };
                    crash.insert(key, self.crash(t).unwrap_or(0.0));
                }
            }
            states.push(entries);
        }
        let mut actions = Vec::new();
        for t in self.first + 1..=self.last {
            let entries = self
                .actions(t)
                .iter()
                .map(|a| ActionEntry {
                    id: a.id.clone(),
                    owner: self.state_id(t - 1, a.owner).to_string(),
                    q: a.reward,
                    p: a.transitions
                        .iter()
                        .enumerate()
                        .filter(|(_, &p)| p != 0.0)
                        .map(|(y, &p)| (self.state_id(t, y).to_string(), p))
                        .collect(),
                })
                .collect();
            actions.push(entries);
        }
        let mu = self.mu.as_ref().map(|mu| {
            mu.iter()
                .enumerate()
                .filter(|(_, &w)| w != 0.0)
                .map(|(x, &w)| (self.state_id(self.first, x).to_string(), w))
                .collect()
        });
        ModelFile {
            horizon: Horizon {
                m: self.first,
                n: self.last,
            },
            states,
            actions,
            crash: (!crash.is_empty()).then_some(crash),
            mu,
            allow_zero_kill: self.allow_zero_kill,
        }
    }

    /// Re-checks every invariant of the model.
    pub fn violations(&self) -> Vec<Violation> {
        validate(&self.to_file())
    }
}

/// Crash values `c(x*_t) = -sum_{i=m+1}^{t} max_{a in A_i} q(a)` for every stage `t`
/// (`None` at stage `m`, where the sum is empty and yields zero).
pub fn auto_crash(stage_max_rewards: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    stage_max_rewards
        .iter()
        .map(|&best| {
            acc += best;
            0.0 - acc
        })
        .collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use serde_json::json;

    pub(crate) fn m1_file() -> ModelFile {
        serde_json::from_value(json!({
            "horizon": {"m": 0, "n": 1},
            "states": [
                [{"id": "s0"}],
                [{"id": "x*", "killed": true}, {"id": "g", "r": 10.0}, {"id": "b", "r": 0.0}]
            ],
            "actions": [[
                {"id": "a1", "owner": "s0", "q": 1.0, "p": {"g": 0.6, "b": 0.3, "x*": 0.1}},
                {"id": "a2", "owner": "s0", "q": 2.0, "p": {"g": 0.3, "b": 0.3, "x*": 0.4}}
            ]]
        }))
        .unwrap()
    }

    fn two_epoch_file() -> ModelFile {
        serde_json::from_value(json!({
            "horizon": {"m": 0, "n": 2},
            "states": [
                [{"id": "s"}],
                [{"id": "k1", "killed": true}, {"id": "u"}, {"id": "v"}],
                [{"id": "k2", "killed": true}, {"id": "w", "r": 3.0}]
            ],
            "actions": [
                [{"id": "a", "owner": "s", "q": 1.0, "p": {"u": 0.5, "v": 0.3, "k1": 0.2}}],
                [
                    {"id": "b", "owner": "u", "q": 4.0, "p": {"w": 0.9, "k2": 0.1}},
                    {"id": "c", "owner": "v", "q": -1.0, "p": {"w": 0.5, "k2": 0.5}}
                ]
            ]
        }))
        .unwrap()
    }

    #[test]
    fn m1_auto_crash_is_minus_two() {
        let model = build_model(&m1_file()).unwrap();
        assert_eq!(model.crash(1), Some(-2.0));
        assert_eq!(model.crash(0), None);
        assert_eq!(model.initial_distribution(), Some(&[1.0][..]));
        assert_eq!(model.available(0, 0), &[0, 1]);
    }

    #[test]
    fn zero_rewards_give_zero_crash() {
        let mut file = two_epoch_file();
        for stage in &mut file.actions {
            for a in stage {
                a.q = 0.0;
            }
        }
        let model = build_model(&file).unwrap();
        assert_eq!(model.crash(1), Some(0.0));
        assert_eq!(model.crash(2), Some(0.0));
    }

    #[test]
    fn cumulative_crash_over_stages() {
        let model = build_model(&two_epoch_file()).unwrap();
        assert_eq!(model.crash(1), Some(-1.0));
        assert_eq!(model.crash(2), Some(-5.0));
    }

    #[test]
    fn crash_override_wins() {
        let mut file = m1_file();
        file.crash = Some([("x*".to_string(), -7.5)].into_iter().collect());
        assert_eq!(build_model(&file).unwrap().crash(1), Some(-7.5));
    }

    #[test]
    fn zero_kill_rejected_without_flag() {
        let mut file = m1_file();
        let a1 = &mut file.actions[0][0];
        a1.p.insert("x*".into(), 0.0);
        a1.p.insert("g".into(), 0.7);
        match build_model(&file) {
            Err(Error::Validation(v)) => {
                assert!(v.to_string().contains("a1"), "{v}");
                assert!(v.message.contains("kill"), "{v}");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
        file.allow_zero_kill = true;
        assert!(build_model(&file).is_ok());
    }

    #[test]
    fn derived_model_deletes_first_stage() {
        let model = build_model(&two_epoch_file()).unwrap();
        let derived = derived_model(&model).unwrap();
        assert_eq!(derived.first_stage(), 1);
        assert_eq!(derived.last_stage(), 2);
        assert_eq!(derived.actions(2), model.actions(2));
        assert_eq!(derived.crash(2), model.crash(2));
        assert_eq!(derived.crash(1), model.crash(1));
        assert_eq!(derived.killed_state(1), Some(0));
        assert!(derived.initial_distribution().is_none());
        assert!(
            derived.violations().is_empty(),
            "{:?}",
            derived.violations()
        );
    }

    #[test]
    fn derived_of_single_epoch_is_horizon_error() {
        let model = build_model(&m1_file()).unwrap();
        assert!(matches!(derived_model(&model), Err(Error::Horizon(_))));
    }

    #[test]
    fn derived_file_round_trips() {
        let model = build_model(&two_epoch_file()).unwrap();
        let derived = derived_model(&model).unwrap();
        let reloaded = KilledModel::from_json(&derived.to_file().to_json_pretty()).unwrap();
        assert_eq!(reloaded.crash(1), derived.crash(1));
        assert_eq!(reloaded.crash(2), derived.crash(2));
        assert_eq!(reloaded.actions(2), derived.actions(2));
        // the default initial mass skips the carried-over killed state
        assert_eq!(reloaded.initial_distribution(), Some(&[0.0, 1.0, 0.0][..]));
    }

    #[test]
    fn repeated_killed_ids_get_stage_qualified_crash_keys() {
        let mut file = two_epoch_file();
        file.states[1][0].id = "x*".into();
        file.states[2][0].id = "x*".into();
        for stage in &mut file.actions {
            for a in stage {
                let rename: Vec<_> = a.p.keys().filter(|k| k.starts_with('k')).cloned().collect();
                for k in rename {
                    let v = a.p.shift_remove(&k).unwrap();
                    a.p.insert("x*".into(), v);
                }
            }
        }
        let model = build_model(&file).unwrap();
        let out = model.to_file();
        let crash = out.crash.as_ref().unwrap();
        assert_eq!(crash.get("x*@1"), Some(&-1.0));
        assert_eq!(crash.get("x*@2"), Some(&-5.0));
        let back = build_model(&out).unwrap();
        assert_eq!(back, model);
    }
}
