use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use super::{
    auto_crash, ActionInfo, KilledModel, ModelFile, Stage, StateInfo, PROBABILITY_TOLERANCE,
};

/// Where a violation was found.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Location {
    Model,
    Stage { stage: Stage },
    State { stage: Stage, id: String },
    Action { stage: Stage, id: String },
    Crash { key: String },
    Initial { id: String },
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Model => write!(f, "model"),
            Location::Stage { stage } => write!(f, "stage {stage}"),
            Location::State { stage, id } => write!(f, "stage {stage}, state `{id}`"),
            Location::Action { stage, id } => write!(f, "stage {stage}, action `{id}`"),
            Location::Crash { key } => write!(f, "crash entry `{key}`"),
            Location::Initial { id } => write!(f, "initial distribution entry `{id}`"),
        }
    }
}

/// A violated model invariant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub location: Location,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

/// Lists every violated invariant of a model document, in a fixed order: horizon, then
/// states stage by stage, then actions stage by stage, then crash values, then the initial
/// distribution. An empty list means [`build_model`](super::build_model) accepts the document.
pub fn validate(file: &ModelFile) -> Vec<Violation> {
    resolve(file).0
}

struct Collector(Vec<Violation>);

impl Collector {
    fn push(&mut self, location: Location, message: impl Into<String>) {
        self.0.push(Violation {
            location,
            message: message.into(),
        });
    }
}

fn close_to_one(sum: f64) -> bool {
    (sum - 1.0).abs() <= PROBABILITY_TOLERANCE
}

pub(super) fn resolve(file: &ModelFile) -> (Vec<Violation>, Option<KilledModel>) {
    let mut out = Collector(Vec::new());
    let (m, n) = (file.horizon.m, file.horizon.n);
    if m >= n {
        out.push(
            Location::Model,
            format!("horizon needs m < n, got m = {m}, n = {n}"),
        );
        return (out.0, None);
    }
    let stages = (n - m) as usize + 1;
    if file.states.len() != stages {
        out.push(
            Location::Model,
            format!(
                "expected {stages} state lists for stages {m}..={n}, got {}",
                file.states.len()
            ),
        );
    }
    if file.actions.len() != stages - 1 {
        out.push(
            Location::Model,
            format!(
                "expected {} action lists for stages {}..={n}, got {}",
                stages - 1,
                m + 1,
                file.actions.len()
            ),
        );
    }
    if !out.0.is_empty() {
        return (out.0, None);
    }

    // States.
    let mut index: Vec<HashMap<&str, usize>> = Vec::with_capacity(stages);
    let mut killed: Vec<Option<usize>> = Vec::with_capacity(stages);
    let mut states: Vec<Vec<StateInfo>> = Vec::with_capacity(stages);
    let mut terminal = Vec::new();
    for (slot, entries) in file.states.iter().enumerate() {
        let t = m + slot as Stage;
        let mut ids = HashMap::new();
        let mut killed_here = Vec::new();
        if entries.is_empty() {
            out.push(Location::Stage { stage: t }, "stage has no states");
        }
        for (x, s) in entries.iter().enumerate() {
            let at = || Location::State {
                stage: t,
                id: s.id.clone(),
            };
            if ids.insert(s.id.as_str(), x).is_some() {
                out.push(at(), "duplicate state id within stage");
            }
            if s.killed {
                killed_here.push(x);
                if s.r.is_some() {
                    out.push(at(), "killed state carries a terminal reward");
                }
            } else if t == n {
                match s.r {
                    None => out.push(at(), "terminal state without terminal reward `r`"),
                    Some(r) if !r.is_finite() => out.push(at(), "terminal reward is not finite"),
                    Some(_) => {}
                }
            } else if s.r.is_some() {
                out.push(at(), "terminal reward `r` given before the last stage");
            }
        }
        if t == m {
            // A killed initial state only arises from deleting earlier stages; it is
            // action-less and valued at its crash value.
            if killed_here.len() > 1 {
                out.push(
                    Location::Stage { stage: t },
                    "more than one killed state at the first stage",
                );
            }
        } else if killed_here.len() != 1 {
            out.push(
                Location::Stage { stage: t },
                format!(
                    "expected exactly one killed state, found {}",
                    killed_here.len()
                ),
            );
        }
        if !entries.is_empty() && killed_here.len() == entries.len() {
            out.push(
                Location::Stage { stage: t },
                "stage has no non-killed state",
            );
        }
        if t == n {
            terminal = entries.iter().map(|s| s.r.unwrap_or(0.0)).collect();
        }
        killed.push(killed_here.first().copied());
        states.push(
            entries
                .iter()
                .map(|s| StateInfo {
                    id: s.id.clone(),
                    killed: s.killed,
                })
                .collect(),
        );
        index.push(ids);
    }

    // Actions.
    let mut actions: Vec<Vec<ActionInfo>> = Vec::with_capacity(stages - 1);
    let mut available: Vec<Vec<Vec<usize>>> = states[..stages - 1]
        .iter()
        .map(|s| vec![Vec::new(); s.len()])
        .collect();
    let mut stage_max = Vec::with_capacity(stages - 1);
    for (slot, entries) in file.actions.iter().enumerate() {
        let t = m + 1 + slot as Stage;
        let here = &index[slot + 1];
        let owners = &index[slot];
        let mut ids = HashMap::new();
        let mut resolved = Vec::with_capacity(entries.len());
        let mut best = f64::NEG_INFINITY;
        for (a, entry) in entries.iter().enumerate() {
            let at = || Location::Action {
                stage: t,
                id: entry.id.clone(),
            };
            if ids.insert(entry.id.as_str(), a).is_some() {
                out.push(at(), "duplicate action id within stage");
            }
            let owner = match owners.get(entry.owner.as_str()) {
                Some(&x) => {
                    if states[slot][x].killed {
                        out.push(at(), format!("owner `{}` is a killed state", entry.owner));
                    } else {
                        available[slot][x].push(a);
                    }
                    x
                }
                None => {
                    out.push(
                        at(),
                        format!("owner `{}` is not a state of stage {}", entry.owner, t - 1),
                    );
                    0
                }
            };
            if !entry.q.is_finite() {
                out.push(at(), "running reward `q` is not finite");
            }
            best = best.max(entry.q);
            let mut transitions = vec![0.0; states[slot + 1].len()];
            let mut row_ok = true;
            for (key, &p) in &entry.p {
                match here.get(key.as_str()) {
                    Some(&y) => transitions[y] = p,
                    None => {
                        row_ok = false;
                        out.push(
                            at(),
                            format!("successor `{key}` is not a state of stage {t}"),
                        );
                    }
                }
                if !p.is_finite() || p < 0.0 {
                    row_ok = false;
                    out.push(
                        at(),
                        format!("mass {p} on `{key}` is not a nonnegative number"),
                    );
                }
            }
            if row_ok {
                let sum: f64 = transitions.iter().sum();
                if !close_to_one(sum) {
                    out.push(at(), format!("transition row sums to {sum}, expected 1"));
                }
            }
            if let Some(k) = killed[slot + 1] {
                let kill = transitions[k];
                if !file.allow_zero_kill && kill <= 0.0 {
                    out.push(
                        at(),
                        "kill mass must be strictly positive (set allowZeroKill to relax)",
                    );
                }
            }
            resolved.push(ActionInfo {
                id: entry.id.clone(),
                owner,
                reward: entry.q,
                transitions,
            });
        }
        stage_max.push(best);
        actions.push(resolved);
    }
    for (slot, per_state) in available.iter().enumerate() {
        let t = m + slot as Stage;
        for (x, acts) in per_state.iter().enumerate() {
            if acts.is_empty() && !states[slot][x].killed {
                out.push(
                    Location::State {
                        stage: t,
                        id: states[slot][x].id.clone(),
                    },
                    "state without actions",
                );
            }
        }
    }

    // Crash function: auto-constructed, then overridden per killed state.
    let auto = auto_crash(&stage_max);
    let mut crash: Vec<Option<f64>> = (0..stages)
        .map(|slot| killed[slot].map(|_| if slot == 0 { 0.0 } else { auto[slot - 1] }))
        .collect();
    if let Some(overrides) = &file.crash {
        for (key, &value) in overrides {
            let targets = crash_targets(key, m, &states, &killed);
            if targets.is_empty() {
                out.push(
                    Location::Crash { key: key.clone() },
                    "does not name a killed state",
                );
            }
            if !value.is_finite() {
                out.push(
                    Location::Crash { key: key.clone() },
                    "crash value is not finite",
                );
            }
            for slot in targets {
                crash[slot] = Some(value);
            }
        }
    }

    // Initial distribution.
    let mu = match &file.mu {
        Some(entries) => {
            let mut mu = vec![0.0; states[0].len()];
            for (key, &w) in entries {
                match index[0].get(key.as_str()) {
                    Some(&x) => mu[x] = w,
                    None => out.push(
                        Location::Initial { id: key.clone() },
                        format!("not a state of stage {m}"),
                    ),
                }
                if !w.is_finite() || w < 0.0 {
                    out.push(
                        Location::Initial { id: key.clone() },
                        format!("mass {w} is not a nonnegative number"),
                    );
                }
            }
            let sum: f64 = mu.iter().sum();
            if !close_to_one(sum) {
                out.push(
                    Location::Stage { stage: m },
                    format!("initial distribution sums to {sum}, expected 1"),
                );
            }
            mu
        }
        None => {
            let mut mu = vec![0.0; states[0].len()];
            if let Some(x) = states[0].iter().position(|s| !s.killed) {
                mu[x] = 1.0;
            }
            mu
        }
    };

    if !out.0.is_empty() {
        return (out.0, None);
    }
    let model = KilledModel {
        first: m,
        last: n,
        states,
        killed,
        actions,
        available,
        terminal,
        crash,
        mu: Some(mu),
        allow_zero_kill: file.allow_zero_kill,
    };
    (out.0, Some(model))
}

/// Stage slots of the killed states a crash key refers to: a bare id matches every killed
/// state with that id, `id@t` matches only the one at stage `t`.
fn crash_targets(
    key: &str,
    m: Stage,
    states: &[Vec<StateInfo>],
    killed: &[Option<usize>],
) -> Vec<usize> {
    let id_at = |slot: usize| killed[slot].map(|k| states[slot][k].id.as_str());
    let bare: Vec<usize> = (0..states.len())
        .filter(|&slot| id_at(slot) == Some(key))
        .collect();
    if !bare.is_empty() {
        return bare;
    }
    if let Some((id, stage)) = key.rsplit_once('@') {
        if let Ok(t) = stage.parse::<Stage>() {
            let slot = t - m;
            if slot >= 0 && (slot as usize) < states.len() && id_at(slot as usize) == Some(id) {
                return vec![slot as usize];
            }
        }
    }
    Vec::new()
}
