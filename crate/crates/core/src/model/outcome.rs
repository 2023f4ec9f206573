use serde::{Deserialize, Serialize};

use super::{KilledModel, Stage};

/// An alternating sequence `x_s a_{s+1} x_{s+1} ... a_t x_t` of state and action indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Way {
    pub start_stage: Stage,
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
}

impl Way {
    pub fn new(start_stage: Stage, start: usize) -> Self {
        Way {
            start_stage,
            states: vec![start],
            actions: Vec::new(),
        }
    }

    /// Stage of the last state.
    pub fn end_stage(&self) -> Stage {
        self.start_stage + self.actions.len() as Stage
    }

    pub fn last_state(&self) -> usize {
        *self.states.last().expect("a way has at least one state")
    }

    pub fn push(&mut self, action: usize, state: usize) {
        self.actions.push(action);
        self.states.push(state);
    }

    /// Renders the way with model identifiers, e.g. `s0 a1 g`.
    pub fn display(&self, model: &KilledModel) -> String {
        let mut parts = vec![model.state_id(self.start_stage, self.states[0]).to_string()];
        for (i, (&a, &y)) in self.actions.iter().zip(&self.states[1..]).enumerate() {
            let t = self.start_stage + 1 + i as Stage;
            parts.push(model.action_id(t, a).to_string());
            parts.push(model.state_id(t, y).to_string());
        }
        parts.join(" ")
    }
}

/// One realization of the process: a complete way through non-killed states, or a prefix
/// terminated by the kill atom of `fatal_action` at `stage`.
///
/// A process started in a killed initial state is `Killed` with an empty action list,
/// no fatal action and `stage` equal to the start stage.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AugmentedOutcome {
    Survived(Way),
    Killed {
        prefix: Way,
        fatal_action: Option<usize>,
        stage: Stage,
    },
}

impl AugmentedOutcome {
    pub fn is_killed(&self) -> bool {
        matches!(self, AugmentedOutcome::Killed { .. })
    }

    pub fn kill_stage(&self) -> Option<Stage> {
        match self {
            AugmentedOutcome::Killed { stage, .. } => Some(*stage),
            AugmentedOutcome::Survived(_) => None,
        }
    }

    pub fn way(&self) -> &Way {
        match self {
            AugmentedOutcome::Survived(way) => way,
            AugmentedOutcome::Killed { prefix, .. } => prefix,
        }
    }

    /// Renders the path with model identifiers; a kill is shown as the fatal action
    /// followed by the killed state.
    pub fn display(&self, model: &KilledModel) -> String {
        match self {
            AugmentedOutcome::Survived(way) => way.display(model),
            AugmentedOutcome::Killed {
                prefix,
                fatal_action: None,
                ..
            } => prefix.display(model),
            AugmentedOutcome::Killed {
                prefix,
                fatal_action: Some(a),
                stage,
            } => {
                let killed = model
                    .killed_state(*stage)
                    .map(|k| model.state_id(*stage, k))
                    .unwrap_or("?");
                format!(
                    "{} {} {}",
                    prefix.display(model),
                    model.action_id(*stage, *a),
                    killed
                )
            }
        }
    }
}
