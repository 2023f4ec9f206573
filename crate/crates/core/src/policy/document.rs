//! JSON form of simple and Markov policies, keyed by decision stage and then by the id of
//! the deciding state:
//!
//! ```json
//! { "1": { "s0": "a1" }, "2": { "g": { "b1": 0.25, "b2": 0.75 } } }
//! ```
//!
//! Stage `t` holds the rules for states of `X_{t-1}` choosing among `A_t`. A document whose
//! rules are all plain action ids loads as a simple policy.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{ActionDist, DecisionRule, MarkovPolicy, Policy, SimplePolicy};
use crate::error::{Error, Result};
use crate::model::{KilledModel, Stage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rule {
    Action(String),
    Mixed(IndexMap<String, f64>),
}

pub type PolicyDocument = IndexMap<Stage, IndexMap<String, Rule>>;

/// A policy read from a document.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedPolicy {
    Simple(SimplePolicy),
    Markov(MarkovPolicy),
}

impl LoadedPolicy {
    /// Resolves a document against `model`. Every non-killed state with actions needs a rule.
    pub fn from_document(model: &KilledModel, doc: &PolicyDocument) -> Result<Self> {
        let m = model.first_stage();
        let n = model.last_stage();
        for &t in doc.keys() {
            if t <= m || t > n {
                return Err(Error::Policy(format!(
                    "decision stage {t} outside {}..={n}",
                    m + 1
                )));
            }
        }
        let mut all_simple = true;
        let mut tables = Vec::new();
        for t in m + 1..=n {
            let rules = doc
                .get(&t)
                .ok_or_else(|| Error::Policy(format!("no rules for decision stage {t}")))?;
            for id in rules.keys() {
                if model.state_index(t - 1, id).is_none() {
                    return Err(Error::Policy(format!(
                        "unknown state `{id}` at stage {}",
                        t - 1
                    )));
                }
            }
            let mut table = vec![ActionDist::new(); model.states(t - 1).len()];
            for x in model.live_states(t - 1) {
                let id = model.state_id(t - 1, x);
                let rule = rules.get(id).ok_or_else(|| {
                    Error::Policy(format!("no rule for state `{id}` at stage {}", t - 1))
                })?;
                let resolve = |action: &str| {
                    model.action_index(t, action).ok_or_else(|| {
                        Error::Policy(format!("unknown action `{action}` at stage {t}"))
                    })
                };
                table[x] = match rule {
                    Rule::Action(a) => vec![(resolve(a)?, 1.0)],
                    Rule::Mixed(weights) => {
                        all_simple = false;
                        weights
                            .iter()
                            .map(|(a, &w)| Ok((resolve(a)?, w)))
                            .collect::<Result<ActionDist>>()?
                    }
                };
            }
            tables.push(table);
        }
        let markov = MarkovPolicy::new(m, tables);
        markov.check(model)?;
        if !all_simple {
            return Ok(LoadedPolicy::Markov(markov));
        }
        let rules = markov
            .rules()
            .iter()
            .enumerate()
            .map(|(slot, table)| DecisionRule {
                stage: m + 1 + slot as Stage,
                choice: table.iter().map(|d| d.first().map(|&(a, _)| a)).collect(),
            })
            .collect();
        Ok(LoadedPolicy::Simple(SimplePolicy::new(rules)))
    }

    pub fn from_json(model: &KilledModel, text: &str) -> Result<Self> {
        Self::from_document(model, &serde_json::from_str(text)?)
    }

    pub fn as_policy(&self) -> &dyn Policy {
        match self {
            LoadedPolicy::Simple(p) => p,
            LoadedPolicy::Markov(p) => p,
        }
    }
}

impl SimplePolicy {
    pub fn to_document(&self, model: &KilledModel) -> PolicyDocument {
        self.rules()
            .iter()
            .map(|rule| {
                let t = rule.stage;
                let entries = rule
                    .choice
                    .iter()
                    .enumerate()
                    .filter_map(|(x, c)| {
                        c.map(|a| {
                            (
                                model.state_id(t - 1, x).to_string(),
                                Rule::Action(model.action_id(t, a).to_string()),
                            )
                        })
                    })
                    .collect();
                (t, entries)
            })
            .collect()
    }
}

impl MarkovPolicy {
    pub fn to_document(&self, model: &KilledModel) -> PolicyDocument {
        self.rules()
            .iter()
            .enumerate()
            .map(|(slot, table)| {
                let t = self.first_stage() + 1 + slot as Stage;
                let entries = table
                    .iter()
                    .enumerate()
                    .filter(|(_, d)| !d.is_empty())
                    .map(|(x, d)| {
                        let weights = d
                            .iter()
                            .map(|&(a, w)| (model.action_id(t, a).to_string(), w))
                            .collect();
                        (model.state_id(t - 1, x).to_string(), Rule::Mixed(weights))
                    })
                    .collect();
                (t, entries)
            })
            .collect()
    }
}
