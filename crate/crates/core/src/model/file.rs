//! JSON model document.
//!
//! ```json
//! {
//!   "horizon": { "m": 0, "n": 1 },
//!   "states": [
//!     [ { "id": "s0" } ],
//!     [ { "id": "x*", "killed": true }, { "id": "g", "r": 10 }, { "id": "b", "r": 0 } ]
//!   ],
//!   "actions": [
//!     [ { "id": "a1", "owner": "s0", "q": 1, "p": { "g": 0.6, "b": 0.3, "x*": 0.1 } } ]
//!   ],
//!   "crash": { "x*": -2 },
//!   "mu": { "s0": 1 },
//!   "allowZeroKill": false
//! }
//! ```
//!
//! `states` has one array per stage `m..=n`; `actions` has one array per stage `m+1..=n`.
//! Keys of `crash` name killed states. When the same killed-state id is used at several
//! stages, `"id@t"` addresses the one at stage `t`; a bare id applies to all of them.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::Stage;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Horizon {
    pub m: Stage,
    pub n: Stage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateEntry {
    pub id: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub killed: bool,
    /// Terminal reward; only meaningful for non-killed states at stage `n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionEntry {
    pub id: String,
    /// Id of the owning state at the previous stage.
    pub owner: String,
    pub q: f64,
    /// Successor masses keyed by state id; absent ids have mass zero.
    pub p: IndexMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct ModelFile {
    pub horizon: Horizon,
    pub states: Vec<Vec<StateEntry>>,
    pub actions: Vec<Vec<ActionEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crash: Option<IndexMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<IndexMap<String, f64>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub allow_zero_kill: bool,
}

impl ModelFile {
    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("model documents always serialize")
    }
}
