//! JSON checkpoint of a [`ParamStore`] plus caller state.
//!
//! Layout (one JSON object):
//!
//! ```text
//! {
//!   "version": 1,
//!   "card":    { ... model card: architecture, init scheme, ... },
//!   "params":  [ { "name", "value": {"shape", "data"}, "m": ..., "v": ... }, ... ],
//!   "buffers": { "enc.0.bn1.running_mean": {"shape", "data"}, ... },
//!   "adam_step": 1234,
//!   "state":   { ... trainer state such as RNG seed and word position ... }
//! }
//! ```
//!
//! Parameters are listed in registration order. Floats are written with
//! shortest round-trip formatting, so a save/load cycle is bit-exact.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::ParamStore;
use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SavedParam {
    pub name: String,
    pub value: Tensor,
    pub m: Tensor,
    pub v: Tensor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub card: serde_json::Value,
    pub params: Vec<SavedParam>,
    pub buffers: BTreeMap<String, Tensor>,
    pub adam_step: u64,
    #[serde(default)]
    pub state: serde_json::Value,
}

impl Checkpoint {
    pub fn capture(store: &ParamStore, card: serde_json::Value, state: serde_json::Value) -> Self {
        let params = store
            .entries
            .iter()
            .map(|e| SavedParam { name: e.name.clone(), value: e.value.clone(), m: e.m.clone(), v: e.v.clone() })
            .collect();
        Self { version: CHECKPOINT_VERSION, card, params, buffers: store.buffers.clone(), adam_step: store.adam_step, state }
    }

    pub fn restore(&self) -> Result<ParamStore> {
        let mut store = ParamStore::new();
        for p in &self.params {
            if p.m.shape() != p.value.shape() || p.v.shape() != p.value.shape() {
                return Err(Error::Structure(format!("moment shapes of `{}` differ from its value", p.name)));
            }
            let id = store.add(&p.name, p.value.clone())?;
            let e = &mut store.entries[id.0];
            e.m = p.m.clone();
            e.v = p.v.clone();
        }
        store.buffers = self.buffers.clone();
        store.adam_step = self.adam_step;
        Ok(store)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Self = serde_json::from_str(text)?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::UnsupportedFormat(format!("checkpoint version {}", ck.version)));
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
