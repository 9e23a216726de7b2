//! JSON checkpoints. Floats are written in shortest round-trip form and
//! parsed with exact round-trip, so save/load is lossless.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kb::Vocabulary;
use crate::model::{BranchMode, ModelParams, NormOrder};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Repr {
    version: u32,
    vocab: Vocabulary,
    d: usize,
    norm_order: NormOrder,
    bounded: bool,
    #[serde(default)]
    branch: BranchMode,
    /// `[entity][dim]`
    entity_bases: Vec<f64>,
    entity_bumps: Vec<f64>,
    /// `[box][corner A, corner B][dim]`
    box_corners: Vec<f64>,
    /// `[relation][position]` -> index into `box_corners`.
    relation_boxes: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub vocab: Vocabulary,
    pub params: ModelParams,
}

impl Checkpoint {
    pub fn new(vocab: Vocabulary, params: ModelParams) -> Self {
        Checkpoint { vocab, params }
    }

    pub fn to_json(&self) -> Result<String> {
        let p = &self.params;
        let repr = Repr {
            version: CHECKPOINT_VERSION,
            vocab: self.vocab.clone(),
            d: p.dim(),
            norm_order: p.norm(),
            bounded: p.bounded(),
            branch: p.branch(),
            entity_bases: p.raw_bases().to_vec(),
            entity_bumps: p.raw_bumps().to_vec(),
            box_corners: p.raw_corners().to_vec(),
            relation_boxes: p.slots().to_vec(),
        };
        let mut s = serde_json::to_string(&repr)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct VersionOnly {
            version: u32,
        }
        let v: VersionOnly = serde_json::from_str(text)?;
        if v.version != CHECKPOINT_VERSION {
            return Err(Error::VersionMismatch {
                expected: CHECKPOINT_VERSION,
                found: v.version,
            });
        }
        let repr: Repr = serde_json::from_str(text)?;
        if repr.entity_bases.len() != repr.vocab.num_entities() * repr.d {
            return Err(Error::Config("checkpoint entity arrays do not match the vocabulary".into()));
        }
        let arities = repr.vocab.relations().map(|(_, r)| r.arity).collect();
        let params = ModelParams::from_parts(
            repr.d,
            repr.norm_order,
            repr.bounded,
            repr.branch,
            arities,
            repr.entity_bases,
            repr.entity_bumps,
            repr.box_corners,
            repr.relation_boxes,
        )?;
        Ok(Checkpoint {
            vocab: repr.vocab,
            params,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
