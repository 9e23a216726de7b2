use serde::Serialize;

use crate::geometry::HyperBox;
use crate::kb::Vocabulary;
use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairKind {
    Equal,
    Contains,
    ContainedBy,
    Overlap,
    Disjoint,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairRelation {
    pub other: String,
    pub kind: PairKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxReport {
    pub relation: String,
    pub position: usize,
    pub geometric_mean_side: f64,
    /// Set on every position of a binary relation whose two boxes coincide.
    pub symmetry_shaped: bool,
    /// How this box sits relative to other relations' boxes at the same
    /// position.
    pub pairs: Vec<PairRelation>,
}

fn classify(a: &HyperBox, b: &HyperBox) -> PairKind {
    if a == b {
        return PairKind::Equal;
    }
    if a.contains_box(b).unwrap_or(false) {
        return PairKind::Contains;
    }
    if b.contains_box(a).unwrap_or(false) {
        return PairKind::ContainedBy;
    }
    match a.intersect(b) {
        Ok(Some(_)) => PairKind::Overlap,
        _ => PairKind::Disjoint,
    }
}

/// Per-(relation, position) box summary in scoring space.
pub fn box_stats(params: &ModelParams, vocab: &Vocabulary) -> Vec<BoxReport> {
    let mut out = Vec::new();
    for (r, info) in vocab.relations() {
        let symmetric = info.arity == 2 && params.box_at(r, 0) == params.box_at(r, 1);
        for p in 0..info.arity {
            let own = params.box_at(r, p);
            let pairs = vocab
                .relations()
                .filter(|(o, oi)| *o != r && oi.arity > p)
                .map(|(o, oi)| PairRelation {
                    other: oi.name.clone(),
                    kind: classify(&own, &params.box_at(o, p)),
                })
                .collect();
            out.push(BoxReport {
                relation: info.name.clone(),
                position: p,
                geometric_mean_side: own.geometric_mean_side(),
                symmetry_shaped: symmetric,
                pairs,
            });
        }
    }
    out
}
