//! Model parameters and scoring.
//!
//! Every entity owns a base position and a translational bump. The final
//! embedding of the entity at position `i` of `r(e_1, ..., e_n)` is
//! `base_i - bump_i + Σ_j bump_j`, and every relation owns one box per
//! argument position. A fact scores the sum over positions of the L1/L2 norm
//! of [`dist`] between the final embedding and the position box; lower is
//! better.
//!
//! Boxes are stored in a pool of free corner pairs. A (relation, position)
//! slot points into the pool, so several slots can share one box, which is how
//! symmetry and inversion rules are injected. Lower/upper bounds are derived
//! as element-wise min/max of the corners, so no update can invert a box.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::HyperBox;
use crate::kb::{EntityId, Fact, RelationId, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum NormOrder {
    L1,
    L2,
}

impl TryFrom<u8> for NormOrder {
    type Error = Error;

    fn try_from(x: u8) -> Result<Self> {
        match x {
            1 => Ok(NormOrder::L1),
            2 => Ok(NormOrder::L2),
            other => Err(Error::Config(format!("norm order must be 1 or 2, got {other}"))),
        }
    }
}

impl From<NormOrder> for u8 {
    fn from(n: NormOrder) -> u8 {
        match n {
            NormOrder::L1 => 1,
            NormOrder::L2 => 2,
        }
    }
}

/// How the inside/outside case of [`dist`] is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchMode {
    /// One decision per point, using full containment in the box.
    #[default]
    PerPoint,
    /// Each coordinate picks its own case (experimental).
    PerDimension,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Corner {
    A,
    B,
}

/// Addresses one d-dimensional parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ParamSlot {
    Base(EntityId),
    Bump(EntityId),
    Corner { pool: usize, corner: Corner },
}

/// Sparse gradient: only vectors touched by the scored facts appear.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreGradient {
    entries: BTreeMap<ParamSlot, Vec<f64>>,
}

impl ScoreGradient {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, slot: &ParamSlot) -> Option<&[f64]> {
        self.entries.get(slot).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ParamSlot, &[f64])> {
        self.entries.iter().map(|(k, v)| (k, v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn add_scaled(&mut self, slot: ParamSlot, values: &[f64], scale: f64) {
        let entry = self
            .entries
            .entry(slot)
            .or_insert_with(|| vec![0.0; values.len()]);
        for (acc, v) in entry.iter_mut().zip(values) {
            *acc += scale * v;
        }
    }

    /// Sums another gradient into this one.
    pub fn merge(&mut self, other: &ScoreGradient) {
        for (slot, values) in &other.entries {
            self.add_scaled(*slot, values, 1.0);
        }
    }
}

/// Element-wise tanh, used to keep final embeddings and box corners inside
/// `[-1, 1]^d`.
pub fn bound(raw: &[f64]) -> Vec<f64> {
    raw.iter().map(|x| x.tanh()).collect()
}

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Width-dependent offset subtracted outside the box so both cases meet at
/// the boundary.
#[inline]
pub fn kappa(w: f64) -> f64 {
    0.5 * (w - 1.0) * (w - 1.0 / w)
}

#[inline]
fn dist_inside(delta_abs: f64, w: f64) -> f64 {
    delta_abs / w
}

#[inline]
fn dist_outside(delta_abs: f64, w: f64) -> f64 {
    delta_abs * w - kappa(w)
}

/// Element-wise distance of `point` to `b`.
pub fn dist(point: &[f64], b: &HyperBox, mode: BranchMode) -> Result<Vec<f64>> {
    let inside_all = b.contains(point)?;
    let (l, u) = (b.lower(), b.upper());
    Ok((0..point.len())
        .map(|k| {
            let c = (l[k] + u[k]) / 2.0;
            let w = u[k] - l[k] + 1.0;
            let inside = match mode {
                BranchMode::PerPoint => inside_all,
                BranchMode::PerDimension => l[k] <= point[k] && point[k] <= u[k],
            };
            let delta = (point[k] - c).abs();
            if inside {
                dist_inside(delta, w)
            } else {
                dist_outside(delta, w)
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    dim: usize,
    norm: NormOrder,
    bounded: bool,
    branch: BranchMode,
    arities: Vec<usize>,
    num_entities: usize,
    bases: Vec<f64>,
    bumps: Vec<f64>,
    /// `[pool][corner A | corner B][dim]`, row-major.
    corners: Vec<f64>,
    slots: Vec<Vec<usize>>,
}

impl ModelParams {
    /// All-zero parameters with one private box per (relation, position).
    pub fn zeros(vocab: &Vocabulary, dim: usize, norm: NormOrder, bounded: bool) -> Self {
        let arities: Vec<usize> = vocab.relations().map(|(_, r)| r.arity).collect();
        let mut slots = Vec::with_capacity(arities.len());
        let mut next = 0;
        for &a in &arities {
            slots.push((next..next + a).collect());
            next += a;
        }
        let n_ent = vocab.num_entities();
        ModelParams {
            dim,
            norm,
            bounded,
            branch: BranchMode::PerPoint,
            arities,
            num_entities: n_ent,
            bases: vec![0.0; n_ent * dim],
            bumps: vec![0.0; n_ent * dim],
            corners: vec![0.0; next * 2 * dim],
            slots,
        }
    }

    /// Bases, bumps and box corners drawn uniformly from `[-0.5, 0.5]`.
    pub fn random<R: Rng + ?Sized>(
        vocab: &Vocabulary,
        dim: usize,
        norm: NormOrder,
        bounded: bool,
        rng: &mut R,
    ) -> Self {
        let mut p = Self::zeros(vocab, dim, norm, bounded);
        for v in p
            .bases
            .iter_mut()
            .chain(p.bumps.iter_mut())
            .chain(p.corners.iter_mut())
        {
            *v = rng.gen_range(-0.5..=0.5);
        }
        p
    }

    /// Rebuilds parameters from raw arrays (checkpoint loading).
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        dim: usize,
        norm: NormOrder,
        bounded: bool,
        branch: BranchMode,
        arities: Vec<usize>,
        bases: Vec<f64>,
        bumps: Vec<f64>,
        corners: Vec<f64>,
        slots: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        if !bases.len().is_multiple_of(dim) || bases.len() != bumps.len() {
            return Err(Error::Config("entity arrays have inconsistent sizes".into()));
        }
        if !corners.len().is_multiple_of(2 * dim) {
            return Err(Error::Config("box corner array has inconsistent size".into()));
        }
        let pool = corners.len() / (2 * dim);
        if slots.len() != arities.len()
            || slots.iter().zip(&arities).any(|(s, a)| s.len() != *a)
            || slots.iter().flatten().any(|&i| i >= pool)
        {
            return Err(Error::Config("box slot table does not match relation arities".into()));
        }
        if bases.iter().chain(&bumps).chain(&corners).any(|v| !v.is_finite()) {
            return Err(Error::Config("non-finite parameter value".into()));
        }
        Ok(ModelParams {
            dim,
            norm,
            bounded,
            branch,
            arities,
            num_entities: bases.len() / dim,
            bases,
            bumps,
            corners,
            slots,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm(&self) -> NormOrder {
        self.norm
    }

    pub fn bounded(&self) -> bool {
        self.bounded
    }

    pub fn branch(&self) -> BranchMode {
        self.branch
    }

    pub fn set_branch(&mut self, branch: BranchMode) {
        self.branch = branch;
    }

    pub fn num_entities(&self) -> usize {
        self.num_entities
    }

    pub fn num_relations(&self) -> usize {
        self.arities.len()
    }

    pub fn arity(&self, r: RelationId) -> usize {
        self.arities[r.0]
    }

    pub fn num_pool_boxes(&self) -> usize {
        self.corners.len() / (2 * self.dim)
    }

    /// Number of scalar parameters actually stored (shared boxes count once).
    pub fn num_parameters(&self) -> usize {
        self.bases.len() + self.bumps.len() + self.corners.len()
    }

    pub(crate) fn raw_bases(&self) -> &[f64] {
        &self.bases
    }

    pub(crate) fn raw_bumps(&self) -> &[f64] {
        &self.bumps
    }

    pub(crate) fn raw_corners(&self) -> &[f64] {
        &self.corners
    }

    pub fn slots(&self) -> &[Vec<usize>] {
        &self.slots
    }

    /// Pool index of the box at `(relation, position)`.
    pub fn slot(&self, r: RelationId, position: usize) -> usize {
        self.slots[r.0][position]
    }

    /// Points `(relation, position)` at pool box `pool`.
    pub fn assign_slot(&mut self, r: RelationId, position: usize, pool: usize) {
        assert!(pool < self.num_pool_boxes());
        self.slots[r.0][position] = pool;
    }

    pub fn base(&self, e: EntityId) -> &[f64] {
        &self.bases[e.0 * self.dim..(e.0 + 1) * self.dim]
    }

    pub fn base_mut(&mut self, e: EntityId) -> &mut [f64] {
        &mut self.bases[e.0 * self.dim..(e.0 + 1) * self.dim]
    }

    pub fn bump(&self, e: EntityId) -> &[f64] {
        &self.bumps[e.0 * self.dim..(e.0 + 1) * self.dim]
    }

    pub fn bump_mut(&mut self, e: EntityId) -> &mut [f64] {
        &mut self.bumps[e.0 * self.dim..(e.0 + 1) * self.dim]
    }

    fn corner_offset(&self, pool: usize, corner: Corner) -> usize {
        let c = match corner {
            Corner::A => 0,
            Corner::B => 1,
        };
        (pool * 2 + c) * self.dim
    }

    pub fn corner(&self, pool: usize, corner: Corner) -> &[f64] {
        let o = self.corner_offset(pool, corner);
        &self.corners[o..o + self.dim]
    }

    pub fn corner_mut(&mut self, pool: usize, corner: Corner) -> &mut [f64] {
        let o = self.corner_offset(pool, corner);
        &mut self.corners[o..o + self.dim]
    }

    pub fn param(&self, slot: ParamSlot) -> &[f64] {
        match slot {
            ParamSlot::Base(e) => self.base(e),
            ParamSlot::Bump(e) => self.bump(e),
            ParamSlot::Corner { pool, corner } => self.corner(pool, corner),
        }
    }

    pub fn param_mut(&mut self, slot: ParamSlot) -> &mut [f64] {
        match slot {
            ParamSlot::Base(e) => self.base_mut(e),
            ParamSlot::Bump(e) => self.bump_mut(e),
            ParamSlot::Corner { pool, corner } => self.corner_mut(pool, corner),
        }
    }

    /// Pool box in raw (unbounded) coordinates.
    pub fn raw_box(&self, pool: usize) -> HyperBox {
        HyperBox::from_corners(self.corner(pool, Corner::A), self.corner(pool, Corner::B))
    }

    /// Overwrites a pool box with corner A = lower, corner B = upper.
    pub fn set_raw_box(&mut self, pool: usize, b: &HyperBox) {
        self.corner_mut(pool, Corner::A).copy_from_slice(b.lower());
        self.corner_mut(pool, Corner::B).copy_from_slice(b.upper());
    }

    /// Pool box in the space where points are tested (bounded if enabled).
    pub fn pool_box(&self, pool: usize) -> HyperBox {
        if self.bounded {
            HyperBox::from_corners(&bound(self.corner(pool, Corner::A)), &bound(self.corner(pool, Corner::B)))
        } else {
            self.raw_box(pool)
        }
    }

    /// The box for `(relation, position)` as used in scoring.
    pub fn box_at(&self, r: RelationId, position: usize) -> HyperBox {
        self.pool_box(self.slot(r, position))
    }

    fn check_fact(&self, fact: &Fact) -> Result<()> {
        let arity = *self
            .arities
            .get(fact.relation.0)
            .ok_or_else(|| Error::InvalidFact(format!("relation id {} out of range", fact.relation.0)))?;
        if arity != fact.entities.len() {
            return Err(Error::InvalidFact(format!(
                "relation {} has arity {arity}, fact has {} entities",
                fact.relation.0,
                fact.entities.len()
            )));
        }
        if fact.entities.iter().any(|e| e.0 >= self.num_entities) {
            return Err(Error::InvalidFact("entity id out of range".into()));
        }
        Ok(())
    }

    fn bump_sum(&self, fact: &Fact) -> Vec<f64> {
        let mut sum = vec![0.0; self.dim];
        for &e in &fact.entities {
            for (s, b) in sum.iter_mut().zip(self.bump(e)) {
                *s += b;
            }
        }
        sum
    }

    /// Unbounded final embedding; unary facts use the base position alone.
    fn raw_final_into(&self, fact: &Fact, position: usize, sum: &[f64], out: &mut [f64]) {
        let e = fact.entities[position];
        let base = self.base(e);
        if fact.entities.len() == 1 {
            out.copy_from_slice(base);
            return;
        }
        let own = self.bump(e);
        for k in 0..self.dim {
            out[k] = (base[k] - own[k]) + sum[k];
        }
    }

    /// Final embedding of the entity at `position` of `fact`, bounded if the
    /// model is.
    pub fn final_embedding(&self, fact: &Fact, position: usize) -> Result<Vec<f64>> {
        self.check_fact(fact)?;
        if position >= fact.arity() {
            return Err(Error::PositionOutOfRange {
                position,
                arity: fact.arity(),
            });
        }
        let sum = self.bump_sum(fact);
        let mut out = vec![0.0; self.dim];
        self.raw_final_into(fact, position, &sum, &mut out);
        if self.bounded {
            for v in out.iter_mut() {
                *v = v.tanh();
            }
        }
        Ok(out)
    }

    /// Sum over positions of the norm of [`dist`]. Panics on a fact that does
    /// not match the parameter shapes; use [`ModelParams::try_score`] for
    /// untrusted input.
    pub fn score(&self, fact: &Fact) -> f64 {
        self.evaluate(fact, None)
    }

    pub fn try_score(&self, fact: &Fact) -> Result<f64> {
        self.check_fact(fact)?;
        Ok(self.evaluate(fact, None))
    }

    pub fn score_gradient(&self, fact: &Fact) -> ScoreGradient {
        let mut g = ScoreGradient::new();
        self.evaluate(fact, Some((&mut g, 1.0)));
        g
    }

    /// Adds `scale * ∂score/∂θ` into `grad` and returns the score.
    pub fn accumulate_gradient(&self, fact: &Fact, scale: f64, grad: &mut ScoreGradient) -> f64 {
        self.evaluate(fact, Some((grad, scale)))
    }

    fn evaluate(&self, fact: &Fact, mut grad: Option<(&mut ScoreGradient, f64)>) -> f64 {
        let d = self.dim;
        let n = fact.entities.len();
        assert_eq!(n, self.arities[fact.relation.0], "fact arity does not match relation");
        let sum = self.bump_sum(fact);
        let mut point = vec![0.0; d];
        let mut dists = vec![0.0; d];
        let mut total = 0.0;

        // Per-dimension scratch used only on the gradient path.
        let mut lo = vec![0.0; d];
        let mut hi = vec![0.0; d];
        let mut a_is_lower = vec![true; d];
        let mut inside = vec![false; d];

        for p in 0..n {
            let pool = self.slots[fact.relation.0][p];
            let ca = self.corner(pool, Corner::A);
            let cb = self.corner(pool, Corner::B);
            self.raw_final_into(fact, p, &sum, &mut point);
            if self.bounded {
                for v in point.iter_mut() {
                    *v = v.tanh();
                }
            }
            let mut all_inside = true;
            for k in 0..d {
                let (a, b) = if self.bounded {
                    (ca[k].tanh(), cb[k].tanh())
                } else {
                    (ca[k], cb[k])
                };
                a_is_lower[k] = a <= b;
                let (l, u) = if a <= b { (a, b) } else { (b, a) };
                lo[k] = l;
                hi[k] = u;
                inside[k] = l <= point[k] && point[k] <= u;
                all_inside &= inside[k];
            }
            if self.branch == BranchMode::PerPoint {
                inside.iter_mut().for_each(|x| *x = all_inside);
            }
            for k in 0..d {
                let c = (lo[k] + hi[k]) / 2.0;
                let w = hi[k] - lo[k] + 1.0;
                let delta = (point[k] - c).abs();
                dists[k] = if inside[k] {
                    dist_inside(delta, w)
                } else {
                    dist_outside(delta, w)
                };
            }
            let norm = match self.norm {
                NormOrder::L1 => dists.iter().map(|x| x.abs()).sum::<f64>(),
                NormOrder::L2 => dists.iter().map(|x| x * x).sum::<f64>().sqrt(),
            };
            total += norm;

            let Some((g, scale)) = grad.as_mut() else {
                continue;
            };
            let scale = *scale;
            let mut d_point = vec![0.0; d];
            let mut d_a = vec![0.0; d];
            let mut d_b = vec![0.0; d];
            for k in 0..d {
                let g_dist = match self.norm {
                    NormOrder::L1 => sign(dists[k]),
                    NormOrder::L2 => {
                        if norm > 0.0 {
                            dists[k] / norm
                        } else {
                            0.0
                        }
                    }
                };
                if g_dist == 0.0 {
                    continue;
                }
                let c = (lo[k] + hi[k]) / 2.0;
                let w = hi[k] - lo[k] + 1.0;
                let diff = point[k] - c;
                let s = sign(diff);
                let (dp, dw) = if inside[k] {
                    (s / w, -diff.abs() / (w * w))
                } else {
                    (s * w, diff.abs() - 0.5 * (2.0 * w - 1.0 - 1.0 / (w * w)))
                };
                let dc = -dp;
                let dl = g_dist * (0.5 * dc - dw);
                let du = g_dist * (0.5 * dc + dw);
                d_point[k] = g_dist * dp;
                if self.bounded {
                    d_point[k] *= 1.0 - point[k] * point[k];
                }
                let (dl_raw, du_raw) = if self.bounded {
                    (dl * (1.0 - lo[k] * lo[k]), du * (1.0 - hi[k] * hi[k]))
                } else {
                    (dl, du)
                };
                if a_is_lower[k] {
                    d_a[k] = dl_raw;
                    d_b[k] = du_raw;
                } else {
                    d_a[k] = du_raw;
                    d_b[k] = dl_raw;
                }
            }
            let e = fact.entities[p];
            g.add_scaled(ParamSlot::Base(e), &d_point, scale);
            if n > 1 {
                for (q, &other) in fact.entities.iter().enumerate() {
                    if q != p {
                        g.add_scaled(ParamSlot::Bump(other), &d_point, scale);
                    }
                }
            }
            g.add_scaled(ParamSlot::Corner { pool, corner: Corner::A }, &d_a, scale);
            g.add_scaled(ParamSlot::Corner { pool, corner: Corner::B }, &d_b, scale);
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn one_d(l: f64, u: f64) -> HyperBox {
        HyperBox::new(vec![l], vec![u]).unwrap()
    }

    #[test]
    fn dist_anchors() {
        let b = one_d(-1.0, 1.0);
        let inside = dist(&[0.5], &b, BranchMode::PerPoint).unwrap()[0];
        assert!((inside - 1.0 / 6.0).abs() < 1e-12);
        let outside = dist(&[2.0], &b, BranchMode::PerPoint).unwrap()[0];
        assert!((outside - 10.0 / 3.0).abs() < 1e-12);
        assert!((kappa(3.0) - 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn point_box_is_absolute_deviation() {
        let b = HyperBox::point(&[1.5, -2.0]);
        let d = dist(&[4.0, -2.5], &b, BranchMode::PerPoint).unwrap();
        assert_eq!(d, vec![2.5, 0.5]);
    }

    fn two_entity_model() -> (Vocabulary, ModelParams) {
        let vocab = Vocabulary::uniform(3, 1, 2);
        let mut p = ModelParams::zeros(&vocab, 2, NormOrder::L1, false);
        p.base_mut(EntityId(0)).copy_from_slice(&[1.0, 0.0]);
        p.bump_mut(EntityId(0)).copy_from_slice(&[0.0, 1.0]);
        p.base_mut(EntityId(1)).copy_from_slice(&[2.0, 2.0]);
        p.bump_mut(EntityId(1)).copy_from_slice(&[-1.0, 0.0]);
        (vocab, p)
    }

    #[test]
    fn final_embedding_examples() {
        let (_, p) = two_entity_model();
        let f = Fact::from_ids(0, &[0, 1]);
        assert_eq!(p.final_embedding(&f, 0).unwrap(), vec![0.0, 0.0]);
        assert_eq!(p.final_embedding(&f, 1).unwrap(), vec![2.0, 3.0]);
        assert!(p.final_embedding(&f, 2).is_err());
    }

    #[test]
    fn self_fact_is_base_plus_bump() {
        let (_, mut p) = two_entity_model();
        p.base_mut(EntityId(2)).copy_from_slice(&[0.25, -1.0]);
        p.bump_mut(EntityId(2)).copy_from_slice(&[0.5, 0.5]);
        let f = Fact::from_ids(0, &[2, 2]);
        for i in 0..2 {
            assert_eq!(p.final_embedding(&f, i).unwrap(), vec![0.75, -0.5]);
        }
    }

    #[test]
    fn zero_bumps_give_base() {
        let vocab = Vocabulary::uniform(4, 1, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut p = ModelParams::random(&vocab, 5, NormOrder::L1, false, &mut rng);
        for e in 0..4 {
            p.bump_mut(EntityId(e)).fill(0.0);
        }
        let f = Fact::from_ids(0, &[3, 1, 2]);
        for i in 0..3 {
            assert_eq!(p.final_embedding(&f, i).unwrap(), p.base(f.entities[i]).to_vec());
        }
    }

    #[test]
    fn unary_uses_base_only() {
        let mut vocab = Vocabulary::uniform(2, 0, 2);
        vocab.intern_relation("type", 1, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = ModelParams::random(&vocab, 3, NormOrder::L1, false, &mut rng);
        let f = Fact::from_ids(0, &[1]);
        assert_eq!(p.final_embedding(&f, 0).unwrap(), p.base(EntityId(1)).to_vec());
        let g = p.score_gradient(&f);
        assert!(g.get(&ParamSlot::Bump(EntityId(1))).is_none());
    }

    #[test]
    fn score_examples() {
        let vocab = Vocabulary::uniform(2, 1, 2);
        let mut p = ModelParams::zeros(&vocab, 1, NormOrder::L1, false);
        for pool in 0..2 {
            p.set_raw_box(pool, &one_d(-1.0, 1.0));
        }
        // Final embeddings: position 0 -> base0 + bump1, position 1 -> base1 + bump0.
        p.base_mut(EntityId(0))[0] = 0.5;
        p.base_mut(EntityId(1))[0] = 2.0;
        let s = p.score(&Fact::from_ids(0, &[0, 1]));
        assert!((s - 3.5).abs() < 1e-12, "{s}");

        let mut centered = ModelParams::zeros(&vocab, 1, NormOrder::L2, true);
        for pool in 0..2 {
            centered.set_raw_box(pool, &one_d(-0.3, 0.3));
        }
        assert_eq!(centered.score(&Fact::from_ids(0, &[0, 1])), 0.0);
    }

    #[test]
    fn zero_configuration_has_zero_gradient() {
        let vocab = Vocabulary::uniform(2, 1, 2);
        let mut p = ModelParams::zeros(&vocab, 3, NormOrder::L1, false);
        for pool in 0..2 {
            p.set_raw_box(pool, &HyperBox::new(vec![-0.5; 3], vec![0.5; 3]).unwrap());
        }
        let f = Fact::from_ids(0, &[0, 1]);
        assert_eq!(p.score(&f), 0.0);
        let g = p.score_gradient(&f);
        assert!(g.iter().all(|(_, v)| v.iter().all(|x| *x == 0.0)));
    }

    #[test]
    fn gradient_touches_only_fact_slots() {
        let vocab = Vocabulary::uniform(5, 2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = ModelParams::random(&vocab, 4, NormOrder::L1, true, &mut rng);
        let g = p.score_gradient(&Fact::from_ids(1, &[0, 3]));
        for (slot, _) in g.iter() {
            match *slot {
                ParamSlot::Base(e) | ParamSlot::Bump(e) => assert!(e.0 == 0 || e.0 == 3),
                ParamSlot::Corner { pool, .. } => assert!(pool == 2 || pool == 3),
            }
        }
    }

    #[test]
    fn bound_properties() {
        assert_eq!(bound(&[0.0]), vec![0.0]);
        let big = bound(&[30.0])[0];
        assert!(big <= 1.0 && big > 1.0 - 1e-12);
        let xs = [-3.0, -0.1, 0.0, 0.2, 5.0];
        let ys = bound(&xs);
        assert!(ys.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn symmetric_boxes_make_swapped_scores_equal() {
        let vocab = Vocabulary::uniform(6, 1, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut p = ModelParams::random(&vocab, 7, NormOrder::L2, true, &mut rng);
        p.assign_slot(RelationId(0), 1, p.slot(RelationId(0), 0));
        for a in 0..6 {
            for b in 0..6 {
                let ab = p.score(&Fact::from_ids(0, &[a, b]));
                let ba = p.score(&Fact::from_ids(0, &[b, a]));
                assert_eq!(ab, ba);
            }
        }
    }
}
