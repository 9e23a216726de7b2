//! Exact-fit builder: a box configuration that classifies any truth table
//! over a small universe exactly, with `d = |E|^(n-1) |R|` for maximal arity
//! `n`.
//!
//! Dimensions come in one block of `|E|^(n-1)` per relation. A fact of
//! relation `i` with entities `(a_1, ..., a_m)` is made false inside column
//! `(i, a_2, ..., a_m, 0, ...)` of that block; every other relation stays
//! inside its boxes in that column, so columns never interfere.
//!
//! Binary relations use the incremental construction: a bump increment on the
//! head entity pushes the fact's tail point past the tail box, bases of all
//! other entities move back by the same amount, and boxes grow just enough
//! to keep everything else inside. Other arities rebuild the column from
//! scratch: small integer bases and bumps are searched so that exactly the
//! false facts of that column leave the hull of the true ones.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kb::{EntityId, Fact, RelationId, Vocabulary};
use crate::model::{Corner, ModelParams, NormOrder};

/// Upper limit on candidate assignments examined per column rebuild.
pub const COLUMN_SEARCH_BUDGET: usize = 5_000_000;

const GRID: [f64; 7] = [0.0, 1.0, -1.0, 2.0, -2.0, 3.0, -3.0];

/// All facts over the universe of `vocab`, by relation then entity tuple in
/// lexicographic order.
pub fn all_facts(vocab: &Vocabulary) -> Vec<Fact> {
    let mut out = Vec::new();
    for (r, info) in vocab.relations() {
        out.extend(tuples(vocab.num_entities(), info.arity).map(|t| Fact::from_ids(r.0, &t)));
    }
    out
}

fn tuples(n: usize, arity: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = n.checked_pow(arity as u32).unwrap_or(0);
    (0..total).map(move |mut code| {
        let mut t = vec![0; arity];
        for slot in t.iter_mut().rev() {
            *slot = code % n;
            code /= n;
        }
        t
    })
}

/// Dimension owned by relation `relation` and entity indices `theta`
/// (positions 2.. of a fact, padded with 0), in a universe of `num_entities`
/// entities and maximal arity `max_arity`.
pub fn dim_index(num_entities: usize, max_arity: usize, relation: usize, theta: &[usize]) -> Result<usize> {
    let width = max_arity.saturating_sub(1);
    if theta.len() > width {
        return Err(Error::InvalidFact(format!(
            "{} entity indices given, at most {width} allowed",
            theta.len()
        )));
    }
    if let Some(t) = theta.iter().find(|&&t| t >= num_entities) {
        return Err(Error::InvalidFact(format!("entity index {t} out of range")));
    }
    let block = num_entities.pow(width as u32);
    let mut offset = 0;
    for a in 0..width {
        offset = offset * num_entities + theta.get(a).copied().unwrap_or(0);
    }
    Ok(relation * block + offset)
}

/// A total truth assignment over every fact of a vocabulary's universe.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthTable {
    vocab: Vocabulary,
    truth: BTreeMap<Fact, bool>,
}

impl TruthTable {
    pub fn new(vocab: Vocabulary, truth: BTreeMap<Fact, bool>) -> Result<Self> {
        for fact in all_facts(&vocab) {
            if !truth.contains_key(&fact) {
                return Err(Error::InvalidFact(format!(
                    "truth table has no entry for {}",
                    vocab.display(&fact)
                )));
            }
        }
        for fact in truth.keys() {
            vocab.check_fact(fact)?;
        }
        Ok(TruthTable { vocab, truth })
    }

    pub fn from_fn(vocab: Vocabulary, mut f: impl FnMut(&Fact) -> bool) -> Self {
        let truth = all_facts(&vocab).into_iter().map(|x| {
            let v = f(&x);
            (x, v)
        });
        TruthTable {
            truth: truth.collect(),
            vocab,
        }
    }

    /// Table from its bits in [`all_facts`] order.
    pub fn from_bits(vocab: Vocabulary, bits: u64) -> Self {
        let mut i = 0;
        Self::from_fn(vocab, |_| {
            let v = bits >> i & 1 == 1;
            i += 1;
            v
        })
    }

    /// Lines of `relation<TAB>e1<TAB>...<TAB>en<TAB>value`, value one of
    /// `1`, `0`, `true`, `false`. The table must be total and free of
    /// duplicates; names are interned in order of appearance.
    pub fn parse(text: &str) -> Result<Self> {
        let mut vocab = Vocabulary::new();
        let mut rows = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.trim_end_matches('\r');
            if content.trim().is_empty() || content.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = content.split('\t').collect();
            if fields.len() < 3 {
                return Err(Error::parse(line, "expected relation, entities and a truth value"));
            }
            let value = match fields[fields.len() - 1].trim() {
                "1" | "true" => true,
                "0" | "false" => false,
                other => return Err(Error::parse(line, format!("bad truth value `{other}`"))),
            };
            let entities = &fields[1..fields.len() - 1];
            let r = vocab.intern_relation(fields[0], entities.len(), line)?;
            let ids: Vec<EntityId> = entities.iter().map(|e| vocab.intern_entity(e)).collect();
            rows.push((line, Fact::new(r, ids), value));
        }
        let mut truth = BTreeMap::new();
        for (line, fact, value) in rows {
            if truth.insert(fact, value).is_some() {
                return Err(Error::parse(line, "duplicate truth table entry"));
            }
        }
        Self::new(vocab, truth)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (fact, value) in &self.truth {
            out.push_str(self.vocab.relation_name(fact.relation));
            for e in &fact.entities {
                out.push('\t');
                out.push_str(self.vocab.entity_name(*e));
            }
            out.push_str(if *value { "\t1\n" } else { "\t0\n" });
        }
        out
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn get(&self, fact: &Fact) -> Option<bool> {
        self.truth.get(fact).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Fact, bool)> {
        self.truth.iter().map(|(f, v)| (f, *v))
    }

    pub fn len(&self) -> usize {
        self.truth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.truth.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlipOutcome {
    Flipped { dim: usize },
    /// The fact was already false; nothing changed.
    AlreadyFalse,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FitReport {
    pub table_bits: usize,
    pub flips: usize,
    pub exact: bool,
}

/// Unbounded parameters plus the per-column bookkeeping of the builder.
#[derive(Debug, Clone)]
pub struct ExactFitModel {
    vocab: Vocabulary,
    params: ModelParams,
    max_arity: usize,
    /// False facts per rebuilt (non-binary) column.
    kills: BTreeMap<usize, BTreeSet<Fact>>,
    flips: usize,
}

/// Model in which every fact is true: zero bases and bumps, every box
/// `[-0.5, 0.5]^d`.
pub fn build_all_true(vocab: &Vocabulary) -> ExactFitModel {
    let n = vocab.max_arity().max(1);
    let d = vocab.num_entities().pow((n - 1) as u32) * vocab.num_relations();
    let mut params = ModelParams::zeros(vocab, d.max(1), NormOrder::L1, false);
    for pool in 0..params.num_pool_boxes() {
        params.corner_mut(pool, Corner::A).fill(-0.5);
        params.corner_mut(pool, Corner::B).fill(0.5);
    }
    ExactFitModel {
        vocab: vocab.clone(),
        params,
        max_arity: n,
        kills: BTreeMap::new(),
        flips: 0,
    }
}

/// Builds a model classifying `table` exactly by flipping every false fact.
pub fn fit(table: &TruthTable) -> Result<ExactFitModel> {
    if table.vocab().max_arity() < 2 {
        return Err(Error::Unsupported(
            "exact fit needs at least one relation of arity 2 or more".into(),
        ));
    }
    let mut model = build_all_true(table.vocab());
    for (fact, value) in table.iter() {
        if !value {
            model.flip_fact(fact)?;
        }
    }
    Ok(model)
}

impl ExactFitModel {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn into_params(self) -> ModelParams {
        self.params
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    pub fn flips(&self) -> usize {
        self.flips
    }

    /// Column in which `fact` is made false.
    pub fn column_of(&self, fact: &Fact) -> Result<usize> {
        let theta: Vec<usize> = fact.entities.iter().skip(1).map(|e| e.0).collect();
        dim_index(self.vocab.num_entities(), self.max_arity, fact.relation.0, &theta)
    }

    /// True iff every final embedding lies in its position box.
    pub fn classify(&self, fact: &Fact) -> Result<bool> {
        for p in 0..fact.arity() {
            let point = self.params.final_embedding(fact, p)?;
            if !self.params.box_at(fact.relation, p).contains(&point)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn report(&self, table: &TruthTable) -> Result<FitReport> {
        let mut exact = true;
        for (fact, value) in table.iter() {
            exact &= self.classify(fact)? == value;
        }
        Ok(FitReport {
            table_bits: table.len(),
            flips: self.flips,
            exact,
        })
    }

    /// Makes `fact` false without changing any other classification.
    pub fn flip_fact(&mut self, fact: &Fact) -> Result<FlipOutcome> {
        self.vocab.check_fact(fact)?;
        if !self.classify(fact)? {
            return Ok(FlipOutcome::AlreadyFalse);
        }
        let dim = self.column_of(fact)?;
        if fact.arity() == 2 {
            self.flip_binary(fact, dim);
        } else {
            let mut kills = self.kills.get(&dim).cloned().unwrap_or_default();
            kills.insert(fact.clone());
            self.rebuild_column(fact.relation, dim, &kills)?;
            self.kills.insert(dim, kills);
        }
        self.flips += 1;
        Ok(FlipOutcome::Flipped { dim })
    }

    fn lower(&self, r: RelationId, p: usize, dim: usize) -> f64 {
        let pool = self.params.slot(r, p);
        self.params.corner(pool, Corner::A)[dim]
    }

    fn upper(&self, r: RelationId, p: usize, dim: usize) -> f64 {
        let pool = self.params.slot(r, p);
        self.params.corner(pool, Corner::B)[dim]
    }

    /// Corner A always holds the lower bound and corner B the upper.
    fn set_bounds(&mut self, r: RelationId, p: usize, dim: usize, lower: f64, upper: f64) {
        let pool = self.params.slot(r, p);
        self.params.corner_mut(pool, Corner::A)[dim] = lower;
        self.params.corner_mut(pool, Corner::B)[dim] = upper;
    }

    fn flip_binary(&mut self, fact: &Fact, dim: usize) {
        let (head, tail) = (fact.entities[0], fact.entities[1]);
        let r = fact.relation;
        let tail_point = self.params.base(tail)[dim] + self.params.bump(head)[dim];
        // Exit the tail box by exactly one unit.
        let c = self.upper(r, 1, dim) - tail_point + 1.0;

        self.params.bump_mut(head)[dim] += c;
        for z in 0..self.vocab.num_entities() {
            if z != tail.0 {
                self.params.base_mut(EntityId(z))[dim] -= c;
            }
        }
        let relations: Vec<(RelationId, usize)> = self.vocab.relations().map(|(id, i)| (id, i.arity)).collect();
        for (other, arity) in relations {
            if other == r {
                let (l, u) = (self.lower(r, 0, dim), self.upper(r, 0, dim));
                self.set_bounds(r, 0, dim, l - c, u + c);
                let (l, u) = (self.lower(r, 1, dim), self.upper(r, 1, dim));
                self.set_bounds(r, 1, dim, l - c, u);
                continue;
            }
            // A position point moves by -C (base) plus C per other
            // occurrence of the head entity.
            let up = arity.saturating_sub(1).max(1) as f64 * c;
            for p in 0..arity {
                let (l, u) = (self.lower(other, p, dim), self.upper(other, p, dim));
                self.set_bounds(other, p, dim, l - c, u + up);
            }
        }
    }

    fn rebuild_column(&mut self, r: RelationId, dim: usize, kills: &BTreeSet<Fact>) -> Result<()> {
        let n_e = self.vocab.num_entities();
        let arity = self.vocab.arity(r);
        let facts: Vec<Vec<usize>> = tuples(n_e, arity).collect();
        let killed: Vec<bool> = facts
            .iter()
            .map(|t| kills.contains(&Fact::from_ids(r.0, t)))
            .collect();
        let point = |e: &[f64], b: &[f64], t: &[usize], p: usize| -> f64 {
            if t.len() == 1 {
                return e[t[0]];
            }
            e[t[p]] + t.iter().enumerate().filter(|(q, _)| *q != p).map(|(_, &x)| b[x]).sum::<f64>()
        };

        let vars = 2 * n_e;
        let total = GRID.len().checked_pow(vars as u32).unwrap_or(usize::MAX);
        let mut digits = vec![0usize; vars];
        let mut e = vec![0.0; n_e];
        let mut b = vec![0.0; n_e];
        let mut found = false;
        for _ in 0..total.min(COLUMN_SEARCH_BUDGET) {
            for z in 0..n_e {
                e[z] = GRID[digits[2 * z]];
                b[z] = GRID[digits[2 * z + 1]];
            }
            if column_separates(&facts, &killed, arity, |t, p| point(&e, &b, t, p)) {
                found = true;
                break;
            }
            for dgt in digits.iter_mut() {
                *dgt += 1;
                if *dgt < GRID.len() {
                    break;
                }
                *dgt = 0;
            }
        }
        if !found {
            return Err(Error::NotConstructible(format!(
                "no small-integer column separates {} false facts of relation `{}`",
                kills.len(),
                self.vocab.relation_name(r)
            )));
        }

        for z in 0..n_e {
            self.params.base_mut(EntityId(z))[dim] = e[z];
            self.params.bump_mut(EntityId(z))[dim] = b[z];
        }
        let relations: Vec<(RelationId, usize)> = self.vocab.relations().map(|(id, i)| (id, i.arity)).collect();
        for (rel, a) in relations {
            for p in 0..a {
                let values: Vec<f64> = tuples(n_e, a)
                    .enumerate()
                    .filter(|(i, _)| rel != r || !killed[*i])
                    .map(|(_, t)| point(&e, &b, &t, p))
                    .collect();
                let (lo, hi) = if values.is_empty() {
                    // Everything killed: a point beyond every embedding.
                    let far = tuples(n_e, a)
                        .map(|t| point(&e, &b, &t, p))
                        .fold(f64::NEG_INFINITY, f64::max)
                        + 1.0;
                    (far, far)
                } else {
                    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    (lo, hi)
                };
                self.set_bounds(rel, p, dim, lo, hi);
            }
        }
        Ok(())
    }
}

/// Whether every killed fact leaves the per-position hull of the live ones.
fn column_separates(
    facts: &[Vec<usize>],
    killed: &[bool],
    arity: usize,
    point: impl Fn(&[usize], usize) -> f64,
) -> bool {
    let mut lo = vec![f64::INFINITY; arity];
    let mut hi = vec![f64::NEG_INFINITY; arity];
    for (t, &k) in facts.iter().zip(killed) {
        if !k {
            for p in 0..arity {
                let v = point(t, p);
                lo[p] = lo[p].min(v);
                hi[p] = hi[p].max(v);
            }
        }
    }
    facts.iter().zip(killed).filter(|(_, k)| **k).all(|(t, _)| {
        (0..arity).any(|p| {
            let v = point(t, p);
            v < lo[p] || v > hi[p]
        })
    })
}
