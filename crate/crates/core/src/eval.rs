//! Ranking evaluation: every fact of a split is ranked against all
//! single-position corruptions, at every position.
//!
//! Ties count half: `rank = 1 + better + round_half_up(tied / 2)`, so a
//! constant scorer lands mid-table instead of first.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kb::{EntityId, Fact, KnowledgeBase, Split};
use crate::model::ModelParams;

pub const DEFAULT_KS: [usize; 3] = [1, 3, 10];

/// Rank of a target score among candidate scores (lower is better).
pub fn rank_among(target: f64, others: impl IntoIterator<Item = f64>) -> usize {
    let (mut better, mut tied) = (0usize, 0usize);
    for s in others {
        if s < target {
            better += 1;
        } else if s == target {
            tied += 1;
        }
    }
    1 + better + tied.div_ceil(2)
}

/// Rank of `fact` against corruptions at `position` under any scorer.
/// Filtered ranking skips corruptions that are known facts.
pub fn rank_fact_with<F: Fn(&Fact) -> f64>(
    score: F,
    kb: &KnowledgeBase,
    fact: &Fact,
    position: usize,
    filtered: bool,
) -> Result<usize> {
    if position >= fact.arity() {
        return Err(Error::PositionOutOfRange {
            position,
            arity: fact.arity(),
        });
    }
    let target = score(fact);
    let original = fact.entities[position];
    let mut candidate = fact.clone();
    let mut others = Vec::with_capacity(kb.vocab().num_entities());
    for e in kb.vocab().entity_ids() {
        if e == original {
            continue;
        }
        candidate.entities[position] = e;
        if filtered && kb.known(&candidate) {
            continue;
        }
        others.push(score(&candidate));
    }
    Ok(rank_among(target, others))
}

pub fn rank_fact(params: &ModelParams, kb: &KnowledgeBase, fact: &Fact, position: usize, filtered: bool) -> Result<usize> {
    rank_fact_with(|f| params.score(f), kb, fact, position, filtered)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub mr: f64,
    pub mrr: f64,
    pub hits: BTreeMap<String, f64>,
}

impl Metrics {
    pub fn from_ranks(ranks: &[usize], ks: &[usize]) -> Self {
        let n = ranks.len() as f64;
        let mean = |f: &dyn Fn(usize) -> f64| {
            if ranks.is_empty() {
                0.0
            } else {
                ranks.iter().map(|&r| f(r)).sum::<f64>() / n
            }
        };
        Metrics {
            mr: mean(&|r| r as f64),
            mrr: mean(&|r| 1.0 / r as f64),
            hits: ks
                .iter()
                .map(|&k| (k.to_string(), mean(&|r| if r <= k { 1.0 } else { 0.0 })))
                .collect(),
        }
    }

    pub fn hits_at(&self, k: usize) -> Option<f64> {
        self.hits.get(&k.to_string()).copied()
    }
}

/// Filtered metrics at the top level, raw metrics under `raw`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub split: String,
    pub n_facts: usize,
    pub mr: f64,
    pub mrr: f64,
    pub hits: BTreeMap<String, f64>,
    pub raw: Metrics,
}

impl EvalReport {
    pub fn filtered(&self) -> Metrics {
        Metrics {
            mr: self.mr,
            mrr: self.mrr,
            hits: self.hits.clone(),
        }
    }
}

/// Evaluates `facts` (which need not belong to a split of `kb`) with any
/// scorer. Relations created by inverse augmentation are skipped.
pub fn evaluate_facts_with<F>(score: F, kb: &KnowledgeBase, facts: &[Fact], label: &str, ks: &[usize], workers: usize) -> Result<EvalReport>
where
    F: Fn(&Fact) -> f64 + Sync,
{
    let facts: Vec<&Fact> = facts
        .iter()
        .filter(|f| kb.vocab().relation(f.relation).inverse_of.is_none())
        .collect();
    let jobs: Vec<(&Fact, usize)> = facts.iter().flat_map(|f| (0..f.arity()).map(move |p| (*f, p))).collect();
    let rank_pair = |&(fact, p): &(&Fact, usize)| -> Result<(usize, usize)> {
        Ok((
            rank_fact_with(&score, kb, fact, p, false)?,
            rank_fact_with(&score, kb, fact, p, true)?,
        ))
    };
    let pairs: Vec<(usize, usize)> = if workers <= 1 {
        jobs.iter().map(rank_pair).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(rank_pair).collect::<Result<_>>())?
    };
    let raw: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let filtered: Vec<usize> = pairs.iter().map(|p| p.1).collect();
    let f = Metrics::from_ranks(&filtered, ks);
    Ok(EvalReport {
        split: label.to_string(),
        n_facts: facts.len(),
        mr: f.mr,
        mrr: f.mrr,
        hits: f.hits,
        raw: Metrics::from_ranks(&raw, ks),
    })
}

pub fn evaluate(params: &ModelParams, kb: &KnowledgeBase, split: Split, ks: &[usize], workers: usize) -> Result<EvalReport> {
    evaluate_facts_with(|f| params.score(f), kb, kb.split(split), split.name(), ks, workers)
}

/// Entities ranked best-first for the open position of a query (the entity
/// stored at `position` is ignored).
pub fn top_candidates(params: &ModelParams, kb: &KnowledgeBase, query: &Fact, position: usize, k: usize) -> Vec<(EntityId, f64)> {
    let mut cand = query.clone();
    let mut scored: Vec<(EntityId, f64)> = kb
        .vocab()
        .entity_ids()
        .map(|e| {
            cand.entities[position] = e;
            (e, params.score(&cand))
        })
        .collect();
    scored.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::{parse_kb_str, DataFormat};

    #[test]
    fn metric_arithmetic() {
        let m = Metrics::from_ranks(&[1, 2, 4], &[1, 3, 10]);
        assert!((m.mr - 7.0 / 3.0).abs() < 1e-12);
        assert!((m.mrr - 0.583333333333).abs() < 1e-9);
        assert!((m.hits_at(1).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((m.hits_at(3).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        let perfect = Metrics::from_ranks(&[1, 1], &[1]);
        assert_eq!((perfect.mr, perfect.mrr, perfect.hits_at(1)), (1.0, 1.0, Some(1.0)));
    }

    #[test]
    fn tie_policy() {
        assert_eq!(rank_among(0.5, [1.0, 2.0]), 1);
        assert_eq!(rank_among(1.0, [1.0; 4]), 3);
        assert_eq!(rank_among(1.0, [1.0]), 2);
        assert_eq!(rank_among(1.0, [0.0, 1.0, 1.0, 1.0]), 4);
    }

    #[test]
    fn filtered_drops_known_better() {
        // Scores: candidate tail b is better than the target c and is known.
        let kb = parse_kb_str("a\tr\tb\n", "", "a\tr\tc\n", DataFormat::TsvTriple).unwrap();
        let mut kb_with_d = kb.vocab().clone();
        kb_with_d.intern_entity("d");
        let kb = KnowledgeBase::new(kb_with_d, kb.train().to_vec(), vec![], kb.test().to_vec()).unwrap();
        let order = |f: &Fact| match f.entities[1].0 {
            1 => 0.0,
            2 => 1.0,
            _ => 2.0,
        };
        let target = &kb.test()[0];
        let raw = rank_fact_with(order, &kb, target, 1, false).unwrap();
        let filt = rank_fact_with(order, &kb, target, 1, true).unwrap();
        assert_eq!((raw, filt), (2, 1));
    }

    #[test]
    fn ternary_gives_three_samples() {
        let kb = parse_kb_str("", "", "deg\tt\tp\tu\n", DataFormat::TsvNary).unwrap();
        let r = evaluate_facts_with(|_| 0.0, &kb, kb.test(), "test", &DEFAULT_KS, 1).unwrap();
        assert_eq!(r.n_facts, 1);
        // 3 entities, all tied: rank 2 at each position.
        assert_eq!(r.raw.mr, 2.0);
    }
}
