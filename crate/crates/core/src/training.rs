//! Negative-sampling training with sparse Adam.
//!
//! Each positive fact with its `m` corruptions forms one loss term
//!
//! ```text
//! L = -log σ(γ - s⁺) - Σ_i w_i log σ(s_i - γ),   w = softmax(-α s)
//! ```
//!
//! where scores are distances (lower is better). The weights are treated as
//! constants when differentiating. Batch gradients are plain sums.

use std::collections::{HashMap, HashSet};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kb::{EntityId, Fact, KnowledgeBase, Vocabulary};
use crate::model::{ModelParams, NormOrder, ParamSlot, ScoreGradient};
use crate::rules::{apply_projection, ProjectionPlan};

/// Attempts at drawing a corruption different from the original before the
/// last draw is accepted as is.
pub const MAX_NEGATIVE_RETRIES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub margin: f64,
    pub negatives: usize,
    /// 0 gives uniform weights.
    pub adversarial_temperature: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub checkpoint_every: usize,
    /// Re-draw corruptions that are training facts.
    pub filter_negatives: bool,
    /// Gradient fan-out; results depend on this value but are reproducible
    /// for a fixed value.
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            margin: 3.0,
            negatives: 10,
            adversarial_temperature: 0.0,
            batch_size: 64,
            epochs: 100,
            seed: 0,
            checkpoint_every: 100,
            filter_negatives: false,
            workers: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and non-negative");
        }
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return bad("margin must be positive");
        }
        if self.negatives == 0 {
            return bad("negatives must be at least 1");
        }
        if !(self.adversarial_temperature >= 0.0 && self.adversarial_temperature.is_finite()) {
            return bad("adversarial_temperature must be non-negative");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.checkpoint_every == 0 {
            return bad("checkpoint_every must be at least 1");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        Ok(())
    }
}

/// Named random streams derived from one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Init = 1,
    Negatives = 2,
    Shuffle = 3,
}

/// Generator for `(seed, stream, index)`; distinct triples give
/// independent sequences.
pub fn stream_rng(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((stream as u64) << 48) | (index & 0xFFFF_FFFF_FFFF));
    rng
}

/// Random initial parameters drawn from the `Init` stream.
pub fn initial_params(vocab: &Vocabulary, dim: usize, norm: NormOrder, bounded: bool, seed: u64) -> ModelParams {
    let mut rng = stream_rng(seed, Stream::Init, 0);
    ModelParams::random(vocab, dim, norm, bounded, &mut rng)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Negatives {
    pub facts: Vec<Fact>,
    /// Corruptions kept although every retry was rejected.
    pub accepted_duplicates: usize,
}

/// `m` corruptions of `fact`, each replacing a uniformly chosen position with
/// a uniformly chosen entity. Draws equal to `fact` are retried.
pub fn sample_negatives<R: Rng + ?Sized>(rng: &mut R, fact: &Fact, m: usize, vocab: &Vocabulary) -> Negatives {
    sample_with(rng, fact, m, vocab.num_entities(), |_| false)
}

/// Like [`sample_negatives`], also retrying corruptions found in `known`.
pub fn sample_negatives_filtered<R: Rng + ?Sized>(
    rng: &mut R,
    fact: &Fact,
    m: usize,
    vocab: &Vocabulary,
    known: &HashSet<Fact>,
) -> Negatives {
    sample_with(rng, fact, m, vocab.num_entities(), |f| known.contains(f))
}

fn sample_with<R: Rng + ?Sized>(
    rng: &mut R,
    fact: &Fact,
    m: usize,
    num_entities: usize,
    reject: impl Fn(&Fact) -> bool,
) -> Negatives {
    let mut facts = Vec::with_capacity(m);
    let mut accepted_duplicates = 0;
    for _ in 0..m {
        let mut attempt = 0;
        loop {
            let position = rng.gen_range(0..fact.arity());
            let mut neg = fact.clone();
            neg.entities[position] = EntityId(rng.gen_range(0..num_entities));
            let bad = neg == *fact || reject(&neg);
            if !bad || attempt == MAX_NEGATIVE_RETRIES {
                if bad {
                    accepted_duplicates += 1;
                }
                facts.push(neg);
                break;
            }
            attempt += 1;
        }
    }
    Negatives {
        facts,
        accepted_duplicates,
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Softmax of `-α s`; uniform when α is 0.
pub fn adversarial_weights(scores: &[f64], alpha: f64) -> Vec<f64> {
    if scores.is_empty() {
        return Vec::new();
    }
    if alpha == 0.0 {
        return vec![1.0 / scores.len() as f64; scores.len()];
    }
    let logits: Vec<f64> = scores.iter().map(|s| -alpha * s).collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Loss from precomputed scores, with its derivative with respect to the
/// positive score and each negative score.
pub fn loss_from_scores(positive: f64, negatives: &[f64], margin: f64, alpha: f64) -> (f64, f64, Vec<f64>) {
    let w = adversarial_weights(negatives, alpha);
    let mut loss = softplus(positive - margin);
    let d_pos = sigmoid(positive - margin);
    let mut d_neg = Vec::with_capacity(negatives.len());
    for (s, wi) in negatives.iter().zip(&w) {
        loss += wi * softplus(margin - s);
        d_neg.push(-wi * sigmoid(margin - s));
    }
    (loss, d_pos, d_neg)
}

pub fn loss(params: &ModelParams, fact: &Fact, negatives: &[Fact], margin: f64, alpha: f64) -> f64 {
    let scores: Vec<f64> = negatives.iter().map(|n| params.score(n)).collect();
    loss_from_scores(params.score(fact), &scores, margin, alpha).0
}

/// Adds the gradient of [`loss`] into `grad` and returns the loss.
pub fn accumulate_loss_gradient(
    params: &ModelParams,
    fact: &Fact,
    negatives: &[Fact],
    margin: f64,
    alpha: f64,
    grad: &mut ScoreGradient,
) -> f64 {
    let pos = params.score(fact);
    let scores: Vec<f64> = negatives.iter().map(|n| params.score(n)).collect();
    let (value, d_pos, d_neg) = loss_from_scores(pos, &scores, margin, alpha);
    params.accumulate_gradient(fact, d_pos, grad);
    for (neg, d) in negatives.iter().zip(d_neg) {
        params.accumulate_gradient(neg, d, grad);
    }
    value
}

#[derive(Debug, Clone, Default)]
struct Moments {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

/// Adam state kept only for slots that have received a gradient. Each slot
/// counts its own steps for bias correction.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    moments: HashMap<ParamSlot, Moments>,
}

impl Default for OptimizerState {
    fn default() -> Self {
        OptimizerState {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            moments: HashMap::new(),
        }
    }
}

impl OptimizerState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn slot_steps(&self, slot: &ParamSlot) -> u64 {
        self.moments.get(slot).map_or(0, |m| m.t as u64)
    }
}

pub fn adam_update(opt: &mut OptimizerState, params: &mut ModelParams, grad: &ScoreGradient, lr: f64) {
    let (b1, b2, eps) = (opt.beta1, opt.beta2, opt.eps);
    for (slot, g) in grad.iter() {
        let st = opt.moments.entry(*slot).or_insert_with(|| Moments {
            m: vec![0.0; g.len()],
            v: vec![0.0; g.len()],
            t: 0,
        });
        st.t += 1;
        let c1 = 1.0 - b1.powi(st.t);
        let c2 = 1.0 - b2.powi(st.t);
        let p = params.param_mut(*slot);
        for k in 0..g.len() {
            st.m[k] = b1 * st.m[k] + (1.0 - b1) * g[k];
            st.v[k] = b2 * st.v[k] + (1.0 - b2) * g[k] * g[k];
            let m_hat = st.m[k] / c1;
            let v_hat = st.v[k] / c2;
            p[k] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    opt.step += 1;
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub mean_loss: f64,
    pub wall_ms: u64,
    pub projection_growth_count: usize,
}

/// Owns parameters and optimizer state across epochs.
pub struct Trainer {
    pub params: ModelParams,
    pub optimizer: OptimizerState,
    pub config: TrainConfig,
    pub projection: Option<ProjectionPlan>,
    epoch: usize,
    duplicate_negatives: usize,
}

impl Trainer {
    pub fn new(params: ModelParams, config: TrainConfig, projection: Option<ProjectionPlan>) -> Result<Self> {
        config.validate()?;
        Ok(Trainer {
            params,
            optimizer: OptimizerState::new(),
            config,
            projection,
            epoch: 0,
            duplicate_negatives: 0,
        })
    }

    /// Epochs completed so far.
    pub fn epoch(&self) -> usize {
        self.epoch
    }

    /// Negatives accepted equal to their positive (or filtered) fact.
    pub fn duplicate_negatives(&self) -> usize {
        self.duplicate_negatives
    }

    pub fn run_epoch(&mut self, kb: &KnowledgeBase) -> Result<EpochMetrics> {
        let start = Instant::now();
        let epoch = self.epoch + 1;
        let cfg = &self.config;
        let train = kb.train();
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut stream_rng(cfg.seed, Stream::Shuffle, epoch as u64));
        let mut neg_rng = stream_rng(cfg.seed, Stream::Negatives, epoch as u64);
        let known: Option<HashSet<Fact>> = cfg.filter_negatives.then(|| train.iter().cloned().collect());

        let mut total = 0.0;
        let mut growth = 0;
        for chunk in order.chunks(cfg.batch_size) {
            let mut batch = Vec::with_capacity(chunk.len());
            for &i in chunk {
                let fact = &train[i];
                let negs = match &known {
                    Some(k) => sample_negatives_filtered(&mut neg_rng, fact, cfg.negatives, kb.vocab(), k),
                    None => sample_negatives(&mut neg_rng, fact, cfg.negatives, kb.vocab()),
                };
                self.duplicate_negatives += negs.accepted_duplicates;
                batch.push((fact, negs.facts));
            }
            let (loss, grad) = batch_gradient(&self.params, &batch, cfg.margin, cfg.adversarial_temperature, cfg.workers);
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: batch.into_iter().map(|(f, _)| f.clone()).collect(),
                });
            }
            total += loss;
            adam_update(&mut self.optimizer, &mut self.params, &grad, cfg.learning_rate);
            if let Some(plan) = &self.projection {
                growth += apply_projection(&mut self.params, plan)?;
            }
        }
        if self.duplicate_negatives > 0 && epoch == 1 {
            log::warn!("{} negatives equal a positive fact were kept", self.duplicate_negatives);
        }
        self.epoch = epoch;
        Ok(EpochMetrics {
            epoch,
            mean_loss: if train.is_empty() { 0.0 } else { total / train.len() as f64 },
            wall_ms: start.elapsed().as_millis() as u64,
            projection_growth_count: growth,
        })
    }
}

/// Summed loss and gradient of a batch. With `workers > 1` the batch is cut
/// into that many contiguous chunks whose results are merged in order.
fn batch_gradient(
    params: &ModelParams,
    batch: &[(&Fact, Vec<Fact>)],
    margin: f64,
    alpha: f64,
    workers: usize,
) -> (f64, ScoreGradient) {
    let run = |part: &[(&Fact, Vec<Fact>)]| {
        let mut g = ScoreGradient::new();
        let mut loss = 0.0;
        for (fact, negs) in part {
            loss += accumulate_loss_gradient(params, fact, negs, margin, alpha, &mut g);
        }
        (loss, g)
    };
    if workers <= 1 || batch.len() < 2 {
        return run(batch);
    }
    let size = batch.len().div_ceil(workers);
    let parts: Vec<(f64, ScoreGradient)> = batch.par_chunks(size).map(run).collect();
    let mut total = 0.0;
    let mut grad = ScoreGradient::new();
    for (l, g) in &parts {
        total += l;
        grad.merge(g);
    }
    (total, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::{parse_kb_str, DataFormat};

    #[test]
    fn loss_examples() {
        let (l, _, _) = loss_from_scores(0.0, &[2.0], 1.0, 0.0);
        assert!((l - 0.62652).abs() < 5e-6, "{l}");
        let (l, _, _) = loss_from_scores(1.0, &[1.0], 1.0, 0.0);
        assert!((l - 1.38629).abs() < 5e-6, "{l}");
    }

    #[test]
    fn weights_limits() {
        let w = adversarial_weights(&[1.0, 5.0], 1e6);
        assert!((w[0] - 1.0).abs() < 1e-12 && w[1] < 1e-12);
        let w = adversarial_weights(&[1.0, 2.0, 3.0], 0.0);
        assert!(w.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
        let w = adversarial_weights(&[0.3, 2.5, -1.0, 7.0], 0.7);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negatives_differ_in_one_position() {
        let vocab = Vocabulary::uniform(6, 1, 2);
        let fact = Fact::from_ids(0, &[1, 4]);
        let mut rng = stream_rng(3, Stream::Negatives, 1);
        let negs = sample_negatives(&mut rng, &fact, 4, &vocab);
        assert_eq!(negs.facts.len(), 4);
        for n in &negs.facts {
            let diffs = n.entities.iter().zip(&fact.entities).filter(|(a, b)| a != b).count();
            assert_eq!(diffs, 1);
        }
        let again = sample_negatives(&mut stream_rng(3, Stream::Negatives, 1), &fact, 4, &vocab);
        assert_eq!(again, negs);
    }

    #[test]
    fn single_entity_accepts_duplicates() {
        let vocab = Vocabulary::uniform(1, 1, 2);
        let fact = Fact::from_ids(0, &[0, 0]);
        let negs = sample_negatives(&mut stream_rng(0, Stream::Negatives, 0), &fact, 3, &vocab);
        assert_eq!(negs.accepted_duplicates, 3);
        assert!(negs.facts.iter().all(|f| *f == fact));
    }

    #[test]
    fn adam_first_step_and_zero_gradient() {
        let vocab = Vocabulary::uniform(2, 1, 2);
        let mut params = ModelParams::zeros(&vocab, 3, NormOrder::L1, false);
        let mut opt = OptimizerState::new();
        let slot = ParamSlot::Base(EntityId(0));
        let mut zero = ScoreGradient::new();
        zero.add_scaled(slot, &[0.0; 3], 1.0);
        adam_update(&mut opt, &mut params, &zero, 0.1);
        assert_eq!(params.base(EntityId(0)), &[0.0; 3]);

        let mut opt = OptimizerState::new();
        let mut g = ScoreGradient::new();
        g.add_scaled(slot, &[0.5, -2.0, 1e-3], 1.0);
        adam_update(&mut opt, &mut params, &g, 0.1);
        for (x, s) in params.base(EntityId(0)).iter().zip([-1.0, 1.0, -1.0]) {
            assert!((x - 0.1 * s).abs() < 1e-6, "{x}");
        }
        let before = params.base(EntityId(0)).to_vec();
        adam_update(&mut opt, &mut params, &g, 0.1);
        for (b, a) in before.iter().zip(params.base(EntityId(0))) {
            assert!((a - b).abs() <= 0.1 + 1e-9);
        }
        assert_eq!(opt.slot_steps(&slot), 2);
        assert_eq!(opt.slot_steps(&ParamSlot::Bump(EntityId(0))), 0);
    }

    fn tiny_kb() -> KnowledgeBase {
        parse_kb_str("a\tr\tb\n", "", "", DataFormat::TsvTriple).unwrap()
    }

    #[test]
    fn zero_learning_rate_keeps_params() {
        let kb = tiny_kb();
        let params = initial_params(kb.vocab(), 4, NormOrder::L1, true, 1);
        let config = TrainConfig {
            learning_rate: 0.0,
            negatives: 2,
            ..TrainConfig::default()
        };
        let mut t = Trainer::new(params.clone(), config, None).unwrap();
        let m = t.run_epoch(&kb).unwrap();
        assert!(m.mean_loss > 0.0);
        assert_eq!(t.params, params);
    }

    #[test]
    fn single_fact_loss_halves() {
        let kb = tiny_kb();
        let params = initial_params(kb.vocab(), 4, NormOrder::L1, true, 1);
        let config = TrainConfig {
            learning_rate: 0.05,
            margin: 1.0,
            negatives: 1,
            batch_size: 1,
            ..TrainConfig::default()
        };
        let mut t = Trainer::new(params, config, None).unwrap();
        let first = t.run_epoch(&kb).unwrap().mean_loss;
        let mut last = first;
        for _ in 1..200 {
            last = t.run_epoch(&kb).unwrap().mean_loss;
        }
        assert!(last <= 0.5 * first, "{first} -> {last}");
    }

    #[test]
    fn deterministic_trajectory() {
        let kb = parse_kb_str("a\tr\tb\nb\tr\tc\nc\ts\ta\n", "", "", DataFormat::TsvTriple).unwrap();
        let run = |workers| {
            let params = initial_params(kb.vocab(), 5, NormOrder::L2, true, 9);
            let config = TrainConfig {
                batch_size: 2,
                workers,
                ..TrainConfig::default()
            };
            let mut t = Trainer::new(params, config, None).unwrap();
            let losses: Vec<f64> = (0..5).map(|_| t.run_epoch(&kb).unwrap().mean_loss).collect();
            (losses, t.params)
        };
        assert_eq!(run(1), run(1));
        assert_eq!(run(3), run(3));
    }

    #[test]
    fn rejects_bad_config() {
        let bad = TrainConfig {
            negatives: 0,
            ..TrainConfig::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
    }
}
