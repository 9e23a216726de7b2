use std::collections::BTreeSet;

use boxkb::eval::{rank_fact_with, DEFAULT_KS};
use boxkb::kb::parse_kb_str;
use boxkb::rules::{deductive_closure, Rule};
use boxkb::training::{initial_params, loss_from_scores, TrainConfig, Trainer};
use boxkb::{Checkpoint, DataFormat, Fact, KnowledgeBase, ModelParams, NormOrder, RelationId, Split, Vocabulary};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rule_strategy(n_rel: usize) -> impl Strategy<Value = Rule> {
    (0..n_rel, 0..n_rel, 0..n_rel, any::<bool>()).prop_filter_map("distinct", |(a, b, c, inter)| {
        let (a, b, c) = (RelationId(a), RelationId(b), RelationId(c));
        if inter {
            (a != b && c != a && c != b).then(|| Rule::intersection(a, b, c))
        } else {
            (a != b).then_some(Rule::Hierarchy { body: a, head: b })
        }
    })
}

fn small_kb(facts: &[(usize, usize, usize)], n_ent: usize) -> KnowledgeBase {
    let vocab = Vocabulary::uniform(n_ent, 2, 2);
    let facts: BTreeSet<Fact> = facts.iter().map(|&(r, h, t)| Fact::from_ids(r, &[h, t])).collect();
    let mut facts: Vec<Fact> = facts.into_iter().collect();
    let test = facts.split_off(facts.len() / 2);
    KnowledgeBase::new(vocab, facts, vec![], test).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closure_is_idempotent_and_monotone(rules in proptest::collection::vec(rule_strategy(5), 0..8)) {
        let once = deductive_closure(&rules);
        prop_assert_eq!(deductive_closure(&once), once.clone());
        let set: BTreeSet<Rule> = once.into_iter().collect();
        prop_assert!(rules.iter().all(|r| set.contains(r)));
    }

    #[test]
    fn checkpoint_roundtrip(seed in any::<u64>(), d in 1usize..6, l2 in any::<bool>(), bounded in any::<bool>()) {
        let vocab = Vocabulary::uniform(4, 3, 2);
        let norm = if l2 { NormOrder::L2 } else { NormOrder::L1 };
        let params = ModelParams::random(&vocab, d, norm, bounded, &mut ChaCha8Rng::seed_from_u64(seed));
        let ck = Checkpoint::new(vocab, params);
        let back = Checkpoint::from_json(&ck.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, ck);
    }

    #[test]
    fn filtered_rank_never_worse(
        facts in proptest::collection::vec((0usize..2, 0usize..5, 0usize..5), 2..20),
        scores in proptest::collection::vec(0u8..4, 50),
    ) {
        let kb = small_kb(&facts, 5);
        let score = |f: &Fact| scores[f.relation.0 * 25 + f.entities[0].0 * 5 + f.entities[1].0] as f64;
        for fact in kb.test() {
            for p in 0..2 {
                let raw = rank_fact_with(score, &kb, fact, p, false).unwrap();
                let filt = rank_fact_with(score, &kb, fact, p, true).unwrap();
                prop_assert!(1 <= filt && filt <= raw && raw <= 5);
            }
        }
    }

    #[test]
    fn loss_derivatives_match_differences(
        pos in -5.0f64..5.0,
        negs in proptest::collection::vec(-5.0f64..5.0, 1..6),
        margin in 0.5f64..6.0,
    ) {
        // Uniform weights, so the weights carry no gradient either way.
        let (_, d_pos, d_neg) = loss_from_scores(pos, &negs, margin, 0.0);
        let h = 1e-6;
        let f = |p: f64, n: &[f64]| loss_from_scores(p, n, margin, 0.0).0;
        let num = (f(pos + h, &negs) - f(pos - h, &negs)) / (2.0 * h);
        prop_assert!((num - d_pos).abs() < 1e-6);
        for i in 0..negs.len() {
            let mut up = negs.clone();
            up[i] += h;
            let mut down = negs.clone();
            down[i] -= h;
            let num = (f(pos, &up) - f(pos, &down)) / (2.0 * h);
            prop_assert!((num - d_neg[i]).abs() < 1e-6);
        }
    }
}

fn train(kb: &KnowledgeBase, workers: usize, seed: u64) -> ModelParams {
    let config = TrainConfig {
        epochs: 3,
        batch_size: 4,
        negatives: 3,
        seed,
        workers,
        adversarial_temperature: 0.5,
        ..TrainConfig::default()
    };
    let params = initial_params(kb.vocab(), 5, NormOrder::L2, true, seed);
    let mut trainer = Trainer::new(params, config, None).unwrap();
    for _ in 0..3 {
        trainer.run_epoch(kb).unwrap();
    }
    trainer.params
}

#[test]
fn training_reproducible_per_worker_count() {
    let text: String = (0..30).map(|i| format!("e{}\tr{}\te{}\n", i % 7, i % 3, (i * 5 + 1) % 9)).collect();
    let kb = parse_kb_str(&text, "", "", DataFormat::TsvTriple).unwrap();
    for workers in [1, 3] {
        assert_eq!(train(&kb, workers, 4), train(&kb, workers, 4));
    }
    assert_ne!(train(&kb, 1, 4), train(&kb, 1, 5));
}

#[test]
fn nary_training_improves_ranks() {
    let mut text = String::new();
    for i in 0..12 {
        text.push_str(&format!("cites\tp{}\tp{}\tv{}\n", i, (i + 1) % 12, i % 3));
    }
    let kb = parse_kb_str(&text, "", "", DataFormat::TsvNary).unwrap();
    let config = TrainConfig {
        epochs: 150,
        batch_size: 12,
        learning_rate: 0.05,
        ..TrainConfig::default()
    };
    let params = initial_params(kb.vocab(), 12, NormOrder::L1, true, 0);
    let before = boxkb::eval::evaluate(&params, &kb, Split::Train, &DEFAULT_KS, 1).unwrap().mrr;
    let mut trainer = Trainer::new(params, config, None).unwrap();
    for _ in 0..150 {
        trainer.run_epoch(&kb).unwrap();
    }
    let after = boxkb::eval::evaluate(&trainer.params, &kb, Split::Train, &DEFAULT_KS, 1).unwrap().mrr;
    assert!(after > before + 0.3, "{before} -> {after}");
}
