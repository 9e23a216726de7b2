//! Train on a small family knowledge graph, report filtered ranking metrics
//! on the test split and list the best tails for one query.
//!
//! cargo run --release --example train_family

use std::path::Path;

use boxkb::eval::{evaluate, top_candidates, DEFAULT_KS};
use boxkb::kb::parse_kb;
use boxkb::training::{initial_params, TrainConfig, Trainer};
use boxkb::{DataFormat, Fact, NormOrder, Split};

fn main() -> boxkb::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let kb = parse_kb(
        &data.join("family_train.tsv"),
        &data.join("family_valid.tsv"),
        &data.join("family_test.tsv"),
        DataFormat::TsvTriple,
    )?;
    println!(
        "{} entities, {} relations, {} training facts",
        kb.vocab().num_entities(),
        kb.vocab().num_relations(),
        kb.train().len()
    );

    let config = TrainConfig {
        learning_rate: 0.05,
        margin: 4.0,
        negatives: 20,
        adversarial_temperature: 1.0,
        batch_size: 32,
        epochs: 300,
        seed: 7,
        ..TrainConfig::default()
    };
    let params = initial_params(kb.vocab(), 24, NormOrder::L1, true, config.seed);
    let mut trainer = Trainer::new(params, config.clone(), None)?;
    for _ in 0..config.epochs {
        let m = trainer.run_epoch(&kb)?;
        if m.epoch % 50 == 0 {
            let valid = evaluate(&trainer.params, &kb, Split::Valid, &DEFAULT_KS, 1)?;
            println!("epoch {:>3}  loss {:.4}  valid MRR {:.3}", m.epoch, m.mean_loss, valid.mrr);
        }
    }

    let test = evaluate(&trainer.params, &kb, Split::Test, &DEFAULT_KS, 1)?;
    println!("test: {}", serde_json::to_string_pretty(&test)?);

    let vocab = kb.vocab();
    let parent_of = vocab.relation_id("parent_of").expect("relation in data");
    let who = vocab.entity_id("a_par0").expect("entity in data");
    let query = Fact::new(parent_of, vec![who, who]);
    println!("best guesses for parent_of(a_par0, ?):");
    for (e, score) in top_candidates(&trainer.params, &kb, &query, 1, 5) {
        let mark = if kb.known(&Fact::new(parent_of, vec![who, e])) { "known" } else { "" };
        println!("  {:<10} {:>7.3} {mark}", vocab.entity_name(e), score);
    }
    Ok(())
}
