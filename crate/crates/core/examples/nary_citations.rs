//! Facts of mixed arity: a ternary `cites_in(paper, cited, venue)` alongside
//! a binary `published(paper, venue)`. Ranking corrupts every position.
//!
//! cargo run --release --example nary_citations

use std::path::Path;

use boxkb::eval::{evaluate, DEFAULT_KS};
use boxkb::kb::parse_kb;
use boxkb::training::{initial_params, TrainConfig, Trainer};
use boxkb::{DataFormat, NormOrder, Split};

fn main() -> boxkb::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let kb = parse_kb(
        &data.join("citations_train.tsv"),
        &data.join("citations_valid.tsv"),
        &data.join("citations_test.tsv"),
        DataFormat::TsvNary,
    )?;
    for (_, info) in kb.vocab().relations() {
        println!("{} has arity {}", info.name, info.arity);
    }
    let config = TrainConfig {
        learning_rate: 0.05,
        margin: 4.0,
        negatives: 15,
        batch_size: 16,
        epochs: 200,
        seed: 1,
        ..TrainConfig::default()
    };
    let params = initial_params(kb.vocab(), 20, NormOrder::L1, true, config.seed);
    let mut trainer = Trainer::new(params, config.clone(), None)?;
    for _ in 0..config.epochs {
        trainer.run_epoch(&kb)?;
    }
    for split in [Split::Train, Split::Test] {
        let r = evaluate(&trainer.params, &kb, split, &DEFAULT_KS, 1)?;
        println!("{:<5} facts {:>3}  MRR {:.3}  hits@3 {:.3}", split.name(), r.n_facts, r.mrr, r.hits["3"]);
    }
    Ok(())
}
