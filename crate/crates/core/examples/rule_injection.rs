//! Inject inversion, symmetry and hierarchy rules before training, then show
//! that every rule still holds geometrically afterwards and how the boxes
//! relate to each other.
//!
//! cargo run --release --example rule_injection

use std::path::Path;

use boxkb::eval::{evaluate, DEFAULT_KS};
use boxkb::kb::parse_kb;
use boxkb::rules::{box_stats, check_capture, inject, parse_rules, RuleOptions};
use boxkb::training::{initial_params, TrainConfig, Trainer};
use boxkb::{DataFormat, NormOrder, Split};

fn main() -> boxkb::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let kb = parse_kb(
        &data.join("family_train.tsv"),
        &data.join("family_valid.tsv"),
        &data.join("family_test.tsv"),
        DataFormat::TsvTriple,
    )?;
    let rules = parse_rules(&data.join("family_rules.txt"), kb.vocab(), RuleOptions::default())?;

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
    let mut params = initial_params(kb.vocab(), 24, NormOrder::L1, true, config.seed);
    let before = params.num_pool_boxes();
    let injection = inject(&mut params, kb.vocab(), &rules)?;
    println!(
        "boxes in use: {} -> {} after sharing; {} containment constraints",
        before,
        params.slots().iter().flatten().collect::<std::collections::BTreeSet<_>>().len(),
        injection.projection.constraints.len()
    );

    let mut trainer = Trainer::new(params, config.clone(), Some(injection.projection))?;
    let mut grown = 0;
    for _ in 0..config.epochs {
        grown += trainer.run_epoch(&kb)?.projection_growth_count;
    }
    println!("bounds moved by projection during training: {grown}");
    let test = evaluate(&trainer.params, &kb, Split::Test, &DEFAULT_KS, 1)?;
    println!("test MRR {:.3}, hits@10 {:.3}", test.mrr, test.hits["10"]);

    for rule in &rules {
        let c = check_capture(&trainer.params, rule, 1e-9)?;
        println!("{:<32} captured: {}", rule.display(kb.vocab()).to_string(), c.captured);
    }
    for report in box_stats(&trainer.params, kb.vocab()) {
        let pairs: Vec<String> = report
            .pairs
            .iter()
            .map(|p| format!("{} {:?}", p.other, p.kind))
            .collect();
        println!(
            "{}[{}] side {:.3}{}  {}",
            report.relation,
            report.position,
            report.geometric_mean_side,
            if report.symmetry_shaped { " (symmetric)" } else { "" },
            pairs.join(", ")
        );
    }
    Ok(())
}
