//! Build a model that reproduces a truth table exactly, one flip per false
//! fact, and print the resulting classification grid.
//!
//! cargo run --example exact_fit

use std::path::Path;

use boxkb::expressiveness::{build_all_true, FlipOutcome, TruthTable};

fn main() -> boxkb::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data/layout_table.tsv");
    let text = std::fs::read_to_string(&path).expect("example data present");
    let table = TruthTable::parse(&text)?;
    let vocab = table.vocab().clone();

    let mut model = build_all_true(&vocab);
    println!("dimensions: {}", model.dim());
    for (fact, value) in table.iter() {
        if value {
            continue;
        }
        if let FlipOutcome::Flipped { dim } = model.flip_fact(fact)? {
            println!("flip {:<16} on dimension {dim}", vocab.display(fact).to_string());
        }
    }

    let report = model.report(&table)?;
    println!("exact: {} ({} flips over {} facts)", report.exact, report.flips, report.table_bits);
    for (r, info) in vocab.relations() {
        println!("\n{}", info.name);
        for a in vocab.entity_ids() {
            let row: Vec<&str> = vocab
                .entity_ids()
                .map(|b| {
                    let fact = boxkb::Fact::new(r, vec![a, b]);
                    if model.classify(&fact).unwrap_or(false) { "1" } else { "." }
                })
                .collect();
            println!("  {} {}", vocab.entity_name(a), row.join(" "));
        }
    }
    Ok(())
}
