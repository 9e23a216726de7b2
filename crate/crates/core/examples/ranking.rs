//! Raw against filtered ranking with a hand-written scorer, including ties.
//!
//! cargo run --example ranking

use boxkb::eval::{evaluate_facts_with, rank_fact_with, DEFAULT_KS};
use boxkb::kb::parse_kb_str;
use boxkb::{DataFormat, Fact};

fn main() -> boxkb::Result<()> {
    let kb = parse_kb_str(
        "rome\tcapital_of\titaly\nparis\tcapital_of\tfrance\nmilan\tcity_in\titaly\n",
        "",
        "milan\tcity_in\tfrance\nrome\tcity_in\titaly\n",
        DataFormat::TsvTriple,
    )?;
    let vocab = kb.vocab();
    // Lower is better. Every entity gets a fixed score; italy and france tie.
    let score = |f: &Fact| match vocab.entity_name(f.entities[1]) {
        "italy" | "france" => 1.0,
        "rome" => 0.5,
        _ => 3.0,
    };
    for fact in kb.test() {
        let raw = rank_fact_with(score, &kb, fact, 1, false)?;
        let filtered = rank_fact_with(score, &kb, fact, 1, true)?;
        println!("{:<28} tail rank raw {raw}, filtered {filtered}", vocab.display(fact).to_string());
    }
    let report = evaluate_facts_with(score, &kb, kb.test(), "test", &DEFAULT_KS, 1)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
