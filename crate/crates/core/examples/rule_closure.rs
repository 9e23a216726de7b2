//! Deductive closure of hierarchy and intersection rules, and the conflicts
//! the consistency check reports.
//!
//! cargo run --example rule_closure

use boxkb::rules::{check_consistency, deductive_closure, parse_rules_open};

fn main() -> boxkb::Result<()> {
    let text = "\
hierarchy capital_of located_in
hierarchy located_in part_of
intersection borders located_in near
hierarchy near related_to
";
    let (vocab, rules) = parse_rules_open(text)?;
    println!("closure:");
    for rule in deductive_closure(&rules) {
        let mark = if rules.contains(&rule) { "" } else { "  (derived)" };
        println!("  {}{mark}", rule.display(&vocab));
    }

    for bad in [
        "symmetry married_to\nhierarchy married_to knows\ninversion knows known_by\nhierarchy known_by married_to\nantisymmetry married_to",
        "hierarchy capital_of city_in\nhierarchy capital_of seat_of\nexclusion city_in seat_of",
    ] {
        let (vocab, rules) = parse_rules_open(bad)?;
        match check_consistency(&rules, &vocab) {
            Ok(()) => println!("consistent"),
            Err(report) => println!("conflict: {report}"),
        }
    }
    Ok(())
}
