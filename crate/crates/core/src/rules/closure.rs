use std::collections::BTreeSet;

use super::Rule;
use crate::kb::RelationId;

/// Relations that must hold on a tuple on which every relation in `start`
/// holds, using the hierarchy and intersection rules in `rules`.
pub fn forward_chain(start: &BTreeSet<RelationId>, rules: &[Rule]) -> BTreeSet<RelationId> {
    let mut known = start.clone();
    loop {
        let before = known.len();
        for rule in rules {
            match *rule {
                Rule::Hierarchy { body, head } if known.contains(&body) => {
                    known.insert(head);
                }
                Rule::Intersection { body, head } if known.contains(&body[0]) && known.contains(&body[1]) => {
                    known.insert(head);
                }
                _ => {}
            }
        }
        if known.len() == before {
            return known;
        }
    }
}

/// Every hierarchy `a => b` (a != b) and every intersection `a & b => c`
/// (c outside the body, not already implied by one body relation alone)
/// entailed by the hierarchy and intersection rules, plus the input rules
/// themselves. Rules of other forms are passed through. Output is sorted and
/// duplicate-free.
///
/// Hierarchy and intersection rules act on a single argument tuple, so
/// entailment reduces to propositional Horn reasoning: `c` follows from a
/// body set exactly when forward chaining from that set reaches it.
pub fn deductive_closure(rules: &[Rule]) -> Vec<Rule> {
    let horn: Vec<Rule> = rules
        .iter()
        .copied()
        .filter(|r| matches!(r, Rule::Hierarchy { .. } | Rule::Intersection { .. }))
        .collect();
    let mentioned: BTreeSet<RelationId> = horn.iter().flat_map(|r| r.relations()).collect();
    let mentioned: Vec<RelationId> = mentioned.into_iter().collect();

    let mut out: BTreeSet<Rule> = rules.iter().copied().collect();

    let singles: Vec<BTreeSet<RelationId>> = mentioned
        .iter()
        .map(|&a| forward_chain(&BTreeSet::from([a]), &horn))
        .collect();
    for (i, &a) in mentioned.iter().enumerate() {
        for &b in &singles[i] {
            if b != a {
                out.insert(Rule::Hierarchy { body: a, head: b });
            }
        }
    }
    for i in 0..mentioned.len() {
        for j in i + 1..mentioned.len() {
            let (a, b) = (mentioned[i], mentioned[j]);
            let both = forward_chain(&BTreeSet::from([a, b]), &horn);
            for &c in &both {
                if c != a && c != b && !singles[i].contains(&c) && !singles[j].contains(&c) {
                    out.insert(Rule::intersection(a, b, c));
                }
            }
        }
    }
    out.into_iter().collect()
}
