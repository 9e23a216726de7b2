use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::inject::{sharing_union, SlotSpace, UnionFind};
use super::{forward_chain, Rule};
use crate::kb::{RelationId, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConflictKind {
    /// An anti-symmetric relation is forced to be symmetric.
    ForcedSymmetry,
    /// Some relation entails both members of an exclusion pair.
    ExclusionViolated,
    /// An exclusion pair shares its boxes at every position.
    SharedExclusion,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConflictReport {
    pub kind: ConflictKind,
    /// Human-readable derivation, one step per entry.
    pub chain: Vec<String>,
}

impl fmt::Display for ConflictReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            ConflictKind::ForcedSymmetry => "anti-symmetric relation forced symmetric",
            ConflictKind::ExclusionViolated => "exclusion violated",
            ConflictKind::SharedExclusion => "excluded relations share boxes",
        };
        write!(f, "{kind}: {}", self.chain.join("; "))
    }
}

impl std::error::Error for ConflictReport {}

/// Finds the first rule interaction that forces some relation to be empty:
/// symmetry of an anti-symmetric relation (directly or through hierarchy,
/// inversion and shared boxes), a relation entailing both sides of an
/// exclusion, or an exclusion between relations whose boxes are identified.
pub fn check_consistency(rules: &[Rule], vocab: &Vocabulary) -> Result<(), ConflictReport> {
    let name = |r: RelationId| vocab.relation_name(r).to_string();
    let space = SlotSpace::of_vocab(vocab);
    let mut uf = UnionFind::new(space.len());
    sharing_union(&mut uf, &space, rules);
    let mut class = |r: RelationId, p: usize| uf.find(space.id(r, p));

    let mentioned: BTreeSet<RelationId> = rules.iter().flat_map(|r| r.relations()).collect();
    let binary: Vec<RelationId> = mentioned.iter().copied().filter(|r| vocab.arity(*r) == 2).collect();

    // Relations bound to the same boxes at every position behave as one.
    let mut horn: Vec<Rule> = rules
        .iter()
        .copied()
        .filter(|r| matches!(r, Rule::Hierarchy { .. } | Rule::Intersection { .. }))
        .collect();
    let mut inverse_pairs = Vec::new();
    for &t in &binary {
        for &u in &binary {
            let (t0, t1, u0, u1) = (class(t, 0), class(t, 1), class(u, 0), class(u, 1));
            if t != u && t0 == u0 && t1 == u1 {
                horn.push(Rule::Hierarchy { body: t, head: u });
            }
            if t0 == u1 && t1 == u0 {
                inverse_pairs.push((t, u));
            }
        }
    }

    for rule in rules {
        let Rule::Antisymmetry(r) = *rule else { continue };
        let from_r = forward_chain(&BTreeSet::from([r]), &horn);
        for &(t, u) in &inverse_pairs {
            if !from_r.contains(&t) {
                continue;
            }
            if !forward_chain(&BTreeSet::from([u]), &horn).contains(&r) {
                continue;
            }
            let mut chain = vec![format!("antisymmetry {}", name(r))];
            if t != r {
                chain.push(format!("{}(x,y) entails {}(x,y)", name(r), name(t)));
            }
            if t == u {
                chain.push(format!("{} has one box at both positions, so it is symmetric", name(t)));
            } else {
                chain.push(format!(
                    "{}(x,y) entails {}(y,x) through shared boxes",
                    name(t),
                    name(u)
                ));
            }
            if u != r {
                chain.push(format!("{}(y,x) entails {}(y,x)", name(u), name(r)));
            }
            chain.push(format!("so {}(x,y) entails {}(y,x)", name(r), name(r)));
            return Err(ConflictReport {
                kind: ConflictKind::ForcedSymmetry,
                chain,
            });
        }
    }

    for rule in rules {
        let Rule::Exclusion(p, q) = *rule else { continue };
        if vocab.arity(p) == vocab.arity(q) && (0..vocab.arity(p)).all(|i| class(p, i) == class(q, i)) {
            return Err(ConflictReport {
                kind: ConflictKind::SharedExclusion,
                chain: vec![
                    format!("{} and {} share a box at every position", name(p), name(q)),
                    format!("exclusion {} {}", name(p), name(q)),
                ],
            });
        }
    }

    for rule in rules {
        let Rule::Exclusion(p, q) = *rule else { continue };
        for &x in &mentioned {
            let reach = forward_chain(&BTreeSet::from([x]), &horn);
            if reach.contains(&p) && reach.contains(&q) {
                let mut chain = Vec::new();
                for target in [p, q] {
                    if target != x {
                        chain.push(format!("{} entails {}", name(x), name(target)));
                    }
                }
                chain.push(format!("exclusion {} {}", name(p), name(q)));
                return Err(ConflictReport {
                    kind: ConflictKind::ExclusionViolated,
                    chain,
                });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::parse_rules_open;

    fn check(text: &str) -> Result<(), ConflictReport> {
        let (vocab, rules) = parse_rules_open(text).unwrap();
        check_consistency(&rules, &vocab)
    }

    #[test]
    fn direct_symmetry_conflict() {
        let err = check("symmetry r\nantisymmetry r").unwrap_err();
        assert_eq!(err.kind, ConflictKind::ForcedSymmetry);
    }

    #[test]
    fn hierarchy_into_both_excluded() {
        let err = check("hierarchy r1 r2\nhierarchy r1 r3\nexclusion r2 r3").unwrap_err();
        assert_eq!(err.kind, ConflictKind::ExclusionViolated);
        assert!(err.to_string().contains("r1 entails r2"));
    }

    #[test]
    fn direct_hierarchy_into_exclusion() {
        assert!(check("hierarchy a b\nexclusion a b").is_err());
    }

    #[test]
    fn inversion_cycle_is_consistent() {
        assert!(check("inversion r1 r2\ninversion r2 r3\ninversion r3 r1").is_ok());
        assert!(check("inversion r1 r2\ninversion r2 r3\ninversion r3 r1\nantisymmetry r2").is_err());
    }

    #[test]
    fn symmetry_through_hierarchy_loop() {
        // r => s, s inverse of t, t => r: r(x,y) => r(y,x)
        let err = check("hierarchy r s\ninversion s t\nhierarchy t r\nantisymmetry r").unwrap_err();
        assert_eq!(err.kind, ConflictKind::ForcedSymmetry);
        assert!(check("hierarchy r s\ninversion s t\nantisymmetry r").is_ok());
    }

    #[test]
    fn shared_exclusion() {
        let err = check("inversion a b\ninversion b c\nexclusion a c").unwrap_err();
        assert_eq!(err.kind, ConflictKind::SharedExclusion);
    }

    #[test]
    fn unrelated_rules_pass() {
        assert!(check("hierarchy a b\nexclusion b c\nantisymmetry a\nsymmetry c").is_ok());
    }
}
