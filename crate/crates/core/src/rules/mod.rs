//! Rule language over relations: parsing, deductive closure, consistency,
//! geometric capture checks, injection and box statistics.
//!
//! Rule file syntax, one rule per line:
//!
//! ```text
//! # comment
//! symmetry r
//! antisymmetry r
//! inversion r1 r2          # r1(x,y) <=> r2(y,x)
//! hierarchy r1 r2          # r1(x,y) => r2(x,y)
//! intersection r1 r2 r3    # r1(x,y) & r2(x,y) => r3(x,y)
//! exclusion r1 r2          # not (r1(x,y) & r2(x,y))
//! composition r1 r2 r3     # r1(x,y) & r2(y,z) => r3(x,z)
//! ```

mod capture;
mod closure;
mod consistency;
mod inject;
mod stats;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kb::{RelationId, Vocabulary};

pub use capture::{check_capture, Capture, Witness};
pub use closure::{deductive_closure, forward_chain};
pub use consistency::{check_consistency, ConflictKind, ConflictReport};
pub use inject::{apply_projection, inject, Containment, Injection, ProjectionPlan, SharingPlan};
pub use stats::{box_stats, BoxReport, PairKind, PairRelation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleForm {
    Symmetry,
    Antisymmetry,
    Inversion,
    Hierarchy,
    Intersection,
    Exclusion,
    Composition,
}

impl RuleForm {
    pub fn name(self) -> &'static str {
        match self {
            RuleForm::Symmetry => "symmetry",
            RuleForm::Antisymmetry => "antisymmetry",
            RuleForm::Inversion => "inversion",
            RuleForm::Hierarchy => "hierarchy",
            RuleForm::Intersection => "intersection",
            RuleForm::Exclusion => "exclusion",
            RuleForm::Composition => "composition",
        }
    }

    pub fn num_relations(self) -> usize {
        match self {
            RuleForm::Symmetry | RuleForm::Antisymmetry => 1,
            RuleForm::Inversion | RuleForm::Hierarchy | RuleForm::Exclusion => 2,
            RuleForm::Intersection | RuleForm::Composition => 3,
        }
    }

    /// Forms that can be enforced by sharing or containment.
    pub fn injectable(self) -> bool {
        matches!(
            self,
            RuleForm::Symmetry | RuleForm::Inversion | RuleForm::Hierarchy | RuleForm::Intersection
        )
    }
}

impl FromStr for RuleForm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "symmetry" => RuleForm::Symmetry,
            "antisymmetry" => RuleForm::Antisymmetry,
            "inversion" => RuleForm::Inversion,
            "hierarchy" => RuleForm::Hierarchy,
            "intersection" => RuleForm::Intersection,
            "exclusion" => RuleForm::Exclusion,
            "composition" => RuleForm::Composition,
            other => return Err(format!("unknown rule form `{other}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    Symmetry(RelationId),
    Antisymmetry(RelationId),
    /// `r1(x,y) <=> r2(y,x)`.
    Inversion(RelationId, RelationId),
    Hierarchy { body: RelationId, head: RelationId },
    /// Body relations are stored in ascending id order.
    Intersection { body: [RelationId; 2], head: RelationId },
    Exclusion(RelationId, RelationId),
    Composition { body: [RelationId; 2], head: RelationId },
}

impl Rule {
    pub fn intersection(a: RelationId, b: RelationId, head: RelationId) -> Rule {
        Rule::Intersection {
            body: if a <= b { [a, b] } else { [b, a] },
            head,
        }
    }

    pub fn form(&self) -> RuleForm {
        match self {
            Rule::Symmetry(_) => RuleForm::Symmetry,
            Rule::Antisymmetry(_) => RuleForm::Antisymmetry,
            Rule::Inversion(..) => RuleForm::Inversion,
            Rule::Hierarchy { .. } => RuleForm::Hierarchy,
            Rule::Intersection { .. } => RuleForm::Intersection,
            Rule::Exclusion(..) => RuleForm::Exclusion,
            Rule::Composition { .. } => RuleForm::Composition,
        }
    }

    /// Relations in textual order.
    pub fn relations(&self) -> Vec<RelationId> {
        match *self {
            Rule::Symmetry(r) | Rule::Antisymmetry(r) => vec![r],
            Rule::Inversion(a, b) | Rule::Exclusion(a, b) => vec![a, b],
            Rule::Hierarchy { body, head } => vec![body, head],
            Rule::Intersection { body, head } | Rule::Composition { body, head } => {
                vec![body[0], body[1], head]
            }
        }
    }

    fn from_parts(form: RuleForm, r: &[RelationId]) -> Rule {
        match form {
            RuleForm::Symmetry => Rule::Symmetry(r[0]),
            RuleForm::Antisymmetry => Rule::Antisymmetry(r[0]),
            RuleForm::Inversion => Rule::Inversion(r[0], r[1]),
            RuleForm::Hierarchy => Rule::Hierarchy { body: r[0], head: r[1] },
            RuleForm::Intersection => Rule::intersection(r[0], r[1], r[2]),
            RuleForm::Exclusion => Rule::Exclusion(r[0], r[1]),
            RuleForm::Composition => Rule::Composition {
                body: [r[0], r[1]],
                head: r[2],
            },
        }
    }

    pub fn display<'a>(&'a self, vocab: &'a Vocabulary) -> RuleDisplay<'a> {
        RuleDisplay { rule: self, vocab }
    }
}

pub struct RuleDisplay<'a> {
    rule: &'a Rule,
    vocab: &'a Vocabulary,
}

impl fmt::Display for RuleDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.rule.form().name())?;
        for r in self.rule.relations() {
            write!(f, " {}", self.vocab.relation_name(r))?;
        }
        Ok(())
    }
}

/// Parser settings.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleOptions {
    /// Permit hierarchy, intersection and exclusion over relations of equal
    /// arity other than 2.
    pub allow_nary: bool,
}

/// Parses rules against a fixed vocabulary; unknown relations are errors.
pub fn parse_rules_str(text: &str, vocab: &Vocabulary, options: RuleOptions) -> Result<Vec<Rule>> {
    parse_with(text, options, |name, line| {
        vocab.relation_id(name).ok_or_else(|| Error::parse(line, format!("unknown relation `{name}`")))
    })
    .and_then(|rules| check_arities(rules, vocab, options))
}

pub fn parse_rules(path: &Path, vocab: &Vocabulary, options: RuleOptions) -> Result<Vec<Rule>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_rules_str(&text, vocab, options)
}

/// Parses rules without a dataset: every mentioned relation is interned as a
/// binary relation in order of first appearance.
pub fn parse_rules_open(text: &str) -> Result<(Vocabulary, Vec<Rule>)> {
    let mut vocab = Vocabulary::new();
    let rules = parse_with(text, RuleOptions::default(), |name, line| {
        vocab.intern_relation(name, 2, line)
    })?;
    Ok((vocab, rules))
}

fn parse_with(
    text: &str,
    _options: RuleOptions,
    mut resolve: impl FnMut(&str, usize) -> Result<RelationId>,
) -> Result<Vec<Rule>> {
    let mut rules = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut words = content.split_whitespace();
        let form: RuleForm = words
            .next()
            .unwrap_or_default()
            .parse()
            .map_err(|m: String| Error::parse(line, m))?;
        let names: Vec<&str> = words.collect();
        if names.len() != form.num_relations() {
            return Err(Error::parse(
                line,
                format!(
                    "{} takes {} relation(s), got {}",
                    form.name(),
                    form.num_relations(),
                    names.len()
                ),
            ));
        }
        for i in 0..names.len() {
            for j in i + 1..names.len() {
                if names[i] == names[j] {
                    return Err(Error::parse(
                        line,
                        format!("{} requires distinct relations, `{}` repeats", form.name(), names[i]),
                    ));
                }
            }
        }
        let ids = names
            .iter()
            .map(|n| resolve(n, line))
            .collect::<Result<Vec<_>>>()?;
        rules.push(Rule::from_parts(form, &ids));
    }
    Ok(rules)
}

fn check_arities(rules: Vec<Rule>, vocab: &Vocabulary, options: RuleOptions) -> Result<Vec<Rule>> {
    for rule in &rules {
        let arities: Vec<usize> = rule.relations().iter().map(|r| vocab.arity(*r)).collect();
        let binary = arities.iter().all(|&a| a == 2);
        let nary_ok = options.allow_nary
            && matches!(
                rule.form(),
                RuleForm::Hierarchy | RuleForm::Intersection | RuleForm::Exclusion
            )
            && arities.windows(2).all(|w| w[0] == w[1]);
        if !binary && !nary_ok {
            return Err(Error::Unsupported(format!(
                "rule `{}` needs binary relations (arities {:?})",
                rule.display(vocab),
                arities
            )));
        }
    }
    Ok(rules)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> Vocabulary {
        let mut v = Vocabulary::new();
        for name in ["r1", "r2", "r3"] {
            v.intern_relation(name, 2, 0).unwrap();
        }
        v.intern_relation("t", 3, 0).unwrap();
        v.intern_relation("u", 3, 0).unwrap();
        v
    }

    #[test]
    fn parses_each_form() {
        let v = vocab();
        let text = "# header\nhierarchy r1 r2\n\nsymmetry r3  # trailing\ncomposition r1 r2 r3\nintersection r2 r1 r3\n";
        let rules = parse_rules_str(text, &v, RuleOptions::default()).unwrap();
        let r = |i| RelationId(i);
        assert_eq!(
            rules,
            vec![
                Rule::Hierarchy { body: r(0), head: r(1) },
                Rule::Symmetry(r(2)),
                Rule::Composition { body: [r(0), r(1)], head: r(2) },
                Rule::Intersection { body: [r(0), r(1)], head: r(2) },
            ]
        );
        assert_eq!(rules[0].display(&v).to_string(), "hierarchy r1 r2");
    }

    #[test]
    fn rejects_bad_lines() {
        let v = vocab();
        let err = |t: &str| parse_rules_str(t, &v, RuleOptions::default()).unwrap_err();
        assert!(matches!(err("symmetry r1 r1"), Error::Parse { line: 1, .. }));
        assert!(matches!(err("\nhierarchy r1 r1"), Error::Parse { line: 2, .. }));
        assert!(matches!(err("transitivity r1"), Error::Parse { .. }));
        assert!(matches!(err("hierarchy r1 nope"), Error::Parse { .. }));
        assert!(matches!(err("hierarchy t u"), Error::Unsupported(_)));
    }

    #[test]
    fn nary_extension() {
        let v = vocab();
        let opts = RuleOptions { allow_nary: true };
        assert!(parse_rules_str("hierarchy t u", &v, opts).is_ok());
        assert!(parse_rules_str("hierarchy t r1", &v, opts).is_err());
        assert!(parse_rules_str("inversion t u", &v, opts).is_err());
    }

    #[test]
    fn open_mode_interns() {
        let (v, rules) = parse_rules_open("hierarchy a b\nhierarchy b c").unwrap();
        assert_eq!(v.num_relations(), 3);
        assert_eq!(rules.len(), 2);
    }
}
