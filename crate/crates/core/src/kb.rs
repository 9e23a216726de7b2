//! Vocabularies, facts of arbitrary arity, dataset parsing and the membership
//! index used for corruption and filtered ranking.
//!
//! Two line formats are understood:
//!
//! - `tsv-triple`: `head<TAB>relation<TAB>tail`
//! - `tsv-nary`: `relation<TAB>e1<TAB>...<TAB>en`
//!
//! Blank lines and lines starting with `#` are skipped. Ids are dense and
//! assigned in first-appearance order over train, then valid, then test.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RelationId(pub usize);

impl EntityId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl RelationId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationInfo {
    pub name: String,
    pub arity: usize,
    /// Set for relations created by [`KnowledgeBase::augment_inverses`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inverse_of: Option<RelationId>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    entities: Vec<String>,
    relations: Vec<RelationInfo>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    entities: Vec<String>,
    relations: Vec<RelationInfo>,
    entity_index: HashMap<String, EntityId>,
    relation_index: HashMap<String, RelationId>,
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            entities: v.entities,
            relations: v.relations,
        }
    }
}

impl TryFrom<VocabularyRepr> for Vocabulary {
    type Error = Error;

    fn try_from(repr: VocabularyRepr) -> Result<Self> {
        let mut vocab = Vocabulary::new();
        for name in repr.entities {
            if vocab.entity_index.contains_key(&name) {
                return Err(Error::Config(format!("duplicate entity `{name}` in vocabulary")));
            }
            vocab.intern_entity(&name);
        }
        for info in repr.relations {
            if info.arity == 0 {
                return Err(Error::Config(format!("relation `{}` has arity 0", info.name)));
            }
            if vocab.relation_index.contains_key(&info.name) {
                return Err(Error::Config(format!(
                    "duplicate relation `{}` in vocabulary",
                    info.name
                )));
            }
            let id = RelationId(vocab.relations.len());
            vocab.relation_index.insert(info.name.clone(), id);
            vocab.relations.push(info);
        }
        Ok(vocab)
    }
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a vocabulary with entities `e0..` and relations `r0..`, all of
    /// the given arity.
    pub fn uniform(num_entities: usize, num_relations: usize, arity: usize) -> Self {
        let mut vocab = Vocabulary::new();
        for e in 0..num_entities {
            vocab.intern_entity(&format!("e{e}"));
        }
        for r in 0..num_relations {
            vocab
                .intern_relation(&format!("r{r}"), arity, 0)
                .expect("fresh relation names are unique");
        }
        vocab
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn entity_name(&self, id: EntityId) -> &str {
        &self.entities[id.0]
    }

    pub fn relation(&self, id: RelationId) -> &RelationInfo {
        &self.relations[id.0]
    }

    pub fn relation_name(&self, id: RelationId) -> &str {
        &self.relations[id.0].name
    }

    pub fn arity(&self, id: RelationId) -> usize {
        self.relations[id.0].arity
    }

    pub fn relations(&self) -> impl Iterator<Item = (RelationId, &RelationInfo)> {
        self.relations
            .iter()
            .enumerate()
            .map(|(i, info)| (RelationId(i), info))
    }

    pub fn entity_ids(&self) -> impl Iterator<Item = EntityId> {
        (0..self.entities.len()).map(EntityId)
    }

    pub fn max_arity(&self) -> usize {
        self.relations.iter().map(|r| r.arity).max().unwrap_or(0)
    }

    /// Total number of (relation, position) box slots.
    pub fn num_slots(&self) -> usize {
        self.relations.iter().map(|r| r.arity).sum()
    }

    pub fn entity_id(&self, name: &str) -> Option<EntityId> {
        self.entity_index.get(name).copied()
    }

    pub fn relation_id(&self, name: &str) -> Option<RelationId> {
        self.relation_index.get(name).copied()
    }

    pub fn intern_entity(&mut self, name: &str) -> EntityId {
        if let Some(&id) = self.entity_index.get(name) {
            return id;
        }
        let id = EntityId(self.entities.len());
        self.entities.push(name.to_owned());
        self.entity_index.insert(name.to_owned(), id);
        id
    }

    /// Returns the id of `name`, registering it with `arity` on first sight.
    /// A later occurrence with a different arity is an error reported against
    /// `line`.
    pub fn intern_relation(&mut self, name: &str, arity: usize, line: usize) -> Result<RelationId> {
        if arity == 0 {
            return Err(Error::parse(line, format!("relation `{name}` has no arguments")));
        }
        if let Some(&id) = self.relation_index.get(name) {
            let expected = self.relations[id.0].arity;
            if expected != arity {
                return Err(Error::ArityMismatch {
                    line,
                    relation: name.to_owned(),
                    expected,
                    found: arity,
                });
            }
            return Ok(id);
        }
        let id = RelationId(self.relations.len());
        self.relations.push(RelationInfo {
            name: name.to_owned(),
            arity,
            inverse_of: None,
        });
        self.relation_index.insert(name.to_owned(), id);
        Ok(id)
    }

    /// Checks that `fact` names a known relation with the right number of
    /// known entities.
    pub fn check_fact(&self, fact: &Fact) -> Result<()> {
        let info = self
            .relations
            .get(fact.relation.0)
            .ok_or_else(|| Error::InvalidFact(format!("relation id {} out of range", fact.relation.0)))?;
        if fact.entities.len() != info.arity {
            return Err(Error::InvalidFact(format!(
                "relation `{}` expects {} entities, got {}",
                info.name,
                info.arity,
                fact.entities.len()
            )));
        }
        if let Some(e) = fact.entities.iter().find(|e| e.0 >= self.entities.len()) {
            return Err(Error::InvalidFact(format!("entity id {} out of range", e.0)));
        }
        Ok(())
    }

    pub fn display<'a>(&'a self, fact: &'a Fact) -> FactDisplay<'a> {
        FactDisplay { vocab: self, fact }
    }
}

/// `relation(e1, ..., en)` with ids resolved against a vocabulary.
pub struct FactDisplay<'a> {
    vocab: &'a Vocabulary,
    fact: &'a Fact,
}

impl fmt::Display for FactDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.vocab.relation_name(self.fact.relation))?;
        for (i, e) in self.fact.entities.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(self.vocab.entity_name(*e))?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Fact {
    pub relation: RelationId,
    pub entities: Vec<EntityId>,
}

impl Fact {
    pub fn new(relation: RelationId, entities: impl Into<Vec<EntityId>>) -> Self {
        Fact {
            relation,
            entities: entities.into(),
        }
    }

    /// Convenience constructor from raw indices.
    pub fn from_ids(relation: usize, entities: &[usize]) -> Self {
        Fact {
            relation: RelationId(relation),
            entities: entities.iter().copied().map(EntityId).collect(),
        }
    }

    pub fn arity(&self) -> usize {
        self.entities.len()
    }

    /// Returns a copy with the entity at `position` replaced. Replacing an
    /// entity with itself is allowed.
    pub fn corrupt(&self, position: usize, replacement: EntityId) -> Result<Fact> {
        if position >= self.entities.len() {
            return Err(Error::PositionOutOfRange {
                position,
                arity: self.entities.len(),
            });
        }
        let mut out = self.clone();
        out.entities[position] = replacement;
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    TsvTriple,
    TsvNary,
}

impl FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv-triple" => Ok(DataFormat::TsvTriple),
            "tsv-nary" => Ok(DataFormat::TsvNary),
            other => Err(Error::UnknownFormat(other.to_owned())),
        }
    }
}

impl fmt::Display for DataFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DataFormat::TsvTriple => "tsv-triple",
            DataFormat::TsvNary => "tsv-nary",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "valid" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!("unknown split `{other}`"))),
        }
    }
}

/// Line-oriented reader that grows (or, when frozen, only consults) a
/// vocabulary while parsing splits.
#[derive(Debug)]
pub struct KbReader {
    vocab: Vocabulary,
    format: DataFormat,
    frozen: bool,
}

impl KbReader {
    pub fn new(format: DataFormat) -> Self {
        KbReader {
            vocab: Vocabulary::new(),
            format,
            frozen: false,
        }
    }

    /// Reads against a fixed vocabulary, e.g. the one stored in a checkpoint.
    /// Unknown names and arity mismatches are errors.
    pub fn with_vocab(vocab: Vocabulary, format: DataFormat) -> Self {
        KbReader {
            vocab,
            format,
            frozen: true,
        }
    }

    pub fn read_split(&mut self, text: &str, split: Split) -> Result<Vec<Fact>> {
        let mut facts = Vec::new();
        let mut seen = HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let (relation, args): (&str, Vec<&str>) = match self.format {
                DataFormat::TsvTriple => {
                    if fields.len() != 3 {
                        return Err(Error::parse(
                            line_no,
                            format!("expected 3 tab-separated fields, found {}", fields.len()),
                        ));
                    }
                    (fields[1], vec![fields[0], fields[2]])
                }
                DataFormat::TsvNary => {
                    if fields.len() < 2 {
                        return Err(Error::parse(line_no, "expected a relation and at least one entity"));
                    }
                    (fields[0], fields[1..].to_vec())
                }
            };
            if relation.is_empty() || args.iter().any(|a| a.is_empty()) {
                return Err(Error::parse(line_no, "empty field"));
            }
            let fact = self.resolve(relation, &args, line_no)?;
            if !seen.insert(fact.clone()) {
                return Err(Error::DuplicateFact {
                    line: line_no,
                    split: split.name(),
                });
            }
            facts.push(fact);
        }
        Ok(facts)
    }

    fn resolve(&mut self, relation: &str, args: &[&str], line: usize) -> Result<Fact> {
        if self.frozen {
            let rel = self.vocab.relation_id(relation).ok_or_else(|| Error::UnknownName {
                kind: "relation",
                name: relation.to_owned(),
            })?;
            let expected = self.vocab.arity(rel);
            if expected != args.len() {
                return Err(Error::ArityMismatch {
                    line,
                    relation: relation.to_owned(),
                    expected,
                    found: args.len(),
                });
            }
            let entities = args
                .iter()
                .map(|a| {
                    self.vocab.entity_id(a).ok_or_else(|| Error::UnknownName {
                        kind: "entity",
                        name: (*a).to_owned(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Fact::new(rel, entities))
        } else {
            let rel = self.vocab.intern_relation(relation, args.len(), line)?;
            let entities = args.iter().map(|a| self.vocab.intern_entity(a)).collect::<Vec<_>>();
            Ok(Fact::new(rel, entities))
        }
    }

    pub fn finish(self, train: Vec<Fact>, valid: Vec<Fact>, test: Vec<Fact>) -> Result<KnowledgeBase> {
        KnowledgeBase::new(self.vocab, train, valid, test)
    }
}

#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    vocab: Vocabulary,
    train: Vec<Fact>,
    valid: Vec<Fact>,
    test: Vec<Fact>,
    known: HashSet<Fact>,
}

impl KnowledgeBase {
    /// Validates every fact against `vocab`, rejects duplicates within a split
    /// and builds the membership index over the union of splits.
    pub fn new(vocab: Vocabulary, train: Vec<Fact>, valid: Vec<Fact>, test: Vec<Fact>) -> Result<Self> {
        for (split, facts) in [(Split::Train, &train), (Split::Valid, &valid), (Split::Test, &test)] {
            let mut seen = HashSet::with_capacity(facts.len());
            for (i, fact) in facts.iter().enumerate() {
                vocab.check_fact(fact)?;
                if !seen.insert(fact) {
                    return Err(Error::DuplicateFact {
                        line: i + 1,
                        split: split.name(),
                    });
                }
            }
        }
        let known = train.iter().chain(&valid).chain(&test).cloned().collect();
        Ok(KnowledgeBase {
            vocab,
            train,
            valid,
            test,
            known,
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn split(&self, split: Split) -> &[Fact] {
        match split {
            Split::Train => &self.train,
            Split::Valid => &self.valid,
            Split::Test => &self.test,
        }
    }

    pub fn train(&self) -> &[Fact] {
        &self.train
    }

    pub fn valid(&self) -> &[Fact] {
        &self.valid
    }

    pub fn test(&self) -> &[Fact] {
        &self.test
    }

    /// Membership in train ∪ valid ∪ test.
    pub fn known(&self, fact: &Fact) -> bool {
        self.known.contains(fact)
    }

    /// Adds, for every relation `r`, an inverse relation `r_inv` and pairs
    /// every fact `r(a, b)` in each split with `r_inv(b, a)`.
    pub fn augment_inverses(&self) -> Result<KnowledgeBase> {
        let mut vocab = self.vocab.clone();
        let originals: Vec<(RelationId, RelationInfo)> =
            self.vocab.relations().map(|(id, info)| (id, info.clone())).collect();
        let mut inverse = Vec::with_capacity(originals.len());
        for (id, info) in &originals {
            if info.arity != 2 {
                return Err(Error::Unsupported(format!(
                    "inverse augmentation needs binary relations; `{}` has arity {}",
                    info.name, info.arity
                )));
            }
            let name = format!("{}_inv", info.name);
            if vocab.relation_id(&name).is_some() {
                return Err(Error::Config(format!("relation name `{name}` already exists")));
            }
            let inv = vocab.intern_relation(&name, 2, 0)?;
            vocab.relations[inv.0].inverse_of = Some(*id);
            inverse.push(inv);
        }
        let double = |facts: &[Fact]| -> Vec<Fact> {
            let mut out = Vec::with_capacity(facts.len() * 2);
            for f in facts {
                out.push(f.clone());
                out.push(Fact::new(
                    inverse[f.relation.0],
                    vec![f.entities[1], f.entities[0]],
                ));
            }
            out
        };
        KnowledgeBase::new(vocab, double(&self.train), double(&self.valid), double(&self.test))
    }

    /// Serializes one split in `format`; parsing the three serialized splits
    /// in order reproduces the same ids.
    pub fn to_text(&self, split: Split, format: DataFormat) -> Result<String> {
        let mut out = String::new();
        for fact in self.split(split) {
            let rel = self.vocab.relation_name(fact.relation);
            let names: Vec<&str> = fact.entities.iter().map(|e| self.vocab.entity_name(*e)).collect();
            match format {
                DataFormat::TsvTriple => {
                    if names.len() != 2 {
                        return Err(Error::Unsupported(format!(
                            "tsv-triple cannot encode a fact of arity {}",
                            names.len()
                        )));
                    }
                    out.push_str(&format!("{}\t{}\t{}\n", names[0], rel, names[1]));
                }
                DataFormat::TsvNary => {
                    out.push_str(rel);
                    for n in names {
                        out.push('\t');
                        out.push_str(n);
                    }
                    out.push('\n');
                }
            }
        }
        Ok(out)
    }
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Parses three split files into a knowledge base.
pub fn parse_kb(train: &Path, valid: &Path, test: &Path, format: DataFormat) -> Result<KnowledgeBase> {
    parse_kb_str(&read_file(train)?, &read_file(valid)?, &read_file(test)?, format)
}

pub fn parse_kb_str(train: &str, valid: &str, test: &str, format: DataFormat) -> Result<KnowledgeBase> {
    let mut reader = KbReader::new(format);
    let tr = reader.read_split(train, Split::Train)?;
    let va = reader.read_split(valid, Split::Valid)?;
    let te = reader.read_split(test, Split::Test)?;
    reader.finish(tr, va, te)
}

/// Like [`parse_kb`] but resolves names against an existing vocabulary.
pub fn parse_kb_with_vocab(
    vocab: Vocabulary,
    train: &Path,
    valid: &Path,
    test: &Path,
    format: DataFormat,
) -> Result<KnowledgeBase> {
    parse_kb_str_with_vocab(vocab, &read_file(train)?, &read_file(valid)?, &read_file(test)?, format)
}

pub fn parse_kb_str_with_vocab(
    vocab: Vocabulary,
    train: &str,
    valid: &str,
    test: &str,
    format: DataFormat,
) -> Result<KnowledgeBase> {
    let mut reader = KbReader::with_vocab(vocab, format);
    let tr = reader.read_split(train, Split::Train)?;
    let va = reader.read_split(valid, Split::Valid)?;
    let te = reader.read_split(test, Split::Test)?;
    reader.finish(tr, va, te)
}
