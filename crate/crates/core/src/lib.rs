//! Box embeddings for knowledge-base completion over facts of any arity.
//!
//! Entities are points shifted by the translational bumps of their
//! co-participants; relations are one axis-aligned box per argument position.
//! The crate covers training with negative sampling, filtered ranking
//! evaluation, rule verification and injection, and an exact-fit builder that
//! realizes any truth table over a small universe.

pub mod checkpoint;
pub mod cli;
pub mod error;
pub mod eval;
pub mod expressiveness;
pub mod geometry;
pub mod kb;
pub mod model;
pub mod rules;
pub mod training;

pub use checkpoint::Checkpoint;
pub use error::{Error, Result};
pub use geometry::HyperBox;
pub use kb::{DataFormat, EntityId, Fact, KnowledgeBase, RelationId, Split, Vocabulary};
pub use model::{BranchMode, ModelParams, NormOrder};
