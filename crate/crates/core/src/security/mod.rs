//! Relevance, observable equivalence, the logical relation, and
//! deadlock-sensitive noninterference.

pub mod contexts;
pub mod dsni;
pub mod relation;
pub mod relevance;

use thiserror::Error;

use crate::lattice::{LatticeError, Level};
use crate::semantics::network::NetworkError;
use crate::syntax::Name;

pub use contexts::{enumerate_contexts, ContextPair, ContextSpec, EnumerationParams, PrintedPair};
pub use dsni::{dsni_equivalent, fundamental_check, weakest_discipline, Direction, DsniReport, FundamentalReport};
pub use relation::{RelationVerdict, Relator, Witness};
pub use relevance::{
    observably_equivalent, observably_equivalent_with, quasi_running_secrecy, relevant, relevant_with, RelevanceResult,
    Typed,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SecurityError {
    #[error("unknown secrecy level `{0}`")]
    UnknownLevel(Level),
    #[error("not a node: `{0}`")]
    NotANode(String),
    #[error("subject `{0}` has no type")]
    SubjectUntyped(Name),
    #[error("ill-typed input: {0}")]
    IllTyped(String),
    #[error("observable interfaces differ: {left} vs {right}")]
    ProjectionMismatch { left: String, right: String },
    #[error("context {index} does not close the process: {source}")]
    Context { index: usize, source: NetworkError },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}
