//! Session-typed π-calculus with information flow control: parsing, type
//! checking, reduction, and deadlock-sensitive noninterference.

pub mod checker;
pub mod generate;
pub mod lattice;
pub mod security;
pub mod semantics;
pub mod surface;
pub mod syntax;
pub mod types;

pub use checker::{check, check_closed, expand_forwarder, Derivation, Judgment, Rule, TypeError, TypeErrorKind};
pub use lattice::{LatticeError, Level, SecrecyLattice};
pub use syntax::{Label, Name, Process};
pub use types::{Binding, SessionType, TypingContext};
