//! Structural congruence, reduction, evaluation contexts and networks.

pub(crate) mod canon;
pub mod context;
pub mod network;
pub mod normal_form;
pub mod reduction;

pub use context::{active_interface_names, EvalContext, SplitError};
pub use network::Network;
pub use normal_form::{congruence_key, normal_form, struct_congruent, Binder, NormalForm};
pub use reduction::{enumerate_redexes, reduce_all, RedexKind, RedexReport};
