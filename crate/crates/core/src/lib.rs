//! Finite combinatorial kernels of Ramsey-choice-style principles: equivariant
//! selection structures, bounded deciders with certificates, executable
//! reductions, Fraïssé stages and finite permutation-model approximations.

pub mod canon;
pub mod deciders;
pub mod equivariance;
pub mod error;
pub mod fraisse;
pub mod group;
pub mod modelzoo;
pub mod perm;
pub mod reductions;
pub mod selection;
pub mod subgroups;
pub mod subset;
pub mod verify;

pub use error::{Error, Result};
pub use group::{group_closure, PermGroup};
pub use perm::Perm;
pub use selection::SelectionStructure;
pub use subset::SubsetCode;
