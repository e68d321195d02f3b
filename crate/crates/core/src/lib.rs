//! Periodic points, specification and dense periodic measures for toral
//! automorphisms.
//!
//! The crate is organized bottom-up: [`exact`] holds arbitrary-precision
//! linear algebra, [`spectral`] the eigenvalue-level constructions (splittings,
//! adapted norms, Newton polygons, period sets), [`torus`] the dynamics on
//! `T^d`, [`specification`] the closing and tracing constructions,
//! [`unipotent`] and [`measure`] the invariant-measure approximations, and
//! [`subshift`] the Thue-Morse product example.

pub mod error;
pub mod exact;
pub mod lattice;
pub mod measure;
pub(crate) mod serde_util;
pub mod specification;
pub mod spectral;
pub mod subshift;
pub mod torus;
pub mod unipotent;

pub use error::{Error, Result};
