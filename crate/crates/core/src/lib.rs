//! Exact combinatorics for flag resolutions of framed nilpotent
//! representations of the Jordan quiver.
//!
//! The crate is organised bottom-up:
//!
//! - [`partitions`]: partitions, compositions, multipartitions, hook lengths.
//! - [`orbit_calculus`]: multi-compositions, the relative-position set Θ,
//!   stratum dimensions and the semismallness certificate.
//! - [`decomposition`]: multiplicity tables, sheaf label counts, top-homology
//!   bases and Schur-algebra dimensions.
//! - [`fock`]: sparse exact symmetric functions, Heisenberg operators, the
//!   coproduct/adjoint calculus and the Hall pairing.
//! - [`fq_oracle`]: brute-force point counts over small prime fields.
//! - [`acceptance`]: the desk-scale verification suite shared by the CLI and
//!   the integration tests.
//!
//! All arithmetic is exact. Nothing in the crate uses floating point.

pub mod acceptance;
pub mod decomposition;
mod error;
pub mod fock;
pub mod fq_oracle;
pub mod orbit_calculus;
pub mod partitions;
mod serde_big;

pub use error::{Error, Result};
pub use serde_big::format_rational;

pub use decomposition::{DecompositionTable, SheafIndex};
pub use fock::{LinearOperator, SymFunc, TensorSymFunc};
pub use fq_oracle::{Budget, FqFlag, FqMatrix, FqSubspace, PointCountReport};
pub use orbit_calculus::{FramingComposition, MultiComposition, OrbitMatrix, SemismallReport};
pub use partitions::{Composition, MultiPartition, Partition};
