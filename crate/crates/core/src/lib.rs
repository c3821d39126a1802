//! Decomposable submodular function minimization.

pub mod cli;
pub mod error;
pub mod functions;
pub mod instances;
pub mod lovasz;
pub mod mask;
pub mod oracle;
pub mod pava;
pub mod prox;
pub mod solvers;

pub use error::{Result, SfmError};
pub use mask::{GroundSet, SubsetMask};
pub use oracle::{SetFunction, SfmSolution, SfmSolver, SubmodularOracle};
