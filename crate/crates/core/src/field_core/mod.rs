//! Grids, finite-difference calculus, and symmetric-matrix helpers shared
//! by every solver and diagnostic.

pub mod field;
pub mod grid;
pub mod ops;
pub mod symmat;

pub use field::{ScalarField, SiteSet, SymMatrixField};
pub use grid::{BoxGrid, Grid, GridRef, LatticeVector, PeriodicGrid, MAX_DIM};
pub use ops::{cofactor_divergence, hessian, second_quotient};
pub use symmat::SymMat;
