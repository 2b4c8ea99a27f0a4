//! Numerical laboratory for the global Monge-Ampère equation
//! det(D²u) = f with right-hand sides that are asymptotically periodic at
//! infinity. The crate provides:
//!
//! - finite-difference calculus on box and periodic grids ([`field_core`]),
//! - analytic densities f = (f_p^{1/n} + decaying perturbation)^n with
//!   closed-form derivatives ([`density`]),
//! - a damped-Newton Dirichlet solver on boxes ([`ma_dirichlet`]),
//! - the periodic corrector problem det(I + D²ξ) = f_p ([`cell_corrector`]),
//! - exact radial solutions by quadrature ([`radial_oracle`]),
//! - asymptotic decomposition fits and proof-step diagnostics
//!   ([`asymptotics`]).
//!
//! All numerical kernels are generic over the scalar type via [`real::Real`]
//! (f32 or f64); the aliases below pin the f64 instantiations used by the
//! command-line harness.

pub mod error;
pub mod field_core;
pub mod parallel;
pub mod real;

pub mod density;

mod krylov;
mod lsq;

pub mod asymptotics;
pub mod cell_corrector;
pub mod ma_dirichlet;
pub mod radial_oracle;

pub use error::{Error, Result};

/// f64 instantiations of the core types.
pub type BoxGrid64 = field_core::BoxGrid<f64>;
pub type PeriodicGrid64 = field_core::PeriodicGrid<f64>;
pub type Grid64 = field_core::Grid<f64>;
pub type ScalarField64 = field_core::ScalarField<f64>;
pub type SymMat64 = field_core::SymMat<f64>;
pub type LatticeVector64 = field_core::LatticeVector<f64>;
pub type PeriodicDensitySpec64 = density::PeriodicDensitySpec<f64>;
pub type DensitySpec64 = density::DensitySpec<f64>;
pub type RadialDensitySpec64 = density::RadialDensitySpec<f64>;
pub type QuadraticProfile64 = ma_dirichlet::QuadraticProfile<f64>;
pub type BoundaryData64 = ma_dirichlet::BoundaryData<f64>;
pub type SolveReport64 = ma_dirichlet::SolveReport<f64>;
pub type CorrectorField64 = cell_corrector::CorrectorField<f64>;
pub type RadialSolution64 = radial_oracle::RadialSolution<f64>;
pub type DecompositionFit64 = asymptotics::DecompositionFit<f64>;
