//! Periodic quasi-projection operators with matrix dilations.
//!
//! The crate provides:
//! - exact integer dilation-matrix arithmetic (digit sets, coset
//!   decomposition, spectral data) in [`lattice`];
//! - trigonometric polynomials as sparse Fourier-coefficient maps, with
//!   weighted coefficient norms, grid synthesis, and `L_p` quadrature in
//!   [`fourier`];
//! - concrete synthesis-kernel and analyzer families (Dirichlet, Fejér,
//!   periodized B-splines, differential and Kantorovich analyzers) in
//!   [`generators`];
//! - empirical verification of structural conditions (growth, Strang-Fix,
//!   compatibility, boundedness) over finite windows in [`conditions`];
//! - the operator itself, best approximations, de la Vallée-Poussin means
//!   and discrete norms in [`operator`];
//! - a convergence-rate harness with CSV output in [`experiments`];
//! - flat key-value run configuration in [`config`].

pub mod conditions;
pub mod config;
pub mod error;
pub mod experiments;
pub mod fourier;
pub mod generators;
pub mod lattice;
pub mod operator;

pub use error::{Error, Result};
pub use fourier::TrigPoly;
pub use lattice::DilationMatrix;
