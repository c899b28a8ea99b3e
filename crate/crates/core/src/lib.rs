//! Monte Carlo machinery for products of random stochastic matrices.
//!
//! Each factor `M` of the chain `U(t) = M_t ... M_2 M_1` has independent
//! columns drawn from a symmetric Dirichlet law with concentration `a`.
//! The crate samples such chains reproducibly, measures their columns,
//! spectra and exponents, and checks the results against closed-form
//! references for the `n = 2` case computed by quadrature.
//!
//! Modules, bottom-up:
//!
//! - [`sampler`]: seeded generators, Gamma and Dirichlet variates, random matrices.
//! - [`matrix`]: dense and stochastic matrices, chain products, Perron vectors.
//! - [`spectral`]: eigenvalues, singular values, stability and Lyapunov exponents.
//! - [`analytic`]: special functions, reference densities, transfer operator.
//! - [`stats`]: histograms, KS statistics, maximum-likelihood fits.
//! - [`experiment`]: ensemble runs, figure reproduction, CSV/JSON/SVG output.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod error;
pub mod experiment;
pub mod matrix;
pub mod sampler;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use matrix::{ChainRecord, ProbVector, SquareMatrix, StochasticMatrix};
pub use sampler::{DirichletParams, SeedSpec};
pub use spectral::{SingularValues, Spectrum};

/// Library version, echoed in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
