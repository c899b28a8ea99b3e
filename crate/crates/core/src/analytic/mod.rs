//! Closed-form references: special functions, densities, quadrature and
//! the 2x2 transfer operator.

pub mod density;
pub mod quadrature;
pub mod special;
pub mod transfer;

pub use density::{
    beta_cdf, beta_marginal_pdf, fixed_point_density, gamma_cdf, gamma_pdf, normal_cdf, p2_cdf,
    p2_density, ChebyshevTable, DensityFn,
};
pub use quadrature::{integrate, QuadResult, QuadratureSpec};
pub use special::{digamma, ln_gamma, polygamma1, reg_inc_beta, reg_inc_gamma};
pub use transfer::{
    fixed_point_residual, iterate_transfer, residual_grid, transfer_apply,
    verify_fixed_point_appendix, RegionCheck,
};
