//! Spectra, singular values and the exponents built from them.

mod eigen;
mod svd;

use std::cmp::Ordering;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::matrix::{ChainRecord, SquareMatrix};

/// Below this modulus an eigenvalue or singular value counts as zero.
pub const DEGENERATE_FLOOR: f64 = 1e-280;

/// Eigenvalues ordered by descending modulus, then real part, then
/// imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<Complex64>,
}

fn spectral_order(a: &Complex64, b: &Complex64) -> Ordering {
    b.norm()
        .total_cmp(&a.norm())
        .then(b.re.total_cmp(&a.re))
        .then(b.im.total_cmp(&a.im))
}

impl Spectrum {
    pub fn from_unordered(mut eigenvalues: Vec<Complex64>) -> Self {
        eigenvalues.sort_by(spectral_order);
        Self { eigenvalues }
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Leading eigenvalue; 1 for a stochastic matrix.
    pub fn leading(&self) -> Complex64 {
        self.eigenvalues[0]
    }

    /// Second-largest in modulus, `lambda_1`.
    pub fn subleading(&self) -> Option<Complex64> {
        self.eigenvalues.get(1).copied()
    }
}

/// Singular values in descending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularValues(Vec<f64>);

impl SingularValues {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn largest(&self) -> f64 {
        self.0[0]
    }

    /// `z_1`, the second-largest singular value.
    pub fn second(&self) -> Option<f64> {
        self.0.get(1).copied()
    }
}

/// Per-replica exponents; `None` marks a degenerate sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentSample {
    pub theta: Option<f64>,
    pub vartheta: Option<f64>,
    pub t: usize,
    pub n: usize,
    pub replica_index: u64,
}

pub fn eigenvalues(m: &SquareMatrix) -> Result<Spectrum> {
    Ok(Spectrum::from_unordered(eigen::raw_eigenvalues(m)?))
}

pub fn singular_values(m: &SquareMatrix) -> SingularValues {
    SingularValues(svd::jacobi_singular_values(m))
}

/// Spectrum of `U(t)` as `{1}` plus the eigenvalues of the zero-sum block.
///
/// Unlike [`eigenvalues`] on the product itself, the subleading part keeps
/// relative accuracy when `|lambda_1|` is far below machine epsilon.
pub fn chain_spectrum(record: &ChainRecord) -> Result<Spectrum> {
    let mut values = eigen::raw_eigenvalues(&record.deflated().block)?;
    values.push(Complex64::new(1.0, 0.0));
    Ok(Spectrum::from_unordered(values))
}

/// Singular values of `U(t)` computed from its orthogonally similar form
/// `[[1, 0], [c, B]]`, where Jacobi keeps the tiny block's relative
/// precision.
pub fn chain_singular_values(record: &ChainRecord) -> SingularValues {
    singular_values(&record.deflated().orthogonal_form())
}

/// `theta = -(1/t) ln |lambda_1|`, or `None` when `|lambda_1|` is below the
/// degenerate floor.
pub fn stability_exponent(spec: &Spectrum, t: usize) -> Option<f64> {
    let lambda1 = spec.subleading()?.norm();
    exponent_from(lambda1, t)
}

/// `vartheta = -(1/t) ln z_1` with `z_1` the second singular value.
pub fn lyapunov_exponent(sv: &SingularValues, t: usize) -> Option<f64> {
    exponent_from(sv.second()?, t)
}

fn exponent_from(value: f64, t: usize) -> Option<f64> {
    if !(value >= DEGENERATE_FLOOR) || t == 0 {
        return None;
    }
    Some(-value.ln() / t as f64)
}

/// Maps each eigenvalue to `lambda |lambda|^(1/t - 1)`: the modulus
/// becomes `|lambda|^(1/t)`, the argument is kept.
pub fn rescale_spectrum(spec: &Spectrum, t: usize) -> Spectrum {
    let t = t.max(1);
    if t == 1 {
        return spec.clone();
    }
    let power = 1.0 / t as f64;
    let eigenvalues = spec
        .eigenvalues
        .iter()
        .map(|&z| {
            let r = z.norm();
            if r == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                z * (r.powf(power) / r)
            }
        })
        .collect();
    // the map is monotone in modulus, so the order is kept
    Spectrum { eigenvalues }
}

/// Fraction of eigenvalues with `|Im| < eps`, leaving out the leading
/// (Perron) eigenvalue.
pub fn real_fraction(spec: &Spectrum, eps: f64) -> f64 {
    real_fraction_with(spec, eps, false)
}

/// As [`real_fraction`], optionally counting the leading eigenvalue too.
pub fn real_fraction_with(spec: &Spectrum, eps: f64, include_leading: bool) -> f64 {
    let skip = usize::from(!include_leading);
    let pool = &spec.eigenvalues[skip.min(spec.len())..];
    if pool.is_empty() {
        return 1.0;
    }
    pool.iter().filter(|z| z.im.abs() < eps).count() as f64 / pool.len() as f64
}
