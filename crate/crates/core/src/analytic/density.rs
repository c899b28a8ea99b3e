//! Reference densities and CDFs on `[0, 1]` and `[0, inf)`.

use std::f64::consts::PI;

use super::quadrature::{integrate, QuadratureSpec};
use super::special::{inc_beta, inc_gamma, lgamma, std_normal_cdf};
use crate::error::{Error, Result};

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Beta(p, q) density with a precomputed log normalizer.
fn beta_pdf_ln(z: f64, p: f64, q: f64, ln_norm: f64) -> f64 {
    if !(0.0..=1.0).contains(&z) {
        return 0.0;
    }
    let edge = |expo: f64| {
        if expo < 0.0 {
            f64::INFINITY
        } else if expo == 0.0 {
            1.0
        } else {
            0.0
        }
    };
    if z == 0.0 {
        let e = edge(p - 1.0);
        return if e == 1.0 { ln_norm.exp() } else { e };
    }
    if z == 1.0 {
        let e = edge(q - 1.0);
        return if e == 1.0 { ln_norm.exp() } else { e };
    }
    (ln_norm + (p - 1.0) * z.ln() + (q - 1.0) * (-z).ln_1p()).exp()
}

fn beta_ln_norm(p: f64, q: f64) -> f64 {
    lgamma(p + q) - lgamma(p) - lgamma(q)
}

/// Barycentric interpolant through values at Chebyshev points of the first
/// kind mapped onto `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevTable {
    nodes: Vec<f64>,
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl ChebyshevTable {
    /// The `count` interpolation nodes in `(0, 1)`, ascending.
    pub fn nodes(count: usize) -> Vec<f64> {
        let m = count as f64;
        (0..count)
            .rev()
            .map(|k| 0.5 * (1.0 + ((2.0 * k as f64 + 1.0) * PI / (2.0 * m)).cos()))
            .collect()
    }

    /// Builds the interpolant from values at [`ChebyshevTable::nodes`].
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let count = values.len();
        if count < 2 {
            return Err(Error::arg("need at least two interpolation nodes"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("interpolation values must be finite"));
        }
        let m = count as f64;
        let weights = (0..count)
            .rev()
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * ((2.0 * k as f64 + 1.0) * PI / (2.0 * m)).sin()
            })
            .collect();
        Ok(Self {
            nodes: Self::nodes(count),
            values,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, z: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for ((&x, &v), &w) in self.nodes.iter().zip(&self.values).zip(&self.weights) {
            let d = z - x;
            if d == 0.0 {
                return v;
            }
            let c = w / d;
            num += c * v;
            den += c;
        }
        num / den
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Beta { p: f64, q: f64, ln_norm: f64 },
    TwoStep,
    Tabulated(ChebyshevTable),
}

/// A probability density on `[0, 1]` with a family tag and parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityFn {
    kind: Kind,
}

impl DensityFn {
    pub fn beta(p: f64, q: f64) -> Result<Self> {
        check_positive("p", p)?;
        check_positive("q", q)?;
        Ok(Self {
            kind: Kind::Beta {
                p,
                q,
                ln_norm: beta_ln_norm(p, q),
            },
        })
    }

    pub fn uniform() -> Self {
        Self::beta(1.0, 1.0).expect("valid parameters")
    }

    /// Density of the top-left entry of a product of two uniform 2x2 factors.
    pub fn two_step() -> Self {
        Self { kind: Kind::TwoStep }
    }

    /// Large-`t` law of a single entry: Beta(na, n(n-1)a).
    pub fn fixed_point(a: f64, n: usize) -> Result<Self> {
        check_positive("a", a)?;
        if n < 2 {
            return Err(Error::param("n must be at least 2"));
        }
        let nf = n as f64;
        Self::beta(nf * a, nf * (nf - 1.0) * a)
    }

    /// Interpolated density, values clamped at zero.
    pub fn tabulated(table: ChebyshevTable) -> Self {
        Self {
            kind: Kind::Tabulated(table),
        }
    }

    pub fn family(&self) -> &'static str {
        match self.kind {
            Kind::Beta { .. } => "beta",
            Kind::TwoStep => "two_step",
            Kind::Tabulated(_) => "tabulated",
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match &self.kind {
            Kind::Beta { p, q, .. } => vec![*p, *q],
            Kind::TwoStep => Vec::new(),
            Kind::Tabulated(t) => vec![t.len() as f64],
        }
    }

    /// True when the density may be unbounded at an endpoint.
    pub fn endpoint_singular(&self) -> bool {
        match self.kind {
            Kind::Beta { p, q, .. } => p < 1.0 || q < 1.0,
            _ => false,
        }
    }

    pub fn eval(&self, z: f64) -> f64 {
        match &self.kind {
            Kind::Beta { p, q, ln_norm } => beta_pdf_ln(z, *p, *q, *ln_norm),
            Kind::TwoStep => p2_density(z),
            Kind::Tabulated(t) => {
                if (0.0..=1.0).contains(&z) {
                    t.eval(z).max(0.0)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cdf(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        if z >= 1.0 {
            return 1.0;
        }
        match &self.kind {
            Kind::Beta { p, q, .. } => inc_beta(z, *p, *q),
            Kind::TwoStep => p2_cdf(z),
            Kind::Tabulated(_) => integrate(|x| self.eval(x), 0.0, z, &QuadratureSpec::default())
                .map(|r| r.value)
                .unwrap_or(f64::NAN),
        }
    }
}

/// Marginal density of one entry of a symmetric Dirichlet(a) vector of
/// length `n`, i.e. Beta(a, (n-1)a).
pub fn beta_marginal_pdf(v: f64, a: f64, n: usize) -> Result<f64> {
    check_positive("a", a)?;
    if n < 2 {
        return Err(Error::param("n must be at least 2"));
    }
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::param(format!("v must lie in [0, 1], got {v}")));
    }
    let q = (n - 1) as f64 * a;
    Ok(beta_pdf_ln(v, a, q, beta_ln_norm(a, q)))
}

/// `-2z ln z - 2(1-z) ln(1-z)`, zero at the endpoints.
pub fn p2_density(z: f64) -> f64 {
    if !(0.0..=1.0).contains(&z) {
        return 0.0;
    }
    let xlnx = |x: f64| if x == 0.0 { 0.0 } else { x * x.ln() };
    -2.0 * xlnx(z) - 2.0 * xlnx(1.0 - z)
}

pub fn p2_cdf(z: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    if z >= 1.0 {
        return 1.0;
    }
    let w = 1.0 - z;
    -z * z * z.ln() + 0.5 * z * z + 0.5 + w * w * w.ln() - 0.5 * w * w
}

/// Beta(na, n(n-1)a) density.
pub fn fixed_point_density(z: f64, a: f64, n: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::param(format!("z must lie in [0, 1], got {z}")));
    }
    Ok(DensityFn::fixed_point(a, n)?.eval(z))
}

/// `beta^alpha / Γ(alpha) x^(alpha-1) e^(-beta x)`.
pub fn gamma_pdf(x: f64, alpha: f64, beta: f64) -> Result<f64> {
    check_positive("alpha", alpha)?;
    check_positive("beta", beta)?;
    if !(x >= 0.0) {
        return Err(Error::param(format!("x must be nonnegative, got {x}")));
    }
    if x == 0.0 {
        return Ok(if alpha < 1.0 {
            f64::INFINITY
        } else if alpha == 1.0 {
            beta
        } else {
            0.0
        });
    }
    Ok((alpha * beta.ln() - lgamma(alpha) + (alpha - 1.0) * x.ln() - beta * x).exp())
}

/// Beta(p, q) CDF; NaN for invalid parameters.
pub fn beta_cdf(x: f64, p: f64, q: f64) -> f64 {
    if !(p > 0.0 && q > 0.0) {
        return f64::NAN;
    }
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        inc_beta(x, p, q)
    }
}

/// Gamma CDF with shape and rate; NaN for invalid parameters.
pub fn gamma_cdf(x: f64, shape: f64, rate: f64) -> f64 {
    if !(shape > 0.0 && rate > 0.0) {
        return f64::NAN;
    }
    if x <= 0.0 {
        0.0
    } else {
        inc_gamma(rate * x, shape)
    }
}

pub fn normal_cdf(x: f64, mean: f64, sd: f64) -> f64 {
    if !(sd > 0.0) {
        return f64::NAN;
    }
    std_normal_cdf((x - mean) / sd)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm_spec() -> QuadratureSpec {
        QuadratureSpec {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_subdivisions: 4000,
            endpoint_substitution: true,
        }
    }

    #[test]
    fn marginal_values() {
        for v in [0.0, 0.3, 0.9, 1.0] {
            assert!((beta_marginal_pdf(v, 1.0, 2).unwrap() - 1.0).abs() < 1e-14);
        }
        assert!((beta_marginal_pdf(0.5, 2.0, 2).unwrap() - 1.5).abs() < 1e-13);
        assert_eq!(beta_marginal_pdf(0.0, 0.5, 2).unwrap(), f64::INFINITY);
        assert!(beta_marginal_pdf(0.5, 0.0, 2).is_err());
        assert!(beta_marginal_pdf(0.5, 1.0, 1).is_err());
    }

    #[test]
    fn marginal_normalized() {
        for a in [1.0, 2.0, 3.0] {
            for n in [2, 3, 5] {
                let r = integrate(
                    |v| beta_marginal_pdf(v, a, n).unwrap(),
                    0.0,
                    1.0,
                    &norm_spec(),
                )
                .unwrap();
                assert!((r.value - 1.0).abs() < 1e-10, "a={a} n={n}: {}", r.value);
            }
        }
    }

    #[test]
    fn two_step_values() {
        assert!((p2_density(0.5) - 2.0 * 2f64.ln()).abs() < 1e-15);
        assert!((p2_density(0.5) - 1.386_294_4).abs() < 1e-7);
        assert_eq!(p2_density(0.0), 0.0);
        assert_eq!(p2_density(1.0), 0.0);
        for z in [0.1, 0.27, 0.4] {
            assert!((p2_density(z) - p2_density(1.0 - z)).abs() < 1e-14);
        }
        let r = integrate(p2_density, 0.0, 1.0, &norm_spec()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn two_step_cdf_matches_quadrature() {
        let spec = norm_spec();
        for z in [0.05, 0.3, 0.5, 0.81] {
            let q = integrate(p2_density, 0.0, z, &spec).unwrap().value;
            assert!((p2_cdf(z) - q).abs() < 1e-11, "z={z}");
        }
        assert!((p2_cdf(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fixed_point_values() {
        assert!((fixed_point_density(0.5, 1.0, 2).unwrap() - 1.5).abs() < 1e-13);
        assert!((fixed_point_density(0.5, 2.0, 2).unwrap() - 2.1875).abs() < 1e-12);
        for z in [0.1, 0.6] {
            let poly = 6.0 * z * (1.0 - z);
            assert!((fixed_point_density(z, 1.0, 2).unwrap() - poly).abs() < 1e-13);
        }
    }

    #[test]
    fn fixed_point_mean_and_large_parameters() {
        let spec = norm_spec();
        for (a, n) in [(1.0, 2), (0.5, 3), (2.0, 5), (1.0, 64)] {
            let d = DensityFn::fixed_point(a, n).unwrap();
            let mass = integrate(|z| d.eval(z), 0.0, 1.0, &spec).unwrap().value;
            let mean = integrate(|z| z * d.eval(z), 0.0, 1.0, &spec).unwrap().value;
            assert!((mass - 1.0).abs() < 1e-8, "a={a} n={n} mass {mass}");
            assert!((mean - 1.0 / n as f64).abs() < 1e-8, "a={a} n={n}");
        }
        // Γ(n²a) alone would overflow here
        assert!(fixed_point_density(0.01, 3.0, 64).unwrap().is_finite());
    }

    #[test]
    fn gamma_pdf_values() {
        for x in [0.0, 0.5, 3.0] {
            assert!((gamma_pdf(x, 1.0, 1.0).unwrap() - (-x).exp()).abs() < 1e-14);
        }
        let (alpha, beta) = (1.92, 1.3);
        let mode = (alpha - 1.0) / beta;
        let peak = gamma_pdf(mode, alpha, beta).unwrap();
        for k in 1..2000 {
            let x = k as f64 * 0.005;
            assert!(gamma_pdf(x, alpha, beta).unwrap() <= peak + 1e-15);
        }
        let spec = QuadratureSpec::default();
        let body = integrate(|x| gamma_pdf(x, alpha, beta).unwrap(), 0.0, 60.0, &spec).unwrap();
        assert!((body.value - 1.0).abs() < 1e-10);
        assert!(gamma_pdf(-1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn cdfs_agree_with_densities() {
        let spec = QuadratureSpec::default();
        let q = integrate(|x| gamma_pdf(x, 2.5, 0.7).unwrap(), 0.0, 3.0, &spec).unwrap();
        assert!((gamma_cdf(3.0, 2.5, 0.7) - q.value).abs() < 1e-10);
        let b = DensityFn::beta(2.0, 5.0).unwrap();
        let q = integrate(|x| b.eval(x), 0.0, 0.3, &spec).unwrap();
        assert!((b.cdf(0.3) - q.value).abs() < 1e-10);
        assert!((normal_cdf(1.0, 1.0, 2.0) - 0.5).abs() < 1e-15);
        assert!(beta_cdf(0.5, -1.0, 1.0).is_nan());
    }

    #[test]
    fn chebyshev_reproduces_polynomials() {
        let nodes = ChebyshevTable::nodes(17);
        assert!(nodes.windows(2).all(|w| w[0] < w[1]));
        let f = |z: f64| 6.0 * z * (1.0 - z) + z.powi(5);
        let t = ChebyshevTable::new(nodes.iter().map(|&z| f(z)).collect()).unwrap();
        for k in 0..=100 {
            let z = k as f64 / 100.0;
            assert!((t.eval(z) - f(z)).abs() < 1e-12, "z={z}");
        }
        let d = DensityFn::tabulated(t);
        assert!((d.cdf(0.5) - (0.5 + 1.0 / 384.0)).abs() < 1e-10);
        assert_eq!(d.family(), "tabulated");
    }
}
