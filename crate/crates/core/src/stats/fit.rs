use serde::{Deserialize, Serialize};

use super::ks::ks_statistic;
use super::{mean, variance};
use crate::analytic::special::{lgamma, psi, trigamma};
use crate::analytic::{beta_cdf, gamma_cdf, normal_cdf};
use crate::error::{Error, Result};

const MIN_SAMPLES: usize = 10;
const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gamma,
    Beta,
    Gaussian,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Gamma => "gamma",
            Family::Beta => "beta",
            Family::Gaussian => "gaussian",
        }
    }
}

/// A fitted law with goodness-of-fit.
///
/// Parameters are `(alpha, rate)` for Gamma, `(p, q)` for Beta and
/// `(mean, sd)` for Gaussian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub family: Family,
    pub params: Vec<f64>,
    pub log_likelihood: f64,
    pub ks_statistic: f64,
    pub ks_p_value: f64,
    pub samples: usize,
    pub excluded: usize,
    /// Maximum likelihood did not converge; parameters are moment estimates.
    pub fallback: bool,
}

impl FitResult {
    pub fn with_excluded(mut self, excluded: usize) -> Self {
        self.excluded = excluded;
        self
    }

    /// CDF of the fitted law.
    pub fn cdf(&self, x: f64) -> f64 {
        let p = &self.params;
        match self.family {
            Family::Gamma => gamma_cdf(x, p[0], p[1]),
            Family::Beta => beta_cdf(x, p[0], p[1]),
            Family::Gaussian => normal_cdf(x, p[0], p[1]),
        }
    }

    /// Variance of the fitted Gaussian.
    pub fn variance(&self) -> Option<f64> {
        (self.family == Family::Gaussian).then(|| self.params[1] * self.params[1])
    }
}

fn check_len(samples: &[f64]) -> Result<()> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::arg(format!(
            "fit needs at least {MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::arg("fit samples must be finite"));
    }
    Ok(())
}

/// Sample variance, or `None` when every sample is identical.
fn spread(samples: &[f64]) -> Option<f64> {
    let first = samples[0];
    if samples.iter().all(|&x| x == first) {
        return None;
    }
    Some(variance(samples)).filter(|v| *v > 0.0)
}

fn finish(
    family: Family,
    params: Vec<f64>,
    log_likelihood: f64,
    samples: &[f64],
    fallback: bool,
) -> Result<FitResult> {
    let mut fit = FitResult {
        family,
        params,
        log_likelihood,
        ks_statistic: 0.0,
        ks_p_value: 1.0,
        samples: samples.len(),
        excluded: 0,
        fallback,
    };
    let ks = ks_statistic(samples, |x| fit.cdf(x))?;
    fit.ks_statistic = ks.d;
    fit.ks_p_value = ks.p_value;
    Ok(fit)
}

/// Solves `ln a - psi(a) = s` for `a`; the left side decreases from
/// infinity to zero.
fn gamma_shape(s: f64, start: f64) -> Option<f64> {
    let f = |a: f64| a.ln() - psi(a) - s;
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    let mut a = start;
    for _ in 0..NEWTON_MAX_ITER {
        let fa = f(a);
        if fa > 0.0 {
            lo = a;
        } else {
            hi = a;
        }
        let step = fa / (1.0 / a - trigamma(a));
        let mut next = a - step;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * a };
        }
        if (next - a).abs() <= NEWTON_TOL * a {
            return Some(next);
        }
        a = next;
    }
    None
}

/// Maximum-likelihood Gamma fit, returning `(alpha, rate)`.
pub fn fit_gamma(samples: &[f64]) -> Result<FitResult> {
    check_len(samples)?;
    if samples.iter().any(|&x| x <= 0.0) {
        return Err(Error::arg("Gamma fit needs positive samples"));
    }
    let m = mean(samples);
    let v = spread(samples)
        .ok_or_else(|| Error::arg("Gamma fit: samples have zero variance"))?;
    let mean_ln = samples.iter().map(|x| x.ln()).sum::<f64>() / samples.len() as f64;
    let s = m.ln() - mean_ln;
    let moment_alpha = m * m / v;
    let (alpha, fallback) = match (s > 0.0).then(|| gamma_shape(s, moment_alpha)).flatten() {
        Some(a) => (a, false),
        None => {
            log::warn!("Gamma MLE did not converge; using moment estimates");
            (moment_alpha, true)
        }
    };
    let rate = alpha / m;
    let nf = samples.len() as f64;
    let ll = nf * (alpha * rate.ln() - lgamma(alpha)) + (alpha - 1.0) * nf * mean_ln - rate * nf * m;
    finish(Family::Gamma, vec![alpha, rate], ll, samples, fallback)
}

fn beta_newton(mean_ln: f64, mean_ln1m: f64, mut p: f64, mut q: f64) -> Option<(f64, f64)> {
    for _ in 0..NEWTON_MAX_ITER {
        let common = psi(p + q);
        let g1 = psi(p) - common - mean_ln;
        let g2 = psi(q) - common - mean_ln1m;
        let tc = trigamma(p + q);
        let (j11, j22, j12) = (trigamma(p) - tc, trigamma(q) - tc, -tc);
        let det = j11 * j22 - j12 * j12;
        if !(det.abs() > 0.0) {
            return None;
        }
        let dp = (j22 * g1 - j12 * g2) / det;
        let dq = (j11 * g2 - j12 * g1) / det;
        // damp so both parameters stay positive
        let mut lambda = 1.0;
        while p - lambda * dp <= 0.0 || q - lambda * dq <= 0.0 {
            lambda *= 0.5;
        }
        p -= lambda * dp;
        q -= lambda * dq;
        if (lambda * dp).abs() <= NEWTON_TOL * p && (lambda * dq).abs() <= NEWTON_TOL * q {
            return Some((p, q));
        }
    }
    None
}

/// Maximum-likelihood Beta fit on samples in `(0, 1)`.
pub fn fit_beta(samples: &[f64]) -> Result<FitResult> {
    check_len(samples)?;
    if samples.iter().any(|&x| x <= 0.0 || x >= 1.0) {
        return Err(Error::arg("Beta fit needs samples in (0, 1)"));
    }
    let m = mean(samples);
    let v = spread(samples)
        .ok_or_else(|| Error::arg("Beta fit: samples have zero variance"))?;
    let nf = samples.len() as f64;
    let mean_ln = samples.iter().map(|x| x.ln()).sum::<f64>() / nf;
    let mean_ln1m = samples.iter().map(|x| (-x).ln_1p()).sum::<f64>() / nf;
    let common = (m * (1.0 - m) / v - 1.0).max(1e-3);
    let (p0, q0) = (m * common, (1.0 - m) * common);
    let ((p, q), fallback) = match beta_newton(mean_ln, mean_ln1m, p0, q0) {
        Some(pq) => (pq, false),
        None => {
            log::warn!("Beta MLE did not converge; using moment estimates");
            ((p0, q0), true)
        }
    };
    let ll = nf * (lgamma(p + q) - lgamma(p) - lgamma(q))
        + (p - 1.0) * nf * mean_ln
        + (q - 1.0) * nf * mean_ln1m;
    finish(Family::Beta, vec![p, q], ll, samples, fallback)
}

/// Gaussian fit by sample mean and unbiased variance; parameters are
/// `(mean, sd)`.
pub fn fit_gaussian(samples: &[f64]) -> Result<FitResult> {
    check_len(samples)?;
    let m = mean(samples);
    let v = spread(samples)
        .ok_or_else(|| Error::arg("Gaussian fit: samples have zero variance"))?;
    let sd = v.sqrt();
    let nf = samples.len() as f64;
    let ss: f64 = samples.iter().map(|x| (x - m).powi(2)).sum();
    let ll = -0.5 * nf * (2.0 * std::f64::consts::PI * v).ln() - ss / (2.0 * v);
    finish(Family::Gaussian, vec![m, sd], ll, samples, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{derive_generator, gamma_sample, SeedSpec};
    use rand::Rng;

    fn gamma_draws(alpha: f64, rate: f64, m: usize, seed: u64) -> Vec<f64> {
        let mut rng = derive_generator(SeedSpec::new(seed, 0, 0));
        (0..m).map(|_| gamma_sample(alpha, &mut rng).unwrap() / rate).collect()
    }

    #[test]
    fn gamma_recovers_parameters() {
        let xs = gamma_draws(2.0, 3.0, 100_000, 1);
        let f = fit_gamma(&xs).unwrap();
        assert!(!f.fallback);
        assert!((1.95..=2.05).contains(&f.params[0]), "{:?}", f.params);
        assert!((2.92..=3.08).contains(&f.params[1]), "{:?}", f.params);
        assert!(f.ks_statistic < 0.01);
        assert_eq!(f.samples, 100_000);
    }

    #[test]
    fn gamma_mle_beats_neighbours() {
        let xs = gamma_draws(0.6, 2.0, 2000, 2);
        let f = fit_gamma(&xs).unwrap();
        let ll = |a: f64, b: f64| -> f64 {
            xs.iter()
                .map(|&x| a * b.ln() - lgamma(a) + (a - 1.0) * x.ln() - b * x)
                .sum()
        };
        let (a, b) = (f.params[0], f.params[1]);
        assert!((ll(a, b) - f.log_likelihood).abs() < 1e-6 * f.log_likelihood.abs());
        for (da, db) in [(0.01, 0.0), (-0.01, 0.0), (0.0, 0.02), (0.0, -0.02)] {
            assert!(ll(a + da, b + db) < f.log_likelihood);
        }
    }

    #[test]
    fn gamma_self_consistency() {
        let xs = gamma_draws(9.0, 6.0, 20_000, 3);
        let first = fit_gamma(&xs).unwrap();
        let ys = gamma_draws(first.params[0], first.params[1], 20_000, 4);
        let second = fit_gamma(&ys).unwrap();
        // asymptotic sd of the shape MLE is about alpha sqrt(2/m) here
        let sd = first.params[0] * (2.0f64 / 20_000.0).sqrt();
        assert!((first.params[0] - second.params[0]).abs() < 4.0 * sd * 2f64.sqrt());
    }

    #[test]
    fn gamma_degenerate() {
        assert!(fit_gamma(&[2.0; 20]).is_err());
        assert!(fit_gamma(&[1.0; 5]).is_err());
        let mut xs = vec![1.0; 20];
        xs[3] = -1.0;
        assert!(fit_gamma(&xs).is_err());
    }

    #[test]
    fn beta_recovers_parameters() {
        let mut rng = derive_generator(SeedSpec::new(8, 0, 0));
        let xs: Vec<f64> = (0..50_000)
            .map(|_| {
                let g = gamma_sample(2.0, &mut rng).unwrap();
                let h = gamma_sample(5.0, &mut rng).unwrap();
                g / (g + h)
            })
            .collect();
        let f = fit_beta(&xs).unwrap();
        assert!((f.params[0] - 2.0).abs() < 0.08, "{:?}", f.params);
        assert!((f.params[1] - 5.0).abs() < 0.2, "{:?}", f.params);
    }

    #[test]
    fn beta_symmetric_data() {
        let mut rng = derive_generator(SeedSpec::new(9, 0, 0));
        let mut xs = Vec::new();
        for _ in 0..500 {
            let x: f64 = rng.random_range(0.05..0.95);
            xs.push(x);
            xs.push(1.0 - x);
        }
        let f = fit_beta(&xs).unwrap();
        assert!((f.params[0] - f.params[1]).abs() < 1e-6, "{:?}", f.params);
    }

    #[test]
    fn gaussian_moments() {
        let xs: Vec<f64> = (0..11).map(|k| k as f64).collect();
        let f = fit_gaussian(&xs).unwrap();
        assert!((f.params[0] - 5.0).abs() < 1e-15);
        assert!((f.variance().unwrap() - 11.0).abs() < 1e-12);
        assert!(fit_gaussian(&[0.3; 12]).is_err());
        assert_eq!(f.family.as_str(), "gaussian");
    }
}
