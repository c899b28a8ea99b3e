//! Histograms, KS goodness-of-fit, maximum-likelihood fits and small
//! descriptive helpers for ensemble observables.

mod fit;
mod histogram;
mod ks;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use fit::{fit_beta, fit_gamma, fit_gaussian, Family, FitResult};
pub use histogram::{histogram, Binning, Histogram};
pub use ks::{kolmogorov_sf, ks_statistic, KsResult};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

pub fn median(xs: &[f64]) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    quantile_sorted(&s, 0.5)
}

/// Pearson correlation of two equal-length series.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

pub fn lag1_autocorrelation(xs: &[f64]) -> f64 {
    if xs.len() < 3 {
        return f64::NAN;
    }
    correlation(&xs[..xs.len() - 1], &xs[1..])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::arg("linear fit needs two equal series of length >= 2"));
    }
    let (mx, my) = (mean(xs), mean(ys));
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::arg("linear fit: abscissae are all equal"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Keeps finite positive values and counts the rest (degenerate or
/// nonpositive samples).
pub fn split_degenerate(samples: &[Option<f64>]) -> (Vec<f64>, usize) {
    let kept: Vec<f64> = samples
        .iter()
        .filter_map(|s| s.filter(|v| v.is_finite() && *v > 0.0))
        .collect();
    let excluded = samples.len() - kept.len();
    (kept, excluded)
}

/// `(t, -ln mean |lambda_1(t)|)` for each `t`, skipping slices with no
/// usable samples.
pub fn mean_log_modulus_curve(per_t: &BTreeMap<usize, Vec<f64>>) -> Vec<(usize, f64)> {
    let mut out = Vec::with_capacity(per_t.len());
    for (&t, xs) in per_t {
        let finite: Vec<f64> = xs.iter().copied().filter(|x| x.is_finite()).collect();
        let m = if finite.is_empty() { 0.0 } else { mean(&finite) };
        if m > 0.0 {
            out.push((t, -m.ln()));
        } else {
            log::warn!("t = {t}: no nondegenerate |lambda_1| samples, skipped");
        }
    }
    out
}
