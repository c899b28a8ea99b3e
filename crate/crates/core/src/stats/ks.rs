use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Allowed decrease between successive CDF values before the CDF is
/// declared non-monotone; absorbs rounding in numerical CDFs.
const MONOTONE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub d: f64,
    pub p_value: f64,
    pub samples: usize,
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-theta form, converges fast for small lambda
        let mut cdf = 0.0;
        for k in 1..=40 {
            let j = (2 * k - 1) as f64;
            cdf += (-(j * j) * PI * PI / (8.0 * lambda * lambda)).exp();
        }
        cdf *= (2.0 * PI).sqrt() / lambda;
        return (1.0 - cdf).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-300 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample two-sided Kolmogorov–Smirnov statistic against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(Error::arg("KS statistic needs at least one sample"));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::arg("KS samples contain NaN"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    let mut d = 0.0f64;
    let mut prev = f64::NEG_INFINITY;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::arg(format!("CDF value {f} at {x} is outside [0, 1]")));
        }
        if f < prev - MONOTONE_SLACK {
            return Err(Error::arg(format!("CDF decreases at {x}")));
        }
        prev = prev.max(f);
        let i = i as f64;
        d = d.max((i + 1.0) / m - f).max(f - i / m);
    }
    let root = m.sqrt();
    let p_value = kolmogorov_sf((root + 0.12 + 0.11 / root) * d);
    Ok(KsResult {
        d,
        p_value,
        samples: sorted.len(),
    })
}
