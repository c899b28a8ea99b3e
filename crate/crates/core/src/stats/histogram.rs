use serde::{Deserialize, Serialize};

use super::quantile_sorted;
use crate::error::{Error, Result};

/// Upper bound on automatically chosen bin counts; heavy tails can make
/// the interquartile rule ask for millions.
const MAX_AUTO_BINS: usize = 2000;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binning {
    /// Interquartile (Freedman–Diaconis) width, Sturges count when the IQR
    /// vanishes.
    #[default]
    Auto,
    /// Equal-width bins spanning the sample range.
    Count(usize),
    /// Explicit ascending edges; samples outside are dropped.
    Edges(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub densities: Vec<f64>,
    /// Samples that landed inside the edges.
    pub count: usize,
    /// Samples outside explicit edges.
    pub outside: usize,
}

impl Histogram {
    pub fn bins(&self) -> usize {
        self.densities.len()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.edges
            .windows(2)
            .zip(&self.densities)
            .map(|(w, d)| d * (w[1] - w[0]))
            .sum()
    }
}

fn equal_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|k| lo + k as f64 * width).collect();
    edges.push(hi);
    edges
}

fn auto_bins(sorted: &[f64]) -> usize {
    let m = sorted.len() as f64;
    let range = sorted[sorted.len() - 1] - sorted[0];
    let iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    let sturges = m.log2().ceil() as usize + 1;
    if iqr <= 0.0 {
        return sturges.max(1);
    }
    let width = 2.0 * iqr / m.cbrt();
    ((range / width).ceil() as usize).clamp(1, MAX_AUTO_BINS)
}

/// Density-normalized histogram.
pub fn histogram(samples: &[f64], binning: &Binning) -> Result<Histogram> {
    if samples.len() < 2 {
        return Err(Error::arg("histogram needs at least two samples"));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::arg("histogram samples must be finite"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);

    let edges = match binning {
        Binning::Edges(e) => {
            if e.len() < 2 || e.windows(2).any(|w| !(w[0] < w[1])) || e.iter().any(|x| !x.is_finite())
            {
                return Err(Error::arg("edges must be finite and strictly increasing"));
            }
            e.clone()
        }
        _ if hi == lo => {
            return Err(Error::arg("all samples are equal; give explicit edges"));
        }
        Binning::Count(0) => return Err(Error::arg("bin count must be positive")),
        Binning::Count(k) => equal_edges(lo, hi, *k),
        Binning::Auto => equal_edges(lo, hi, auto_bins(&sorted)),
    };

    let bins = edges.len() - 1;
    let mut counts = vec![0usize; bins];
    let mut outside = 0;
    let (first, last) = (edges[0], edges[bins]);
    for &x in &sorted {
        if x < first || x > last {
            outside += 1;
            continue;
        }
        // bins are half-open except the last, which is closed
        let k = edges.partition_point(|&e| e <= x).saturating_sub(1).min(bins - 1);
        counts[k] += 1;
    }
    let count = sorted.len() - outside;
    if count == 0 {
        return Err(Error::arg("no samples fall inside the edges"));
    }
    let densities = counts
        .iter()
        .zip(edges.windows(2))
        .map(|(&c, w)| c as f64 / (count as f64 * (w[1] - w[0])))
        .collect();
    Ok(Histogram {
        edges,
        densities,
        count,
        outside,
    })
}
