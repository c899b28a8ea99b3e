//! Singular values by one-sided (Hestenes) Jacobi orthogonalization.
//!
//! Column pairs are rotated until every pair is orthogonal to working
//! precision; the singular values are then the column norms. Rotation
//! angles are computed from normalized columns and norm ratios, never from
//! squared entries, so columns down to ~1e-300 neither underflow nor lose
//! relative accuracy.

use crate::matrix::SquareMatrix;

const ORTHO_TOL: f64 = 1e-15;
const MAX_SWEEPS: usize = 80;

/// Two-norm without overflow or underflow.
fn norm(x: &[f64]) -> f64 {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let s: f64 = x.iter().map(|v| (v / scale).powi(2)).sum();
    scale * s.sqrt()
}

pub(crate) fn jacobi_singular_values(m: &SquareMatrix) -> Vec<f64> {
    let n = m.n();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| m.column(j).to_vec()).collect();
    let mut norms: Vec<f64> = cols.iter().map(|c| norm(c)).collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let (ni, nj) = (norms[i], norms[j]);
                if ni == 0.0 || nj == 0.0 {
                    continue;
                }
                let cos: f64 = cols[i]
                    .iter()
                    .zip(&cols[j])
                    .map(|(a, b)| (a / ni) * (b / nj))
                    .sum();
                if cos.abs() <= ORTHO_TOL {
                    continue;
                }
                rotated = true;
                // zeta = (|cj|^2 - |ci|^2) / (2 ci.cj), written with the ratio rho
                let rho = nj / ni;
                let zeta = (rho - 1.0 / rho) / (2.0 * cos);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(j);
                for (a, b) in left[i].iter_mut().zip(right[0].iter_mut()) {
                    let (x, y) = (*a, *b);
                    *a = c * x - s * y;
                    *b = s * x + c * y;
                }
                norms[i] = norm(&cols[i]);
                norms[j] = norm(&cols[j]);
            }
        }
        if !rotated {
            break;
        }
    }
    norms.sort_by(|a, b| b.total_cmp(a));
    norms
}
