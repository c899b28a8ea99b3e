//! Eigenvalues of small dense real matrices.
//!
//! Balancing, Householder reduction to upper Hessenberg form, then the
//! Francis double-shift QR iteration with deflation on small subdiagonals.
//! Complex pairs come out of converged 2x2 blocks and are exact conjugates.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;

/// Row-major working copy; the QR sweeps index rows far more than columns.
struct Work {
    n: usize,
    a: Vec<f64>,
}

impl Work {
    fn from(m: &SquareMatrix) -> Self {
        let n = m.n();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = m.get(i, j);
            }
        }
        Self { n, a }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.a[i * self.n + j]
    }
}

fn balance(w: &mut Work) {
    const RADIX: f64 = 2.0;
    let sqrdx = RADIX * RADIX;
    let n = w.n;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += w.at(j, i).abs();
                    r += w.at(i, j).abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut g = r / RADIX;
            let mut f = 1.0;
            let s = c + r;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    *w.at_mut(i, j) *= g;
                }
                for j in 0..n {
                    *w.at_mut(j, i) *= f;
                }
            }
        }
    }
}

fn hessenberg(w: &mut Work) {
    let n = w.n;
    if n < 3 {
        return;
    }
    let mut v = vec![0.0; n];
    for k in 0..n - 2 {
        let alpha_sq: f64 = (k + 1..n).map(|i| w.at(i, k).powi(2)).sum();
        let scale: f64 = (k + 1..n).map(|i| w.at(i, k).abs()).fold(0.0, f64::max);
        if scale == 0.0 {
            continue;
        }
        let norm = alpha_sq.sqrt();
        let x0 = w.at(k + 1, k);
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        for i in k + 1..n {
            v[i] = w.at(i, k);
        }
        v[k + 1] -= alpha;
        let vnorm_sq: f64 = (k + 1..n).map(|i| v[i] * v[i]).sum();
        if vnorm_sq == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm_sq;
        // A <- (I - beta v v^T) A
        for j in k..n {
            let dot: f64 = (k + 1..n).map(|i| v[i] * w.at(i, j)).sum();
            let f = beta * dot;
            for i in k + 1..n {
                *w.at_mut(i, j) -= f * v[i];
            }
        }
        // A <- A (I - beta v v^T)
        for i in 0..n {
            let dot: f64 = (k + 1..n).map(|j| w.at(i, j) * v[j]).sum();
            let f = beta * dot;
            for j in k + 1..n {
                *w.at_mut(i, j) -= f * v[j];
            }
        }
        *w.at_mut(k + 1, k) = alpha;
        for i in k + 2..n {
            *w.at_mut(i, k) = 0.0;
        }
    }
}

#[inline]
fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix.
fn hqr(w: &mut Work) -> Result<Vec<Complex64>> {
    let n = w.n;
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];
    let max_sweeps = 30 * n;
    let mut sweeps = 0usize;

    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += w.at(i, j).abs();
        }
    }

    let mut nn = n as isize - 1;
    let mut shift = 0.0;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let nu = nn as usize;
            // find a negligible subdiagonal element
            let mut l = nu;
            while l >= 1 {
                let mut s = w.at(l - 1, l - 1).abs() + w.at(l, l).abs();
                if s == 0.0 {
                    s = anorm;
                }
                if w.at(l, l - 1).abs() + s == s {
                    *w.at_mut(l, l - 1) = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = w.at(nu, nu);
            if l == nu {
                wr[nu] = x + shift;
                wi[nu] = 0.0;
                nn -= 1;
            } else {
                let mut y = w.at(nu - 1, nu - 1);
                let mut ww = w.at(nu, nu - 1) * w.at(nu - 1, nu);
                if l == nu - 1 {
                    let p = 0.5 * (y - x);
                    let q = p * p + ww;
                    let z = q.abs().sqrt();
                    x += shift;
                    if q >= 0.0 {
                        let z = p + sign(z, p);
                        wr[nu - 1] = x + z;
                        wr[nu] = if z != 0.0 { x - ww / z } else { x + z };
                        wi[nu - 1] = 0.0;
                        wi[nu] = 0.0;
                    } else {
                        wr[nu - 1] = x + p;
                        wr[nu] = x + p;
                        wi[nu - 1] = -z;
                        wi[nu] = z;
                    }
                    nn -= 2;
                } else {
                    if sweeps >= max_sweeps {
                        let sub = w.at(nu, nu - 1).abs();
                        return Err(Error::numerical("eigenvalues: QR iteration", sub));
                    }
                    if its == 10 || its == 20 {
                        // exceptional shift
                        shift += x;
                        for i in 0..=nu {
                            *w.at_mut(i, i) -= x;
                        }
                        let s = w.at(nu, nu - 1).abs() + w.at(nu - 1, nu - 2).abs();
                        x = 0.75 * s;
                        y = x;
                        ww = -0.4375 * s * s;
                    }
                    its += 1;
                    sweeps += 1;
                    qr_sweep(w, l, nu, x, y, ww);
                }
            }
            if nn < 0 || (l as isize) >= nn - 1 {
                break;
            }
        }
    }
    Ok(wr
        .into_iter()
        .zip(wi)
        .map(|(re, im)| Complex64::new(re, im))
        .collect())
}

fn qr_sweep(w: &mut Work, l: usize, nu: usize, x: f64, y: f64, ww: f64) {
    let (mut p, mut q, mut r);
    let mut z;
    // look for two consecutive small subdiagonal elements
    let mut m = nu - 2;
    loop {
        z = w.at(m, m);
        let rr = x - z;
        let s = y - z;
        p = (rr * s - ww) / w.at(m + 1, m) + w.at(m, m + 1);
        q = w.at(m + 1, m + 1) - z - rr - s;
        r = w.at(m + 2, m + 1);
        let s = p.abs() + q.abs() + r.abs();
        p /= s;
        q /= s;
        r /= s;
        if m == l {
            break;
        }
        let u = w.at(m, m - 1).abs() * (q.abs() + r.abs());
        let v = p.abs() * (w.at(m - 1, m - 1).abs() + z.abs() + w.at(m + 1, m + 1).abs());
        if u + v == v {
            break;
        }
        m -= 1;
    }
    for i in m + 2..=nu {
        *w.at_mut(i, i - 2) = 0.0;
        if i != m + 2 {
            *w.at_mut(i, i - 3) = 0.0;
        }
    }
    let mut xx = 0.0;
    for k in m..nu {
        if k != m {
            p = w.at(k, k - 1);
            q = w.at(k + 1, k - 1);
            r = if k != nu - 1 { w.at(k + 2, k - 1) } else { 0.0 };
            xx = p.abs() + q.abs() + r.abs();
            if xx != 0.0 {
                p /= xx;
                q /= xx;
                r /= xx;
            }
        }
        let s = sign((p * p + q * q + r * r).sqrt(), p);
        if s == 0.0 {
            continue;
        }
        if k == m {
            if l != m {
                *w.at_mut(k, k - 1) = -w.at(k, k - 1);
            }
        } else {
            *w.at_mut(k, k - 1) = -s * xx;
        }
        p += s;
        let hx = p / s;
        let hy = q / s;
        let hz = r / s;
        q /= p;
        r /= p;
        for j in k..=nu {
            let mut pp = w.at(k, j) + q * w.at(k + 1, j);
            if k != nu - 1 {
                pp += r * w.at(k + 2, j);
                *w.at_mut(k + 2, j) -= pp * hz;
            }
            *w.at_mut(k + 1, j) -= pp * hy;
            *w.at_mut(k, j) -= pp * hx;
        }
        let mmin = nu.min(k + 3);
        for i in l..=mmin {
            let mut pp = hx * w.at(i, k) + hy * w.at(i, k + 1);
            if k != nu - 1 {
                pp += hz * w.at(i, k + 2);
                *w.at_mut(i, k + 2) -= pp * r;
            }
            *w.at_mut(i, k + 1) -= pp * q;
            *w.at_mut(i, k) -= pp;
        }
    }
}

fn two_by_two(m: &SquareMatrix) -> Vec<Complex64> {
    let (a, b, c, d) = (m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1));
    let half_tr = 0.5 * (a + d);
    let half_diff = 0.5 * (a - d);
    let disc = half_diff * half_diff + b * c;
    if disc >= 0.0 {
        let root = disc.sqrt();
        // avoid cancellation in the smaller root
        let big = half_tr + sign(root, half_tr);
        let det = a * d - b * c;
        let small = if big != 0.0 { det / big } else { half_tr - root };
        vec![Complex64::new(big, 0.0), Complex64::new(small, 0.0)]
    } else {
        let root = (-disc).sqrt();
        vec![Complex64::new(half_tr, root), Complex64::new(half_tr, -root)]
    }
}

/// All eigenvalues of `m`, unordered.
pub(crate) fn raw_eigenvalues(m: &SquareMatrix) -> Result<Vec<Complex64>> {
    let n = m.n();
    if n == 0 {
        return Err(Error::arg("empty matrix"));
    }
    if !m.is_finite() {
        return Err(Error::arg("matrix has non-finite entries"));
    }
    match n {
        1 => Ok(vec![Complex64::new(m.get(0, 0), 0.0)]),
        2 => Ok(two_by_two(m)),
        _ => {
            let mut w = Work::from(m);
            balance(&mut w);
            hessenberg(&mut w);
            hqr(&mut w)
        }
    }
}
