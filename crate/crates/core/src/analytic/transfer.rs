//! One-step transfer operator for the top-left entry of a 2x2 chain.
//!
//! If `w` is the entry at time `t-1` and the new factor has first row
//! `(r, s)`, the entry at time `t` is `w (r - s) + s`. Given `z`, the delta
//! constraint fixes `w = (z - s)/(r - s)` with Jacobian `1/|r - s|`, and
//! `w` lies in `[0, 1]` on two triangles of the `(r, s)` square that meet
//! at `(z, z)`:
//!
//! - region i: `r` in `[0, z]`, `s` in `[z, 1]`;
//! - region ii: `s` in `[0, z]`, `r` in `[z, 1]`.
//!
//! [`transfer_apply`] integrates each triangle in polar coordinates about
//! the shared corner, where `w` depends on the angle alone and the Jacobian
//! cancels the `1/|r - s|` factor. [`verify_fixed_point_appendix`] works in
//! plain Cartesian coordinates with the closed-form integrand for the
//! Beta(2a, 2a) candidate, so the two share nothing but the quadrature rule.

use std::f64::consts::FRAC_PI_2;

use super::density::{ChebyshevTable, DensityFn};
use super::quadrature::{integrate, QuadratureSpec};
use super::special::lgamma;
use crate::error::{Error, Result};

/// Interior residual grid `0.01, 0.02, ..., 0.99`.
pub fn residual_grid() -> Vec<f64> {
    (1..=99).map(|k| k as f64 / 100.0).collect()
}

fn check_a(a: f64) -> Result<()> {
    if a > 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("a must be positive and finite, got {a}")))
    }
}

fn inner_spec(quad: &QuadratureSpec, singular: bool) -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: quad.abs_tol * 0.1,
        rel_tol: quad.rel_tol * 0.1,
        max_subdivisions: quad.max_subdivisions,
        endpoint_substitution: quad.endpoint_substitution || singular,
    }
}

/// Evaluates the density of the entry at the next step, given its density
/// `p` now, for factors whose rows are Dirichlet(a, a).
pub fn transfer_apply(p: &DensityFn, a: f64, z: f64, quad: &QuadratureSpec) -> Result<f64> {
    check_a(a)?;
    quad.validate()?;
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::param(format!("z must lie in [0, 1], got {z}")));
    }
    if z == 0.0 || z == 1.0 {
        return Ok(0.0);
    }
    let ln_norm = 2.0 * (lgamma(2.0 * a) - 2.0 * lgamma(a));
    let inner = inner_spec(quad, a < 1.0);
    let outer = QuadratureSpec {
        endpoint_substitution: quad.endpoint_substitution || p.endpoint_singular() || a < 1.0,
        ..*quad
    };
    // p may be infinite at w = 0 or 1, which rounding reaches near the
    // ends of the angular range; the true integrand has measure zero there
    let p_at = |cs: f64, sn: f64| {
        let w = cs / (cs + sn);
        if w > 0.0 && w < 1.0 {
            p.eval(w)
        } else {
            0.0
        }
    };
    let ray = |cs: f64, sn: f64, c_s: f64, c_r: f64| -> Result<f64> {
        ray_integral(a, ln_norm, cs, sn, c_s, (1.0 - c_s) / cs, c_r, (1.0 - c_r) / sn, &inner)
    };

    // region ii: s = z - rho cos, r = z + rho sin
    let region_ii = |phi: f64| -> Result<f64> {
        let (sn, cs) = phi.sin_cos();
        let k = if a == 1.0 {
            (z / cs).min((1.0 - z) / sn)
        } else {
            ray(cs, sn, 1.0 - z, z)?
        };
        Ok(p_at(cs, sn) * k / (cs + sn))
    };
    // region i: s = z + rho cos, r = z - rho sin
    let region_i = |phi: f64| -> Result<f64> {
        let (sn, cs) = phi.sin_cos();
        let k = if a == 1.0 {
            ((1.0 - z) / cs).min(z / sn)
        } else {
            ray(cs, sn, z, 1.0 - z)?
        };
        Ok(p_at(cs, sn) * k / (cs + sn))
    };

    let kink_ii = ((1.0 - z) / z).atan();
    let kink_i = (z / (1.0 - z)).atan();
    let total = angular(region_ii, kink_ii, &outer)? + angular(region_i, kink_i, &outer)?;
    Ok(total)
}

/// Integral of the two row densities along one ray from the corner.
///
/// Along the ray one row coordinate moves with slope `cs` and the other with
/// `sn`. Each has one side that stays at least `c_s` (resp. `c_r`) away from
/// the boundary and one side that closes linearly, reaching zero at `rho_s`
/// (resp. `rho_r`). The ray ends at the nearer of the two, and the
/// integration variable is the distance back from that end so both closing
/// gaps are formed without cancellation.
#[allow(clippy::too_many_arguments)]
fn ray_integral(
    a: f64,
    ln_norm: f64,
    cs: f64,
    sn: f64,
    c_s: f64,
    rho_s: f64,
    c_r: f64,
    rho_r: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let rho_max = rho_s.min(rho_r);
    let (ds, dr) = (rho_s - rho_max, rho_r - rho_max);
    let f = |tau: f64| -> f64 {
        let rho = rho_max - tau;
        let prod = (c_s + rho * cs) * cs * (tau + ds) * (c_r + rho * sn) * sn * (tau + dr);
        if !(prod > 0.0) {
            return 0.0;
        }
        (ln_norm + (a - 1.0) * prod.ln()).exp()
    };
    // the second gap closes just past the end of the ray near the kink, so
    // panels grow geometrically from the end
    let mut near = 0.0;
    let mut far = ds.max(dr).max(rho_max * 1e-6);
    let mut total = 0.0;
    while near < rho_max {
        if 4.0 * far >= rho_max {
            far = rho_max;
        }
        total += integrate(f, near, far, spec)?.value;
        near = far;
        far *= 4.0;
    }
    Ok(total)
}

/// Integrates `f` over `[0, pi/2]`, split where the radial limit switches
/// branch; errors raised inside `f` are propagated.
fn angular<F: Fn(f64) -> Result<f64>>(f: F, kink: f64, spec: &QuadratureSpec) -> Result<f64> {
    let mut failure = None;
    let mut piece = |lo: f64, hi: f64| -> Result<f64> {
        let r = integrate(
            |phi| match f(phi) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            lo,
            hi,
            spec,
        )?;
        Ok(r.value)
    };
    let v = piece(0.0, kink)? + piece(kink, FRAC_PI_2)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// Region integrals of the fixed-point identity at one `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionCheck {
    pub z: f64,
    pub region_i: f64,
    pub region_ii: f64,
    /// Beta(2a, 2a) density at `z`.
    pub expected: f64,
    /// `|region_i + region_ii - expected|`.
    pub residual: f64,
}

impl RegionCheck {
    /// Largest deviation of either region from half the expected value.
    pub fn half_error(&self) -> f64 {
        let half = 0.5 * self.expected;
        (self.region_i - half).abs().max((self.region_ii - half).abs())
    }
}

/// Integrates the transfer of Beta(2a, 2a) over each region separately in
/// Cartesian coordinates. Each region should carry half of the density.
///
/// With the candidate substituted, the integrand collapses to
/// `Γ(4a)/Γ(a)^4 ((z-s)(r-z))^(2a-1) (r(1-r) s(1-s))^(a-1) / |r-s|^(4a-1)`,
/// evaluated here in log space.
pub fn verify_fixed_point_appendix(a: f64, z: f64, quad: &QuadratureSpec) -> Result<RegionCheck> {
    check_a(a)?;
    quad.validate()?;
    if !(z > 0.0 && z < 1.0) {
        return Err(Error::param(format!("z must lie in (0, 1), got {z}")));
    }
    let ln_c = lgamma(4.0 * a) - 4.0 * lgamma(a);
    // offsets from the corner: r = z + sr * x, s = z + ss * y with x, y >= 0
    // and opposite signs, so (z - s)(r - z) = x y and |r - s| = x + y
    let integrand = move |sr: f64, x: f64, y: f64| -> f64 {
        let (r, s) = (z + sr * x, z - sr * y);
        let rows = r * (1.0 - r) * s * (1.0 - s);
        let corner = x * y;
        if corner <= 0.0 || rows <= 0.0 {
            return 0.0;
        }
        (ln_c + (2.0 * a - 1.0) * corner.ln() + (a - 1.0) * rows.ln()
            - (4.0 * a - 1.0) * (x + y).ln())
        .exp()
    };

    // the inner integrand peaks within x of the corner, so its panels grow
    // geometrically from there
    let inner_line = |sr: f64, x: f64, y_max: f64, spec: &QuadratureSpec| -> Result<f64> {
        let mut near = 0.0;
        let mut far = x.max(f64::MIN_POSITIVE);
        let mut total = 0.0;
        while near < y_max {
            if 4.0 * far >= y_max {
                far = y_max;
            }
            total += integrate(|y| integrand(sr, x, y), near, far, spec)?.value;
            near = far;
            far *= 4.0;
        }
        Ok(total)
    };

    let region = |sr: f64| -> Result<f64> {
        let (x_max, y_max) = if sr < 0.0 { (z, 1.0 - z) } else { (1.0 - z, z) };
        let first = |spec: &QuadratureSpec| -> Result<f64> {
            let inner = QuadratureSpec {
                abs_tol: spec.abs_tol * 0.1,
                rel_tol: spec.rel_tol * 0.1,
                ..*spec
            };
            let mut failure = None;
            let v = integrate(
                |x| match inner_line(sr, x, y_max, &inner) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                },
                0.0,
                x_max,
                spec,
            )?
            .value;
            match failure {
                Some(e) => Err(e),
                None => Ok(v),
            }
        };
        // rows vanish at the far edges, so power-law endpoint behaviour is
        // expected when a < 1; clustering is the default route
        let clustered = quad.with_substitution(true);
        match first(&clustered) {
            Ok(v) => Ok(v),
            Err(e) if !quad.endpoint_substitution => {
                log::debug!("region retry without substitution after: {e}");
                first(quad)
            }
            Err(e) => Err(e),
        }
    };

    // region i: r below z, s above; region ii the mirror
    let region_i = region(-1.0)?;
    let region_ii = region(1.0)?;
    let expected = DensityFn::beta(2.0 * a, 2.0 * a)?.eval(z);
    Ok(RegionCheck {
        z,
        region_i,
        region_ii,
        expected,
        residual: (region_i + region_ii - expected).abs(),
    })
}

/// Largest `|T p - p|` over [`residual_grid`] for `p = Beta(2a, 2a)`.
pub fn fixed_point_residual(a: f64, quad: &QuadratureSpec) -> Result<f64> {
    let p = DensityFn::beta(2.0 * a, 2.0 * a)?;
    let mut worst = 0.0f64;
    for z in residual_grid() {
        worst = worst.max((transfer_apply(&p, a, z, quad)? - p.eval(z)).abs());
    }
    Ok(worst)
}

/// Applies the transfer operator `steps` times starting from `initial`.
///
/// Each iterate is tabulated at `nodes` Chebyshev points and interpolated
/// for the next step. Element `k` of the result is the `(k+1)`-th iterate.
pub fn iterate_transfer(
    initial: &DensityFn,
    a: f64,
    steps: usize,
    nodes: usize,
    quad: &QuadratureSpec,
) -> Result<Vec<DensityFn>> {
    let grid = ChebyshevTable::nodes(nodes);
    let mut out: Vec<DensityFn> = Vec::with_capacity(steps);
    for _ in 0..steps {
        let current = out.last().unwrap_or(initial);
        let values = grid
            .iter()
            .map(|&z| transfer_apply(current, a, z, quad))
            .collect::<Result<Vec<_>>>()?;
        out.push(DensityFn::tabulated(ChebyshevTable::new(values)?));
    }
    Ok(out)
}
