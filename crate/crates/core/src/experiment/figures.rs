//! Figure reproduction: each tag binds an ensemble, an observable and, where
//! one exists, a closed-form overlay.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::output::{emit_csv, emit_manifest, emit_svg, Artifact, Field, PlotSpec, RunManifest, Series};
use super::{ensure_dir, gather, simulate, Observable, RunConfig, DEFAULT_EPS_REAL};
use crate::analytic::DensityFn;
use crate::error::{Error, Result};
use crate::spectral::{real_fraction, rescale_spectrum, Spectrum};
use crate::stats::{
    fit_gamma, histogram, ks_statistic, linear_fit, mean, mean_log_modulus_curve, median,
    split_degenerate, Binning, FitResult, Histogram,
};

const DEFAULT_REPLICAS: usize = 100_000;
const ENTRY_BINS: usize = 50;
/// Fits of the decay curve start here, past the initial transient.
const CURVE_FIT_FROM: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Exponent {
    Theta,
    Vartheta,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    /// Histogram of `U_{1,1}`.
    Entry { n: usize, a: f64, t: usize },
    Exponent { n: usize, a: f64, t: usize, which: Exponent },
    /// Histogram of `-(1/t) ln d_{1,2}`.
    Distance { n: usize, a: f64, t: usize },
    Curve { ns: Vec<usize>, a: f64, ts: Vec<usize> },
    /// Rescaled eigenvalues in the complex plane.
    Scatter { n: usize, a: f64, t: usize },
    RealFraction { ns: Vec<usize>, a: f64, ts: Vec<usize> },
}

fn default_kind(tag: &str) -> Option<Kind> {
    use self::Exponent::{Theta, Vartheta};
    use Kind::*;
    let k = match tag {
        "fig1a" => Entry { n: 2, a: 1.0, t: 2 },
        "fig1b" => Entry { n: 2, a: 1.0, t: 10 },
        "fig1c" => Entry { n: 2, a: 2.0, t: 5 },
        "fig1d" => Entry { n: 2, a: 3.0, t: 5 },
        "fig2a" => Curve {
            ns: vec![2, 8, 32],
            a: 1.0,
            ts: (1..=50).collect(),
        },
        "fig2b" => Exponent { n: 2, a: 1.0, t: 1, which: Theta },
        "fig2c" => Exponent { n: 2, a: 1.0, t: 5, which: Theta },
        "fig2d" => Exponent { n: 2, a: 1.0, t: 1, which: Vartheta },
        "fig3a" => Entry { n: 3, a: 1.0, t: 50 },
        "fig3b" => Entry { n: 5, a: 1.0, t: 50 },
        "fig3c" => Entry { n: 10, a: 1.0, t: 50 },
        "fig3d" => Entry { n: 5, a: 1.0, t: 10 },
        "fig3e" => Entry { n: 5, a: 2.0, t: 50 },
        "fig3f" => Entry { n: 5, a: 3.0, t: 50 },
        "fig4a" => Distance { n: 3, a: 1.0, t: 5 },
        "fig4b" => Distance { n: 3, a: 1.0, t: 10 },
        "fig4c" => Distance { n: 3, a: 1.0, t: 20 },
        "fig5a" => Exponent { n: 5, a: 1.0, t: 1, which: Theta },
        "fig5b" => Exponent { n: 5, a: 1.0, t: 5, which: Theta },
        "fig5c" => Exponent { n: 5, a: 1.0, t: 1, which: Vartheta },
        "fig5d" => Exponent { n: 5, a: 1.0, t: 5, which: Vartheta },
        "fig6a" => Scatter { n: 5, a: 1.0, t: 1 },
        "fig6b" => Scatter { n: 5, a: 1.0, t: 5 },
        "fig6c" => Scatter { n: 5, a: 1.0, t: 10 },
        "fig6d" => RealFraction {
            ns: vec![3, 5, 10],
            a: 1.0,
            ts: vec![1, 2, 5, 10, 20],
        },
        _ => return None,
    };
    Some(k)
}

/// All known figure tags.
pub fn figure_tags() -> Vec<&'static str> {
    vec![
        "fig1a", "fig1b", "fig1c", "fig1d", "fig2a", "fig2b", "fig2c", "fig2d", "fig3a", "fig3b",
        "fig3c", "fig3d", "fig3e", "fig3f", "fig4a", "fig4b", "fig4c", "fig5a", "fig5b", "fig5c",
        "fig5d", "fig6a", "fig6b", "fig6c", "fig6d",
    ]
}

/// Caller overrides of a figure's defaults. For single-`t` figures only the
/// first `t` is used; for multi-`n` figures `n` replaces the list.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FigureOverrides {
    pub n: Option<usize>,
    pub a: Option<f64>,
    pub t: Vec<usize>,
    pub replicas: Option<usize>,
    pub eps_real: Option<f64>,
    pub binning: Option<Binning>,
    pub svg: bool,
    pub renormalize_columns: bool,
}

fn apply(kind: Kind, o: &FigureOverrides) -> Kind {
    let t1 = |t: usize| o.t.first().copied().unwrap_or(t);
    let ts = |ts: Vec<usize>| if o.t.is_empty() { ts } else { o.t.clone() };
    let ns = |ns: Vec<usize>| o.n.map_or(ns, |n| vec![n]);
    match kind {
        Kind::Entry { n, a, t } => Kind::Entry {
            n: o.n.unwrap_or(n),
            a: o.a.unwrap_or(a),
            t: t1(t),
        },
        Kind::Exponent { n, a, t, which } => Kind::Exponent {
            n: o.n.unwrap_or(n),
            a: o.a.unwrap_or(a),
            t: t1(t),
            which,
        },
        Kind::Distance { n, a, t } => Kind::Distance {
            n: o.n.unwrap_or(n),
            a: o.a.unwrap_or(a),
            t: t1(t),
        },
        Kind::Curve { ns: v, a, ts: w } => Kind::Curve {
            ns: ns(v),
            a: o.a.unwrap_or(a),
            ts: ts(w),
        },
        Kind::Scatter { n, a, t } => Kind::Scatter {
            n: o.n.unwrap_or(n),
            a: o.a.unwrap_or(a),
            t: t1(t),
        },
        Kind::RealFraction { ns: v, a, ts: w } => Kind::RealFraction {
            ns: ns(v),
            a: o.a.unwrap_or(a),
            ts: ts(w),
        },
    }
}

/// Closed-form law of `U_{1,1}`: exact at `t = 1` and for the two-step
/// uniform case, the fixed-point Beta law otherwise.
fn entry_reference(n: usize, a: f64, t: usize) -> Result<(DensityFn, &'static str)> {
    if t == 1 {
        let q = (n - 1) as f64 * a;
        Ok((DensityFn::beta(a, q)?, "dirichlet_marginal"))
    } else if n == 2 && a == 1.0 && t == 2 {
        Ok((DensityFn::two_step(), "two_step"))
    } else {
        Ok((DensityFn::fixed_point(a, n)?, "fixed_point"))
    }
}

struct Ctx<'a> {
    dir: &'a Path,
    seed: u64,
    replicas: usize,
    o: &'a FigureOverrides,
    artifacts: Vec<Artifact>,
    excluded: BTreeMap<String, usize>,
    metrics: BTreeMap<String, f64>,
}

impl Ctx<'_> {
    fn run(&self, n: usize, a: f64, ts: Vec<usize>, obs: Observable) -> Result<RunConfig> {
        let cfg = RunConfig {
            n,
            a,
            t_values: ts,
            replicas: self.replicas,
            master_seed: self.seed,
            observables: [obs].into(),
            binning: self.o.binning.clone().unwrap_or_default(),
            eps_real: self.o.eps_real.unwrap_or(DEFAULT_EPS_REAL),
            output_dir: self.dir.to_path_buf(),
            emit_svg: self.o.svg,
            renormalize_columns: self.o.renormalize_columns,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn csv(&mut self, s: &Series, name: &str) -> Result<()> {
        self.artifacts.push(emit_csv(s, self.dir, name)?);
        Ok(())
    }

    fn svg(&mut self, plot: PlotSpec) -> Result<()> {
        if self.o.svg {
            self.artifacts.push(emit_svg(&plot, self.dir, "figure.svg")?);
        }
        Ok(())
    }

    fn samples(&mut self, values: &[Option<f64>]) -> Result<()> {
        let mut s = Series::new(&["replica", "value"]);
        for (r, v) in values.iter().enumerate() {
            s.push(vec![r.into(), Field::from(*v)]);
        }
        self.csv(&s, "samples.csv")
    }

    /// Histogram CSV with the bin-averaged reference density.
    fn histogram(&mut self, h: &Histogram, cdf: &dyn Fn(f64) -> f64) -> Result<Vec<f64>> {
        let mut s = Series::new(&["bin_left", "bin_right", "density", "analytic_density"]);
        let mut reference = Vec::with_capacity(h.bins());
        for (w, &d) in h.edges.windows(2).zip(&h.densities) {
            let r = (cdf(w[1]) - cdf(w[0])) / (w[1] - w[0]);
            reference.push(r);
            s.push(vec![w[0].into(), w[1].into(), d.into(), r.into()]);
        }
        self.csv(&s, "histogram.csv")?;
        Ok(reference)
    }

    fn fit_metrics(&mut self, prefix: &str, fit: &FitResult) {
        self.metrics.insert(format!("{prefix}.alpha"), fit.params[0]);
        self.metrics.insert(format!("{prefix}.beta"), fit.params[1]);
        self.metrics.insert(format!("{prefix}.ks_d"), fit.ks_statistic);
        self.metrics.insert(format!("{prefix}.ks_p"), fit.ks_p_value);
        self.metrics.insert(format!("{prefix}.fallback"), f64::from(u8::from(fit.fallback)));
    }

    /// Gamma fit, histogram and overlay for a positive per-replica scalar.
    fn gamma_figure(&mut self, name: &str, values: &[Option<f64>], title: String) -> Result<()> {
        self.samples(values)?;
        let (kept, excluded) = split_degenerate(values);
        self.excluded.insert(name.to_string(), excluded);
        let fit = fit_gamma(&kept)?.with_excluded(excluded);
        self.fit_metrics(name, &fit);
        let binning = self.o.binning.clone().unwrap_or_default();
        let h = histogram(&kept, &binning)?;
        let reference = self.histogram(&h, &|x| fit.cdf(x))?;
        self.svg(hist_plot(&h, &reference, title, name))
    }
}

fn hist_plot(h: &Histogram, reference: &[f64], title: String, x_label: &str) -> PlotSpec {
    PlotSpec {
        title,
        x_label: x_label.into(),
        y_label: "density".into(),
        bars: h
            .edges
            .windows(2)
            .zip(&h.densities)
            .map(|(w, &d)| (w[0], w[1], d))
            .collect(),
        lines: vec![h.centers().into_iter().zip(reference.iter().copied()).collect()],
        points: Vec::new(),
    }
}

fn equal_unit_edges(bins: usize) -> Binning {
    Binning::Edges((0..=bins).map(|k| k as f64 / bins as f64).collect())
}

fn kind_json(kind: &Kind) -> serde_json::Value {
    match kind {
        Kind::Entry { n, a, t } => json!({"observable": "entry_u11", "n": n, "a": a, "t": t}),
        Kind::Exponent { n, a, t, which } => json!({
            "observable": match which { Exponent::Theta => "theta", Exponent::Vartheta => "vartheta" },
            "n": n, "a": a, "t": t
        }),
        Kind::Distance { n, a, t } => json!({"observable": "distance_rate", "n": n, "a": a, "t": t}),
        Kind::Curve { ns, a, ts } => json!({"observable": "curve", "n": ns, "a": a, "t": ts}),
        Kind::Scatter { n, a, t } => json!({"observable": "rescaled_spectrum", "n": n, "a": a, "t": t}),
        Kind::RealFraction { ns, a, ts } => json!({"observable": "real_fraction", "n": ns, "a": a, "t": ts}),
    }
}

/// Reproduces figure `tag` into `dir` and writes its manifest.
pub fn reproduce_figure(
    tag: &str,
    master_seed: u64,
    dir: &Path,
    overrides: &FigureOverrides,
) -> Result<RunManifest> {
    let start = Instant::now();
    let kind = default_kind(tag).ok_or_else(|| {
        Error::arg(format!("unknown figure tag {tag:?}; known tags: {}", figure_tags().join(", ")))
    })?;
    let kind = apply(kind, overrides);
    ensure_dir(dir)?;
    let mut ctx = Ctx {
        dir,
        seed: master_seed,
        replicas: overrides.replicas.unwrap_or(DEFAULT_REPLICAS),
        o: overrides,
        artifacts: Vec::new(),
        excluded: BTreeMap::new(),
        metrics: BTreeMap::new(),
    };

    match &kind {
        &Kind::Entry { n, a, t } => {
            let cfg = ctx.run(n, a, vec![t], Observable::Columns)?;
            let recs = simulate(&cfg)?;
            let values = gather(&recs, 0, |s| s.entries.as_ref().map(|e| e[0]));
            ctx.samples(&values)?;
            let xs: Vec<f64> = values.into_iter().flatten().collect();
            let (reference, label) = entry_reference(n, a, t)?;
            let ks = ks_statistic(&xs, |x| reference.cdf(x))?;
            ctx.metrics.insert("ks_d".into(), ks.d);
            ctx.metrics.insert("ks_p".into(), ks.p_value);
            for (k, p) in reference.params().iter().enumerate() {
                ctx.metrics.insert(format!("reference.param{k}"), *p);
            }
            let binning = overrides.binning.clone().unwrap_or(equal_unit_edges(ENTRY_BINS));
            let h = histogram(&xs, &binning)?;
            let dens = ctx.histogram(&h, &|x| reference.cdf(x))?;
            ctx.svg(hist_plot(&h, &dens, format!("{tag}: U11, n={n} a={a} t={t} ({label})"), "U11"))?;
        }
        &Kind::Exponent { n, a, t, which } => {
            let cfg = ctx.run(n, a, vec![t], Observable::Exponents)?;
            let recs = simulate(&cfg)?;
            let (name, values) = match which {
                Exponent::Theta => ("theta", gather(&recs, 0, |s| s.theta)),
                Exponent::Vartheta => ("vartheta", gather(&recs, 0, |s| s.vartheta)),
            };
            ctx.gamma_figure(name, &values, format!("{tag}: {name}, n={n} a={a} t={t}"))?;
        }
        &Kind::Distance { n, a, t } => {
            let cfg = ctx.run(n, a, vec![t], Observable::Distance)?;
            let recs = simulate(&cfg)?;
            let d: Vec<f64> = gather(&recs, 0, |s| s.distance).into_iter().flatten().collect();
            ctx.metrics.insert("median_d12".into(), median(&d));
            let rates: Vec<Option<f64>> = d
                .iter()
                .map(|&x| (x > 0.0).then(|| -x.ln() / t as f64))
                .collect();
            ctx.gamma_figure("rate", &rates, format!("{tag}: -ln(d12)/t, n={n} a={a} t={t}"))?;
        }
        Kind::Curve { ns, a, ts } => {
            let mut lines = Vec::new();
            for &n in ns {
                let cfg = ctx.run(n, *a, ts.clone(), Observable::Curve)?;
                let recs = simulate(&cfg)?;
                let per_t: BTreeMap<usize, Vec<f64>> = ts
                    .iter()
                    .enumerate()
                    .map(|(k, &t)| (t, gather(&recs, k, |s| s.lambda1).into_iter().flatten().collect()))
                    .collect();
                let curve = mean_log_modulus_curve(&per_t);
                ctx.excluded.insert(format!("curve_n{n}.t_slices"), ts.len() - curve.len());
                let mut s = Series::new(&["t", "neg_log_mean_lambda1"]);
                for &(t, v) in &curve {
                    s.push(vec![t.into(), v.into()]);
                }
                ctx.csv(&s, &format!("curve_n{n}.csv"))?;
                let tail: Vec<(f64, f64)> = curve
                    .iter()
                    .filter(|(t, _)| *t >= CURVE_FIT_FROM)
                    .map(|&(t, v)| (t as f64, v))
                    .collect();
                if tail.len() >= 2 {
                    let (x, y): (Vec<f64>, Vec<f64>) = tail.into_iter().unzip();
                    let fit = linear_fit(&x, &y)?;
                    ctx.metrics.insert(format!("curve_n{n}.slope"), fit.slope);
                    ctx.metrics.insert(format!("curve_n{n}.r_squared"), fit.r_squared);
                }
                lines.push(curve.iter().map(|&(t, v)| (t as f64, v)).collect());
            }
            ctx.svg(PlotSpec {
                title: format!("{tag}: -ln<|lambda1|> vs t, n={ns:?}"),
                x_label: "t".into(),
                y_label: "-ln<|lambda1|>".into(),
                lines,
                ..Default::default()
            })?;
        }
        &Kind::Scatter { n, a, t } => {
            let cfg = ctx.run(n, a, vec![t], Observable::Spectrum)?;
            let eps = cfg.eps_real;
            let recs = simulate(&cfg)?;
            let mut s = Series::new(&["replica", "k", "re", "im"]);
            let mut points = Vec::new();
            let mut fractions = Vec::with_capacity(recs.len());
            for r in &recs {
                let spec = Spectrum::from_unordered(r.slices[0].spectrum.clone().expect("requested"));
                let resc = rescale_spectrum(&spec, t);
                fractions.push(real_fraction(&resc, eps));
                for (k, z) in resc.eigenvalues().iter().enumerate() {
                    s.push(vec![r.index.into(), k.into(), z.re.into(), z.im.into()]);
                    if k > 0 {
                        points.push((z.re, z.im));
                    }
                }
            }
            ctx.metrics.insert("mean_real_fraction".into(), mean(&fractions));
            ctx.csv(&s, "scatter.csv")?;
            ctx.svg(PlotSpec {
                title: format!("{tag}: rescaled spectrum, n={n} a={a} t={t}"),
                x_label: "Re".into(),
                y_label: "Im".into(),
                points,
                ..Default::default()
            })?;
        }
        Kind::RealFraction { ns, a, ts } => {
            let mut s = Series::new(&["n", "t", "mean_real_fraction"]);
            let mut lines = Vec::new();
            for &n in ns {
                let cfg = ctx.run(n, *a, ts.clone(), Observable::Spectrum)?;
                let eps = cfg.eps_real;
                let recs = simulate(&cfg)?;
                let mut line = Vec::new();
                for (k, &t) in ts.iter().enumerate() {
                    let fr: Vec<f64> = recs
                        .iter()
                        .map(|r| {
                            let spec = Spectrum::from_unordered(r.slices[k].spectrum.clone().expect("requested"));
                            real_fraction(&rescale_spectrum(&spec, t), eps)
                        })
                        .collect();
                    let m = mean(&fr);
                    s.push(vec![n.into(), t.into(), m.into()]);
                    ctx.metrics.insert(format!("n{n}.t{t}.mean_real_fraction"), m);
                    line.push((t as f64, m));
                }
                lines.push(line);
            }
            ctx.csv(&s, "real_fraction.csv")?;
            ctx.svg(PlotSpec {
                title: format!("{tag}: real fraction vs t, n={ns:?}"),
                x_label: "t".into(),
                y_label: "fraction with |Im| < eps".into(),
                lines,
                ..Default::default()
            })?;
        }
    }

    let config = json!({
        "tag": tag,
        "master_seed": master_seed,
        "replicas": ctx.replicas,
        "eps_real": overrides.eps_real.unwrap_or(DEFAULT_EPS_REAL),
        "binning": overrides.binning,
        "renormalize_columns": overrides.renormalize_columns,
        "emit_svg": overrides.svg,
        "figure": kind_json(&kind),
    });
    let manifest = RunManifest {
        version: crate::VERSION.to_string(),
        command: format!("figure {tag}"),
        config,
        artifacts: ctx.artifacts,
        excluded: ctx.excluded,
        metrics: ctx.metrics,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    emit_manifest(&manifest, dir)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_tag_has_a_default() {
        for tag in figure_tags() {
            assert!(default_kind(tag).is_some(), "{tag}");
        }
        assert!(default_kind("fig7a").is_none());
    }

    #[test]
    fn unknown_tag_lists_known_tags() {
        let dir = tempfile::tempdir().unwrap();
        let err = reproduce_figure("fig9z", 1, dir.path(), &FigureOverrides::default()).unwrap_err();
        assert!(err.to_string().contains("fig1a"));
    }

    #[test]
    fn overrides_replace_defaults() {
        let o = FigureOverrides {
            n: Some(4),
            t: vec![7, 9],
            ..Default::default()
        };
        assert_eq!(
            apply(default_kind("fig1a").unwrap(), &o),
            Kind::Entry { n: 4, a: 1.0, t: 7 }
        );
        match apply(default_kind("fig2a").unwrap(), &o) {
            Kind::Curve { ns, ts, .. } => {
                assert_eq!(ns, vec![4]);
                assert_eq!(ts, vec![7, 9]);
            }
            k => panic!("{k:?}"),
        }
    }

    #[test]
    fn small_entry_figure() {
        let dir = tempfile::tempdir().unwrap();
        let o = FigureOverrides {
            replicas: Some(2000),
            svg: true,
            ..Default::default()
        };
        let m = reproduce_figure("fig1a", 4, dir.path(), &o).unwrap();
        let names: Vec<&str> = m.artifacts.iter().map(|a| a.path.as_str()).collect();
        assert_eq!(names, vec!["samples.csv", "histogram.csv", "figure.svg"]);
        assert!(m.metrics["ks_d"] < 0.05);
        let text = std::fs::read_to_string(dir.path().join("histogram.csv")).unwrap();
        assert!(text.starts_with("bin_left,bin_right,density,analytic_density\n"));
        assert_eq!(text.lines().count(), ENTRY_BINS + 1);
    }
}
