//! Ensemble orchestration and result files.
//!
//! Replica `r` draws every factor from the generator seeded by
//! `(master_seed, r, 0)` and records its observables at each requested
//! `t` along a single chain. Replicas run in parallel and are gathered in
//! index order, so emitted bytes do not depend on the worker count.

mod figures;
mod output;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{verify_fixed_point_appendix, RegionCheck, QuadratureSpec};
use crate::error::{Error, Result};
use crate::matrix::{perron_vector, ChainOptions, ChainRecord};
use crate::sampler::{derive_generator, DirichletParams, SeedSpec};
use crate::spectral::{
    chain_singular_values, chain_spectrum, lyapunov_exponent, real_fraction, rescale_spectrum,
    stability_exponent,
};
use crate::stats::{mean, mean_log_modulus_curve, Binning};

pub use figures::{figure_tags, reproduce_figure, FigureOverrides};
pub use output::{
    emit_csv, emit_manifest, emit_svg, read_manifest, sha256_hex, Artifact, Field, PlotSpec,
    RunManifest, Series, MANIFEST_NAME,
};

/// Default `|Im lambda|` band for counting real eigenvalues.
pub const DEFAULT_EPS_REAL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Observable {
    /// All entries of `U(t)`.
    Columns,
    /// `d_{1,2} = |U_{1,1} - U_{1,2}|`.
    Distance,
    /// `|lambda_1|`, theta, `z_1` and vartheta.
    Exponents,
    /// Full spectrum, raw and rescaled.
    Spectrum,
    /// Stationary vector of `U(t)`.
    Perron,
    /// `-ln <|lambda_1(t)|>` across `t`.
    Curve,
}

impl Observable {
    pub const ALL: [Observable; 6] = [
        Observable::Columns,
        Observable::Distance,
        Observable::Exponents,
        Observable::Spectrum,
        Observable::Perron,
        Observable::Curve,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Observable::Columns => "columns",
            Observable::Distance => "distance",
            Observable::Exponents => "exponents",
            Observable::Spectrum => "spectrum",
            Observable::Perron => "perron",
            Observable::Curve => "curve",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|o| o.as_str() == s)
            .ok_or_else(|| Error::arg(format!("unknown observable {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n: usize,
    pub a: f64,
    pub t_values: Vec<usize>,
    pub replicas: usize,
    pub master_seed: u64,
    pub observables: BTreeSet<Observable>,
    pub binning: Binning,
    pub eps_real: f64,
    pub output_dir: PathBuf,
    pub emit_svg: bool,
    pub renormalize_columns: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 2,
            a: 1.0,
            t_values: vec![1],
            replicas: 1000,
            master_seed: 0,
            observables: [Observable::Columns].into(),
            binning: Binning::Auto,
            eps_real: DEFAULT_EPS_REAL,
            output_dir: PathBuf::from("out"),
            emit_svg: false,
            renormalize_columns: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        DirichletParams::new(self.a, self.n)?;
        if self.replicas == 0 {
            return Err(Error::arg("replicas must be at least 1"));
        }
        if self.t_values.is_empty() {
            return Err(Error::arg("t_values must not be empty"));
        }
        if self.t_values[0] == 0 || self.t_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::arg("t_values must be positive and strictly ascending"));
        }
        if !(self.eps_real > 0.0) {
            return Err(Error::arg("eps_real must be positive"));
        }
        if self.observables.is_empty() {
            return Err(Error::arg("no observables requested"));
        }
        Ok(())
    }

    fn wants(&self, o: Observable) -> bool {
        self.observables.contains(&o)
    }

    fn params(&self) -> DirichletParams {
        DirichletParams::new(self.a, self.n).expect("validated")
    }
}

/// Observables of one replica at one `t`; fields are filled only when
/// requested.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Slice {
    pub t: usize,
    /// `U(t)` in column-major order.
    pub entries: Option<Vec<f64>>,
    pub distance: Option<f64>,
    pub lambda1: Option<f64>,
    pub theta: Option<f64>,
    pub sigma2: Option<f64>,
    pub vartheta: Option<f64>,
    pub spectrum: Option<Vec<Complex64>>,
    pub perron: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaRecord {
    pub index: u64,
    pub slices: Vec<Slice>,
}

fn observe(cfg: &RunConfig, chain: &ChainRecord) -> Result<Slice> {
    let t = chain.t();
    let mut s = Slice {
        t,
        ..Default::default()
    };
    if cfg.wants(Observable::Columns) {
        s.entries = Some(chain.product().as_matrix().as_slice().to_vec());
    }
    if cfg.wants(Observable::Distance) {
        s.distance = Some(chain.column_distance(0, 1)?);
    }
    let need_spectrum = cfg.wants(Observable::Exponents)
        || cfg.wants(Observable::Spectrum)
        || cfg.wants(Observable::Curve);
    if need_spectrum {
        let spec = chain_spectrum(chain)?;
        s.lambda1 = spec.subleading().map(|z| z.norm());
        if cfg.wants(Observable::Exponents) {
            s.theta = stability_exponent(&spec, t);
            let sv = chain_singular_values(chain);
            s.sigma2 = sv.second();
            s.vartheta = lyapunov_exponent(&sv, t);
        }
        if cfg.wants(Observable::Spectrum) {
            s.spectrum = Some(spec.eigenvalues().to_vec());
        }
    }
    if cfg.wants(Observable::Perron) {
        s.perron = Some(perron_vector(chain.product())?.into_vec());
    }
    Ok(s)
}

fn simulate_replica(cfg: &RunConfig, index: u64) -> Result<ReplicaRecord> {
    let params = cfg.params();
    let mut rng = derive_generator(SeedSpec::new(cfg.master_seed, index, 0));
    let mut chain = ChainRecord::new(
        cfg.n,
        ChainOptions {
            keep_snapshots: false,
            renormalize_columns: cfg.renormalize_columns,
        },
    );
    let mut slices = Vec::with_capacity(cfg.t_values.len());
    for &t in &cfg.t_values {
        while chain.t() < t {
            chain.step(params, &mut rng)?;
        }
        slices.push(observe(cfg, &chain)?);
    }
    Ok(ReplicaRecord { index, slices })
}

/// Simulates every replica and returns the records in index order.
pub fn simulate(cfg: &RunConfig) -> Result<Vec<ReplicaRecord>> {
    cfg.validate()?;
    (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|r| simulate_replica(cfg, r))
        .collect()
}

/// Samples of one scalar per replica at slice `k`.
pub fn gather(records: &[ReplicaRecord], k: usize, f: impl Fn(&Slice) -> Option<f64>) -> Vec<Option<f64>> {
    records.iter().map(|r| f(&r.slices[k])).collect()
}

fn count_missing(xs: &[Option<f64>]) -> usize {
    xs.iter().filter(|x| x.is_none()).count()
}

/// Runs the ensemble described by `cfg` and writes one CSV per observable
/// per `t` plus `manifest.json` into the output directory.
pub fn run_ensemble(cfg: &RunConfig) -> Result<RunManifest> {
    let start = Instant::now();
    let records = simulate(cfg)?;
    let dir = cfg.output_dir.as_path();
    let mut artifacts = Vec::new();
    let mut excluded = BTreeMap::new();
    let mut metrics = BTreeMap::new();

    for (k, &t) in cfg.t_values.iter().enumerate() {
        if cfg.wants(Observable::Columns) {
            let mut s = Series::new(&["replica", "row", "col", "value"]);
            for r in &records {
                let e = r.slices[k].entries.as_ref().expect("requested");
                for (idx, &v) in e.iter().enumerate() {
                    s.push(vec![r.index.into(), (idx % cfg.n).into(), (idx / cfg.n).into(), v.into()]);
                }
            }
            artifacts.push(emit_csv(&s, dir, &format!("columns_t{t}.csv"))?);
        }
        if cfg.wants(Observable::Distance) {
            let mut s = Series::new(&["replica", "d12", "rate"]);
            let mut degenerate = 0;
            for r in &records {
                let d = r.slices[k].distance.expect("requested");
                let rate = (d > 0.0).then(|| -d.ln() / t as f64);
                degenerate += usize::from(rate.is_none());
                s.push(vec![r.index.into(), d.into(), rate.into()]);
            }
            excluded.insert(format!("distance_t{t}.rate"), degenerate);
            artifacts.push(emit_csv(&s, dir, &format!("distance_t{t}.csv"))?);
        }
        if cfg.wants(Observable::Exponents) {
            let mut s = Series::new(&["replica", "lambda1_modulus", "theta", "sigma2", "vartheta"]);
            for r in &records {
                let sl = &r.slices[k];
                s.push(vec![
                    r.index.into(),
                    sl.lambda1.into(),
                    sl.theta.into(),
                    sl.sigma2.into(),
                    sl.vartheta.into(),
                ]);
            }
            let theta = gather(&records, k, |s| s.theta);
            let vartheta = gather(&records, k, |s| s.vartheta);
            excluded.insert(format!("exponents_t{t}.theta"), count_missing(&theta));
            excluded.insert(format!("exponents_t{t}.vartheta"), count_missing(&vartheta));
            let nonpositive = vartheta.iter().flatten().filter(|v| **v <= 0.0).count();
            metrics.insert(format!("exponents_t{t}.vartheta_nonpositive"), nonpositive as f64);
            artifacts.push(emit_csv(&s, dir, &format!("exponents_t{t}.csv"))?);
        }
        if cfg.wants(Observable::Spectrum) {
            let mut s = Series::new(&["replica", "k", "re", "im", "rescaled_re", "rescaled_im"]);
            let mut fractions = Vec::with_capacity(records.len());
            for r in &records {
                let eig = r.slices[k].spectrum.as_ref().expect("requested");
                let spec = crate::spectral::Spectrum::from_unordered(eig.clone());
                let resc = rescale_spectrum(&spec, t);
                fractions.push(real_fraction(&resc, cfg.eps_real));
                for (j, (z, w)) in eig.iter().zip(resc.eigenvalues()).enumerate() {
                    s.push(vec![
                        r.index.into(),
                        j.into(),
                        z.re.into(),
                        z.im.into(),
                        w.re.into(),
                        w.im.into(),
                    ]);
                }
            }
            metrics.insert(format!("spectrum_t{t}.mean_real_fraction"), mean(&fractions));
            artifacts.push(emit_csv(&s, dir, &format!("spectrum_t{t}.csv"))?);
        }
        if cfg.wants(Observable::Perron) {
            let mut s = Series::new(&["replica", "k", "value"]);
            for r in &records {
                for (j, &v) in r.slices[k].perron.as_ref().expect("requested").iter().enumerate() {
                    s.push(vec![r.index.into(), j.into(), v.into()]);
                }
            }
            artifacts.push(emit_csv(&s, dir, &format!("perron_t{t}.csv"))?);
        }
    }
    if cfg.wants(Observable::Curve) {
        let per_t: BTreeMap<usize, Vec<f64>> = cfg
            .t_values
            .iter()
            .enumerate()
            .map(|(k, &t)| (t, gather(&records, k, |s| s.lambda1).into_iter().flatten().collect()))
            .collect();
        let curve = mean_log_modulus_curve(&per_t);
        let mut s = Series::new(&["t", "neg_log_mean_lambda1"]);
        for (t, v) in &curve {
            s.push(vec![(*t).into(), (*v).into()]);
        }
        excluded.insert("curve.t_slices".into(), cfg.t_values.len() - curve.len());
        artifacts.push(emit_csv(&s, dir, "curve.csv")?);
    }

    let manifest = RunManifest {
        version: crate::VERSION.to_string(),
        command: "ensemble".into(),
        config: serde_json::to_value(cfg).expect("config serializes"),
        artifacts,
        excluded,
        metrics,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    emit_manifest(&manifest, dir)?;
    Ok(manifest)
}

/// Outcome of the region-split fixed-point check on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointReport {
    pub a: f64,
    pub tolerance: f64,
    pub rows: Vec<RegionCheck>,
    pub max_residual: f64,
    /// Largest deviation of a single region from half the density.
    pub max_half_error: f64,
    pub passed: bool,
}

/// Runs the Cartesian region check at `z = k/(grid+1)`, `k = 1..=grid`.
/// Passes iff the largest residual and the largest single-region error
/// are both below `tolerance`.
pub fn check_fixed_point(a: f64, grid: usize, tolerance: f64, quad: &QuadratureSpec) -> Result<FixedPointReport> {
    if grid == 0 {
        return Err(Error::arg("grid must have at least one point"));
    }
    if !(tolerance > 0.0) {
        return Err(Error::arg("tolerance must be positive"));
    }
    let zs: Vec<f64> = (1..=grid).map(|k| k as f64 / (grid + 1) as f64).collect();
    let rows = zs
        .par_iter()
        .map(|&z| verify_fixed_point_appendix(a, z, quad))
        .collect::<Result<Vec<_>>>()?;
    let max_residual = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    let max_half_error = rows.iter().map(|r| r.half_error()).fold(0.0, f64::max);
    Ok(FixedPointReport {
        a,
        tolerance,
        rows,
        max_residual,
        max_half_error,
        passed: max_residual < tolerance && max_half_error < tolerance,
    })
}

/// Output directory helper shared by the CLI and figures.
pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(dir: &Path) -> RunConfig {
        RunConfig {
            n: 3,
            a: 1.0,
            t_values: vec![1, 4],
            replicas: 40,
            master_seed: 3,
            observables: Observable::ALL.into_iter().collect(),
            output_dir: dir.to_path_buf(),
            ..Default::default()
        }
    }

    #[test]
    fn single_replica_columns() {
        let dir = tempfile::tempdir().unwrap();
        let c = RunConfig {
            n: 3,
            t_values: vec![1],
            replicas: 1,
            output_dir: dir.path().to_path_buf(),
            ..Default::default()
        };
        let m = run_ensemble(&c).unwrap();
        let text = std::fs::read_to_string(dir.path().join("columns_t1.csv")).unwrap();
        let s = Series::parse_csv(&text).unwrap();
        assert_eq!(s.rows.len(), 9);
        assert_eq!(m.artifacts.len(), 1);
        assert!(m.verify(dir.path()).unwrap());
    }

    #[test]
    fn identical_runs_identical_bytes() {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let m1 = run_ensemble(&cfg(d1.path())).unwrap();
        let m2 = run_ensemble(&cfg(d2.path())).unwrap();
        assert_eq!(m1.artifacts, m2.artifacts);
        assert_eq!(m1.artifacts.len(), 2 * 5 + 1);
    }

    #[test]
    fn rejects_bad_config() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = cfg(dir.path());
        c.t_values = vec![3, 2];
        assert!(run_ensemble(&c).is_err());
        c.t_values = vec![];
        assert!(c.validate().is_err());
        let mut c = cfg(dir.path());
        c.replicas = 0;
        assert!(c.validate().is_err());
        let mut c = cfg(dir.path());
        c.eps_real = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn replica_streams_are_uncorrelated_with_index() {
        let c = RunConfig {
            n: 2,
            t_values: vec![1],
            replicas: 4000,
            observables: [Observable::Columns].into(),
            ..Default::default()
        };
        let recs = simulate(&c).unwrap();
        let xs: Vec<f64> = recs.iter().map(|r| r.slices[0].entries.as_ref().unwrap()[0]).collect();
        let idx: Vec<f64> = (0..xs.len()).map(|i| i as f64).collect();
        let bound = 3.0 / (xs.len() as f64).sqrt();
        assert!(crate::stats::lag1_autocorrelation(&xs).abs() < bound);
        assert!(crate::stats::correlation(&xs, &idx).abs() < bound);
    }

    #[test]
    fn fixed_point_check_tolerances() {
        let quad = QuadratureSpec::default();
        let ok = check_fixed_point(1.0, 5, 1e-5, &quad).unwrap();
        assert!(ok.passed, "{ok:?}");
        let strict = check_fixed_point(1.0, 5, 1e-16, &quad).unwrap();
        assert!(!strict.passed);
        assert!(strict.max_residual > 0.0);
    }

    #[test]
    fn observable_names_round_trip() {
        for o in Observable::ALL {
            assert_eq!(Observable::parse(o.as_str()).unwrap(), o);
        }
        assert!(Observable::parse("bogus").is_err());
    }
}
