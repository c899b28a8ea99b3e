//! Seeded generation of Gamma variates, symmetric Dirichlet columns and
//! random column-stochastic matrices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::StochasticMatrix;

/// The generator type handed to every sampling routine.
pub type Generator = ChaCha8Rng;

/// Concentration `a` and dimension `n` of a symmetric Dirichlet law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirichletParams {
    a: f64,
    n: usize,
}

impl DirichletParams {
    pub fn new(a: f64, n: usize) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::param(format!("concentration must be positive, got {a}")));
        }
        if n < 2 {
            return Err(Error::param(format!("dimension must be at least 2, got {n}")));
        }
        Ok(Self { a, n })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Total concentration `n * a`.
    pub fn total(&self) -> f64 {
        self.n as f64 * self.a
    }
}

/// Identifies one independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub replica_index: u64,
    pub stream_label: u32,
}

impl SeedSpec {
    pub fn new(master_seed: u64, replica_index: u64, stream_label: u32) -> Self {
        Self {
            master_seed,
            replica_index,
            stream_label,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Builds the generator for `spec`.
///
/// The three fields are folded through a SplitMix64 chain into a 256-bit
/// ChaCha key, so nearby specs land on unrelated keys.
pub fn derive_generator(spec: SeedSpec) -> Generator {
    let mut h = splitmix64(spec.master_seed);
    h = splitmix64(h ^ splitmix64(spec.replica_index ^ 0x5851_f42d_4c95_7f2d));
    h = splitmix64(h ^ splitmix64(u64::from(spec.stream_label) ^ 0x1405_7b7e_f767_814f));
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        h = splitmix64(h);
        chunk.copy_from_slice(&h.to_le_bytes());
    }
    Generator::from_seed(seed)
}

/// Uniform draw on (0, 1].
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// One draw from the unit-scale Gamma law with the given shape.
///
/// Marsaglia–Tsang squeeze for `shape >= 1`; smaller shapes sample
/// `shape + 1` and multiply by `U^(1/shape)`.
pub fn gamma_sample<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> Result<f64> {
    if !(shape > 0.0 && shape.is_finite()) {
        return Err(Error::param(format!("gamma shape must be positive, got {shape}")));
    }
    if shape < 1.0 {
        let boosted = marsaglia_tsang(shape + 1.0, rng);
        return Ok(boosted * open_unit(rng).powf(1.0 / shape));
    }
    Ok(marsaglia_tsang(shape, rng))
}

fn marsaglia_tsang<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = open_unit(rng);
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return d * v;
        }
        if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// A probability vector of length `n` from the symmetric Dirichlet law.
pub fn dirichlet_column<R: Rng + ?Sized>(params: DirichletParams, rng: &mut R) -> Vec<f64> {
    let mut column = vec![0.0; params.n];
    fill_dirichlet(params, rng, &mut column);
    column
}

fn fill_dirichlet<R: Rng + ?Sized>(params: DirichletParams, rng: &mut R, out: &mut [f64]) {
    loop {
        let mut sum = 0.0;
        for slot in out.iter_mut() {
            // shape validated by DirichletParams
            *slot = gamma_sample(params.a, rng).expect("positive shape");
            sum += *slot;
        }
        if sum > 0.0 {
            out.iter_mut().for_each(|x| *x /= sum);
            // second pass pins the sum to 1 at machine precision
            let resum: f64 = out.iter().sum();
            out.iter_mut().for_each(|x| *x /= resum);
            return;
        }
    }
}

/// An `n x n` matrix whose columns are independent Dirichlet draws.
pub fn random_stochastic_matrix<R: Rng + ?Sized>(
    params: DirichletParams,
    rng: &mut R,
) -> StochasticMatrix {
    let n = params.n;
    let mut data = vec![0.0; n * n];
    for column in data.chunks_exact_mut(n) {
        fill_dirichlet(params, rng, column);
    }
    StochasticMatrix::from_column_major_unchecked(n, data)
}
