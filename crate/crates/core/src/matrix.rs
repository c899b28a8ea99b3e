//! Dense matrices, column-stochastic matrices and chain products.
//!
//! Matrices are stored column-major: entry `(i, j)` lives at `j * n + i`
//! and, for a stochastic matrix, is the transition probability `j -> i`.
//!
//! Besides the product `U(t)` itself, a [`ChainRecord`] carries the
//! restriction of `U(t)` to the zero-sum subspace, expressed in an
//! orthonormal Helmert basis. Since `1^T U = 1^T`, that subspace is
//! invariant and the restriction of a product is the product of the
//! restrictions. Everything that decays with `t` (the subleading spectrum,
//! the second singular value, differences between columns) is read off the
//! restricted block, which keeps full relative precision long after those
//! quantities fall below the rounding level of `U(t)`'s entries.

use rand::Rng;

use crate::error::{Error, Result};
use crate::sampler::{random_stochastic_matrix, DirichletParams};

#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_column_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::arg(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                data.len()
            )));
        }
        Ok(Self { n, data })
    }

    /// Builds a matrix from row slices, which reads naturally in tests.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::arg("rows must form a square matrix"));
        }
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.n + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.n + i] = v;
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// `self * rhs`.
    pub fn matmul(&self, rhs: &SquareMatrix) -> Result<SquareMatrix> {
        if self.n != rhs.n {
            return Err(Error::arg(format!(
                "dimension mismatch: {} vs {}",
                self.n, rhs.n
            )));
        }
        Ok(self.matmul_unchecked(rhs))
    }

    fn matmul_unchecked(&self, rhs: &SquareMatrix) -> SquareMatrix {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for j in 0..n {
            let dst = &mut out[j * n..(j + 1) * n];
            for (k, &r) in rhs.column(j).iter().enumerate() {
                if r == 0.0 {
                    continue;
                }
                for (d, &l) in dst.iter_mut().zip(self.column(k)) {
                    *d += l * r;
                }
            }
        }
        SquareMatrix { n, data: out }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (j, &xj) in x.iter().enumerate() {
            for (o, &m) in out.iter_mut().zip(self.column(j)) {
                *o += m * xj;
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// A column-stochastic matrix: nonnegative entries, unit column sums.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix(SquareMatrix);

const COLUMN_TOL: f64 = 1e-12;

impl StochasticMatrix {
    pub fn identity(n: usize) -> Self {
        Self(SquareMatrix::identity(n))
    }

    /// Validates nonnegativity and column sums to within `1e-12`.
    pub fn from_column_major(n: usize, data: Vec<f64>) -> Result<Self> {
        let m = Self(SquareMatrix::from_column_major(n, data)?);
        m.check(COLUMN_TOL)?;
        Ok(m)
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let n = columns.len();
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::arg("columns must form a square matrix"));
        }
        Self::from_column_major(n, columns.concat())
    }

    pub fn from_matrix(m: SquareMatrix) -> Result<Self> {
        let m = Self(m);
        m.check(COLUMN_TOL)?;
        Ok(m)
    }

    /// Matrix with every column equal to `w`.
    pub fn rank_one(w: &ProbVector) -> Self {
        let n = w.len();
        let data = (0..n).flat_map(|_| w.as_slice().iter().copied()).collect();
        Self(SquareMatrix { n, data })
    }

    pub(crate) fn from_column_major_unchecked(n: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n * n);
        Self(SquareMatrix { n, data })
    }

    /// Checks the stochastic invariants with column-sum tolerance `tol`.
    pub fn check(&self, tol: f64) -> Result<()> {
        let n = self.n();
        for j in 0..n {
            let col = self.column(j);
            if let Some(&bad) = col.iter().find(|&&x| !(x >= 0.0 && x <= 1.0 + tol)) {
                return Err(Error::arg(format!("entry {bad} in column {j} outside [0, 1]")));
            }
            let drift = (col.iter().sum::<f64>() - 1.0).abs();
            if drift > tol {
                return Err(Error::arg(format!(
                    "column {j} sums to 1 only within {drift:e} (tolerance {tol:e})"
                )));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.0.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    pub fn column(&self, j: usize) -> &[f64] {
        self.0.column(j)
    }

    pub fn as_matrix(&self) -> &SquareMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> SquareMatrix {
        self.0
    }

    /// Largest deviation of a column sum from 1.
    pub fn max_column_drift(&self) -> f64 {
        (0..self.n())
            .map(|j| (self.column(j).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn renormalize_columns(&mut self) {
        let n = self.n();
        for col in self.0.data.chunks_exact_mut(n) {
            let s: f64 = col.iter().sum();
            col.iter_mut().for_each(|x| *x /= s);
        }
    }
}

/// `left * right`; the product of stochastic matrices is stochastic.
pub fn multiply(left: &StochasticMatrix, right: &StochasticMatrix) -> Result<StochasticMatrix> {
    Ok(StochasticMatrix(left.0.matmul(&right.0)?))
}

/// A nonnegative vector summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::arg("probability vector must be nonempty"));
        }
        if values.iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::arg("probability vector has a negative or NaN entry"));
        }
        let drift = (values.iter().sum::<f64>() - 1.0).abs();
        if drift > COLUMN_TOL {
            return Err(Error::arg(format!("probability vector sums to 1 only within {drift:e}")));
        }
        Ok(Self(values))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn basis(n: usize, i: usize) -> Self {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

// Helmert basis h_k (k = 1..n-1): ones in slots 0..k, -k in slot k, scaled
// by 1/sqrt(k(k+1)). Together with 1/sqrt(n) it is orthonormal.

fn helmert_scale(k: usize) -> f64 {
    1.0 / ((k * (k + 1)) as f64).sqrt()
}

/// `H^T x` for `x` of length `n`.
fn helmert_t(x: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len() - 1);
    let mut prefix = 0.0;
    for k in 1..x.len() {
        prefix += x[k - 1];
        out.push((prefix - k as f64 * x[k]) * helmert_scale(k));
    }
    out
}

/// `H y` for `y` of length `n - 1`.
fn helmert(y: &[f64]) -> Vec<f64> {
    let n = y.len() + 1;
    let mut out = vec![0.0; n];
    let mut suffix = 0.0;
    for i in (0..n).rev() {
        // slot i gets +h_k for every k > i and -k h_k for k == i
        if i >= 1 {
            out[i] = suffix - i as f64 * y[i - 1] * helmert_scale(i);
        } else {
            out[i] = suffix;
        }
        if i >= 1 {
            suffix += y[i - 1] * helmert_scale(i);
        }
    }
    out
}

/// Restriction of a stochastic matrix to the zero-sum subspace.
///
/// In the orthonormal basis `[1/sqrt(n), H]` the matrix reads
/// `[[1, 0], [coupling, block]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeflatedBlock {
    pub block: SquareMatrix,
    pub coupling: Vec<f64>,
}

impl DeflatedBlock {
    pub fn identity(n: usize) -> Self {
        Self {
            block: SquareMatrix::identity(n - 1),
            coupling: vec![0.0; n - 1],
        }
    }

    pub fn of(m: &StochasticMatrix) -> Self {
        let n = m.n();
        // columns of M H via prefix sums of M's columns
        let mut mh = Vec::with_capacity(n - 1);
        let mut prefix = vec![0.0; n];
        for k in 1..n {
            for (p, &x) in prefix.iter_mut().zip(m.column(k - 1)) {
                *p += x;
            }
            let scale = helmert_scale(k);
            let col: Vec<f64> = prefix
                .iter()
                .zip(m.column(k))
                .map(|(&p, &x)| (p - k as f64 * x) * scale)
                .collect();
            mh.push(col);
        }
        let mut data = Vec::with_capacity((n - 1) * (n - 1));
        for col in &mh {
            data.extend(helmert_t(col));
        }
        let inv_sqrt_n = 1.0 / (n as f64).sqrt();
        let row_sums: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| m.get(i, j)).sum::<f64>() * inv_sqrt_n)
            .collect();
        Self {
            block: SquareMatrix { n: n - 1, data },
            coupling: helmert_t(&row_sums),
        }
    }

    /// Composition `left ∘ self` for the product `left * (matrix of self)`.
    fn left_multiply(&mut self, left: &DeflatedBlock) {
        let mut coupling = left.block.mul_vec(&self.coupling);
        for (c, &l) in coupling.iter_mut().zip(&left.coupling) {
            *c += l;
        }
        self.coupling = coupling;
        self.block = left.block.matmul_unchecked(&self.block);
    }

    /// The full `n x n` matrix `Q^T U Q`, orthogonally similar to `U`.
    pub fn orthogonal_form(&self) -> SquareMatrix {
        let m = self.block.n;
        let n = m + 1;
        let mut out = SquareMatrix::zeros(n);
        out.set(0, 0, 1.0);
        for i in 0..m {
            out.set(i + 1, 0, self.coupling[i]);
            for j in 0..m {
                out.set(i + 1, j + 1, self.block.get(i, j));
            }
        }
        out
    }

    /// `U x` for a zero-sum vector `x`, computed through the block.
    pub fn apply_zero_sum(&self, x: &[f64]) -> Vec<f64> {
        helmert(&self.block.mul_vec(&helmert_t(x)))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ChainOptions {
    pub keep_snapshots: bool,
    /// Renormalize the columns of `U(t)` after every step.
    pub renormalize_columns: bool,
}

/// The running product `U(t) = M_t ... M_1`.
#[derive(Debug, Clone)]
pub struct ChainRecord {
    t: usize,
    product: StochasticMatrix,
    deflated: DeflatedBlock,
    snapshots: Option<Vec<StochasticMatrix>>,
    options: ChainOptions,
}

impl ChainRecord {
    /// The empty chain, `U(0) = I`.
    pub fn new(n: usize, options: ChainOptions) -> Self {
        Self {
            t: 0,
            product: StochasticMatrix::identity(n),
            deflated: DeflatedBlock::identity(n),
            snapshots: options.keep_snapshots.then(Vec::new),
            options,
        }
    }

    /// Appends a factor on the left: `U(t+1) = M U(t)`.
    pub fn push(&mut self, m: StochasticMatrix) -> Result<()> {
        if m.n() != self.n() {
            return Err(Error::arg(format!(
                "factor has dimension {}, chain has {}",
                m.n(),
                self.n()
            )));
        }
        self.product = multiply(&m, &self.product)?;
        if self.options.renormalize_columns {
            self.product.renormalize_columns();
        }
        self.deflated.left_multiply(&DeflatedBlock::of(&m));
        if let Some(s) = self.snapshots.as_mut() {
            s.push(m);
        }
        self.t += 1;
        Ok(())
    }

    /// Draws one fresh factor from `params` and appends it.
    pub fn step<R: Rng + ?Sized>(&mut self, params: DirichletParams, rng: &mut R) -> Result<()> {
        self.push(random_stochastic_matrix(params, rng))
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn n(&self) -> usize {
        self.product.n()
    }

    pub fn product(&self) -> &StochasticMatrix {
        &self.product
    }

    pub fn deflated(&self) -> &DeflatedBlock {
        &self.deflated
    }

    /// Factors in the order they were applied, `M_1` first.
    pub fn snapshots(&self) -> Option<&[StochasticMatrix]> {
        self.snapshots.as_deref()
    }

    /// Tolerance on column sums for a product of this length.
    pub fn column_tolerance(&self) -> f64 {
        COLUMN_TOL * (self.t.max(1) as f64)
    }

    /// `|U_{0,i} - U_{0,j}|` evaluated through the zero-sum block, accurate
    /// to full relative precision even when the columns agree to 1e-300.
    pub fn column_distance(&self, i: usize, j: usize) -> Result<f64> {
        let n = self.n();
        if i >= n || j >= n {
            return Err(Error::arg(format!("column index out of range for n = {n}")));
        }
        if i == j {
            return Ok(0.0);
        }
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        e[j] = -1.0;
        Ok(self.deflated.apply_zero_sum(&e)[0].abs())
    }
}

/// `U(t)` with `t` fresh independent factors, each new one on the left.
pub fn chain_product<R: Rng + ?Sized>(
    params: DirichletParams,
    t: usize,
    rng: &mut R,
    options: ChainOptions,
) -> Result<ChainRecord> {
    if t == 0 {
        return Err(Error::arg("chain length must be at least 1"));
    }
    let mut record = ChainRecord::new(params.n(), options);
    for _ in 0..t {
        record.step(params, rng)?;
    }
    Ok(record)
}

/// `p(t) = U(t) p(0)`.
pub fn evolve(p0: &ProbVector, record: &ChainRecord) -> Result<ProbVector> {
    if p0.len() != record.n() {
        return Err(Error::arg(format!(
            "vector has length {}, chain has dimension {}",
            p0.len(),
            record.n()
        )));
    }
    let mut p = record.product.as_matrix().mul_vec(p0.as_slice());
    // clip rounding-level negatives only
    p.iter_mut().for_each(|x| *x = x.max(0.0));
    Ok(ProbVector(p))
}

/// `|U_{0,i} - U_{0,j}|` from the entries of `u`.
pub fn column_distance(u: &StochasticMatrix, i: usize, j: usize) -> Result<f64> {
    let n = u.n();
    if i >= n || j >= n {
        return Err(Error::arg(format!("column index out of range for n = {n}")));
    }
    Ok((u.get(0, i) - u.get(0, j)).abs())
}

const PERRON_TOL: f64 = 1e-13;
const PERRON_MAX_ITER: usize = 10_000;

/// The stationary vector `v = U v` by power iteration from the uniform
/// vector.
///
/// If plain iteration stalls (a subleading eigenvalue near -1), the lazy
/// iteration `v <- (v + U v) / 2` is tried before giving up.
pub fn perron_vector(u: &StochasticMatrix) -> Result<ProbVector> {
    let n = u.n();
    let m = u.as_matrix();
    let mut best = f64::INFINITY;
    for lazy in [false, true] {
        let mut v = vec![1.0 / n as f64; n];
        for _ in 0..PERRON_MAX_ITER {
            let w = m.mul_vec(&v);
            let residual = w
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if residual < PERRON_TOL {
                return Ok(ProbVector(v));
            }
            best = best.min(residual);
            v = if lazy {
                w.iter().zip(&v).map(|(a, b)| 0.5 * (a + b)).collect()
            } else {
                w
            };
            let s: f64 = v.iter().sum();
            v.iter_mut().for_each(|x| *x = x.max(0.0) / s);
        }
    }
    Err(Error::numerical("perron_vector power iteration", best))
}
