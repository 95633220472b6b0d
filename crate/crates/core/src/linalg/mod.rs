//! Covariance matrix assembly, dense and sparse Cholesky factorization,
//! triangular solves and sparsity measurement.

mod dense;
mod ordering;
mod sparse;

use std::io::Write;

use crate::covmodel::{Covariance, TaperedCovariance};
use crate::error::{Error, Result};
use crate::field::{dist, neighbors_within, PointSet};

pub use dense::cholesky;
pub use ordering::{minimum_degree, reverse_cuthill_mckee, FillOrdering};
pub use sparse::{sparse_cholesky, sparse_cholesky_with};

/// Dense symmetric matrix, full row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSym {
    n: usize,
    data: Vec<f64>,
}

impl DenseSym {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: data.len(),
            });
        }
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (data[i * n + j], data[j * n + i]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE) {
                    return Err(Error::invalid(format!("matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { n, data })
    }

    /// Builds the matrix from a function of the lower-triangle indices.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self { n, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_diag(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).fold(0.0, f64::max)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| dot(self.row(i), x)).collect()
    }

    /// Elementwise (Hadamard) product.
    pub fn hadamard(&self, other: &DenseSym) -> Result<DenseSym> {
        if other.n != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a * b).collect();
        Ok(DenseSym { n: self.n, data })
    }

    /// Fraction of the n² entries with `|value| <= zero_tol`.
    pub fn sparsity(&self, zero_tol: f64) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let zeros = self.data.iter().filter(|v| v.abs() <= zero_tol).count();
        zeros as f64 / self.data.len() as f64
    }

    pub fn write_coordinate<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "% {} {}", self.n, self.n)?;
        for i in 0..self.n {
            for j in 0..self.n {
                let v = self.get(i, j);
                if v != 0.0 {
                    writeln!(w, "{i} {j} {v:e}")?;
                }
            }
        }
        Ok(())
    }
}

/// Symmetric matrix with its lower triangle in compressed-column form.
/// The diagonal entry comes first in each column and row indices ascend.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix {
    n: usize,
    colptr: Vec<usize>,
    rowind: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymMatrix {
    /// From lower-triangle triplets `(i, j, v)` with `i >= j`. Zero
    /// off-diagonal values are dropped, duplicates rejected and every
    /// diagonal entry must be present.
    pub fn from_lower_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            if i >= n || j > i {
                return Err(Error::invalid(format!("entry ({i}, {j}) is not in the lower triangle of a {n}×{n} matrix")));
            }
            if i != j && v == 0.0 {
                continue;
            }
            cols[j].push((i, v));
        }
        let mut colptr = Vec::with_capacity(n + 1);
        let mut rowind = Vec::new();
        let mut values = Vec::new();
        colptr.push(0);
        for (j, col) in cols.iter_mut().enumerate() {
            col.sort_unstable_by_key(|e| e.0);
            if col.first().map(|e| e.0) != Some(j) {
                return Err(Error::invalid(format!("diagonal entry {j} missing")));
            }
            if col.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::invalid(format!("duplicate entry in column {j}")));
            }
            for &(i, v) in col.iter() {
                rowind.push(i);
                values.push(v);
            }
            colptr.push(rowind.len());
        }
        Ok(Self {
            n,
            colptr,
            rowind,
            values,
        })
    }

    pub fn from_dense(m: &DenseSym) -> Self {
        let n = m.n();
        let mut t = Vec::new();
        for j in 0..n {
            for i in j..n {
                let v = m.get(i, j);
                if i == j || v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_lower_triplets(n, &t).expect("dense lower triangle is well formed")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored lower-triangle entries, diagonal included.
    pub fn nnz(&self) -> usize {
        self.rowind.len()
    }

    pub fn colptr(&self) -> &[usize] {
        &self.colptr
    }

    pub fn rowind(&self) -> &[usize] {
        &self.rowind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let range = self.colptr[j]..self.colptr[j + 1];
        match self.rowind[range.clone()].binary_search(&i) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn max_diag(&self) -> f64 {
        (0..self.n)
            .map(|j| self.values[self.colptr[j]])
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DenseSym {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for j in 0..n {
            for p in self.colptr[j]..self.colptr[j + 1] {
                let i = self.rowind[p];
                data[i * n + j] = self.values[p];
                data[j * n + i] = self.values[p];
            }
        }
        DenseSym { n, data }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            for p in self.colptr[j]..self.colptr[j + 1] {
                let i = self.rowind[p];
                let v = self.values[p];
                y[i] += v * x[j];
                if i != j {
                    y[j] += v * x[i];
                }
            }
        }
        y
    }

    /// Fraction of the n² entries that are structurally zero. The diagonal
    /// counts as nonzero.
    pub fn sparsity(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let n2 = (self.n * self.n) as f64;
        let nonzero = (2 * self.nnz() - self.n) as f64;
        1.0 - nonzero / n2
    }

    pub fn write_coordinate<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "% {} {} {}", self.n, self.n, self.nnz())?;
        for j in 0..self.n {
            for p in self.colptr[j]..self.colptr[j + 1] {
                writeln!(w, "{} {j} {:e}", self.rowind[p], self.values[p])?;
            }
        }
        Ok(())
    }
}

/// Fraction of exactly-zero entries of either matrix kind.
pub trait Sparsity {
    fn zero_fraction(&self) -> f64;
}

impl Sparsity for DenseSym {
    fn zero_fraction(&self) -> f64 {
        self.sparsity(0.0)
    }
}

impl Sparsity for SparseSymMatrix {
    fn zero_fraction(&self) -> f64 {
        SparseSymMatrix::sparsity(self)
    }
}

pub fn sparsity(m: &impl Sparsity) -> f64 {
    m.zero_fraction()
}

/// Covariance matrix of `cov` at `points`; the diagonal is the sill.
pub fn assemble_dense(cov: &impl Covariance, points: &PointSet) -> DenseSym {
    let sill = cov.sill();
    DenseSym::from_fn(points.len(), |i, j| {
        if i == j {
            sill
        } else {
            cov.covariance(points.distance(i, j))
        }
    })
}

/// Covariance vector `[C(‖x − x_i‖)]_i`.
pub fn covariance_vector(cov: &impl Covariance, points: &PointSet, x: &[f64]) -> Vec<f64> {
    points.iter().map(|p| cov.covariance(dist(p, x))).collect()
}

/// Tapered covariance matrix in sparse form, built from the pairs closer
/// than the taper support only.
pub fn assemble_sparse_tapered(tc: &TaperedCovariance, points: &PointSet) -> Result<SparseSymMatrix> {
    let support = Covariance::support(tc).unwrap_or(tc.taper.theta());
    assemble_sparse(tc, points, support)
}

/// Sparse assembly of any covariance that vanishes beyond `support`.
pub fn assemble_sparse(cov: &impl Covariance, points: &PointSet, support: f64) -> Result<SparseSymMatrix> {
    let n = points.len();
    let sill = cov.sill();
    let pairs = neighbors_within(points, support)?;
    let mut triplets = Vec::with_capacity(n + pairs.len());
    triplets.extend((0..n).map(|i| (i, i, sill)));
    for (i, j, d) in pairs {
        let v = cov.covariance(d);
        if v != 0.0 {
            triplets.push((j, i, v));
        }
    }
    SparseSymMatrix::from_lower_triplets(n, &triplets)
}

/// Diagonal regularization tried when a pivot fails: `δ · scale · I` for
/// `δ = start, start·factor, …` up to `max`. The scale is the largest
/// diagonal entry, which equals the sill for covariance matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JitterPolicy {
    pub start: f64,
    pub max: f64,
    pub factor: f64,
}

impl Default for JitterPolicy {
    fn default() -> Self {
        Self {
            start: 1e-12,
            max: 1e-6,
            factor: 10.0,
        }
    }
}

impl JitterPolicy {
    /// Fail on the first non-positive pivot.
    pub fn none() -> Self {
        Self {
            start: 0.0,
            max: 0.0,
            factor: 10.0,
        }
    }

    /// Relative jitter levels to try after the unregularized attempt.
    pub(crate) fn levels(&self) -> Vec<f64> {
        let mut out = Vec::new();
        if self.start <= 0.0 || self.max <= 0.0 {
            return out;
        }
        let mut d = self.start;
        while d <= self.max * (1.0 + 1e-9) {
            out.push(d);
            d *= self.factor;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorKind {
    Dense,
    Sparse,
}

#[derive(Debug, Clone)]
enum Storage {
    /// Lower factor, full row-major n×n.
    Dense(Vec<f64>),
    /// Lower factor in compressed columns, diagonal first.
    Sparse {
        colptr: Vec<usize>,
        rowind: Vec<usize>,
        values: Vec<f64>,
    },
}

/// Cholesky factor `P (M + jI) Pᵀ = L Lᵀ`. Dense factors carry the identity
/// permutation.
#[derive(Debug, Clone)]
pub struct CholFactor {
    n: usize,
    storage: Storage,
    // permuted row i is original row perm[i]
    perm: Option<Vec<usize>>,
    jitter_applied: f64,
}

impl CholFactor {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> FactorKind {
        match self.storage {
            Storage::Dense(_) => FactorKind::Dense,
            Storage::Sparse { .. } => FactorKind::Sparse,
        }
    }

    /// Absolute diagonal shift added before factorizing (0 when none).
    pub fn jitter_applied(&self) -> f64 {
        self.jitter_applied
    }

    pub fn permutation(&self) -> Option<&[usize]> {
        self.perm.as_deref()
    }

    /// Stored entries of the lower factor.
    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Dense(_) => self.n * (self.n + 1) / 2,
            Storage::Sparse { rowind, .. } => rowind.len(),
        }
    }

    /// `L` as a dense row-major n×n array (for inspection and tests).
    pub fn lower_dense(&self) -> Vec<f64> {
        match &self.storage {
            Storage::Dense(l) => l.clone(),
            Storage::Sparse {
                colptr,
                rowind,
                values,
            } => {
                let n = self.n;
                let mut l = vec![0.0; n * n];
                for j in 0..n {
                    for p in colptr[j]..colptr[j + 1] {
                        l[rowind[p] * n + j] = values[p];
                    }
                }
                l
            }
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: len,
            });
        }
        Ok(())
    }

    fn permute(&self, b: &[f64]) -> Vec<f64> {
        match &self.perm {
            Some(p) => p.iter().map(|&k| b[k]).collect(),
            None => b.to_vec(),
        }
    }

    fn unpermute(&self, w: Vec<f64>) -> Vec<f64> {
        match &self.perm {
            Some(p) => {
                let mut x = vec![0.0; w.len()];
                for (i, &k) in p.iter().enumerate() {
                    x[k] = w[i];
                }
                x
            }
            None => w,
        }
    }

    // y ← L⁻¹ y
    fn forward_in_place(&self, y: &mut [f64]) {
        let n = self.n;
        match &self.storage {
            Storage::Dense(l) => {
                for i in 0..n {
                    let row = &l[i * n..i * n + i];
                    y[i] = (y[i] - dot(row, &y[..i])) / l[i * n + i];
                }
            }
            Storage::Sparse {
                colptr,
                rowind,
                values,
            } => {
                for j in 0..n {
                    let start = colptr[j];
                    y[j] /= values[start];
                    let yj = y[j];
                    for p in start + 1..colptr[j + 1] {
                        y[rowind[p]] -= values[p] * yj;
                    }
                }
            }
        }
    }

    // y ← L⁻ᵀ y
    fn backward_in_place(&self, y: &mut [f64]) {
        let n = self.n;
        match &self.storage {
            Storage::Dense(l) => {
                for i in (0..n).rev() {
                    y[i] /= l[i * n + i];
                    let yi = y[i];
                    let row = &l[i * n..i * n + i];
                    for (yk, lk) in y[..i].iter_mut().zip(row) {
                        *yk -= lk * yi;
                    }
                }
            }
            Storage::Sparse {
                colptr,
                rowind,
                values,
            } => {
                for j in (0..n).rev() {
                    let start = colptr[j];
                    let mut s = y[j];
                    for p in start + 1..colptr[j + 1] {
                        s -= values[p] * y[rowind[p]];
                    }
                    y[j] = s / values[start];
                }
            }
        }
    }

    /// Solves `(M + jI) x = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.check_len(b.len())?;
        let mut y = self.permute(b);
        self.forward_in_place(&mut y);
        self.backward_in_place(&mut y);
        Ok(self.unpermute(y))
    }

    pub fn solve_many(&self, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rhs.iter().map(|b| self.solve(b)).collect()
    }

    /// `L⁻¹ P b`; its squared norm is `bᵀ (M + jI)⁻¹ b`.
    pub fn forward_solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.check_len(b.len())?;
        let mut y = self.permute(b);
        self.forward_in_place(&mut y);
        Ok(y)
    }

    /// `Pᵀ L ε`, a draw with covariance `M + jI` when `ε` is standard normal.
    pub fn lower_mul(&self, eps: &[f64]) -> Result<Vec<f64>> {
        self.check_len(eps.len())?;
        let n = self.n;
        let mut w = vec![0.0; n];
        match &self.storage {
            Storage::Dense(l) => {
                for i in 0..n {
                    w[i] = dot(&l[i * n..i * n + i + 1], &eps[..=i]);
                }
            }
            Storage::Sparse {
                colptr,
                rowind,
                values,
            } => {
                for j in 0..n {
                    for p in colptr[j]..colptr[j + 1] {
                        w[rowind[p]] += values[p] * eps[j];
                    }
                }
            }
        }
        Ok(self.unpermute(w))
    }

    /// `Lᵀ P v`; its squared norm is `vᵀ (M + jI) v`.
    pub fn transpose_mul(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_len(v.len())?;
        let n = self.n;
        let y = self.permute(v);
        let mut w = vec![0.0; n];
        match &self.storage {
            Storage::Dense(l) => {
                for i in 0..n {
                    let yi = y[i];
                    for (wj, lij) in w[..=i].iter_mut().zip(&l[i * n..i * n + i + 1]) {
                        *wj += lij * yi;
                    }
                }
            }
            Storage::Sparse {
                colptr,
                rowind,
                values,
            } => {
                for j in 0..n {
                    w[j] = (colptr[j]..colptr[j + 1]).map(|p| values[p] * y[rowind[p]]).sum();
                }
            }
        }
        Ok(w)
    }

    /// `log det (M + jI)`.
    pub fn log_det(&self) -> f64 {
        let n = self.n;
        let diag: Box<dyn Iterator<Item = f64>> = match &self.storage {
            Storage::Dense(l) => Box::new((0..n).map(move |i| l[i * n + i])),
            Storage::Sparse { colptr, values, .. } => Box::new((0..n).map(move |j| values[colptr[j]])),
        };
        2.0 * diag.map(f64::ln).sum::<f64>()
    }
}

/// Dot product with four independent accumulators.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for k in 0..chunks {
        let i = 4 * k;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..n {
        s += a[i] * b[i];
    }
    s
}
