//! Dense and compressed complex matrix helpers.
//!
//! Dense storage is `nalgebra::DMatrix<C64>` (column-major). The compressed
//! row type below only exists for the hot loops: Liouvillian right-hand sides
//! and Kraus sandwiches, where the jump and Kraus operators carry a handful of
//! entries per row.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64 as C64;

use crate::error::{invalid, numeric, Result};

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Kronecker product `a ⊗ b` with `a` as the slow index.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().copied().sum()
}

/// `dst += scale · src`
pub fn add_scaled(dst: &mut CMatrix, scale: C64, src: &CMatrix) {
    assert_eq!(dst.shape(), src.shape(), "shape mismatch");
    for (d, s) in dst.as_mut_slice().iter_mut().zip(src.as_slice()) {
        *d += scale * s;
    }
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest elementwise modulus of `m - m†`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Replace `m` by `(m + m†)/2` in place.
pub fn hermitize(m: &mut CMatrix) {
    let n = m.nrows();
    for j in 0..n {
        for i in 0..j {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
        m[(j, j)] = C64::new(m[(j, j)].re, 0.0);
    }
}

/// Upper bound on the spectral norm, `sqrt(‖m‖₁ ‖m‖∞)`.
pub fn spectral_norm_bound(m: &CMatrix) -> f64 {
    let max_col = (0..m.ncols()).map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    let max_row = (0..m.nrows()).map(|i| m.row(i).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    (max_col * max_row).sqrt()
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone().symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Compressed-row complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl SparseMatrix {
    /// Compress a dense matrix, keeping entries with modulus above `drop_tol`.
    pub fn from_dense(m: &CMatrix, drop_tol: f64) -> Self {
        let (nrows, ncols) = m.shape();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in 0..nrows {
            for j in 0..ncols {
                let v = m[(i, j)];
                if v.norm() > drop_tol {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self { nrows, ncols, row_ptr, col_idx, values }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.entries() {
            out[(i, j)] = v;
        }
        out
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |i| (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |p| (i, self.col_idx[p], self.values[p])))
    }

    /// `self · m`
    pub fn mul_dense(&self, m: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.nrows, m.ncols());
        self.add_mul_dense(m, ONE, &mut out);
        out
    }

    /// `out += scale · self · m`
    pub fn add_mul_dense(&self, m: &CMatrix, scale: C64, out: &mut CMatrix) {
        assert_eq!(self.ncols, m.nrows(), "sparse·dense shape mismatch");
        assert_eq!((out.nrows(), out.ncols()), (self.nrows, m.ncols()), "output shape mismatch");
        let ld = m.nrows();
        let src = m.as_slice();
        let nrows = self.nrows;
        for (j, dst) in out.as_mut_slice().chunks_exact_mut(nrows).enumerate() {
            let col = &src[j * ld..(j + 1) * ld];
            for (i, d) in dst.iter_mut().enumerate() {
                let mut acc = ZERO;
                for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                    acc += self.values[p] * col[self.col_idx[p]];
                }
                *d += scale * acc;
            }
        }
    }

    /// `m · self†`
    pub fn dense_mul_adjoint(&self, m: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(m.nrows(), self.nrows);
        self.add_dense_mul_adjoint(m, ONE, &mut out);
        out
    }

    /// `out += scale · m · self†`
    pub fn add_dense_mul_adjoint(&self, m: &CMatrix, scale: C64, out: &mut CMatrix) {
        assert_eq!(m.ncols(), self.ncols, "dense·sparse† shape mismatch");
        let rows = m.nrows();
        assert_eq!((out.nrows(), out.ncols()), (rows, self.nrows), "output shape mismatch");
        let src = m.as_slice();
        for (c, dst) in out.as_mut_slice().chunks_exact_mut(rows).enumerate() {
            for p in self.row_ptr[c]..self.row_ptr[c + 1] {
                let v = scale * self.values[p].conj();
                let r = self.col_idx[p];
                let col = &src[r * rows..(r + 1) * rows];
                for (d, s) in dst.iter_mut().zip(col) {
                    *d += v * s;
                }
            }
        }
    }

    /// `m · self`
    pub fn dense_mul(&self, m: &CMatrix) -> CMatrix {
        assert_eq!(m.ncols(), self.nrows, "dense·sparse shape mismatch");
        let rows = m.nrows();
        let src = m.as_slice();
        let mut out = vec![ZERO; rows * self.ncols];
        for r in 0..self.nrows {
            let col = &src[r * rows..(r + 1) * rows];
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                let v = self.values[p];
                let c = self.col_idx[p];
                let dst = &mut out[c * rows..(c + 1) * rows];
                for (d, s) in dst.iter_mut().zip(col) {
                    *d += v * s;
                }
            }
        }
        CMatrix::from_vec(rows, self.ncols, out)
    }

    /// `self · ρ · self†`
    pub fn sandwich(&self, rho: &CMatrix) -> CMatrix {
        self.dense_mul_adjoint(&self.mul_dense(rho))
    }

    pub fn adjoint(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for i in 0..self.ncols {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut fill = counts;
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![ZERO; self.nnz()];
        for (i, j, v) in self.entries() {
            let slot = fill[j];
            col_idx[slot] = i;
            values[slot] = v.conj();
            fill[j] += 1;
        }
        Self { nrows: self.ncols, ncols: self.nrows, row_ptr, col_idx, values }
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

#[derive(Debug, Clone)]
struct SpectralBlock {
    indices: Vec<usize>,
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

/// Eigendecomposition of a Hermitian matrix, split along the connected
/// components of its nonzero pattern.
///
/// Hamiltonians with a conserved charge (total excitation number, photon
/// number difference) fall apart into many small blocks, so this is both
/// cheaper than one dense decomposition and leaves exact zeros between
/// sectors in every matrix function built from it.
#[derive(Debug, Clone)]
pub struct BlockSpectrum {
    dim: usize,
    blocks: Vec<SpectralBlock>,
}

impl BlockSpectrum {
    pub fn new(h: &CMatrix) -> Result<Self> {
        if h.nrows() != h.ncols() {
            return Err(invalid("eigendecomposition requires a square matrix"));
        }
        let dim = h.nrows();
        let mut sets = DisjointSet::new(dim);
        for j in 0..dim {
            for i in 0..j {
                if h[(i, j)] != ZERO || h[(j, i)] != ZERO {
                    sets.union(i, j);
                }
            }
        }
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); dim];
        for i in 0..dim {
            let root = sets.find(i);
            members[root].push(i);
        }
        let mut blocks = Vec::new();
        for indices in members.into_iter().filter(|m| !m.is_empty()) {
            let n = indices.len();
            let sub = CMatrix::from_fn(n, n, |i, j| h[(indices[i], indices[j])]);
            let eig = sub.symmetric_eigen();
            if eig.eigenvalues.iter().any(|e| !e.is_finite()) {
                return Err(numeric("eigendecomposition produced non-finite eigenvalues"));
            }
            blocks.push(SpectralBlock { indices, eigenvalues: eig.eigenvalues.iter().copied().collect(), eigenvectors: eig.eigenvectors });
        }
        Ok(Self { dim, blocks })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn largest_block(&self) -> usize {
        self.blocks.iter().map(|b| b.indices.len()).max().unwrap_or(0)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.blocks.iter().flat_map(|b| b.eigenvalues.iter().copied()).collect()
    }

    /// Dense `V f(Λ) V†`.
    pub fn map<F: Fn(f64) -> C64>(&self, f: F) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for block in &self.blocks {
            let v = &block.eigenvectors;
            let n = block.indices.len();
            let mut scaled = v.clone();
            for (k, &e) in block.eigenvalues.iter().enumerate() {
                let fe = f(e);
                scaled.column_mut(k).iter_mut().for_each(|z| *z *= fe);
            }
            let local = scaled * v.adjoint();
            for j in 0..n {
                for i in 0..n {
                    out[(block.indices[i], block.indices[j])] = local[(i, j)];
                }
            }
        }
        out
    }
}
