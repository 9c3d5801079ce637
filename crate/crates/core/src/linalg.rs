//! Dense complex linear algebra for small Hilbert spaces.
//!
//! Everything here works on row-major dense storage. The largest space the
//! simulator touches is 2 x 3 x (n_max + 1), so there is no attempt at
//! sparsity or blocking.

use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use thiserror::Error;

/// Entrywise tolerance for Hermiticity checks.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Entrywise tolerance for unitarity checks (U†U = I).
pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operator is not Hermitian (max |H - H†| = {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("propagator is not unitary (max |U†U - I| = {deviation:e})")]
    NotUnitary { deviation: f64 },
    #[error("evolution time must be finite and non-negative, got {0}")]
    InvalidTime(f64),
    #[error("subsystem index {index} out of range for {count} subsystems")]
    SubsystemIndex { index: usize, count: usize },
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// A column vector of complex amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexVector {
    amps: Vec<C64>,
}

impl ComplexVector {
    pub fn new(amps: Vec<C64>) -> Self {
        Self { amps }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { amps: vec![C64::new(0.0, 0.0); dim] }
    }

    /// Computational basis vector `|index⟩` in a space of dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.amps[index] = C64::new(1.0, 0.0);
        v
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self { amps: values.iter().map(|&x| C64::new(x, 0.0)).collect() }
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self { amps: self.amps.iter().map(|a| a * factor).collect() }
    }

    /// `⟨self|other⟩`, conjugating `self`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        check_dim(self.len(), other.len())?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Index<usize> for ComplexVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.amps[i]
    }
}

impl IndexMut<usize> for ComplexVector {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.amps[i]
    }
}

/// Dense complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    /// Builds a matrix from a list of equally sized rows.
    ///
    /// *Panics* if rows have unequal lengths.
    pub fn from_rows<R: AsRef<[C64]>>(rows: &[R]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), ncols, "from_rows: ragged rows");
            data.extend_from_slice(r);
        }
        Self { rows: nrows, cols: ncols, data }
    }

    pub fn from_real_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.as_ref().iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dim(self.rows, other.rows)?;
        check_dim(self.cols, other.cols)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scaled(C64::new(-1.0, 0.0)))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        check_dim(self.cols, other.rows)?;
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// `self · other - other · self`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.matmul(other)?.sub(&other.matmul(self)?)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.dims() != other.dims() {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    pub fn unitarity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let prod = self.adjoint().matmul(self).expect("square");
        prod.max_abs_diff(&Self::identity(self.rows))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_deviation() <= tol
    }

    /// Restriction to the rows and columns listed in `indices`, in that order.
    pub fn submatrix(&self, indices: &[usize]) -> Self {
        let mut out = Self::zeros(indices.len(), indices.len());
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate() {
                out[(a, b)] = self[(i, j)];
            }
        }
        out
    }

    /// Conjugation by a basis permutation: `out[p(i), p(j)] = self[i, j]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut out = Self::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(perm[i], perm[j])] = self[(i, j)];
            }
        }
        out
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    /// *Panics* on inner-dimension mismatch; use [`ComplexMatrix::matmul`]
    /// for a checked product.
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix product: inner dimension mismatch")
    }
}

impl fmt::Display for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(LinalgError::DimensionMismatch { expected, got })
    }
}

/// Kronecker product `a ⊗ b`; the index of `b` runs fastest.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac) = a.dims();
    let (br, bc) = b.dims();
    let mut out = ComplexMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Kronecker product of a list of factors, left to right.
pub fn tensor_all(factors: &[&ComplexMatrix]) -> ComplexMatrix {
    factors
        .iter()
        .fold(ComplexMatrix::identity(1), |acc, f| tensor(&acc, f))
}

/// `exp(-i h t)` for a Hermitian, time-independent `h`.
///
/// Computed from the eigendecomposition `h = V diag(E) V†`, so the result is
/// exact up to rounding for any `t`.
pub fn propagator(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    if !h.is_square() {
        return Err(LinalgError::NotSquare { rows: h.rows, cols: h.cols });
    }
    if !t.is_finite() || t < 0.0 {
        return Err(LinalgError::InvalidTime(t));
    }
    let deviation = h.hermiticity_deviation();
    // Scale-aware: entries may be ~1e6 rad/s.
    if deviation > HERMITIAN_TOL * h.max_abs().max(1.0) {
        return Err(LinalgError::NotHermitian { deviation });
    }

    let n = h.rows;
    let eig = h.to_nalgebra().symmetric_eigen();
    let vecs = &eig.eigenvectors;
    let phases: Vec<C64> = eig
        .eigenvalues
        .iter()
        .map(|&e| C64::from_polar(1.0, -e * t))
        .collect();

    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for (k, ph) in phases.iter().enumerate() {
                acc += vecs[(i, k)] * ph * vecs[(j, k)].conj();
            }
            out[(i, j)] = acc;
        }
    }

    let udev = out.unitarity_deviation();
    if udev > UNITARY_TOL {
        return Err(LinalgError::NotUnitary { deviation: udev });
    }
    Ok(out)
}

/// Matrix-vector product `u |s⟩`.
pub fn apply(u: &ComplexMatrix, s: &ComplexVector) -> Result<ComplexVector> {
    check_dim(u.cols, s.len())?;
    let amps = (0..u.rows)
        .map(|i| (0..u.cols).map(|j| u[(i, j)] * s[j]).sum())
        .collect();
    Ok(ComplexVector::new(amps))
}

/// `|⟨a|b⟩|²`.
pub fn overlap_probability(a: &ComplexVector, b: &ComplexVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

/// Lifts `u` acting on subsystem `which` to `I ⊗ … ⊗ u ⊗ … ⊗ I`.
pub fn embed(u: &ComplexMatrix, subsystem_dims: &[usize], which: usize) -> Result<ComplexMatrix> {
    let count = subsystem_dims.len();
    if which >= count {
        return Err(LinalgError::SubsystemIndex { index: which, count });
    }
    if !u.is_square() {
        return Err(LinalgError::NotSquare { rows: u.rows, cols: u.cols });
    }
    check_dim(subsystem_dims[which], u.rows)?;
    let left: usize = subsystem_dims[..which].iter().product();
    let right: usize = subsystem_dims[which + 1..].iter().product();
    Ok(tensor(
        &tensor(&ComplexMatrix::identity(left), u),
        &ComplexMatrix::identity(right),
    ))
}

/// Whether `a = e^{iφ} b` for a single phase `φ`, entrywise within `tol`.
///
/// The phase is fixed from the largest-modulus entry of `b`.
pub fn equal_up_to_global_phase(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
    if a.dims() != b.dims() {
        return false;
    }
    let Some((idx, pivot)) = b
        .data
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()))
    else {
        return true;
    };
    if pivot.norm() == 0.0 {
        return a.max_abs() <= tol;
    }
    let ratio = a.data[idx] / pivot;
    if ratio.norm() == 0.0 {
        return false;
    }
    let phase = ratio / ratio.norm();
    a.max_abs_diff(&b.scaled(phase)) <= tol
}
