//! Dense complex matrix primitives shared by the channel, pipeline and attack
//! code: Kronecker products, Hermitian PSD square roots and ridge-regularized
//! least squares.
//!
//! [`ComplexMatrix`] is a thin validated wrapper around a `nalgebra` dynamic
//! matrix. Entries are always finite.

use alloc::vec::Vec;
use core::fmt;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

/// Complex scalar used throughout the crate.
pub type C64 = Complex64;

/// Eigenvalues below this are a corrupted correlation matrix, not rounding.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Tolerance used when validating Hermitian symmetry.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("normal matrix is numerically singular")]
    SingularSystem,
    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("matrix contains a non-finite entry")]
    NonFinite,
    #[error("matrix is not Hermitian (max asymmetry {max_asymmetry:e})")]
    NotHermitian { max_asymmetry: f64 },
}

/// Dense complex matrix, row/column counts ≥ 1 and finite entries.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexMatrix({}x{})", self.rows(), self.cols())?;
        f.debug_list()
            .entries(
                self.0
                    .row_iter()
                    .map(|r| r.iter().copied().collect::<Vec<_>>()),
            )
            .finish()
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    /// Rectangular identity: ones on the main diagonal, zeros elsewhere.
    pub fn eye(rows: usize, cols: usize) -> Self {
        Self(DMatrix::identity(rows, cols))
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(rows, cols, |r, c| f(r, c)))
    }

    /// Builds a matrix from row-major entries, rejecting non-finite values.
    pub fn from_row_major(rows: usize, cols: usize, entries: &[C64]) -> Result<Self, LinalgError> {
        if entries.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch {
                expected: (rows, cols),
                actual: (entries.len(), 1),
            });
        }
        if !entries.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self(DMatrix::from_row_slice(rows, cols, entries)))
    }

    /// Diagonal matrix with the given entries.
    pub fn from_diagonal(diag: &[C64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn from_inner(m: DMatrix<C64>) -> Self {
        Self(m)
    }

    pub fn inner(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.0[(r, c)]
    }

    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.0[(r, c)] = v;
    }

    /// Row-major copy of the entries.
    pub fn to_row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for r in 0..self.rows() {
            for c in 0..self.cols() {
                out.push(self.0[(r, c)]);
            }
        }
        out
    }

    /// Column-major entries (the `vec` operator).
    pub fn as_col_major(&self) -> &[C64] {
        self.0.as_slice()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    /// Plain transpose (no conjugation).
    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    pub fn try_mul(&self, rhs: &Self) -> Result<Self, LinalgError> {
        if self.cols() != rhs.rows() {
            return Err(LinalgError::DimensionMismatch {
                expected: (self.cols(), rhs.cols()),
                actual: rhs.shape(),
            });
        }
        Ok(Self(&self.0 * &rhs.0))
    }

    pub fn try_add(&self, rhs: &Self) -> Result<Self, LinalgError> {
        if self.shape() != rhs.shape() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.shape(),
                actual: rhs.shape(),
            });
        }
        Ok(Self(&self.0 + &rhs.0))
    }

    pub fn try_sub(&self, rhs: &Self) -> Result<Self, LinalgError> {
        if self.shape() != rhs.shape() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.shape(),
                actual: rhs.shape(),
            });
        }
        Ok(Self(&self.0 - &rhs.0))
    }

    /// `self · diag(d)`: scales column `c` by `d[c]`.
    pub fn mul_diag_right(&self, d: &[C64]) -> Self {
        debug_assert_eq!(d.len(), self.cols());
        let mut m = self.0.clone();
        for (c, &s) in d.iter().enumerate() {
            m.column_mut(c).iter_mut().for_each(|z| *z *= s);
        }
        Self(m)
    }

    /// `diag(d) · self`: scales row `r` by `d[r]`.
    pub fn mul_diag_left(&self, d: &[C64]) -> Self {
        debug_assert_eq!(d.len(), self.rows());
        let mut m = self.0.clone();
        for (r, &s) in d.iter().enumerate() {
            m.row_mut(r).iter_mut().for_each(|z| *z *= s);
        }
        Self(m)
    }

    /// Matrix–vector product; `v.len()` must equal `cols()`.
    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        debug_assert_eq!(v.len(), self.cols());
        let mut out = alloc::vec![C64::new(0.0, 0.0); self.rows()];
        for c in 0..self.cols() {
            let x = v[c];
            for (r, o) in out.iter_mut().enumerate() {
                *o += self.0[(r, c)] * x;
            }
        }
        out
    }

    /// Conjugate-transpose product `selfᴴ · v`; `v.len()` must equal `rows()`.
    pub fn adjoint_mul_vec(&self, v: &[C64]) -> Vec<C64> {
        debug_assert_eq!(v.len(), self.rows());
        (0..self.cols())
            .map(|c| {
                self.0
                    .column(c)
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a.conj() * b)
                    .sum()
            })
            .collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.0.iter().map(|z| z.norm_sqr()).sum::<f64>())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.0.clone().singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }
}

/// Square Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    /// Validates squareness and Hermitian symmetry to [`HERMITIAN_TOLERANCE`].
    pub fn new(m: ComplexMatrix) -> Result<Self, LinalgError> {
        if m.rows() != m.cols() {
            return Err(LinalgError::DimensionMismatch {
                expected: (m.rows(), m.rows()),
                actual: m.shape(),
            });
        }
        if !m.is_finite() {
            return Err(LinalgError::NonFinite);
        }
        let n = m.rows();
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((m.get(r, c) - m.get(c, r).conj()).norm());
            }
        }
        if worst > HERMITIAN_TOLERANCE {
            return Err(LinalgError::NotHermitian {
                max_asymmetry: worst,
            });
        }
        Ok(Self(m))
    }

    pub fn identity(n: usize) -> Self {
        Self(ComplexMatrix::identity(n))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    /// Real eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.0.inner().clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// Kronecker product: block `(m, n)` of the result is `a[m][n] · b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix(a.0.kronecker(&b.0))
}

/// Kronecker product of two vectors, `a ⊗ b`.
pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter()
        .flat_map(|&x| b.iter().map(move |&y| x * y))
        .collect()
}

/// Principal square root of a Hermitian PSD matrix through its
/// eigendecomposition. Eigenvalues in `[-PSD_TOLERANCE, 0)` are clamped to 0.
pub fn hermitian_sqrt(h: &HermitianMatrix) -> Result<ComplexMatrix, LinalgError> {
    let eig = SymmetricEigen::new(h.0.inner().clone());
    let min = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min < -PSD_TOLERANCE {
        return Err(LinalgError::NotPsd {
            min_eigenvalue: min,
        });
    }
    let roots: Vec<C64> = eig
        .eigenvalues
        .iter()
        .map(|&l| C64::new(libm::sqrt(l.max(0.0)), 0.0))
        .collect();
    let v = &eig.eigenvectors;
    let scaled = ComplexMatrix(v.clone()).mul_diag_right(&roots);
    Ok(ComplexMatrix(&scaled.0 * v.adjoint()))
}

/// Ridge used for the receiver-to-transmit mapping when none is configured:
/// `1e-8 · trace(GᴴG) / cols`.
pub fn default_ridge(g: &ComplexMatrix) -> f64 {
    let energy: f64 = g.0.iter().map(|z| z.norm_sqr()).sum();
    1e-8 * energy / g.cols() as f64
}

/// Solves `(GᴴG + ridge·I) p = Gᴴ v`, the minimizer of `‖Gp − v‖² + ridge‖p‖²`.
pub fn ls_solve(g: &ComplexMatrix, v: &[C64], ridge: f64) -> Result<Vec<C64>, LinalgError> {
    if v.len() != g.rows() {
        return Err(LinalgError::DimensionMismatch {
            expected: (g.rows(), 1),
            actual: (v.len(), 1),
        });
    }
    let gh = g.0.adjoint();
    let mut normal = &gh * &g.0;
    for i in 0..normal.nrows() {
        normal[(i, i)] += C64::new(ridge.max(0.0), 0.0);
    }
    let rhs = &gh * DVector::from_column_slice(v);
    solve_normal(normal, rhs)
}

/// Stacked least squares over several blocks sharing one unknown:
/// minimizes `Σ_k ‖G_k p − v_k‖² + ridge‖p‖²`.
pub fn ls_solve_stacked(
    blocks: &[(&ComplexMatrix, &[C64])],
    ridge: f64,
) -> Result<Vec<C64>, LinalgError> {
    let Some((first, _)) = blocks.first() else {
        return Err(LinalgError::DimensionMismatch {
            expected: (1, 1),
            actual: (0, 0),
        });
    };
    let n = first.cols();
    let mut normal = DMatrix::<C64>::zeros(n, n);
    let mut rhs = DVector::<C64>::zeros(n);
    for (g, v) in blocks {
        if g.cols() != n || v.len() != g.rows() {
            return Err(LinalgError::DimensionMismatch {
                expected: (g.rows(), n),
                actual: (v.len(), g.cols()),
            });
        }
        let gh = g.0.adjoint();
        normal += &gh * &g.0;
        rhs += &gh * DVector::from_column_slice(v);
    }
    for i in 0..n {
        normal[(i, i)] += C64::new(ridge.max(0.0), 0.0);
    }
    solve_normal(normal, rhs)
}

fn solve_normal(normal: DMatrix<C64>, rhs: DVector<C64>) -> Result<Vec<C64>, LinalgError> {
    let scale = (0..normal.nrows())
        .map(|i| normal[(i, i)].re)
        .fold(0.0, f64::max);
    if scale <= 0.0 {
        return Err(LinalgError::SingularSystem);
    }
    let chol = Cholesky::new(normal).ok_or(LinalgError::SingularSystem)?;
    // Cholesky on a PSD-but-singular matrix can "succeed" with tiny pivots.
    let l = chol.l_dirty();
    let min_pivot = (0..l.nrows())
        .map(|i| l[(i, i)].re * l[(i, i)].re)
        .fold(f64::INFINITY, f64::min);
    if !(min_pivot > 1e-13 * scale) {
        return Err(LinalgError::SingularSystem);
    }
    let p = chol.solve(&rhs);
    if !p.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(LinalgError::SingularSystem);
    }
    Ok(p.iter().copied().collect())
}

pub fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    libm::sqrt(norm_sqr(v))
}
