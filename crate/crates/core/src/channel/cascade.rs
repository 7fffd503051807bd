use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::linalg::{ComplexMatrix, LinalgError, C64};

use super::LinkSet;

/// Diagonal unit-modulus reflection matrix `diag(e^{jγ})` of one RIS for one
/// symbol, stored by its phase angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseShiftMatrix {
    pub angles: Vec<f64>,
}

impl PhaseShiftMatrix {
    pub fn new(angles: Vec<f64>) -> Self {
        Self { angles }
    }

    /// All-zero phases, the identity reflection.
    pub fn identity(size: usize) -> Self {
        Self {
            angles: alloc::vec![0.0; size],
        }
    }

    pub fn size(&self) -> usize {
        self.angles.len()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        self.angles
            .iter()
            .map(|&g| C64::from_polar(1.0, g))
            .collect()
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_diagonal(&self.diagonal())
    }
}

/// Which RIS the double-bounce path hits first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CascadeOrder {
    /// `Y₂ψ₂Eψ₁U₁ + Y₁ψ₁U₁ + Y₂ψ₂U₂`, the encoder-to-decoder matrix `K`.
    Legitimate,
    /// `Y₁ψ₁E'ψ₂U₂ + Y₁ψ₁U₁ + Y₂ψ₂U₂`, the adversary aggregate `G`.
    Adversary,
}

pub fn cascaded_matrix(
    links: &LinkSet,
    psi1: &PhaseShiftMatrix,
    psi2: &PhaseShiftMatrix,
    order: CascadeOrder,
) -> Result<ComplexMatrix, LinalgError> {
    let d1 = psi1.diagonal();
    let d2 = psi2.diagonal();
    check_len(links.u1.rows(), d1.len())?;
    check_len(links.u2.rows(), d2.len())?;
    let p1u1 = links.u1.mul_diag_left(&d1);
    let p2u2 = links.u2.mul_diag_left(&d2);
    let single = links
        .y1
        .try_mul(&p1u1)?
        .try_add(&links.y2.try_mul(&p2u2)?)?;
    let double = match order {
        CascadeOrder::Legitimate => links
            .y2
            .mul_diag_right(&d2)
            .try_mul(&links.e)?
            .try_mul(&p1u1)?,
        CascadeOrder::Adversary => links
            .y1
            .mul_diag_right(&d1)
            .try_mul(&links.e)?
            .try_mul(&p2u2)?,
    };
    double.try_add(&single)
}

/// Gradients of a real loss with respect to the two phase diagonals, given
/// `grad = ∂L/∂Re M + j·∂L/∂Im M` for the cascaded matrix `M`.
///
/// Each output is `∂L/∂Re ψ + j·∂L/∂Im ψ` per RIS element; the angle gradient
/// follows as `Re(conj(g)·jψ)`.
pub fn cascade_phase_gradients(
    links: &LinkSet,
    psi1: &[C64],
    psi2: &[C64],
    order: CascadeOrder,
    grad: &ComplexMatrix,
) -> (Vec<C64>, Vec<C64>) {
    let (u1, u2, y1, y2, e) = (
        links.u1.inner(),
        links.u2.inner(),
        links.y1.inner(),
        links.y2.inner(),
        links.e.inner(),
    );
    let g = grad.inner();
    let scale_cols = |m: &nalgebra::DMatrix<C64>, d: &[C64]| {
        let mut out = m.clone();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            col *= d[j];
        }
        out
    };
    let scale_rows = |m: &nalgebra::DMatrix<C64>, d: &[C64]| {
        let mut out = m.clone();
        for (i, mut row) in out.row_iter_mut().enumerate() {
            row *= d[i];
        }
        out
    };
    // diag(Lᴴ·g·Rᴴ) = Σ_k (Lᴴg)[a,k]·conj(R[a,k])
    let diag = |left: &nalgebra::DMatrix<C64>, right: &nalgebra::DMatrix<C64>| -> Vec<C64> {
        let lg = left.adjoint() * g;
        (0..lg.nrows())
            .map(|a| {
                (0..lg.ncols())
                    .map(|k| lg[(a, k)] * right[(a, k)].conj())
                    .sum()
            })
            .collect()
    };
    match order {
        CascadeOrder::Legitimate => {
            let w1 = scale_cols(y2, psi2) * e + y1;
            let v2 = e * scale_rows(u1, psi1) + u2;
            (diag(&w1, u1), diag(y2, &v2))
        }
        CascadeOrder::Adversary => {
            let v1 = e * scale_rows(u2, psi2) + u1;
            let w2 = scale_cols(y1, psi1) * e + y2;
            (diag(y1, &v1), diag(&w2, u2))
        }
    }
}

fn check_len(expected: usize, got: usize) -> Result<(), LinalgError> {
    if expected != got {
        return Err(LinalgError::DimensionMismatch {
            expected: (expected, expected),
            actual: (got, got),
        });
    }
    Ok(())
}
