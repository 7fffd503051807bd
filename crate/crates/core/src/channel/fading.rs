//! Double-scattering NLoS draws and their Rician combination with LoS.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::linalg::{hermitian_sqrt, ComplexMatrix, HermitianMatrix, LinalgError, C64};

/// Large-scale gain `omega` (Ω) and LoS-dominance `kappa` (χ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RicianParams {
    pub omega: f64,
    pub kappa: f64,
}

/// One standard circularly-symmetric complex Gaussian draw, `CN(0, 1)`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}

pub fn complex_gaussian_matrix<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> ComplexMatrix {
    // Column-major fill order keeps the draw sequence independent of nalgebra internals.
    let mut m = ComplexMatrix::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            m.set(r, c, complex_gaussian(rng));
        }
    }
    m
}

/// Square-root correlation factors of one link, computed once per
/// configuration and reused for every draw.
#[derive(Debug, Clone)]
pub struct NlosFactors {
    row_sqrt: ComplexMatrix,
    scatterer_sqrt: ComplexMatrix,
    col_sqrt: ComplexMatrix,
    scale: f64,
}

impl NlosFactors {
    /// `row` is the correlation on the row side of the link matrix (`N₁`),
    /// `col` on the column side (`N₂`).
    pub fn new(
        row: &HermitianMatrix,
        scatterers: &HermitianMatrix,
        col: &HermitianMatrix,
    ) -> Result<Self, LinalgError> {
        Ok(Self {
            row_sqrt: hermitian_sqrt(row)?,
            scatterer_sqrt: hermitian_sqrt(scatterers)?,
            col_sqrt: hermitian_sqrt(col)?,
            scale: 1.0 / libm::sqrt(scatterers.dim() as f64),
        })
    }

    pub fn rows(&self) -> usize {
        self.row_sqrt.rows()
    }

    pub fn cols(&self) -> usize {
        self.col_sqrt.rows()
    }

    pub fn num_scatterers(&self) -> usize {
        self.scatterer_sqrt.rows()
    }

    /// `SC^{-1/2} · R_row^{1/2} · Q · S^{1/2} · P · R_col^{1/2}` for given
    /// small-scale draws `Q` (`N₁ × SC`) and `P` (`SC × N₂`).
    pub fn compose(
        &self,
        q: &ComplexMatrix,
        p: &ComplexMatrix,
    ) -> Result<ComplexMatrix, LinalgError> {
        Ok(self
            .row_sqrt
            .try_mul(q)?
            .try_mul(&self.scatterer_sqrt)?
            .try_mul(p)?
            .try_mul(&self.col_sqrt)?
            .scale_real(self.scale))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ComplexMatrix {
        let sc = self.num_scatterers();
        let q = complex_gaussian_matrix(self.rows(), sc, rng);
        let p = complex_gaussian_matrix(sc, self.cols(), rng);
        self.compose(&q, &p).expect("factor shapes are consistent")
    }
}

/// One NLoS draw from the three correlation matrices.
pub fn nlos_sample<R: Rng + ?Sized>(
    r_row: &HermitianMatrix,
    r_sc: &HermitianMatrix,
    r_col: &HermitianMatrix,
    rng: &mut R,
) -> Result<ComplexMatrix, LinalgError> {
    Ok(NlosFactors::new(r_row, r_sc, r_col)?.sample(rng))
}

/// `√Ω (√(χ/(χ+1)) N̄ + √(1/(χ+1)) N̂)`.
pub fn link_sample(
    rician: RicianParams,
    los: &ComplexMatrix,
    nlos: &ComplexMatrix,
) -> Result<ComplexMatrix, LinalgError> {
    let amp = libm::sqrt(rician.omega);
    let los_w = libm::sqrt(rician.kappa / (rician.kappa + 1.0));
    let nlos_w = libm::sqrt(1.0 / (rician.kappa + 1.0));
    los.scale_real(amp * los_w)
        .try_add(&nlos.scale_real(amp * nlos_w))
}
