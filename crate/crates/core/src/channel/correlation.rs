//! Finite-scattering spatial correlation matrices.

use core::f64::consts::PI;

use crate::linalg::{kron, ComplexMatrix, HermitianMatrix, C64};

use super::array::{ArrayGeometry, ArrayKind};

/// Uniform-scatterer correlation along one array axis.
///
/// Entry `(m, n)` is `SC⁻¹ Σ_k exp(j·2π·spacing·(m−n)·sin(k·spread/(1−SC)))`
/// with `k` stepping by one over `[−(SC−1)/2, (SC−1)/2]`, i.e. exactly `SC`
/// terms (half-integer `k` when `SC` is even). A single scatterer gives the
/// all-ones matrix.
pub fn corr_uniform(
    count: usize,
    spacing: f64,
    spread: f64,
    num_scatterers: usize,
) -> HermitianMatrix {
    let sc = num_scatterers.max(1);
    let half = 0.5 * (sc as f64 - 1.0);
    let sines: alloc::vec::Vec<f64> = (0..sc)
        .map(|i| {
            if sc == 1 {
                0.0
            } else {
                let k = i as f64 - half;
                libm::sin(k * spread / (1.0 - sc as f64))
            }
        })
        .collect();
    let inv = 1.0 / sc as f64;
    let m = ComplexMatrix::from_fn(count, count, |r, c| {
        if r == c {
            return C64::new(1.0, 0.0);
        }
        let q = r as f64 - c as f64;
        sines
            .iter()
            .map(|s| C64::from_polar(1.0, 2.0 * PI * spacing * q * s))
            .sum::<C64>()
            * inv
    });
    // Entries (m,n) and (n,m) are computed from ±q, conjugate by construction.
    HermitianMatrix::new(m).expect("uniform correlation is Hermitian")
}

/// Correlation of a whole array: one axis for a ULA, `R_v ⊗ R_h` for a UPA,
/// matching the `a_v ⊗ a_h` steering-vector ordering.
pub fn array_correlation(
    geom: &ArrayGeometry,
    spread: f64,
    num_scatterers: usize,
) -> HermitianMatrix {
    match geom.kind {
        ArrayKind::Ula => corr_uniform(geom.count_h, geom.spacing_h, spread, num_scatterers),
        ArrayKind::Upa => {
            let rv = corr_uniform(geom.count_v, geom.spacing_v, spread, num_scatterers);
            let rh = corr_uniform(geom.count_h, geom.spacing_h, spread, num_scatterers);
            HermitianMatrix::new(kron(rv.matrix(), rh.matrix()))
                .expect("kron of Hermitian is Hermitian")
        }
    }
}
