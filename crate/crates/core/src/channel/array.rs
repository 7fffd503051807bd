//! Array geometries, steering vectors and rank-one LoS components.

use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::linalg::{kron_vec, ComplexMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrayKind {
    Ula,
    Upa,
}

/// Antenna or RIS element layout. Spacings are in wavelengths.
///
/// A ULA is stored as a `1 × count` UPA lying along the horizontal axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub kind: ArrayKind,
    pub count_v: usize,
    pub count_h: usize,
    pub spacing_v: f64,
    pub spacing_h: f64,
}

impl ArrayGeometry {
    pub fn ula(count: usize, spacing: f64) -> Self {
        Self {
            kind: ArrayKind::Ula,
            count_v: 1,
            count_h: count,
            spacing_v: spacing,
            spacing_h: spacing,
        }
    }

    pub fn upa(count_v: usize, count_h: usize, spacing_v: f64, spacing_h: f64) -> Self {
        Self {
            kind: ArrayKind::Upa,
            count_v,
            count_h,
            spacing_v,
            spacing_h,
        }
    }

    pub fn count_total(&self) -> usize {
        self.count_v * self.count_h
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        if self.count_v == 0 || self.count_h == 0 {
            return Err("array element counts must be positive");
        }
        if self.kind == ArrayKind::Ula && self.count_v != 1 {
            return Err("a ULA has exactly one row");
        }
        if !(self.spacing_v > 0.0 && self.spacing_h > 0.0) {
            return Err("array spacings must be positive");
        }
        Ok(())
    }

    /// Response toward `(azimuth, elevation)`; a ULA ignores the elevation.
    pub fn steering(&self, azimuth: f64, elevation: f64) -> Vec<C64> {
        match self.kind {
            ArrayKind::Ula => steering_ula(self.count_h, self.spacing_h, azimuth),
            ArrayKind::Upa => steering_upa(self, azimuth, elevation),
        }
    }
}

/// Element `n` is `exp(j·2π·spacing·n·sin(angle))`, `n` starting at 0.
pub fn steering_ula(count: usize, spacing: f64, angle: f64) -> Vec<C64> {
    let phase_step = 2.0 * PI * spacing * libm::sin(angle);
    (0..count)
        .map(|n| C64::from_polar(1.0, phase_step * n as f64))
        .collect()
}

/// `a_v(elevation) ⊗ a_h(azimuth)` over the two axes of the planar array.
pub fn steering_upa(geom: &ArrayGeometry, azimuth: f64, elevation: f64) -> Vec<C64> {
    let a_v = steering_ula(geom.count_v, geom.spacing_v, elevation);
    let a_h = steering_ula(geom.count_h, geom.spacing_h, azimuth);
    kron_vec(&a_v, &a_h)
}

/// LoS component `rx · txᵀ` (transpose without conjugation).
pub fn los_matrix(rx_steering: &[C64], tx_steering: &[C64]) -> ComplexMatrix {
    ComplexMatrix::from_fn(rx_steering.len(), tx_steering.len(), |r, c| {
        rx_steering[r] * tx_steering[c]
    })
}
