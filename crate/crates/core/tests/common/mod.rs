#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use risae_core::autoencoder::{Autoencoder, SystemConfig};
use risae_core::channel::{unit_cascade_omega, ArrayGeometry, ChannelConfig, ScatteringParams};
use risae_core::linalg::{ComplexMatrix, C64};
use risae_core::neural::LossKind;

/// Small enough for finite differences and fast training.
pub fn tiny_config() -> SystemConfig {
    let omega = unit_cascade_omega(2, 2, 2);
    SystemConfig {
        channel: ChannelConfig {
            encoder: ArrayGeometry::ula(2, 0.5),
            decoder: ArrayGeometry::ula(2, 0.5),
            ris1: ArrayGeometry::upa(1, 2, 0.5, 0.5),
            ris2: ArrayGeometry::upa(1, 2, 0.5, 0.5),
            adversary: ArrayGeometry::ula(2, 0.5),
            scattering: ScatteringParams {
                num_scatterers: 3,
                ..ScatteringParams::default()
            },
            kappa: 0.2,
            omega,
            adversary_omega: omega,
        },
        messages: 4,
        block_len: 3,
        power: 1.0,
        sigma2: 0.05,
        hidden: 6,
        loss: LossKind::Bce,
    }
}

pub fn tiny_autoencoder(seed: u64) -> Autoencoder {
    Autoencoder::new(tiny_config(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
