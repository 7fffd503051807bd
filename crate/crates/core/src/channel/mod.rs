//! Finite-scattering Rician channels for the legitimate double-RIS links and
//! the adversary's links, plus the cascaded end-to-end matrices.
//!
//! Every link matrix `N ∈ {U₁, U₂, Y₁, Y₂, E}` combines a rank-one LoS term
//! built from array steering vectors with a double-scattering NLoS draw. The
//! correlation square roots depend only on the configuration and are computed
//! once in [`ChannelModel::new`].

mod array;
mod cascade;
mod correlation;
mod fading;

use core::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use array::{los_matrix, steering_ula, steering_upa, ArrayGeometry, ArrayKind};
pub use cascade::{cascade_phase_gradients, cascaded_matrix, CascadeOrder, PhaseShiftMatrix};
pub use correlation::{array_correlation, corr_uniform};
pub use fading::{
    complex_gaussian, complex_gaussian_matrix, link_sample, nlos_sample, NlosFactors, RicianParams,
};

use crate::linalg::{ComplexMatrix, LinalgError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChannelError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid channel configuration: {0}")]
    InvalidConfig(&'static str),
}

/// Scatterer count and angular spreads (radians) shared by every link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringParams {
    pub num_scatterers: usize,
    /// Spread seen by the encoder, decoder and adversary arrays.
    pub spread_tx: f64,
    /// Spread seen by the RIS arrays.
    pub spread_ris: f64,
    /// Spread among the scattering points.
    pub spread_sc: f64,
    /// Scatterer spacing in wavelengths.
    pub scatterer_spacing: f64,
}

impl Default for ScatteringParams {
    fn default() -> Self {
        Self {
            num_scatterers: 9,
            spread_tx: PI / 6.0,
            spread_ris: PI / 6.0,
            spread_sc: PI / 6.0,
            scatterer_spacing: 0.5,
        }
    }
}

impl ScatteringParams {
    pub fn validate(&self) -> Result<(), &'static str> {
        if self.num_scatterers == 0 {
            return Err("num_scatterers must be at least 1");
        }
        for s in [self.spread_tx, self.spread_ris, self.spread_sc] {
            if !(s > 0.0 && s <= PI) {
                return Err("angular spreads must lie in (0, pi]");
            }
        }
        if !(self.scatterer_spacing > 0.0) {
            return Err("scatterer spacing must be positive");
        }
        Ok(())
    }
}

/// Arrival and departure directions of one link (radians).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleSet {
    pub azimuth_aoa: f64,
    pub elevation_aoa: f64,
    pub azimuth_aod: f64,
    pub elevation_aod: f64,
}

impl AngleSet {
    /// Azimuths uniform on `[−π, π)`, elevations uniform on `[−π/2, π/2]`.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self {
            azimuth_aoa: rng.random_range(-PI..PI),
            elevation_aoa: rng.random_range(-PI / 2.0..=PI / 2.0),
            azimuth_aod: rng.random_range(-PI..PI),
            elevation_aod: rng.random_range(-PI / 2.0..=PI / 2.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub encoder: ArrayGeometry,
    pub decoder: ArrayGeometry,
    pub ris1: ArrayGeometry,
    pub ris2: ArrayGeometry,
    pub adversary: ArrayGeometry,
    pub scattering: ScatteringParams,
    /// LoS-dominant factor χ, shared by every link.
    pub kappa: f64,
    /// Large-scale gain Ω of the legitimate links.
    pub omega: f64,
    /// Large-scale gain Ω of the adversary links.
    pub adversary_omega: f64,
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<(), ChannelError> {
        for g in [
            &self.encoder,
            &self.decoder,
            &self.ris1,
            &self.ris2,
            &self.adversary,
        ] {
            g.validate().map_err(ChannelError::InvalidConfig)?;
        }
        self.scattering
            .validate()
            .map_err(ChannelError::InvalidConfig)?;
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(ChannelError::InvalidConfig(
                "kappa must be finite and nonnegative",
            ));
        }
        if !(self.omega >= 0.0 && self.adversary_omega >= 0.0) {
            return Err(ChannelError::InvalidConfig("omega must be nonnegative"));
        }
        Ok(())
    }
}

/// Per-link gain `ω` for which the cascaded matrix has mean entry power
/// `1/tx_count` under independent unit-modulus phases, i.e. solves
/// `ω³·A₁A₂ + ω²·(A₁+A₂) = 1/tx_count`. Received signal power per antenna
/// then equals the per-antenna transmit power.
pub fn unit_cascade_omega(a1: usize, a2: usize, tx_count: usize) -> f64 {
    let (a1, a2) = (a1 as f64, a2 as f64);
    let target = 1.0 / tx_count.max(1) as f64;
    let f = |w: f64| w * w * w * a1 * a2 + w * w * (a1 + a2);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while f(hi) < target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The five link matrices of one party.
///
/// Legitimate shapes: `U_i: A_i × N_t`, `Y_i: N_r × A_i`, `E: A₂ × A₁`.
/// Adversary shapes mirror them with the adversary antenna count and the
/// inter-RIS link reversed, `E': A₁ × A₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSet {
    pub u1: ComplexMatrix,
    pub u2: ComplexMatrix,
    pub y1: ComplexMatrix,
    pub y2: ComplexMatrix,
    pub e: ComplexMatrix,
}

impl LinkSet {
    pub fn is_finite(&self) -> bool {
        [&self.u1, &self.u2, &self.y1, &self.y2, &self.e]
            .iter()
            .all(|m| m.is_finite())
    }
}

/// All link matrices of one coherence block.
///
/// Channels are static over the block, so every symbol index `i ∈ 0..B_L`
/// maps to the same matrices; [`ChannelRealization::legit`] and
/// [`ChannelRealization::adversary`] take the symbol index for that reason.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub legit: LinkSet,
    pub attack: LinkSet,
}

impl ChannelRealization {
    pub fn legit(&self, _symbol: usize) -> &LinkSet {
        &self.legit
    }

    pub fn adversary(&self, _symbol: usize) -> &LinkSet {
        &self.attack
    }
}

#[derive(Debug, Clone)]
struct LinkModel {
    rx: ArrayGeometry,
    tx: ArrayGeometry,
    nlos: NlosFactors,
    rician: RicianParams,
}

impl LinkModel {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ComplexMatrix, ChannelError> {
        let angles = AngleSet::sample(rng);
        let los = los_matrix(
            &self.rx.steering(angles.azimuth_aoa, angles.elevation_aoa),
            &self.tx.steering(angles.azimuth_aod, angles.elevation_aod),
        );
        let nlos = self.nlos.sample(rng);
        Ok(link_sample(self.rician, &los, &nlos)?)
    }
}

/// Precomputed sampler for [`ChannelRealization`]s.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    config: ChannelConfig,
    legit: [LinkModel; 5],
    attack: [LinkModel; 5],
}

impl ChannelModel {
    pub fn new(config: ChannelConfig) -> Result<Self, ChannelError> {
        config.validate()?;
        let sc = &config.scattering;
        let n_sc = sc.num_scatterers;
        let scat = corr_uniform(n_sc, sc.scatterer_spacing, sc.spread_sc, n_sc);
        let corr = |g: &ArrayGeometry| match g.kind {
            ArrayKind::Ula => array_correlation(g, sc.spread_tx, n_sc),
            ArrayKind::Upa => array_correlation(g, sc.spread_ris, n_sc),
        };
        let link = |rx: &ArrayGeometry,
                    tx: &ArrayGeometry,
                    omega: f64|
         -> Result<LinkModel, ChannelError> {
            Ok(LinkModel {
                rx: *rx,
                tx: *tx,
                nlos: NlosFactors::new(&corr(rx), &scat, &corr(tx))?,
                rician: RicianParams {
                    omega,
                    kappa: config.kappa,
                },
            })
        };
        let c = &config;
        let legit = [
            link(&c.ris1, &c.encoder, c.omega)?,
            link(&c.ris2, &c.encoder, c.omega)?,
            link(&c.decoder, &c.ris1, c.omega)?,
            link(&c.decoder, &c.ris2, c.omega)?,
            link(&c.ris2, &c.ris1, c.omega)?,
        ];
        let w = c.adversary_omega;
        let attack = [
            link(&c.ris1, &c.adversary, w)?,
            link(&c.ris2, &c.adversary, w)?,
            link(&c.decoder, &c.ris1, w)?,
            link(&c.decoder, &c.ris2, w)?,
            link(&c.ris1, &c.ris2, w)?,
        ];
        Ok(Self {
            config,
            legit,
            attack,
        })
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.config
    }

    /// Draws every link independently, with fresh angles per link.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelRealization {
        let draw = |set: &[LinkModel; 5], rng: &mut R| LinkSet {
            u1: set[0].sample(rng).expect("validated shapes"),
            u2: set[1].sample(rng).expect("validated shapes"),
            y1: set[2].sample(rng).expect("validated shapes"),
            y2: set[3].sample(rng).expect("validated shapes"),
            e: set[4].sample(rng).expect("validated shapes"),
        };
        let legit = draw(&self.legit, rng);
        let attack = draw(&self.attack, rng);
        ChannelRealization { legit, attack }
    }
}

/// Convenience wrapper: build the model and draw one realization.
pub fn realization_sample<R: Rng + ?Sized>(
    config: &ChannelConfig,
    rng: &mut R,
) -> Result<ChannelRealization, ChannelError> {
    Ok(ChannelModel::new(config.clone())?.sample(rng))
}
