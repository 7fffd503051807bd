use serde::{Deserialize, Serialize};

use crate::channel::{unit_cascade_omega, ArrayGeometry, ChannelConfig, ScatteringParams};
use crate::neural::LossKind;

use super::AutoencoderError;

/// Scale presets: a uniformly shrunk laptop-sized system, and the full-size
/// system (16 antennas, 32-element surfaces, 64 messages, blocks of 20).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Desk,
    Paper,
}

/// Everything that fixes the shapes and the physics of one system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub channel: ChannelConfig,
    /// Message cardinality `M`.
    pub messages: usize,
    /// Symbols per block `B_L`.
    pub block_len: usize,
    /// Transmit power `P` (linear); encoder output entries have mean power `P²`.
    pub power: f64,
    /// Noise variance `σ²` (linear).
    pub sigma2: f64,
    /// Width of the hidden convolution layers of every network.
    pub hidden: usize,
    pub loss: LossKind,
}

impl SystemConfig {
    pub fn preset(preset: Preset) -> Self {
        match preset {
            Preset::Desk => Self::build(4, 2, 4, 16, 8, 128),
            Preset::Paper => Self::build(16, 4, 8, 64, 20, 256),
        }
    }

    pub fn desk() -> Self {
        Self::preset(Preset::Desk)
    }

    pub fn paper() -> Self {
        Self::preset(Preset::Paper)
    }

    fn build(
        antennas: usize,
        ris_v: usize,
        ris_h: usize,
        messages: usize,
        block_len: usize,
        hidden: usize,
    ) -> Self {
        let elements = ris_v * ris_h;
        let omega = unit_cascade_omega(elements, elements, antennas);
        let channel = ChannelConfig {
            encoder: ArrayGeometry::ula(antennas, 0.5),
            decoder: ArrayGeometry::ula(antennas, 0.5),
            ris1: ArrayGeometry::upa(ris_v, ris_h, 0.5, 0.5),
            ris2: ArrayGeometry::upa(ris_v, ris_h, 0.5, 0.5),
            adversary: ArrayGeometry::ula(antennas, 0.5),
            scattering: ScatteringParams::default(),
            kappa: 0.2,
            omega,
            adversary_omega: omega,
        };
        let mut cfg = Self {
            channel,
            messages,
            block_len,
            power: 1.0,
            sigma2: 1.0,
            hidden,
            loss: LossKind::Bce,
        };
        cfg.set_snr_db(15.0);
        cfg
    }

    pub fn n_t(&self) -> usize {
        self.channel.encoder.count_total()
    }

    pub fn n_r(&self) -> usize {
        self.channel.decoder.count_total()
    }

    pub fn a1(&self) -> usize {
        self.channel.ris1.count_total()
    }

    pub fn a2(&self) -> usize {
        self.channel.ris2.count_total()
    }

    /// Adversary transmit antenna count.
    pub fn n_adv(&self) -> usize {
        self.channel.adversary.count_total()
    }

    /// Decoder input channels: stacked real/imag parts of `r` and `vec(K)`.
    pub fn decoder_channels(&self) -> usize {
        2 * (self.n_r() + self.n_r() * self.n_t())
    }

    /// `10·log₁₀(P/σ²)`.
    pub fn snr_db(&self) -> f64 {
        10.0 * libm::log10(self.power / self.sigma2)
    }

    pub fn sigma2_for_snr(&self, snr_db: f64) -> f64 {
        self.power / libm::pow(10.0, snr_db / 10.0)
    }

    pub fn set_snr_db(&mut self, snr_db: f64) {
        self.sigma2 = self.sigma2_for_snr(snr_db);
    }

    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.set_snr_db(snr_db);
        self
    }

    pub fn validate(&self) -> Result<(), AutoencoderError> {
        let bad = |field: &'static str, reason: &'static str| {
            Err(AutoencoderError::InvalidConfig { field, reason })
        };
        self.channel.validate()?;
        if self.messages < 2 {
            return bad("messages", "at least two messages are required");
        }
        if self.block_len == 0 {
            return bad("block_len", "must be at least 1");
        }
        if !(self.power > 0.0 && self.power.is_finite()) {
            return bad("power", "must be positive and finite");
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return bad("sigma2", "must be positive and finite");
        }
        if self.hidden == 0 {
            return bad("hidden", "must be at least 1");
        }
        if self.channel.ris2.count_total() == 0 || self.channel.ris1.count_total() == 0 {
            return bad("channel", "surfaces need at least one element");
        }
        Ok(())
    }
}
