use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attack::jamming;
use crate::channel::{ChannelModel, ChannelRealization};
use crate::linalg::{ComplexMatrix, C64};
use crate::neural::Mode;

use super::{
    sample_noise, AttackChannel, AttackInput, Autoencoder, AutoencoderError, BlockInput,
    OneHotBlock,
};

const EVAL_BATCH: usize = 64;
const Z95: f64 = 1.959_963_984_540_054;

/// Symbol error count out of a number of decided symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SerEstimate {
    pub errors: u64,
    pub trials: u64,
}

impl SerEstimate {
    pub fn ser(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        self.errors as f64 / self.trials as f64
    }

    /// Half-width of the 95% Wilson score interval.
    pub fn ci_halfwidth(&self) -> f64 {
        if self.trials == 0 {
            return 0.5;
        }
        let n = self.trials as f64;
        let p = self.ser();
        let z2 = Z95 * Z95;
        Z95 / (1.0 + z2 / n) * libm::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n))
    }

    /// Wilson interval centre; differs from [`SerEstimate::ser`] for small
    /// counts.
    pub fn ci_center(&self) -> f64 {
        if self.trials == 0 {
            return 0.5;
        }
        let n = self.trials as f64;
        let z2 = Z95 * Z95;
        (self.ser() + z2 / (2.0 * n)) / (1.0 + z2 / n)
    }

    pub fn ci(&self) -> (f64, f64) {
        let (c, h) = (self.ci_center(), self.ci_halfwidth());
        ((c - h).max(0.0), (c + h).min(1.0))
    }

    /// Whether the two 95% intervals intersect.
    pub fn overlaps(&self, other: &SerEstimate) -> bool {
        let (a, b) = (self.ci(), other.ci());
        a.0 <= b.1 && b.0 <= a.1
    }
}

/// What the adversary transmits during evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum AttackSource {
    Secured,
    /// One fixed transmit vector for every symbol of every block.
    Universal {
        p_adv: Vec<C64>,
        channel: AttackChannel,
    },
    /// Fresh isotropic Gaussian vector of norm² `budget` for every symbol.
    Jamming {
        budget: f64,
        channel: AttackChannel,
    },
}

/// Counts decision errors over `num_blocks` random blocks. `decide` gets a
/// batch of blocks and returns decisions in `block·B_L + symbol` order.
pub fn evaluate_ser_with<R, F>(
    messages: usize,
    block_len: usize,
    num_blocks: usize,
    rng: &mut R,
    mut decide: F,
) -> Result<SerEstimate, AutoencoderError>
where
    R: Rng + ?Sized,
    F: FnMut(&[OneHotBlock], &mut R) -> Result<Vec<usize>, AutoencoderError>,
{
    let mut est = SerEstimate {
        errors: 0,
        trials: 0,
    };
    let mut done = 0;
    while done < num_blocks {
        let n = EVAL_BATCH.min(num_blocks - done);
        let blocks: Vec<OneHotBlock> = (0..n)
            .map(|_| OneHotBlock::random(messages, block_len, rng))
            .collect();
        let decisions = decide(&blocks, rng)?;
        let truth = blocks.iter().flat_map(|b| b.labels().iter().copied());
        est.errors += decisions.iter().zip(truth).filter(|(d, t)| d != &t).count() as u64;
        est.trials += (n * block_len) as u64;
        done += n;
    }
    Ok(est)
}

/// Symbol error rate of the trained system (inference mode) under `source`,
/// at the noise level in `ae.config`.
///
/// Blocks, channels and noise come from `rng` in the same order for every
/// source, so different sources evaluated from equal seeds see the same
/// draws; jamming vectors come from a separate stream.
pub fn evaluate_ser<R: Rng + ?Sized>(
    ae: &Autoencoder,
    source: &AttackSource,
    num_blocks: usize,
    rng: &mut R,
) -> Result<SerEstimate, AutoencoderError> {
    let cfg = &ae.config;
    let model = ChannelModel::new(cfg.channel.clone())?;
    let mut jam_rng = ChaCha8Rng::seed_from_u64(rng.random());
    let (nr, nadv, bl) = (cfg.n_r(), cfg.n_adv(), cfg.block_len);
    let universal = match source {
        AttackSource::Universal { p_adv, .. } => {
            if p_adv.len() != nadv {
                return Err(AutoencoderError::ShapeMismatch {
                    what: "perturbation length",
                    expected: nadv,
                    actual: p_adv.len(),
                });
            }
            Some(ComplexMatrix::from_fn(nadv, bl, |r, _| p_adv[r]))
        }
        _ => None,
    };
    evaluate_ser_with(cfg.messages, bl, num_blocks, rng, |blocks, rng| {
        let reals: Vec<ChannelRealization> = blocks.iter().map(|_| model.sample(rng)).collect();
        let noise: Vec<ComplexMatrix> = blocks
            .iter()
            .map(|_| sample_noise(nr, bl, cfg.sigma2, rng))
            .collect();
        let jam: Vec<ComplexMatrix> = match source {
            AttackSource::Jamming { budget, .. } => blocks
                .iter()
                .map(|_| {
                    let cols: Vec<Vec<C64>> = (0..bl)
                        .map(|_| jamming(*budget, nadv, &mut jam_rng).values)
                        .collect();
                    ComplexMatrix::from_fn(nadv, bl, |r, c| cols[c][r])
                })
                .collect(),
            _ => Vec::new(),
        };
        let inputs: Vec<BlockInput> = blocks
            .iter()
            .enumerate()
            .map(|(j, block)| BlockInput {
                block,
                realization: &reals[j],
                noise: &noise[j],
                attack: match source {
                    AttackSource::Secured => None,
                    AttackSource::Universal { channel, .. } => Some(AttackInput {
                        channel: *channel,
                        signals: universal.as_ref(),
                    }),
                    AttackSource::Jamming { channel, .. } => Some(AttackInput {
                        channel: *channel,
                        signals: Some(&jam[j]),
                    }),
                },
            })
            .collect();
        Ok(ae.run(&inputs, Mode::Infer, false)?.decisions())
    })
}
