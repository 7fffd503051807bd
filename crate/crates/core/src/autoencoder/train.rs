use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelModel, ChannelRealization};
use crate::neural::{AdamConfig, AdamState, Mode, Tensor};

use super::{sample_noise, Autoencoder, AutoencoderError, BlockInput, OneHotBlock};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Training set size in symbols; rounded up to whole blocks.
    pub train_symbols: usize,
    pub batch_blocks: usize,
    pub learning_rate: f64,
    /// SNR used for the training noise, independent of the evaluation SNR.
    pub snr_db: f64,
    /// Draw a fresh channel realization for every block visit. When false,
    /// each training block keeps one realization for the whole run.
    pub fresh_channels: bool,
}

impl TrainConfig {
    pub fn desk() -> Self {
        Self {
            epochs: 200,
            train_symbols: 8192,
            batch_blocks: 64,
            learning_rate: 1e-3,
            snr_db: 15.0,
            fresh_channels: true,
        }
    }

    pub fn paper() -> Self {
        Self {
            epochs: 1000,
            train_symbols: 100_000,
            ..Self::desk()
        }
    }

    pub fn validate(&self) -> Result<(), AutoencoderError> {
        let bad = |field: &'static str, reason: &'static str| {
            Err(AutoencoderError::InvalidConfig { field, reason })
        };
        if self.epochs == 0 {
            return bad("epochs", "must be at least 1");
        }
        if self.train_symbols == 0 {
            return bad("train_symbols", "must be at least 1");
        }
        if self.batch_blocks == 0 {
            return bad("batch_blocks", "must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate", "must be positive and finite");
        }
        if !self.snr_db.is_finite() {
            return bad("snr_db", "must be finite");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean training loss per epoch.
    pub loss_history: Vec<f64>,
}

/// Trains all four networks jointly with Adam. `on_epoch(epoch, loss)` runs
/// after every epoch.
pub fn train<R: Rng + ?Sized>(
    ae: &mut Autoencoder,
    tc: &TrainConfig,
    rng: &mut R,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<TrainReport, AutoencoderError> {
    tc.validate()?;
    let cfg = ae.config.clone();
    let model = ChannelModel::new(cfg.channel.clone())?;
    let sigma2 = cfg.sigma2_for_snr(tc.snr_db);
    let num_blocks = tc.train_symbols.div_ceil(cfg.block_len);
    let dataset: Vec<OneHotBlock> = (0..num_blocks)
        .map(|_| OneHotBlock::random(cfg.messages, cfg.block_len, rng))
        .collect();
    let fixed: Vec<ChannelRealization> = if tc.fresh_channels {
        Vec::new()
    } else {
        (0..num_blocks).map(|_| model.sample(rng)).collect()
    };
    let mut adam = AdamState::new(
        AdamConfig {
            learning_rate: tc.learning_rate,
            ..AdamConfig::default()
        },
        ae.param_sizes(),
    );
    let mut order: Vec<usize> = (0..num_blocks).collect();
    let mut history = Vec::with_capacity(tc.epochs);
    for epoch in 0..tc.epochs {
        order.shuffle(rng);
        let mut total = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(tc.batch_blocks) {
            let drawn: Vec<ChannelRealization> = if tc.fresh_channels {
                chunk.iter().map(|_| model.sample(rng)).collect()
            } else {
                Vec::new()
            };
            let noise: Vec<_> = chunk
                .iter()
                .map(|_| sample_noise(cfg.n_r(), cfg.block_len, sigma2, rng))
                .collect();
            let inputs: Vec<BlockInput> = chunk
                .iter()
                .enumerate()
                .map(|(j, &idx)| BlockInput {
                    block: &dataset[idx],
                    realization: if tc.fresh_channels {
                        &drawn[j]
                    } else {
                        &fixed[idx]
                    },
                    noise: &noise[j],
                    attack: None,
                })
                .collect();
            let trace = ae.run(&inputs, Mode::Train, true)?;
            assert!(
                trace.max_modulus_error() < 1e-12,
                "phase shift left the unit circle"
            );
            let labels: Vec<usize> = inputs
                .iter()
                .flat_map(|i| i.block.labels().iter().copied())
                .collect();
            let target = Tensor::one_hot(cfg.messages, inputs.len(), cfg.block_len, &labels);
            let (loss, grad) = cfg.loss.evaluate(&trace.probs, &target);
            if !loss.is_finite() {
                return Err(AutoencoderError::Diverged { epoch });
            }
            let grads = ae.backward(&trace, &grad)?;
            if let Some(rec) = trace.records() {
                for (net, r) in ae.networks_mut().into_iter().zip(rec) {
                    net.commit_stats(r);
                }
            }
            adam.update(ae.params_mut(), &grads.into_flat());
            total += loss;
            batches += 1;
        }
        let mean = total / batches as f64;
        if !mean.is_finite() {
            return Err(AutoencoderError::Diverged { epoch });
        }
        history.push(mean);
        on_epoch(epoch, mean);
    }
    Ok(TrainReport {
        loss_history: history,
    })
}
