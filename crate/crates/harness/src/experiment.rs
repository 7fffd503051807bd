//! Training, attack generation and SER sweeps driven by an
//! [`ExperimentConfig`].
//!
//! Every random stream is seeded from the master seed and a label naming
//! its role, so a cell's result does not depend on which other cells run.
//! Evaluation streams leave out the attack kind and attack channel: all
//! benchmarks of one (SNR, scatterers) cell see the same messages,
//! channels and noise.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use risae_core::attack::{jamming, rmaef, rmaep, AttackError, PerturbationVector};
use risae_core::autoencoder::{
    evaluate_ser, train, AttackChannel, AttackSource, Autoencoder, SerEstimate, TrainReport,
};
use risae_core::channel::{ChannelModel, ChannelRealization};
use sha2::{Digest, Sha256};

use crate::config::{channel_name, AttackKind, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::results::{sort_rows, ResultRow, NO_CHANNEL};

pub fn derive_seed(master: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(label.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

pub fn stream(master: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, label))
}

/// One epoch of the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    pub wall_s: f64,
}

pub fn train_model(
    cfg: &ExperimentConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<(Autoencoder, TrainReport, Vec<EpochLog>)> {
    let mut ae = Autoencoder::new(cfg.system.clone(), &mut stream(cfg.seed, "init"))?;
    let start = Instant::now();
    let mut log = Vec::with_capacity(cfg.training.epochs);
    let report = train(
        &mut ae,
        &cfg.training,
        &mut stream(cfg.seed, "train"),
        |epoch, loss| {
            let entry = EpochLog {
                epoch,
                loss,
                wall_s: start.elapsed().as_secs_f64(),
            };
            on_epoch(&entry);
            log.push(entry);
        },
    )?;
    Ok((ae, report, log))
}

pub fn train_log_csv(log: &[EpochLog]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["epoch", "loss", "wall_time_s"])
        .expect("in-memory write");
    for e in log {
        w.write_record([
            e.epoch.to_string(),
            crate::results::format_f64(e.loss),
            format!("{:.3}", e.wall_s),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Where and under which conditions a sweep cell is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub snr_db: f64,
    pub scatterers: usize,
    pub channel: AttackChannel,
}

impl Cell {
    fn label(&self) -> String {
        format!("snr={:?}/sc={}", self.snr_db, self.scatterers)
    }
}

/// The trained system placed in the cell's conditions.
pub fn system_for(ae: &Autoencoder, cell: &Cell) -> Autoencoder {
    let mut a = ae.clone();
    a.config.set_snr_db(cell.snr_db);
    a.config.channel.scattering.num_scatterers = cell.scatterers;
    a
}

/// Universal perturbation for `kind` in `cell`, or a single jamming draw.
/// An attack that found nothing to fold in yields its zero vector; the
/// returned flag reports that.
pub fn generate_perturbation(
    ae: &Autoencoder,
    cfg: &ExperimentConfig,
    kind: AttackKind,
    cell: &Cell,
) -> Result<(PerturbationVector, bool)> {
    let a = system_for(ae, cell);
    let model = ChannelModel::new(a.config.channel.clone())
        .map_err(risae_core::autoencoder::AutoencoderError::from)?;
    let budget = cfg.attack.budget().linear(&a.config);
    let mut rng = stream(
        cfg.seed,
        &format!(
            "attack/{kind}/{}/{}",
            cell.label(),
            channel_name(cell.channel)
        ),
    );
    let pgd = &cfg.attack.pgd;
    match kind {
        AttackKind::Secured => Ok((PerturbationVector::zero(a.config.n_adv(), budget), true)),
        AttackKind::Jamming => Ok((jamming(budget, a.config.n_adv(), &mut rng), true)),
        AttackKind::Rmaef => Ok((
            rmaef(&a, &model, budget, cell.channel, pgd, &mut rng)?.perturbation,
            true,
        )),
        AttackKind::Rmaep => match rmaep(&a, &model, budget, cell.channel, pgd, &mut rng) {
            Ok(r) => Ok((r.perturbation, true)),
            Err(AttackError::NoProgress(r)) => Ok((r.perturbation, false)),
            Err(e) => Err(e.into()),
        },
    }
}

/// SER of `kind` in `cell`. Universal attacks use `perturbation` when
/// given and generate their own otherwise.
pub fn evaluate_cell(
    ae: &Autoencoder,
    cfg: &ExperimentConfig,
    kind: AttackKind,
    cell: &Cell,
    perturbation: Option<&PerturbationVector>,
) -> Result<ResultRow> {
    let a = system_for(ae, cell);
    let budget = cfg.attack.budget().linear(&a.config);
    let source = match kind {
        AttackKind::Secured => AttackSource::Secured,
        AttackKind::Jamming => AttackSource::Jamming {
            budget,
            channel: cell.channel,
        },
        AttackKind::Rmaef | AttackKind::Rmaep => {
            let p = match perturbation {
                Some(p) => p.clone(),
                None => {
                    let (p, progressed) = generate_perturbation(ae, cfg, kind, cell)?;
                    if !progressed {
                        eprintln!(
                            "warning: {kind} made no progress at {}; evaluating the zero perturbation",
                            cell.label()
                        );
                    }
                    p
                }
            };
            if p.values.len() != a.config.n_adv() {
                return Err(HarnessError::config(
                    "perturbation",
                    format!(
                        "has {} entries, the system needs {}",
                        p.values.len(),
                        a.config.n_adv()
                    ),
                ));
            }
            AttackSource::Universal {
                p_adv: p.values,
                channel: cell.channel,
            }
        }
    };
    let mut rng = stream(cfg.seed, &format!("eval/{}", cell.label()));
    let est: SerEstimate = evaluate_ser(&a, &source, cfg.sweep.test_blocks, &mut rng)?;
    Ok(ResultRow {
        snr_db: cell.snr_db,
        attack: kind,
        ser: est.ser(),
        trials: est.trials,
        ci_halfwidth: est.ci_halfwidth(),
        scatterers: cell.scatterers,
        attack_channel: if kind == AttackKind::Secured {
            NO_CHANNEL.to_string()
        } else {
            channel_name(cell.channel).to_string()
        },
    })
}

/// Every (scatterers, attack channel, attack, SNR) cell of the sweep. The
/// secured system is evaluated once per (scatterers, SNR).
pub fn run_sweep(
    ae: &Autoencoder,
    cfg: &ExperimentConfig,
    mut progress: impl FnMut(&ResultRow),
) -> Result<Vec<ResultRow>> {
    let s = &cfg.sweep;
    let mut rows = Vec::new();
    for &scatterers in &s.scatterers {
        for &snr_db in &s.snr_db {
            for &kind in &s.attacks {
                let channels: &[AttackChannel] = if kind == AttackKind::Secured {
                    &s.attack_channels[..1]
                } else {
                    &s.attack_channels
                };
                for &channel in channels {
                    let cell = Cell {
                        snr_db,
                        scatterers,
                        channel,
                    };
                    let row = evaluate_cell(ae, cfg, kind, &cell, None)?;
                    progress(&row);
                    rows.push(row);
                }
            }
        }
    }
    sort_rows(&mut rows);
    Ok(rows)
}

/// A realization of the cell's channel, drawn from its own stream.
pub fn sample_realization(
    ae: &Autoencoder,
    cfg: &ExperimentConfig,
    cell: &Cell,
) -> Result<ChannelRealization> {
    let a = system_for(ae, cell);
    let model = ChannelModel::new(a.config.channel.clone())
        .map_err(risae_core::autoencoder::AutoencoderError::from)?;
    Ok(model.sample(&mut stream(cfg.seed, &format!("dump/{}", cell.label()))))
}
