use alloc::boxed::Box;
use alloc::vec::Vec;

use rand::Rng;

use crate::autoencoder::{
    sample_noise, AttackChannel, AttackInput, Autoencoder, BlockInput, OneHotBlock,
};
use crate::channel::ChannelModel;
use crate::linalg::{ComplexMatrix, C64};
use crate::neural::{Mode, Tensor};

use super::pgd::masked_unit;
use super::{
    enforce_power, pgd_minimal_perturbation, receiver_to_transmit, AttackError, AttackResult,
    Classifier, DecoderClassifier, PerturbationVector, PgdConfig, PgdSearch,
};

/// Per-symbol complex receiver vectors from the first `2·n_r` channels of a
/// single-block decoder-input tensor.
pub fn receiver_perturbations(t: &Tensor, n_r: usize) -> Vec<Vec<C64>> {
    (0..t.length())
        .map(|p| {
            (0..n_r)
                .map(|k| C64::new(t.get(k, 0, p), t.get(n_r + k, 0, p)))
                .collect()
        })
        .collect()
}

/// One probe: a random block over a fresh realization, observed with the
/// current perturbation already on the air.
struct Probe {
    block: OneHotBlock,
    w: Tensor,
    gs: Vec<ComplexMatrix>,
    /// More than half of the block decoded correctly.
    correct: bool,
}

fn probe<R: Rng + ?Sized>(
    ae: &Autoencoder,
    model: &ChannelModel,
    channel: AttackChannel,
    p_adv: &[C64],
    rng: &mut R,
) -> Result<Probe, AttackError> {
    let cfg = &ae.config;
    let block = OneHotBlock::random(cfg.messages, cfg.block_len, rng);
    let realization = model.sample(rng);
    let noise = sample_noise(cfg.n_r(), cfg.block_len, cfg.sigma2, rng);
    let signals = ComplexMatrix::from_fn(cfg.n_adv(), cfg.block_len, |r, _| p_adv[r]);
    let trace = ae.run(
        &[BlockInput {
            block: &block,
            realization: &realization,
            noise: &noise,
            attack: Some(AttackInput {
                channel,
                signals: Some(&signals),
            }),
        }],
        Mode::Infer,
        false,
    )?;
    // same majority rule as a successful flip
    let hits = trace
        .decisions()
        .iter()
        .zip(block.labels())
        .filter(|(d, l)| d == l)
        .count();
    let correct = 2 * hits > block.len();
    let gs = trace.attack_cascades(0).expect("attack input was given");
    Ok(Probe {
        block,
        w: trace.decoder_input,
        gs,
        correct,
    })
}

fn check_budget(budget: f64) -> Result<(), AttackError> {
    if !(budget > 0.0 && budget.is_finite()) {
        return Err(AttackError::InvalidConfig {
            field: "budget",
            reason: "must be positive and finite",
        });
    }
    Ok(())
}

/// Universal perturbation built from minimal targeted perturbations of
/// probe blocks that the link still decodes correctly, each mapped back to
/// the adversary's antennas and accumulated under the power budget.
pub fn rmaep<R: Rng + ?Sized>(
    ae: &Autoencoder,
    model: &ChannelModel,
    budget: f64,
    channel: AttackChannel,
    cfg: &PgdConfig,
    rng: &mut R,
) -> Result<AttackResult, AttackError> {
    cfg.validate()?;
    check_budget(budget)?;
    let sys = &ae.config;
    let clf = DecoderClassifier {
        net: &ae.decoder,
        loss: sys.loss,
    };
    let mut p_adv = alloc::vec![C64::new(0.0, 0.0); sys.n_adv()];
    let mut successes = 0;
    let mut evaluations = 0;
    for _ in 0..cfg.n_p {
        let pr = probe(ae, model, channel, &p_adv, rng)?;
        if !pr.correct {
            continue;
        }
        let w_norm = libm::sqrt(pr.w.norm_sqr());
        let (p_max, eps_acc) = cfg.search_bounds(w_norm);
        let search = PgdSearch {
            n_s: cfg.n_s,
            p_max,
            eps_acc,
            projection: cfg.projection,
        };
        let outcome = match pgd_minimal_perturbation(&clf, &pr.w, 2 * sys.n_r(), &search) {
            Ok(o) => o,
            Err(AttackError::AllTargetsFailed) => continue,
            Err(e) => return Err(e),
        };
        evaluations += outcome.gradient_evaluations;
        let targets = receiver_perturbations(&outcome.displacement(), sys.n_r());
        let p_add = receiver_to_transmit(&pr.gs, &targets, cfg.ridge)?;
        let sum: Vec<C64> = p_adv.iter().zip(&p_add).map(|(a, b)| a + b).collect();
        p_adv = enforce_power(&sum, budget);
        successes += 1;
    }
    let result = AttackResult {
        perturbation: PerturbationVector::emit(p_adv, budget),
        successes,
        probes: cfg.n_p,
        gradient_evaluations: evaluations,
    };
    if successes == 0 {
        return Err(AttackError::NoProgress(Box::new(result)));
    }
    Ok(result)
}

/// Single-step baseline: accumulates full-budget fast-gradient steps on the
/// true-label loss over `n_p` probe blocks.
pub fn rmaef<R: Rng + ?Sized>(
    ae: &Autoencoder,
    model: &ChannelModel,
    budget: f64,
    channel: AttackChannel,
    cfg: &PgdConfig,
    rng: &mut R,
) -> Result<AttackResult, AttackError> {
    cfg.validate()?;
    check_budget(budget)?;
    let sys = &ae.config;
    let clf = DecoderClassifier {
        net: &ae.decoder,
        loss: sys.loss,
    };
    let mut p_adv = alloc::vec![C64::new(0.0, 0.0); sys.n_adv()];
    // receiver-side step whose per-symbol RMS norm is the budget norm
    let step = libm::sqrt(budget * sys.block_len as f64);
    for _ in 0..cfg.n_p {
        let pr = probe(ae, model, channel, &p_adv, rng)?;
        let mut g = clf.gradient(&pr.w, pr.block.labels())?;
        masked_unit(&mut g, 2 * sys.n_r());
        g.data_mut().iter_mut().for_each(|v| *v *= step);
        let targets = receiver_perturbations(&g, sys.n_r());
        let p_add = receiver_to_transmit(&pr.gs, &targets, cfg.ridge)?;
        let sum: Vec<C64> = p_adv.iter().zip(&p_add).map(|(a, b)| a + b).collect();
        p_adv = enforce_power(&sum, budget);
    }
    Ok(AttackResult {
        perturbation: PerturbationVector::emit(p_adv, budget),
        successes: cfg.n_p,
        probes: cfg.n_p,
        gradient_evaluations: cfg.n_p,
    })
}
