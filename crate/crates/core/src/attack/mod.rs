//! Universal adversarial perturbations against the trained link, plus the
//! jamming and single-step baselines.
//!
//! Every vector an attack hands out passes [`PerturbationVector::emit`],
//! which asserts the power budget.

mod pgd;
mod universal;

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use pgd::{pgd_minimal_perturbation, Classifier, DecoderClassifier, PgdOutcome, PgdSearch};
pub use universal::{receiver_perturbations, rmaef, rmaep};

use crate::autoencoder::{AutoencoderError, SystemConfig};
use crate::channel::complex_gaussian;
use crate::linalg::{ls_solve_stacked, norm, norm_sqr, ComplexMatrix, LinalgError, C64};

/// Slack allowed on top of the budget for rounding.
pub const BUDGET_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AttackError {
    #[error(transparent)]
    Autoencoder(#[from] AutoencoderError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid {field}: {reason}")]
    InvalidConfig {
        field: &'static str,
        reason: &'static str,
    },
    #[error("no target class could be reached within the search bound")]
    AllTargetsFailed,
    #[error("no outer iteration produced a successful flip")]
    NoProgress(alloc::boxed::Box<AttackResult>),
}

/// What the perturbation-to-signal ratio is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsrReference {
    /// The transmit power `P` itself.
    TransmitPower,
    /// Mean energy of one transmitted symbol vector, `N_t·P²`.
    #[default]
    SymbolEnergy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackBudget {
    pub psr_db: f64,
    #[serde(default)]
    pub reference: PsrReference,
}

impl AttackBudget {
    pub fn new(psr_db: f64) -> Self {
        Self {
            psr_db,
            reference: PsrReference::default(),
        }
    }

    /// Maximum `‖p‖₂²` of the adversary transmit vector.
    pub fn linear(&self, cfg: &SystemConfig) -> f64 {
        let base = match self.reference {
            PsrReference::TransmitPower => cfg.power,
            PsrReference::SymbolEnergy => cfg.n_t() as f64 * cfg.power * cfg.power,
        };
        base * libm::pow(10.0, self.psr_db / 10.0)
    }
}

/// Adversary transmit vector together with the budget it was built for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationVector {
    pub values: Vec<C64>,
    pub budget: f64,
}

impl PerturbationVector {
    /// Panics if `values` exceeds `budget` (plus rounding slack); every
    /// attack output goes through here.
    pub fn emit(values: Vec<C64>, budget: f64) -> Self {
        let e = norm_sqr(&values);
        assert!(
            e <= budget + BUDGET_TOLERANCE,
            "perturbation energy {e} exceeds budget {budget}"
        );
        Self { values, budget }
    }

    pub fn zero(dim: usize, budget: f64) -> Self {
        Self::emit(alloc::vec![C64::new(0.0, 0.0); dim], budget)
    }

    pub fn energy(&self) -> f64 {
        norm_sqr(&self.values)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PgdConfig {
    /// Outer iterations (random probe blocks).
    pub n_p: usize,
    /// Inner descent steps per binary-search probe.
    pub n_s: usize,
    /// Search upper bound; `None` uses `2‖w‖₂` of each probe.
    pub p_max: Option<f64>,
    /// Binary-search tolerance; `None` uses `1e-3·p_max`.
    pub eps_acc: Option<f64>,
    /// Ridge for the receiver-to-transmit solve; `None` picks a tiny
    /// scale-aware value, `Some(0.0)` disables it.
    pub ridge: Option<f64>,
    #[serde(default)]
    pub projection: Projection,
}

/// Feasible set the inner descent steps are projected onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Projection {
    /// Euclidean ball of radius `ε` around the clean input.
    #[default]
    Ball,
    /// [`project_ball`] with `β` equal to one step along the current
    /// direction. Caps the total displacement at one step.
    NormBand,
}

impl Projection {
    /// Projects `w_adv` given the clean input `w`, the search radius and
    /// the current step vector `beta`.
    pub fn apply(self, w_adv: &[f64], w: &[f64], radius: f64, beta: &[f64]) -> Vec<f64> {
        match self {
            Projection::Ball => {
                let d2: f64 = w_adv.iter().zip(w).map(|(a, b)| (a - b) * (a - b)).sum();
                let d = libm::sqrt(d2);
                if d <= radius {
                    return w_adv.to_vec();
                }
                let s = radius / d;
                w_adv.iter().zip(w).map(|(a, b)| b + (a - b) * s).collect()
            }
            Projection::NormBand => project_ball(w_adv, w, beta),
        }
    }
}

impl Default for PgdConfig {
    fn default() -> Self {
        Self {
            n_p: 50,
            n_s: 20,
            p_max: None,
            eps_acc: None,
            ridge: None,
            projection: Projection::default(),
        }
    }
}

impl PgdConfig {
    pub fn validate(&self) -> Result<(), AttackError> {
        let bad = |field: &'static str, reason: &'static str| {
            Err(AttackError::InvalidConfig { field, reason })
        };
        if self.n_p == 0 {
            return bad("n_p", "must be at least 1");
        }
        if self.n_s == 0 {
            return bad("n_s", "must be at least 1");
        }
        if let Some(p) = self.p_max {
            if !(p > 0.0 && p.is_finite()) {
                return bad("p_max", "must be positive and finite");
            }
        }
        if let Some(e) = self.eps_acc {
            if !(e > 0.0 && e.is_finite()) {
                return bad("eps_acc", "must be positive and finite");
            }
            if self.p_max.is_some_and(|p| p <= e) {
                return bad("p_max", "must exceed eps_acc");
            }
        }
        if let Some(r) = self.ridge {
            if !(r >= 0.0 && r.is_finite()) {
                return bad("ridge", "must be nonnegative and finite");
            }
        }
        Ok(())
    }

    /// Bound and tolerance for a probe input of norm `w_norm`.
    pub fn search_bounds(&self, w_norm: f64) -> (f64, f64) {
        let p_max = self.p_max.unwrap_or(2.0 * w_norm);
        let eps_acc = self.eps_acc.unwrap_or(1e-3 * p_max);
        (p_max, eps_acc)
    }
}

/// Outcome of a universal attack run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackResult {
    pub perturbation: PerturbationVector,
    /// Probe blocks whose minimal perturbation was folded into the result.
    pub successes: usize,
    /// Probe blocks drawn.
    pub probes: usize,
    pub gradient_evaluations: usize,
}

/// `p` if within budget, else `p` rescaled onto the budget sphere.
pub fn enforce_power(p: &[C64], budget: f64) -> Vec<C64> {
    let e = norm_sqr(p);
    if e <= budget {
        return p.to_vec();
    }
    let mut s = libm::sqrt(budget) / libm::sqrt(e);
    loop {
        let q: Vec<C64> = p.iter().map(|z| z * s).collect();
        // rounding can land a hair above the sphere; stay inside so that a
        // second call passes the vector through unchanged
        if norm_sqr(&q) <= budget {
            return q;
        }
        s *= 1.0 - f64::EPSILON;
    }
}

/// Isotropic complex Gaussian direction scaled to energy `budget`.
pub fn jamming<R: Rng + ?Sized>(budget: f64, dim: usize, rng: &mut R) -> PerturbationVector {
    assert!(dim >= 1, "jamming needs at least one antenna");
    loop {
        let v: Vec<C64> = (0..dim).map(|_| complex_gaussian(rng)).collect();
        let n = norm(&v);
        if n > 0.0 {
            let s = libm::sqrt(budget) / n;
            let scaled: Vec<C64> = v.into_iter().map(|z| z * s).collect();
            return PerturbationVector::emit(enforce_power(&scaled, budget), budget);
        }
    }
}

/// Transmit vector whose image best matches the per-symbol receiver-side
/// targets: minimizes `Σᵢ ‖Gᶦp − p̃ᵢ‖² + ridge‖p‖²`. With identical `Gᶦ`
/// this is the solve against the block-averaged target.
pub fn receiver_to_transmit(
    gs: &[ComplexMatrix],
    targets: &[Vec<C64>],
    ridge: Option<f64>,
) -> Result<Vec<C64>, AttackError> {
    if gs.len() != targets.len() || gs.is_empty() {
        return Err(AttackError::InvalidConfig {
            field: "targets",
            reason: "one target per aggregate channel is required",
        });
    }
    let ridge = ridge.unwrap_or_else(|| {
        let energy: f64 = gs
            .iter()
            .map(|g| {
                let f = g.frobenius_norm();
                f * f
            })
            .sum();
        1e-8 * energy / gs[0].cols() as f64
    });
    let blocks: Vec<(&ComplexMatrix, &[C64])> = gs
        .iter()
        .zip(targets)
        .map(|(g, t)| (g, t.as_slice()))
        .collect();
    Ok(ls_solve_stacked(&blocks, ridge)?)
}

/// Norm-band projection: snaps `w_adv` to `w − β` when its norm falls
/// below `‖w − β‖`, to `w + β` when above `‖w + β‖`, and leaves it otherwise.
pub fn project_ball(w_adv: &[f64], w: &[f64], beta: &[f64]) -> Vec<f64> {
    let low: Vec<f64> = w.iter().zip(beta).map(|(a, b)| a - b).collect();
    let up: Vec<f64> = w.iter().zip(beta).map(|(a, b)| a + b).collect();
    let n = |v: &[f64]| libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
    let na = n(w_adv);
    if na < n(&low) {
        low
    } else if na > n(&up) {
        up
    } else {
        w_adv.to_vec()
    }
}
