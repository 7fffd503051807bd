use alloc::vec;
use alloc::vec::Vec;

use crate::neural::{LossKind, Mode, Network, Tensor};

use super::{AttackError, Projection};

/// The decision function under attack, seen through its input.
pub trait Classifier {
    fn classes(&self) -> usize;

    /// Per-column decisions, ordered `block·length + position`.
    fn decide(&self, w: &Tensor) -> Result<Vec<usize>, AttackError>;

    /// `∇_w` of the loss against `labels` (one per column).
    fn gradient(&self, w: &Tensor, labels: &[usize]) -> Result<Tensor, AttackError>;
}

/// The trained decoder in inference mode.
#[derive(Debug, Clone, Copy)]
pub struct DecoderClassifier<'a> {
    pub net: &'a Network,
    pub loss: LossKind,
}

impl Classifier for DecoderClassifier<'_> {
    fn classes(&self) -> usize {
        self.net.out_channels()
    }

    fn decide(&self, w: &Tensor) -> Result<Vec<usize>, AttackError> {
        let probs = self
            .net
            .predict(w)
            .map_err(crate::autoencoder::AutoencoderError::from)?;
        Ok(probs.argmax_channels())
    }

    fn gradient(&self, w: &Tensor, labels: &[usize]) -> Result<Tensor, AttackError> {
        let (probs, rec) = self
            .net
            .forward(w, Mode::Infer)
            .map_err(crate::autoencoder::AutoencoderError::from)?;
        let target = Tensor::one_hot(probs.channels(), probs.batch(), probs.length(), labels);
        let (_, g) = self.loss.evaluate(&probs, &target);
        Ok(self
            .net
            .input_gradient(&rec, &g)
            .map_err(crate::autoencoder::AutoencoderError::from)?)
    }
}

/// Per-probe parameters of the minimal-perturbation search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgdSearch {
    /// Descent steps per bisection probe.
    pub n_s: usize,
    /// Upper end of the search interval.
    pub p_max: f64,
    /// Bisection stops once the interval is this narrow.
    pub eps_acc: f64,
    pub projection: Projection,
}

/// Result of the per-target minimal-perturbation search on one input block.
#[derive(Debug, Clone, PartialEq)]
pub struct PgdOutcome {
    /// Unit-norm `∇_w L(w, e_target)` at the clean input, zero outside the
    /// perturbable channels.
    pub direction: Tensor,
    pub epsilon: f64,
    pub target: usize,
    /// Verified minimal norm per class; infinite where the class was not reached.
    pub epsilons: Vec<f64>,
    /// Binary-search probes per class.
    pub probes: usize,
    /// Width of the final search interval of the chosen target.
    pub final_width: f64,
    /// Per-class gradient evaluations.
    pub gradient_evaluations: usize,
    /// Whether the single step `displacement()` alone moves the majority
    /// of `w` to the target. The search reaches the target along a curved
    /// path, so on a nonlinear decoder the straight step can fall short.
    pub flips: bool,
}

impl PgdOutcome {
    /// The receiver-side change `−ε·direction` toward the target.
    pub fn displacement(&self) -> Tensor {
        let mut d = self.direction.clone();
        d.data_mut().iter_mut().for_each(|v| *v *= -self.epsilon);
        d
    }
}

/// Zeroes channels `>= mask` and scales every block to unit norm (all-zero
/// blocks stay zero).
pub(crate) fn masked_unit(g: &mut Tensor, mask: usize) {
    let (ch, batch, len) = g.shape();
    for c in mask..ch {
        g.row_mut(c).iter_mut().for_each(|v| *v = 0.0);
    }
    for b in 0..batch {
        let mut s = 0.0;
        for c in 0..mask.min(ch) {
            for p in 0..len {
                let v = g.get(c, b, p);
                s += v * v;
            }
        }
        if s > 0.0 {
            let inv = 1.0 / libm::sqrt(s);
            for c in 0..mask.min(ch) {
                for p in 0..len {
                    let i = g.index(c, b, p);
                    g.data_mut()[i] *= inv;
                }
            }
        }
    }
}

fn block_values(t: &Tensor, b: usize) -> Vec<f64> {
    t.block(b).into_data()
}

fn set_block(t: &mut Tensor, b: usize, values: &[f64]) {
    let (ch, _, len) = t.shape();
    for c in 0..ch {
        for p in 0..len {
            t.set(c, b, p, values[c * len + p]);
        }
    }
}

/// `true` when more than half of the block's decisions equal `target`.
fn majority(decisions: &[usize], target: usize) -> bool {
    2 * decisions.iter().filter(|&&d| d == target).count() > decisions.len()
}

/// Smallest-norm targeted perturbation of one decoder input block `w`
/// (`batch == 1`), searched per target class by bisection on the step
/// length with `n_s` projected descent steps per probe. Only the first
/// `mask_channels` channels may move. A class that already holds the
/// majority of the clean decisions is not a candidate.
pub fn pgd_minimal_perturbation<C: Classifier + ?Sized>(
    clf: &C,
    w: &Tensor,
    mask_channels: usize,
    search: &PgdSearch,
) -> Result<PgdOutcome, AttackError> {
    let PgdSearch {
        n_s,
        p_max,
        eps_acc,
        projection,
    } = *search;
    if w.batch() != 1 {
        return Err(AttackError::InvalidConfig {
            field: "w",
            reason: "expected a single block",
        });
    }
    if !(p_max > eps_acc && eps_acc > 0.0) || n_s == 0 {
        return Err(AttackError::InvalidConfig {
            field: "p_max",
            reason: "need p_max > eps_acc > 0 and n_s >= 1",
        });
    }
    let m = clf.classes();
    let len = w.length();
    let base = Tensor::stack(&vec![w.clone(); m]);
    let labels: Vec<usize> = (0..m).flat_map(|i| core::iter::repeat_n(i, len)).collect();
    let w_vals = w.data().to_vec();
    let mut evaluations = 0;

    let mut p_norm = clf.gradient(&base, &labels)?;
    evaluations += m;
    masked_unit(&mut p_norm, mask_channels);
    let initial = p_norm.clone();

    // a class that already holds the majority is no attack target
    let clean = clf.decide(w)?;
    let held: Vec<bool> = (0..m).map(|i| majority(&clean, i)).collect();
    let mut lo = vec![0.0; m];
    let mut hi = vec![p_max; m];
    for i in 0..m {
        if held[i] {
            lo[i] = p_max;
        }
    }
    let mut reached = vec![false; m];
    let mut probes = 0;
    while (0..m).any(|i| hi[i] - lo[i] > eps_acc) {
        probes += 1;
        let mid: Vec<f64> = (0..m).map(|i| 0.5 * (hi[i] + lo[i])).collect();
        let mut w_adv = base.clone();
        let mut p_temp = p_norm.clone();
        for _ in 0..n_s {
            for i in 0..m {
                let step = mid[i] / n_s as f64;
                let dir = block_values(&p_temp, i);
                let beta: Vec<f64> = block_values(&p_norm, i).iter().map(|v| v * step).collect();
                let moved: Vec<f64> = block_values(&w_adv, i)
                    .iter()
                    .zip(&dir)
                    .map(|(a, d)| a - step * d)
                    .collect();
                let projected = projection.apply(&moved, &w_vals, mid[i], &beta);
                set_block(&mut w_adv, i, &projected);
            }
            p_temp = clf.gradient(&w_adv, &labels)?;
            evaluations += m;
            masked_unit(&mut p_temp, mask_channels);
        }
        p_norm = p_temp;
        let decisions = clf.decide(&w_adv)?;
        for i in 0..m {
            if hi[i] - lo[i] <= eps_acc {
                continue;
            }
            if majority(&decisions[i * len..(i + 1) * len], i) {
                hi[i] = mid[i];
                reached[i] = true;
            } else {
                lo[i] = mid[i];
            }
        }
    }

    let epsilons: Vec<f64> = (0..m)
        .map(|i| {
            if reached[i] && !held[i] {
                hi[i]
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let (target, &epsilon) = epsilons
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("at least one class");
    if !epsilon.is_finite() {
        return Err(AttackError::AllTargetsFailed);
    }
    let direction = initial.block(target);
    let mut check = w.clone();
    for (c, d) in check.data_mut().iter_mut().zip(direction.data()) {
        *c -= epsilon * d;
    }
    let flips = majority(&clf.decide(&check)?, target);
    Ok(PgdOutcome {
        direction,
        epsilon,
        target,
        epsilons,
        probes,
        final_width: hi[target] - lo[target],
        gradient_evaluations: evaluations,
        flips,
    })
}
