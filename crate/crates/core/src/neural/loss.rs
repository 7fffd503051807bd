use serde::{Deserialize, Serialize};

use super::Tensor;

const PROB_FLOOR: f64 = 1e-12;

/// Training objective applied to the decoder's softmax output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Element-wise binary cross-entropy against the one-hot target.
    #[default]
    Bce,
    /// Categorical cross-entropy per position.
    CategoricalCe,
}

impl LossKind {
    pub fn evaluate(self, pred: &Tensor, target: &Tensor) -> (f64, Tensor) {
        match self {
            LossKind::Bce => bce_loss(pred, target),
            LossKind::CategoricalCe => categorical_ce_loss(pred, target),
        }
    }
}

/// Mean binary cross-entropy over every entry, and its gradient with respect
/// to `pred`. Predictions are clamped to `[1e-12, 1 - 1e-12]`.
pub fn bce_loss(pred: &Tensor, target: &Tensor) -> (f64, Tensor) {
    assert_eq!(
        pred.shape(),
        target.shape(),
        "loss operands differ in shape"
    );
    let n = pred.data().len() as f64;
    let mut grad = Tensor::zeros(pred.channels(), pred.batch(), pred.length());
    let mut total = 0.0;
    for ((g, &p), &t) in grad
        .data_mut()
        .iter_mut()
        .zip(pred.data())
        .zip(target.data())
    {
        let q = p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
        total -= t * libm::log(q) + (1.0 - t) * libm::log(1.0 - q);
        *g = (-t / q + (1.0 - t) / (1.0 - q)) / n;
    }
    (total / n, grad)
}

/// Cross-entropy summed over channels, averaged over positions.
pub fn categorical_ce_loss(pred: &Tensor, target: &Tensor) -> (f64, Tensor) {
    assert_eq!(
        pred.shape(),
        target.shape(),
        "loss operands differ in shape"
    );
    let n = pred.columns() as f64;
    let mut grad = Tensor::zeros(pred.channels(), pred.batch(), pred.length());
    let mut total = 0.0;
    for ((g, &p), &t) in grad
        .data_mut()
        .iter_mut()
        .zip(pred.data())
        .zip(target.data())
    {
        let q = p.max(PROB_FLOOR);
        total -= t * libm::log(q);
        *g = -t / q / n;
    }
    (total / n, grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bce_of_half_is_ln2() {
        let pred = Tensor::from_vec(2, 1, 3, alloc::vec![0.5; 6]);
        let target = Tensor::one_hot(2, 1, 3, &[0, 1, 1]);
        let (l, _) = bce_loss(&pred, &target);
        assert!((l - core::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn perfect_prediction_is_near_zero() {
        let target = Tensor::one_hot(4, 2, 2, &[0, 3, 2, 1]);
        let (l, _) = bce_loss(&target, &target);
        assert!(l < 1e-11);
        let (l, _) = categorical_ce_loss(&target, &target);
        assert!(l < 1e-11);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let pred = Tensor::from_fn(3, 2, 2, |c, b, p| {
            0.1 + 0.2 * c as f64 + 0.05 * b as f64 + 0.03 * p as f64
        });
        let target = Tensor::one_hot(3, 2, 2, &[2, 0, 1, 1]);
        for kind in [LossKind::Bce, LossKind::CategoricalCe] {
            let (_, g) = kind.evaluate(&pred, &target);
            for i in 0..pred.data().len() {
                let h = 1e-6;
                let mut plus = pred.clone();
                plus.data_mut()[i] += h;
                let mut minus = pred.clone();
                minus.data_mut()[i] -= h;
                let fd = (kind.evaluate(&plus, &target).0 - kind.evaluate(&minus, &target).0)
                    / (2.0 * h);
                assert!(
                    (fd - g.data()[i]).abs() < 1e-7,
                    "{kind:?} entry {i}: {fd} vs {}",
                    g.data()[i]
                );
            }
        }
    }
}
