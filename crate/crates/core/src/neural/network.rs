use alloc::vec::Vec;

use rand::Rng;

use super::layers::{Cache, Layer};
use super::{LayerSpec, Mode, NeuralError, Tensor};

/// Per-parameter-vector gradients, in [`Network::params`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<Vec<f64>>);

impl Gradients {
    pub fn accumulate(&mut self, other: &Gradients) {
        assert_eq!(self.0.len(), other.0.len());
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }
}

/// Intermediate values of one forward pass, consumed by backward.
#[derive(Debug, Clone, Default)]
pub struct ForwardRecord {
    caches: Vec<Cache>,
}

/// Sequential stack of layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    in_channels: usize,
    layers: Vec<Layer>,
}

impl Network {
    pub fn new<R: Rng + ?Sized>(
        in_channels: usize,
        specs: &[LayerSpec],
        rng: &mut R,
    ) -> Result<Self, NeuralError> {
        let mut ch = in_channels;
        for (i, s) in specs.iter().enumerate() {
            s.validate().map_err(NeuralError::InvalidSpec)?;
            if let Some(req) = s.required_in_channels() {
                if req != ch {
                    return Err(NeuralError::ShapeMismatch {
                        layer: i,
                        expected: req,
                        actual: ch,
                    });
                }
            }
            if matches!(s, LayerSpec::PowerNorm { .. }) && ch % 2 != 0 {
                return Err(NeuralError::InvalidSpec(
                    "power normalization needs an even channel count",
                ));
            }
            ch = s.out_channels(ch);
        }
        let layers = specs.iter().map(|s| Layer::init(s, rng)).collect();
        Ok(Self {
            in_channels,
            layers,
        })
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn out_channels(&self) -> usize {
        self.layers
            .iter()
            .fold(self.in_channels, |c, l| l.spec().out_channels(c))
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(Layer::spec).collect()
    }

    fn check_input(&self, x: &Tensor) -> Result<(), NeuralError> {
        if x.channels() != self.in_channels {
            return Err(NeuralError::ShapeMismatch {
                layer: 0,
                expected: self.in_channels,
                actual: x.channels(),
            });
        }
        Ok(())
    }

    /// Forward pass that keeps what backward needs. Running statistics are
    /// left untouched; see [`Network::commit_stats`].
    pub fn forward(&self, x: &Tensor, mode: Mode) -> Result<(Tensor, ForwardRecord), NeuralError> {
        self.check_input(x)?;
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut cur = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let (y, cache) = layer.forward(&cur, mode).map_err(|e| relabel(e, i))?;
            caches.push(cache);
            cur = y;
        }
        Ok((cur, ForwardRecord { caches }))
    }

    /// Inference-mode forward pass without a record.
    pub fn predict(&self, x: &Tensor) -> Result<Tensor, NeuralError> {
        self.check_input(x)?;
        let mut cur = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            cur = layer
                .forward(&cur, Mode::Infer)
                .map_err(|e| relabel(e, i))?
                .0;
        }
        Ok(cur)
    }

    /// Gradients of the parameters and of the input, given the gradient of
    /// the output.
    pub fn backward(
        &self,
        record: &ForwardRecord,
        grad_out: &Tensor,
    ) -> Result<(Gradients, Tensor), NeuralError> {
        if record.caches.len() != self.layers.len() {
            return Err(NeuralError::MissingRecord);
        }
        let mut per_layer = Vec::with_capacity(self.layers.len());
        let mut g = grad_out.clone();
        for (layer, cache) in self.layers.iter().zip(&record.caches).rev() {
            let (pg, gx) = layer.backward(cache, &g, true)?;
            per_layer.push(pg);
            g = gx;
        }
        per_layer.reverse();
        Ok((Gradients(per_layer.into_iter().flatten().collect()), g))
    }

    /// Input gradient only; cheaper than [`Network::backward`].
    pub fn input_gradient(
        &self,
        record: &ForwardRecord,
        grad_out: &Tensor,
    ) -> Result<Tensor, NeuralError> {
        if record.caches.len() != self.layers.len() {
            return Err(NeuralError::MissingRecord);
        }
        let mut g = grad_out.clone();
        for (layer, cache) in self.layers.iter().zip(&record.caches).rev() {
            g = layer.backward(cache, &g, false)?.1;
        }
        Ok(g)
    }

    /// Updates batch-norm running statistics from a train-mode record.
    pub fn commit_stats(&mut self, record: &ForwardRecord) {
        for (layer, cache) in self.layers.iter_mut().zip(&record.caches) {
            layer.commit_stats(cache);
        }
    }

    /// Trainable parameter vectors: per layer, conv weight then bias, or
    /// batch-norm scale then shift.
    pub fn params(&self) -> Vec<&Vec<f64>> {
        self.layers.iter().flat_map(Layer::params).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Vec<f64>> {
        self.layers.iter_mut().flat_map(Layer::params_mut).collect()
    }

    pub fn param_sizes(&self) -> Vec<usize> {
        self.params().iter().map(|p| p.len()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.param_sizes().iter().sum()
    }

    /// Batch-norm running mean then running variance, per layer.
    pub fn buffers(&self) -> Vec<&Vec<f64>> {
        self.layers.iter().flat_map(Layer::buffers).collect()
    }

    pub fn buffers_mut(&mut self) -> Vec<&mut Vec<f64>> {
        self.layers
            .iter_mut()
            .flat_map(Layer::buffers_mut)
            .collect()
    }

    /// Concatenation of [`Network::params`] then [`Network::buffers`].
    pub fn state_vectors(&self) -> Vec<&Vec<f64>> {
        let mut v = self.params();
        v.extend(self.buffers());
        v
    }

    /// Overwrites parameters and buffers from [`Network::state_vectors`]
    /// layout.
    pub fn load_state(&mut self, state: &[Vec<f64>]) -> Result<(), NeuralError> {
        let sizes: Vec<usize> = self.state_vectors().iter().map(|v| v.len()).collect();
        if sizes.len() != state.len() || sizes.iter().zip(state).any(|(&n, s)| n != s.len()) {
            return Err(NeuralError::ParamLayout);
        }
        let np = self.params().len();
        for (t, s) in self.params_mut().into_iter().zip(state) {
            t.copy_from_slice(s);
        }
        for (t, s) in self.buffers_mut().into_iter().zip(&state[np..]) {
            t.copy_from_slice(s);
        }
        Ok(())
    }
}

fn relabel(e: NeuralError, layer: usize) -> NeuralError {
    match e {
        NeuralError::ShapeMismatch {
            expected, actual, ..
        } => NeuralError::ShapeMismatch {
            layer,
            expected,
            actual,
        },
        other => other,
    }
}
