use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gemm::gemm;
use super::{Mode, NeuralError, Tensor};

/// Layer topology, independent of weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    /// Same-padded 1D convolution along the position axis. Padding never
    /// crosses block boundaries.
    Conv1d {
        in_channels: usize,
        out_channels: usize,
        kernel_size: usize,
    },
    BatchNorm {
        channels: usize,
        epsilon: f64,
        momentum: f64,
    },
    Relu,
    /// Normalizes over channels at every position.
    Softmax,
    /// Rescales each block to mean complex-entry power `target_power²`.
    PowerNorm {
        target_power: f64,
    },
}

impl LayerSpec {
    pub fn batch_norm(channels: usize) -> Self {
        LayerSpec::BatchNorm {
            channels,
            epsilon: 1e-5,
            momentum: 0.9,
        }
    }

    pub(crate) fn validate(&self) -> Result<(), &'static str> {
        match *self {
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel_size,
            } => {
                if kernel_size % 2 == 0 {
                    return Err("kernel size must be odd for same padding");
                }
                if in_channels == 0 || out_channels == 0 {
                    return Err("convolution channel counts must be positive");
                }
            }
            LayerSpec::BatchNorm {
                channels,
                epsilon,
                momentum,
            } => {
                if channels == 0 || !(epsilon > 0.0) || !(0.0..1.0).contains(&momentum) {
                    return Err("invalid batch-norm parameters");
                }
            }
            LayerSpec::PowerNorm { target_power } => {
                if !(target_power > 0.0) {
                    return Err("target power must be positive");
                }
            }
            LayerSpec::Relu | LayerSpec::Softmax => {}
        }
        Ok(())
    }

    /// Output channel count given the input channel count.
    pub(crate) fn out_channels(&self, input: usize) -> usize {
        match *self {
            LayerSpec::Conv1d { out_channels, .. } => out_channels,
            _ => input,
        }
    }

    /// Input channel count this layer insists on, if any.
    pub(crate) fn required_in_channels(&self) -> Option<usize> {
        match *self {
            LayerSpec::Conv1d { in_channels, .. } => Some(in_channels),
            LayerSpec::BatchNorm { channels, .. } => Some(channels),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Conv1d {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    /// `out × (in·kernel)`, row-major with kernel tap fastest.
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct BatchNorm {
    pub eps: f64,
    pub momentum: f64,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Layer {
    Conv1d(Conv1d),
    BatchNorm(BatchNorm),
    Relu,
    Softmax,
    PowerNorm { target_power: f64 },
}

/// What backward needs from one layer's forward pass.
#[derive(Debug, Clone)]
pub(crate) enum Cache {
    Conv {
        cols: Vec<f64>,
        batch: usize,
        length: usize,
    },
    BatchNorm {
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
        mean: Vec<f64>,
        var: Vec<f64>,
        train: bool,
    },
    Relu {
        output: Tensor,
    },
    Softmax {
        output: Tensor,
    },
    PowerNorm {
        input: Tensor,
        mean_power: Vec<f64>,
    },
}

impl Layer {
    pub fn init<R: Rng + ?Sized>(spec: &LayerSpec, rng: &mut R) -> Self {
        match *spec {
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel_size,
            } => {
                let fan_in = (in_channels * kernel_size) as f64;
                let fan_out = (out_channels * kernel_size) as f64;
                let limit = libm::sqrt(6.0 / (fan_in + fan_out));
                let weight = (0..out_channels * in_channels * kernel_size)
                    .map(|_| rng.random_range(-limit..limit))
                    .collect();
                Layer::Conv1d(Conv1d {
                    in_ch: in_channels,
                    out_ch: out_channels,
                    kernel: kernel_size,
                    weight,
                    bias: vec![0.0; out_channels],
                })
            }
            LayerSpec::BatchNorm {
                channels,
                epsilon,
                momentum,
            } => Layer::BatchNorm(BatchNorm {
                eps: epsilon,
                momentum,
                gamma: vec![1.0; channels],
                beta: vec![0.0; channels],
                running_mean: vec![0.0; channels],
                running_var: vec![1.0; channels],
            }),
            LayerSpec::Relu => Layer::Relu,
            LayerSpec::Softmax => Layer::Softmax,
            LayerSpec::PowerNorm { target_power } => Layer::PowerNorm { target_power },
        }
    }

    pub fn spec(&self) -> LayerSpec {
        match self {
            Layer::Conv1d(c) => LayerSpec::Conv1d {
                in_channels: c.in_ch,
                out_channels: c.out_ch,
                kernel_size: c.kernel,
            },
            Layer::BatchNorm(b) => LayerSpec::BatchNorm {
                channels: b.gamma.len(),
                epsilon: b.eps,
                momentum: b.momentum,
            },
            Layer::Relu => LayerSpec::Relu,
            Layer::Softmax => LayerSpec::Softmax,
            Layer::PowerNorm { target_power } => LayerSpec::PowerNorm {
                target_power: *target_power,
            },
        }
    }

    /// Trainable parameter vectors, in checkpoint order.
    pub fn params(&self) -> Vec<&Vec<f64>> {
        match self {
            Layer::Conv1d(c) => vec![&c.weight, &c.bias],
            Layer::BatchNorm(b) => vec![&b.gamma, &b.beta],
            _ => Vec::new(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Vec<f64>> {
        match self {
            Layer::Conv1d(c) => vec![&mut c.weight, &mut c.bias],
            Layer::BatchNorm(b) => vec![&mut b.gamma, &mut b.beta],
            _ => Vec::new(),
        }
    }

    /// Non-trainable state (running statistics).
    pub fn buffers(&self) -> Vec<&Vec<f64>> {
        match self {
            Layer::BatchNorm(b) => vec![&b.running_mean, &b.running_var],
            _ => Vec::new(),
        }
    }

    pub fn buffers_mut(&mut self) -> Vec<&mut Vec<f64>> {
        match self {
            Layer::BatchNorm(b) => vec![&mut b.running_mean, &mut b.running_var],
            _ => Vec::new(),
        }
    }

    pub fn forward(&self, x: &Tensor, mode: Mode) -> Result<(Tensor, Cache), NeuralError> {
        match self {
            Layer::Conv1d(c) => Ok(conv_forward(c, x)),
            Layer::BatchNorm(b) => Ok(bn_forward(b, x, mode)),
            Layer::Relu => {
                let mut y = x.clone();
                y.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
                Ok((y.clone(), Cache::Relu { output: y }))
            }
            Layer::Softmax => {
                let y = softmax(x);
                Ok((y.clone(), Cache::Softmax { output: y }))
            }
            Layer::PowerNorm { target_power } => power_norm_forward(*target_power, x),
        }
    }

    /// Returns the parameter gradients (same order as [`Layer::params`]) and
    /// the gradient with respect to the layer input.
    /// Parameter gradients are skipped (left empty) unless `want_params`.
    pub fn backward(
        &self,
        cache: &Cache,
        g: &Tensor,
        want_params: bool,
    ) -> Result<(Vec<Vec<f64>>, Tensor), NeuralError> {
        match (self, cache) {
            (
                Layer::Conv1d(c),
                Cache::Conv {
                    cols,
                    batch,
                    length,
                },
            ) => Ok(conv_backward(c, cols, *batch, *length, g, want_params)),
            (
                Layer::BatchNorm(b),
                Cache::BatchNorm {
                    xhat,
                    inv_std,
                    train,
                    ..
                },
            ) => Ok(bn_backward(b, xhat, inv_std, *train, g)),
            (Layer::Relu, Cache::Relu { output }) => {
                let mut gx = g.clone();
                for (gv, &y) in gx.data_mut().iter_mut().zip(output.data()) {
                    if y <= 0.0 {
                        *gv = 0.0;
                    }
                }
                Ok((Vec::new(), gx))
            }
            (Layer::Softmax, Cache::Softmax { output }) => {
                Ok((Vec::new(), softmax_backward(output, g)))
            }
            (Layer::PowerNorm { target_power }, Cache::PowerNorm { input, mean_power }) => Ok((
                Vec::new(),
                power_norm_backward(*target_power, input, mean_power, g),
            )),
            _ => Err(NeuralError::MissingRecord),
        }
    }

    /// Folds the batch statistics of a train-mode pass into the running
    /// estimates.
    pub fn commit_stats(&mut self, cache: &Cache) {
        if let (
            Layer::BatchNorm(b),
            Cache::BatchNorm {
                mean,
                var,
                train: true,
                ..
            },
        ) = (self, cache)
        {
            for c in 0..b.gamma.len() {
                b.running_mean[c] = b.momentum * b.running_mean[c] + (1.0 - b.momentum) * mean[c];
                b.running_var[c] = b.momentum * b.running_var[c] + (1.0 - b.momentum) * var[c];
            }
        }
    }
}

fn im2col(x: &Tensor, kernel: usize) -> Vec<f64> {
    let (ch, batch, len) = x.shape();
    let n = batch * len;
    let pad = kernel / 2;
    let mut cols = vec![0.0; ch * kernel * n];
    for c in 0..ch {
        let src = x.row(c);
        for k in 0..kernel {
            let dst = &mut cols[(c * kernel + k) * n..(c * kernel + k + 1) * n];
            for b in 0..batch {
                let base = b * len;
                for p in 0..len {
                    let s = p + k;
                    if s >= pad && s - pad < len {
                        dst[base + p] = src[base + s - pad];
                    }
                }
            }
        }
    }
    cols
}

fn col2im(cols: &[f64], ch: usize, batch: usize, len: usize, kernel: usize) -> Tensor {
    let n = batch * len;
    let pad = kernel / 2;
    let mut gx = Tensor::zeros(ch, batch, len);
    for c in 0..ch {
        let dst = gx.row_mut(c);
        for k in 0..kernel {
            let src = &cols[(c * kernel + k) * n..(c * kernel + k + 1) * n];
            for b in 0..batch {
                let base = b * len;
                for p in 0..len {
                    let s = p + k;
                    if s >= pad && s - pad < len {
                        dst[base + s - pad] += src[base + p];
                    }
                }
            }
        }
    }
    gx
}

fn conv_forward(c: &Conv1d, x: &Tensor) -> (Tensor, Cache) {
    let (_, batch, len) = x.shape();
    let n = batch * len;
    let cols = im2col(x, c.kernel);
    let mut out = vec![0.0; c.out_ch * n];
    gemm(
        c.out_ch,
        c.in_ch * c.kernel,
        n,
        &c.weight,
        false,
        &cols,
        false,
        &mut out,
        false,
    );
    for (o, row) in out.chunks_mut(n).enumerate() {
        let b = c.bias[o];
        row.iter_mut().for_each(|v| *v += b);
    }
    (
        Tensor::from_vec(c.out_ch, batch, len, out),
        Cache::Conv {
            cols,
            batch,
            length: len,
        },
    )
}

fn conv_backward(
    c: &Conv1d,
    cols: &[f64],
    batch: usize,
    len: usize,
    g: &Tensor,
    want_params: bool,
) -> (Vec<Vec<f64>>, Tensor) {
    let n = batch * len;
    let ck = c.in_ch * c.kernel;
    let params = if want_params {
        let mut gw = vec![0.0; c.out_ch * ck];
        gemm(c.out_ch, n, ck, g.data(), false, cols, true, &mut gw, false);
        let gb: Vec<f64> = (0..c.out_ch).map(|o| g.row(o).iter().sum()).collect();
        vec![gw, gb]
    } else {
        Vec::new()
    };
    let mut gcols = vec![0.0; ck * n];
    gemm(
        ck,
        c.out_ch,
        n,
        &c.weight,
        true,
        g.data(),
        false,
        &mut gcols,
        false,
    );
    let gx = col2im(&gcols, c.in_ch, batch, len, c.kernel);
    (params, gx)
}

fn bn_forward(b: &BatchNorm, x: &Tensor, mode: Mode) -> (Tensor, Cache) {
    let ch = x.channels();
    let n = x.columns();
    let mut y = x.clone();
    let mut xhat = vec![0.0; x.data().len()];
    let mut means = vec![0.0; ch];
    let mut vars = vec![0.0; ch];
    let mut inv_std = vec![0.0; ch];
    let train = mode == Mode::Train;
    for c in 0..ch {
        let row = x.row(c);
        let (mean, var) = if train {
            let mean = row.iter().sum::<f64>() / n as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            (mean, var)
        } else {
            (b.running_mean[c], b.running_var[c])
        };
        let inv = 1.0 / libm::sqrt(var + b.eps);
        means[c] = mean;
        // running variance tracks the unbiased estimate
        vars[c] = if train && n > 1 {
            var * n as f64 / (n as f64 - 1.0)
        } else {
            var
        };
        inv_std[c] = inv;
        let (gamma, beta) = (b.gamma[c], b.beta[c]);
        let xh = &mut xhat[c * n..(c + 1) * n];
        for ((o, h), &v) in y.row_mut(c).iter_mut().zip(xh.iter_mut()).zip(row) {
            *h = (v - mean) * inv;
            *o = gamma * *h + beta;
        }
    }
    (
        y,
        Cache::BatchNorm {
            xhat,
            inv_std,
            mean: means,
            var: vars,
            train,
        },
    )
}

fn bn_backward(
    b: &BatchNorm,
    xhat: &[f64],
    inv_std: &[f64],
    train: bool,
    g: &Tensor,
) -> (Vec<Vec<f64>>, Tensor) {
    let ch = g.channels();
    let n = g.columns();
    let mut gx = Tensor::zeros(ch, g.batch(), g.length());
    let mut ggamma = vec![0.0; ch];
    let mut gbeta = vec![0.0; ch];
    for c in 0..ch {
        let gr = g.row(c);
        let xh = &xhat[c * n..(c + 1) * n];
        let sum_g: f64 = gr.iter().sum();
        let sum_gx: f64 = gr.iter().zip(xh).map(|(a, b)| a * b).sum();
        ggamma[c] = sum_gx;
        gbeta[c] = sum_g;
        let scale = b.gamma[c] * inv_std[c];
        let out = gx.row_mut(c);
        if train {
            let nf = n as f64;
            for ((o, &gv), &h) in out.iter_mut().zip(gr).zip(xh) {
                *o = scale * (gv - sum_g / nf - h * sum_gx / nf);
            }
        } else {
            for (o, &gv) in out.iter_mut().zip(gr) {
                *o = scale * gv;
            }
        }
    }
    (vec![ggamma, gbeta], gx)
}

pub(crate) fn softmax(x: &Tensor) -> Tensor {
    let (ch, batch, len) = x.shape();
    let mut y = Tensor::zeros(ch, batch, len);
    let n = batch * len;
    for col in 0..n {
        let max = (0..ch)
            .map(|c| x.data()[c * n + col])
            .fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for c in 0..ch {
            let e = libm::exp(x.data()[c * n + col] - max);
            y.data_mut()[c * n + col] = e;
            sum += e;
        }
        for c in 0..ch {
            y.data_mut()[c * n + col] /= sum;
        }
    }
    y
}

fn softmax_backward(y: &Tensor, g: &Tensor) -> Tensor {
    let ch = y.channels();
    let n = y.columns();
    let mut gx = Tensor::zeros(ch, y.batch(), y.length());
    for col in 0..n {
        let dot: f64 = (0..ch)
            .map(|c| y.data()[c * n + col] * g.data()[c * n + col])
            .sum();
        for c in 0..ch {
            let i = c * n + col;
            gx.data_mut()[i] = y.data()[i] * (g.data()[i] - dot);
        }
    }
    gx
}

/// Mean complex-entry power of every block: the squared magnitude summed over
/// real/imag channel pairs, averaged over `channels/2 · length` entries.
fn block_powers(x: &Tensor) -> Vec<f64> {
    let (ch, batch, len) = x.shape();
    let entries = (ch / 2 * len) as f64;
    (0..batch)
        .map(|b| {
            let mut acc = 0.0;
            for c in 0..ch {
                for p in 0..len {
                    let v = x.get(c, b, p);
                    acc += v * v;
                }
            }
            acc / entries
        })
        .collect()
}

fn power_norm_forward(target: f64, x: &Tensor) -> Result<(Tensor, Cache), NeuralError> {
    if x.channels() % 2 != 0 {
        return Err(NeuralError::ShapeMismatch {
            layer: usize::MAX,
            expected: x.channels() + 1,
            actual: x.channels(),
        });
    }
    let powers = block_powers(x);
    if powers.iter().any(|&p| !(p >= 1e-30)) {
        return Err(NeuralError::DegenerateInput);
    }
    let mut y = x.clone();
    let (ch, batch, len) = x.shape();
    for b in 0..batch {
        let s = target / libm::sqrt(powers[b]);
        for c in 0..ch {
            for p in 0..len {
                let i = y.index(c, b, p);
                y.data_mut()[i] *= s;
            }
        }
    }
    Ok((
        y,
        Cache::PowerNorm {
            input: x.clone(),
            mean_power: powers,
        },
    ))
}

fn power_norm_backward(target: f64, x: &Tensor, powers: &[f64], g: &Tensor) -> Tensor {
    let (ch, batch, len) = x.shape();
    let entries = (ch / 2 * len) as f64;
    let mut gx = Tensor::zeros(ch, batch, len);
    for b in 0..batch {
        let mu = powers[b];
        let s = target / libm::sqrt(mu);
        let mut dot = 0.0;
        for c in 0..ch {
            for p in 0..len {
                dot += g.get(c, b, p) * x.get(c, b, p);
            }
        }
        let k = s * dot / (entries * mu);
        for c in 0..ch {
            for p in 0..len {
                gx.set(c, b, p, s * g.get(c, b, p) - k * x.get(c, b, p));
            }
        }
    }
    gx
}

/// Rescales `x` (stacked real/imag channels) so every block has mean
/// complex-entry power `target_power²`.
pub fn power_normalize(x: &Tensor, target_power: f64) -> Result<Tensor, NeuralError> {
    power_norm_forward(target_power, x).map(|(y, _)| y)
}
