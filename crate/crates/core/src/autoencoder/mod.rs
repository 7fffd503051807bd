//! The end-to-end learned link: encoder, two RIS phase controllers, the
//! physical channel with noise, and the CSI-aided decoder.

mod config;
mod eval;
mod pipeline;
mod train;

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use config::{Preset, SystemConfig};
pub use eval::{evaluate_ser, evaluate_ser_with, AttackSource, SerEstimate};
pub use pipeline::{AttackInput, BlockInput, PipelineGradients, PipelineTrace, SymbolTrace};
pub use train::{train, TrainConfig, TrainReport};

use crate::channel::{
    cascaded_matrix, complex_gaussian, CascadeOrder, ChannelError, ChannelRealization, LinkSet,
    PhaseShiftMatrix,
};
use crate::linalg::{ComplexMatrix, LinalgError, C64};
use crate::neural::{LayerSpec, Network, NeuralError, Tensor};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AutoencoderError {
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid {field}: {reason}")]
    InvalidConfig {
        field: &'static str,
        reason: &'static str,
    },
    #[error("{what}: expected {expected}, got {actual}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("training loss became non-finite in epoch {epoch}")]
    Diverged { epoch: usize },
}

fn check_shape(what: &'static str, expected: usize, actual: usize) -> Result<(), AutoencoderError> {
    if expected != actual {
        return Err(AutoencoderError::ShapeMismatch {
            what,
            expected,
            actual,
        });
    }
    Ok(())
}

/// A block of `B_L` messages, each in `0..M`; its matrix form is one-hot
/// `M × B_L`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OneHotBlock {
    messages: usize,
    labels: Vec<usize>,
}

impl OneHotBlock {
    pub fn new(messages: usize, labels: Vec<usize>) -> Result<Self, AutoencoderError> {
        if labels.is_empty() {
            return Err(AutoencoderError::InvalidConfig {
                field: "block",
                reason: "empty block",
            });
        }
        if labels.iter().any(|&l| l >= messages) {
            return Err(AutoencoderError::InvalidConfig {
                field: "block",
                reason: "label out of range",
            });
        }
        Ok(Self { messages, labels })
    }

    pub fn random<R: Rng + ?Sized>(messages: usize, len: usize, rng: &mut R) -> Self {
        Self {
            messages,
            labels: (0..len).map(|_| rng.random_range(0..messages)).collect(),
        }
    }

    pub fn messages(&self) -> usize {
        self.messages
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// One-hot `M × B_L` matrix as a single-block tensor.
    pub fn to_tensor(&self) -> Tensor {
        Tensor::one_hot(self.messages, 1, self.labels.len(), &self.labels)
    }
}

/// Decoder output of one block.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedBlock {
    /// Column-stochastic `M × B_L` probabilities.
    pub probs: Tensor,
    pub decisions: Vec<usize>,
}

impl DecodedBlock {
    pub fn from_probs(probs: Tensor) -> Self {
        let decisions = probs.argmax_channels();
        Self { probs, decisions }
    }

    pub fn errors(&self, block: &OneHotBlock) -> usize {
        self.decisions
            .iter()
            .zip(block.labels())
            .filter(|(a, b)| a != b)
            .count()
    }
}

/// How the adversary's transmit signal reaches the decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackChannel {
    /// `G = I`: the perturbation lands on the receive antennas unchanged.
    Ideal,
    /// `G` from the adversary's own double-scattering links through both RIS.
    #[default]
    DoubleScattering,
}

impl AttackChannel {
    /// The per-symbol aggregate `G` under this model.
    pub fn matrix(
        self,
        links: &LinkSet,
        psi1: &PhaseShiftMatrix,
        psi2: &PhaseShiftMatrix,
        n_r: usize,
        n_adv: usize,
    ) -> Result<ComplexMatrix, LinalgError> {
        match self {
            AttackChannel::Ideal => Ok(ComplexMatrix::eye(n_r, n_adv)),
            AttackChannel::DoubleScattering => {
                cascaded_matrix(links, psi1, psi2, CascadeOrder::Adversary)
            }
        }
    }
}

/// The four trainable networks plus the system they were built for.
#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder {
    pub config: SystemConfig,
    pub encoder: Network,
    pub ris1: Network,
    pub ris2: Network,
    pub decoder: Network,
}

/// Three same-padded convolutions, batch norm and ReLU after the hidden ones.
fn conv_stack(
    input: usize,
    hidden: usize,
    output: usize,
    tail: Option<LayerSpec>,
) -> Vec<LayerSpec> {
    let conv = |i, o| LayerSpec::Conv1d {
        in_channels: i,
        out_channels: o,
        kernel_size: 3,
    };
    let mut specs = alloc::vec![
        conv(input, hidden),
        LayerSpec::batch_norm(hidden),
        LayerSpec::Relu,
        conv(hidden, hidden),
        LayerSpec::batch_norm(hidden),
        LayerSpec::Relu,
        conv(hidden, output),
    ];
    specs.extend(tail);
    specs
}

impl Autoencoder {
    pub fn new<R: Rng + ?Sized>(
        config: SystemConfig,
        rng: &mut R,
    ) -> Result<Self, AutoencoderError> {
        config.validate()?;
        let h = config.hidden;
        let encoder = Network::new(
            config.messages,
            &conv_stack(
                config.messages,
                h,
                2 * config.n_t(),
                Some(LayerSpec::PowerNorm {
                    target_power: config.power,
                }),
            ),
            rng,
        )?;
        let ris1 = Network::new(
            2 * config.a1(),
            &conv_stack(2 * config.a1(), h, config.a1(), None),
            rng,
        )?;
        let ris2 = Network::new(
            2 * config.a2(),
            &conv_stack(2 * config.a2(), h, config.a2(), None),
            rng,
        )?;
        let decoder = Network::new(
            config.decoder_channels(),
            &conv_stack(
                config.decoder_channels(),
                h,
                config.messages,
                Some(LayerSpec::Softmax),
            ),
            rng,
        )?;
        Ok(Self {
            config,
            encoder,
            ris1,
            ris2,
            decoder,
        })
    }

    /// Every network in checkpoint order: encoder, RIS 1, RIS 2, decoder.
    pub fn networks(&self) -> [&Network; 4] {
        [&self.encoder, &self.ris1, &self.ris2, &self.decoder]
    }

    pub fn networks_mut(&mut self) -> [&mut Network; 4] {
        [
            &mut self.encoder,
            &mut self.ris1,
            &mut self.ris2,
            &mut self.decoder,
        ]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut v = self.encoder.params_mut();
        v.extend(self.ris1.params_mut());
        v.extend(self.ris2.params_mut());
        v.extend(self.decoder.params_mut());
        v
    }

    pub fn param_sizes(&self) -> Vec<usize> {
        self.networks()
            .iter()
            .flat_map(|n| n.param_sizes())
            .collect()
    }
}

/// Splits the first `2n` channels of column `(b, p)` into `n` complex values.
pub(crate) fn complex_column(t: &Tensor, offset: usize, n: usize, b: usize, p: usize) -> Vec<C64> {
    (0..n)
        .map(|k| C64::new(t.get(offset + k, b, p), t.get(offset + n + k, b, p)))
        .collect()
}

pub(crate) fn write_complex_column(
    t: &mut Tensor,
    offset: usize,
    values: &[C64],
    b: usize,
    p: usize,
) {
    let n = values.len();
    for (k, v) in values.iter().enumerate() {
        t.set(offset + k, b, p, v.re);
        t.set(offset + n + k, b, p, v.im);
    }
}

fn columns(m: &ComplexMatrix) -> Vec<Vec<C64>> {
    (0..m.cols())
        .map(|c| (0..m.rows()).map(|r| m.get(r, c)).collect())
        .collect()
}

/// Power-normalized encoder output `O_E`, `N_t × B_L`.
pub fn encode(encoder: &Network, block: &OneHotBlock) -> Result<ComplexMatrix, AutoencoderError> {
    let out = encoder.predict(&block.to_tensor())?;
    let n = out.channels() / 2;
    Ok(ComplexMatrix::from_fn(n, block.len(), |r, c| {
        C64::new(out.get(r, 0, c), out.get(n + r, 0, c))
    }))
}

/// Per-symbol phase shifts predicted from the field incident on one surface
/// (`A_k × B_L`).
pub fn ris_controller(
    net: &Network,
    incident: &ComplexMatrix,
) -> Result<Vec<PhaseShiftMatrix>, AutoencoderError> {
    let a = incident.rows();
    check_shape("RIS controller input channels", net.in_channels(), 2 * a)?;
    let mut x = Tensor::zeros(2 * a, 1, incident.cols());
    for (p, col) in columns(incident).iter().enumerate() {
        write_complex_column(&mut x, 0, col, 0, p);
    }
    let gamma = net.predict(&x)?;
    check_shape("RIS controller output channels", a, gamma.channels())?;
    Ok((0..incident.cols())
        .map(|p| PhaseShiftMatrix::new((0..a).map(|k| gamma.get(k, 0, p)).collect()))
        .collect())
}

/// Field incident on RIS 1, `U₁·o` per symbol.
pub fn ris1_incident(links: &LinkSet, o: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    links.u1.try_mul(o)
}

/// Field incident on RIS 2, `(U₂ + E·ψ₁·U₁)·o` per symbol.
pub fn ris2_incident(
    links: &LinkSet,
    psi1: &[PhaseShiftMatrix],
    o: &ComplexMatrix,
) -> Result<ComplexMatrix, LinalgError> {
    let direct = links.u2.try_mul(o)?;
    let via = links.u1.try_mul(o)?;
    let mut out = direct;
    for (i, psi) in psi1.iter().enumerate() {
        let d = psi.diagonal();
        let reflected: Vec<C64> = (0..via.rows()).map(|a| d[a] * via.get(a, i)).collect();
        let hop = links.e.mul_vec(&reflected);
        for (r, v) in hop.into_iter().enumerate() {
            out.set(r, i, out.get(r, i) + v);
        }
    }
    Ok(out)
}

/// Per-symbol cascaded matrices `Kᶦ`.
pub fn cascades(
    links: &LinkSet,
    psi1: &[PhaseShiftMatrix],
    psi2: &[PhaseShiftMatrix],
) -> Result<Vec<ComplexMatrix>, LinalgError> {
    psi1.iter()
        .zip(psi2)
        .map(|(a, b)| cascaded_matrix(links, a, b, CascadeOrder::Legitimate))
        .collect()
}

/// `CN(0, σ²)` noise, `rows × cols`, drawn column by column.
pub fn sample_noise<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    sigma2: f64,
    rng: &mut R,
) -> ComplexMatrix {
    let s = libm::sqrt(sigma2);
    let mut m = ComplexMatrix::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            m.set(r, c, complex_gaussian(rng) * s);
        }
    }
    m
}

/// Noiseless received block: column `i` is `Kᶦ·oᵢ`.
pub fn receive(ks: &[ComplexMatrix], o: &ComplexMatrix) -> ComplexMatrix {
    let n_r = ks.first().map_or(0, |k| k.rows());
    let mut r = ComplexMatrix::zeros(n_r, o.cols());
    for (i, k) in ks.iter().enumerate() {
        let col: Vec<C64> = (0..o.rows()).map(|t| o.get(t, i)).collect();
        for (row, v) in k.mul_vec(&col).into_iter().enumerate() {
            r.set(row, i, v);
        }
    }
    r
}

/// Received block `rᵢ = Kᶦ·oᵢ + nᵢ`.
pub fn transmit<R: Rng + ?Sized>(
    realization: &ChannelRealization,
    psi1: &[PhaseShiftMatrix],
    psi2: &[PhaseShiftMatrix],
    o: &ComplexMatrix,
    sigma2: f64,
    rng: &mut R,
) -> Result<ComplexMatrix, LinalgError> {
    let ks = cascades(&realization.legit, psi1, psi2)?;
    let clean = receive(&ks, o);
    let noise = sample_noise(clean.rows(), clean.cols(), sigma2, rng);
    clean.try_add(&noise)
}

/// Decoder input of one block: per symbol, `[Re r; Im r; Re vec(K); Im vec(K)]`
/// with `vec` stacking columns.
pub fn decoder_input(received: &ComplexMatrix, ks: &[ComplexMatrix]) -> Tensor {
    let n_r = received.rows();
    let n_t = ks.first().map_or(0, |k| k.cols());
    let mut x = Tensor::zeros(2 * (n_r + n_r * n_t), 1, received.cols());
    for (p, k) in ks.iter().enumerate() {
        fill_decoder_column(
            &mut x,
            0,
            p,
            &(0..n_r).map(|r| received.get(r, p)).collect::<Vec<_>>(),
            k,
        );
    }
    x
}

pub(crate) fn fill_decoder_column(
    x: &mut Tensor,
    b: usize,
    p: usize,
    r: &[C64],
    k: &ComplexMatrix,
) {
    write_complex_column(x, 0, r, b, p);
    write_complex_column(x, 2 * r.len(), k.as_col_major(), b, p);
}

pub fn decode(
    decoder: &Network,
    received: &ComplexMatrix,
    ks: &[ComplexMatrix],
) -> Result<DecodedBlock, AutoencoderError> {
    check_shape("cascaded matrices per block", received.cols(), ks.len())?;
    let x = decoder_input(received, ks);
    check_shape(
        "decoder input channels",
        decoder.in_channels(),
        x.channels(),
    )?;
    Ok(DecodedBlock::from_probs(decoder.predict(&x)?))
}
