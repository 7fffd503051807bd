use alloc::vec;
use alloc::vec::Vec;

use crate::channel::{
    cascade_phase_gradients, cascaded_matrix, CascadeOrder, ChannelRealization, PhaseShiftMatrix,
};
use crate::linalg::{ComplexMatrix, C64};
use crate::neural::{ForwardRecord, Gradients, Mode, Network, NeuralError, Tensor};

use super::{
    check_shape, complex_column, fill_decoder_column, write_complex_column, AttackChannel,
    Autoencoder, AutoencoderError, DecodedBlock, OneHotBlock,
};

/// Adversary side of one block.
#[derive(Debug, Clone, Copy)]
pub struct AttackInput<'a> {
    pub channel: AttackChannel,
    /// Transmit-domain perturbation per symbol, `N_adv × B_L`; `None` only
    /// computes the aggregate channels.
    pub signals: Option<&'a ComplexMatrix>,
}

/// Everything random about one block, fixed up front so passes are
/// reproducible.
#[derive(Debug, Clone, Copy)]
pub struct BlockInput<'a> {
    pub block: &'a OneHotBlock,
    pub realization: &'a ChannelRealization,
    /// `N_r × B_L`.
    pub noise: &'a ComplexMatrix,
    pub attack: Option<AttackInput<'a>>,
}

/// Intermediate signals of one symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolTrace {
    /// Encoder output `oᵢ`.
    pub o: Vec<C64>,
    /// `U₁·oᵢ`.
    pub incident1: Vec<C64>,
    /// `(U₂ + Eψ₁U₁)·oᵢ`.
    pub incident2: Vec<C64>,
    pub psi1: PhaseShiftMatrix,
    pub psi2: PhaseShiftMatrix,
    /// Legitimate cascade `Kᶦ`.
    pub k: ComplexMatrix,
    /// Adversary aggregate `Gᶦ`, when an attack input was given.
    pub g: Option<ComplexMatrix>,
    /// Adversary transmit signal for this symbol.
    pub perturbation: Option<Vec<C64>>,
    /// `Kᶦoᵢ + nᵢ (+ Gᶦp)`.
    pub received: Vec<C64>,
}

/// A batched pass through the whole link.
#[derive(Debug, Clone)]
pub struct PipelineTrace {
    records: Option<[ForwardRecord; 4]>,
    realizations: Vec<ChannelRealization>,
    attack_channels: Vec<Option<AttackChannel>>,
    /// `[block][symbol]`.
    pub symbols: Vec<Vec<SymbolTrace>>,
    pub decoder_input: Tensor,
    pub probs: Tensor,
}

impl PipelineTrace {
    pub(crate) fn records(&self) -> Option<&[ForwardRecord; 4]> {
        self.records.as_ref()
    }

    pub fn blocks(&self) -> usize {
        self.symbols.len()
    }

    pub fn decoded(&self, b: usize) -> DecodedBlock {
        DecodedBlock::from_probs(self.probs.block(b))
    }

    pub fn decisions(&self) -> Vec<usize> {
        self.probs.argmax_channels()
    }

    /// Received block `b` as an `N_r × B_L` matrix.
    pub fn received(&self, b: usize) -> ComplexMatrix {
        let s = &self.symbols[b];
        ComplexMatrix::from_fn(s[0].received.len(), s.len(), |r, c| s[c].received[r])
    }

    pub fn cascades(&self, b: usize) -> Vec<ComplexMatrix> {
        self.symbols[b].iter().map(|s| s.k.clone()).collect()
    }

    /// Adversary aggregates of block `b`, if an attack input was given.
    pub fn attack_cascades(&self, b: usize) -> Option<Vec<ComplexMatrix>> {
        self.symbols[b].iter().map(|s| s.g.clone()).collect()
    }

    /// Largest deviation of any phase-shift entry from unit modulus.
    pub fn max_modulus_error(&self) -> f64 {
        self.symbols
            .iter()
            .flatten()
            .flat_map(|s| s.psi1.diagonal().into_iter().chain(s.psi2.diagonal()))
            .map(|z| (z.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Parameter gradients of all four networks.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineGradients {
    pub encoder: Gradients,
    pub ris1: Gradients,
    pub ris2: Gradients,
    pub decoder: Gradients,
}

impl PipelineGradients {
    /// Concatenated in [`Autoencoder::params_mut`] order.
    pub fn into_flat(self) -> Vec<Vec<f64>> {
        let mut v = self.encoder.0;
        v.extend(self.ris1.0);
        v.extend(self.ris2.0);
        v.extend(self.decoder.0);
        v
    }
}

fn run_net(
    net: &Network,
    x: &Tensor,
    mode: Mode,
    record: bool,
) -> Result<(Tensor, Option<ForwardRecord>), NeuralError> {
    match (record, mode) {
        (false, Mode::Infer) => Ok((net.predict(x)?, None)),
        (false, Mode::Train) => Ok((net.forward(x, mode)?.0, None)),
        (true, _) => net.forward(x, mode).map(|(y, r)| (y, Some(r))),
    }
}

fn phases(gamma: &Tensor, b: usize, p: usize) -> PhaseShiftMatrix {
    PhaseShiftMatrix::new((0..gamma.channels()).map(|k| gamma.get(k, b, p)).collect())
}

/// `∂L/∂γ = Re(conj(g_ψ)·jψ)` per element.
fn angle_gradient<'a>(g_psi: &'a [C64], psi: &'a [C64]) -> impl Iterator<Item = f64> + 'a {
    g_psi
        .iter()
        .zip(psi)
        .map(|(g, p)| (g.conj() * C64::i() * p).re)
}

impl Autoencoder {
    fn check_inputs(&self, inputs: &[BlockInput]) -> Result<(), AutoencoderError> {
        let c = &self.config;
        if inputs.is_empty() {
            return Err(AutoencoderError::ShapeMismatch {
                what: "blocks per batch",
                expected: 1,
                actual: 0,
            });
        }
        for inp in inputs {
            check_shape("block length", c.block_len, inp.block.len())?;
            check_shape("message count", c.messages, inp.block.messages())?;
            check_shape("noise rows", c.n_r(), inp.noise.rows())?;
            check_shape("noise columns", c.block_len, inp.noise.cols())?;
            if let Some(AttackInput {
                signals: Some(s), ..
            }) = inp.attack
            {
                check_shape("perturbation rows", c.n_adv(), s.rows())?;
                check_shape("perturbation columns", c.block_len, s.cols())?;
            }
        }
        Ok(())
    }

    /// Forward pass over a batch of blocks. With `record`, the trace keeps
    /// what [`Autoencoder::backward`] needs.
    pub fn run(
        &self,
        inputs: &[BlockInput],
        mode: Mode,
        record: bool,
    ) -> Result<PipelineTrace, AutoencoderError> {
        self.check_inputs(inputs)?;
        let c = &self.config;
        let (nb, bl, nt, a1, a2) = (inputs.len(), c.block_len, c.n_t(), c.a1(), c.a2());
        let (nr, nadv) = (c.n_r(), c.n_adv());

        let labels: Vec<usize> = inputs
            .iter()
            .flat_map(|i| i.block.labels().iter().copied())
            .collect();
        let x = Tensor::one_hot(c.messages, nb, bl, &labels);
        let (enc, enc_rec) = run_net(&self.encoder, &x, mode, record)?;

        let mut o = vec![Vec::with_capacity(bl); nb];
        let mut u1 = vec![Vec::with_capacity(bl); nb];
        let mut ris1_in = Tensor::zeros(2 * a1, nb, bl);
        for (b, inp) in inputs.iter().enumerate() {
            for p in 0..bl {
                let ob = complex_column(&enc, 0, nt, b, p);
                let inc = inp.realization.legit.u1.mul_vec(&ob);
                write_complex_column(&mut ris1_in, 0, &inc, b, p);
                o[b].push(ob);
                u1[b].push(inc);
            }
        }
        let (gamma1, ris1_rec) = run_net(&self.ris1, &ris1_in, mode, record)?;

        let mut u2 = vec![Vec::with_capacity(bl); nb];
        let mut ris2_in = Tensor::zeros(2 * a2, nb, bl);
        for (b, inp) in inputs.iter().enumerate() {
            let links = &inp.realization.legit;
            for p in 0..bl {
                let d1 = phases(&gamma1, b, p).diagonal();
                let reflected: Vec<C64> = u1[b][p].iter().zip(&d1).map(|(u, d)| u * d).collect();
                let inc: Vec<C64> = links
                    .u2
                    .mul_vec(&o[b][p])
                    .into_iter()
                    .zip(links.e.mul_vec(&reflected))
                    .map(|(a, b)| a + b)
                    .collect();
                write_complex_column(&mut ris2_in, 0, &inc, b, p);
                u2[b].push(inc);
            }
        }
        let (gamma2, ris2_rec) = run_net(&self.ris2, &ris2_in, mode, record)?;

        let mut w = Tensor::zeros(c.decoder_channels(), nb, bl);
        let mut symbols = Vec::with_capacity(nb);
        for (b, inp) in inputs.iter().enumerate() {
            let mut row = Vec::with_capacity(bl);
            for p in 0..bl {
                let (psi1, psi2) = (phases(&gamma1, b, p), phases(&gamma2, b, p));
                let k = cascaded_matrix(
                    &inp.realization.legit,
                    &psi1,
                    &psi2,
                    CascadeOrder::Legitimate,
                )?;
                let mut received = k.mul_vec(&o[b][p]);
                for (r, v) in received.iter_mut().enumerate() {
                    *v += inp.noise.get(r, p);
                }
                let (mut g, mut perturbation) = (None, None);
                if let Some(att) = inp.attack {
                    let gm = att
                        .channel
                        .matrix(&inp.realization.attack, &psi1, &psi2, nr, nadv)?;
                    if let Some(sig) = att.signals {
                        let pv: Vec<C64> = (0..nadv).map(|t| sig.get(t, p)).collect();
                        for (r, v) in gm.mul_vec(&pv).into_iter().enumerate() {
                            received[r] += v;
                        }
                        perturbation = Some(pv);
                    }
                    g = Some(gm);
                }
                fill_decoder_column(&mut w, b, p, &received, &k);
                row.push(SymbolTrace {
                    o: core::mem::take(&mut o[b][p]),
                    incident1: core::mem::take(&mut u1[b][p]),
                    incident2: core::mem::take(&mut u2[b][p]),
                    psi1,
                    psi2,
                    k,
                    g,
                    perturbation,
                    received,
                });
            }
            symbols.push(row);
        }
        let (probs, dec_rec) = run_net(&self.decoder, &w, mode, record)?;
        let records = match (enc_rec, ris1_rec, ris2_rec, dec_rec) {
            (Some(a), Some(b), Some(c), Some(d)) => Some([a, b, c, d]),
            _ => None,
        };
        Ok(PipelineTrace {
            records,
            realizations: inputs.iter().map(|i| i.realization.clone()).collect(),
            attack_channels: inputs.iter().map(|i| i.attack.map(|a| a.channel)).collect(),
            symbols,
            decoder_input: w,
            probs,
        })
    }

    /// Reverse pass given `∂L/∂probs`. Channels, noise and the adversary
    /// signal are constants.
    pub fn backward(
        &self,
        trace: &PipelineTrace,
        grad_probs: &Tensor,
    ) -> Result<PipelineGradients, AutoencoderError> {
        let recs = trace.records.as_ref().ok_or(NeuralError::MissingRecord)?;
        let c = &self.config;
        let (nb, bl, nt, nr, a1, a2) = (
            trace.blocks(),
            c.block_len,
            c.n_t(),
            c.n_r(),
            c.a1(),
            c.a2(),
        );
        let (g_dec, g_w) = self.decoder.backward(&recs[3], grad_probs)?;

        let mut g_o: Vec<Vec<Vec<C64>>> = vec![Vec::with_capacity(bl); nb];
        let mut g_psi1: Vec<Vec<Vec<C64>>> = vec![Vec::with_capacity(bl); nb];
        let mut g_gamma2 = Tensor::zeros(a2, nb, bl);
        for b in 0..nb {
            for p in 0..bl {
                let s = &trace.symbols[b][p];
                let g_r = complex_column(&g_w, 0, nr, b, p);
                let g_vec_k = complex_column(&g_w, 2 * nr, nr * nt, b, p);
                // ∂L/∂K from the CSI rows plus the r = K·o path
                let g_k = ComplexMatrix::from_fn(nr, nt, |r, col| {
                    g_vec_k[col * nr + r] + g_r[r] * s.o[col].conj()
                });
                let go = s.k.adjoint_mul_vec(&g_r);
                let (d1, d2) = (s.psi1.diagonal(), s.psi2.diagonal());
                let real = &trace.realizations[b];
                let (mut gp1, mut gp2) =
                    cascade_phase_gradients(&real.legit, &d1, &d2, CascadeOrder::Legitimate, &g_k);
                if let (Some(AttackChannel::DoubleScattering), Some(pv)) =
                    (trace.attack_channels[b], &s.perturbation)
                {
                    let g_g =
                        ComplexMatrix::from_fn(nr, pv.len(), |r, col| g_r[r] * pv[col].conj());
                    let (x1, x2) = cascade_phase_gradients(
                        &real.attack,
                        &d1,
                        &d2,
                        CascadeOrder::Adversary,
                        &g_g,
                    );
                    gp1.iter_mut().zip(x1).for_each(|(a, v)| *a += v);
                    gp2.iter_mut().zip(x2).for_each(|(a, v)| *a += v);
                }
                for (k, v) in angle_gradient(&gp2, &d2).enumerate() {
                    g_gamma2.set(k, b, p, v);
                }
                g_o[b].push(go);
                g_psi1[b].push(gp1);
            }
        }
        let (g_ris2, g_ris2_in) = self.ris2.backward(&recs[2], &g_gamma2)?;

        let mut g_u1: Vec<Vec<Vec<C64>>> = vec![Vec::with_capacity(bl); nb];
        let mut g_gamma1 = Tensor::zeros(a1, nb, bl);
        for b in 0..nb {
            let links = &trace.realizations[b].legit;
            for p in 0..bl {
                let s = &trace.symbols[b][p];
                let g_inc2 = complex_column(&g_ris2_in, 0, a2, b, p);
                for (acc, v) in g_o[b][p].iter_mut().zip(links.u2.adjoint_mul_vec(&g_inc2)) {
                    *acc += v;
                }
                // incident2 = U₂o + E(ψ₁∘u₁)
                let g_s1 = links.e.adjoint_mul_vec(&g_inc2);
                let d1 = s.psi1.diagonal();
                let gp1 = &mut g_psi1[b][p];
                let mut gu = Vec::with_capacity(a1);
                for a in 0..a1 {
                    gp1[a] += g_s1[a] * s.incident1[a].conj();
                    gu.push(g_s1[a] * d1[a].conj());
                }
                for (k, v) in angle_gradient(gp1, &d1).enumerate() {
                    g_gamma1.set(k, b, p, v);
                }
                g_u1[b].push(gu);
            }
        }
        let (g_ris1, g_ris1_in) = self.ris1.backward(&recs[1], &g_gamma1)?;

        let mut g_enc_out = Tensor::zeros(2 * nt, nb, bl);
        for b in 0..nb {
            let links = &trace.realizations[b].legit;
            for p in 0..bl {
                let mut gu = core::mem::take(&mut g_u1[b][p]);
                for (acc, v) in gu.iter_mut().zip(complex_column(&g_ris1_in, 0, a1, b, p)) {
                    *acc += v;
                }
                let go: Vec<C64> = g_o[b][p]
                    .iter()
                    .zip(links.u1.adjoint_mul_vec(&gu))
                    .map(|(a, v)| a + v)
                    .collect();
                write_complex_column(&mut g_enc_out, 0, &go, b, p);
            }
        }
        let (g_enc, _) = self.encoder.backward(&recs[0], &g_enc_out)?;
        Ok(PipelineGradients {
            encoder: g_enc,
            ris1: g_ris1,
            ris2: g_ris2,
            decoder: g_dec,
        })
    }
}
