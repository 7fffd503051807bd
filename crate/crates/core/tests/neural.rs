use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use risae_core::neural::{
    bce_loss, power_normalize, LayerSpec, Mode, Network, NeuralError, Tensor,
};

fn random_tensor(rng: &mut ChaCha8Rng, ch: usize, batch: usize, len: usize) -> Tensor {
    Tensor::from_fn(ch, batch, len, |_, _, _| rng.random_range(-1.0..1.0))
}

fn objective(net: &Network, x: &Tensor, w: &Tensor, mode: Mode) -> f64 {
    let (y, _) = net.forward(x, mode).unwrap();
    y.data().iter().zip(w.data()).map(|(a, b)| a * b).sum()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs()).max(1e-6)
}

/// Central differences of `Σ w ∘ net(x)` against backprop, for both inputs
/// and every parameter.
fn check_gradients(mut net: Network, x: Tensor, mode: Mode, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (y, rec) = net.forward(&x, mode).unwrap();
    let w = random_tensor(&mut rng, y.channels(), y.batch(), y.length());
    let (pg, gx) = net.backward(&rec, &w).unwrap();
    let h = 1e-5;
    for i in 0..x.data().len() {
        let mut xp = x.clone();
        xp.data_mut()[i] += h;
        let mut xm = x.clone();
        xm.data_mut()[i] -= h;
        let fd = (objective(&net, &xp, &w, mode) - objective(&net, &xm, &w, mode)) / (2.0 * h);
        assert!(
            rel_err(fd, gx.data()[i]) < 1e-4,
            "input {i}: fd {fd} vs {}",
            gx.data()[i]
        );
    }
    for p in 0..pg.0.len() {
        for j in 0..pg.0[p].len() {
            let orig = net.params()[p][j];
            net.params_mut()[p][j] = orig + h;
            let lp = objective(&net, &x, &w, mode);
            net.params_mut()[p][j] = orig - h;
            let lm = objective(&net, &x, &w, mode);
            net.params_mut()[p][j] = orig;
            let fd = (lp - lm) / (2.0 * h);
            assert!(
                rel_err(fd, pg.0[p][j]) < 1e-4,
                "param {p}[{j}]: fd {fd} vs {}",
                pg.0[p][j]
            );
        }
    }
}

#[test]
fn conv_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let net = Network::new(
        3,
        &[LayerSpec::Conv1d {
            in_channels: 3,
            out_channels: 4,
            kernel_size: 3,
        }],
        &mut rng,
    )
    .unwrap();
    let x = random_tensor(&mut rng, 3, 2, 5);
    check_gradients(net, x, Mode::Train, 10);
}

#[test]
fn batch_norm_gradients_in_both_modes() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut net = Network::new(3, &[LayerSpec::batch_norm(3)], &mut rng).unwrap();
    for p in net.params_mut() {
        p.iter_mut().for_each(|v| *v += rng.random_range(-0.5..0.5));
    }
    let x = random_tensor(&mut rng, 3, 3, 4);
    check_gradients(net.clone(), x.clone(), Mode::Train, 11);
    check_gradients(net, x, Mode::Infer, 12);
}

#[test]
fn relu_and_softmax_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = random_tensor(&mut rng, 4, 2, 3);
    check_gradients(
        Network::new(4, &[LayerSpec::Relu], &mut rng).unwrap(),
        x.clone(),
        Mode::Train,
        13,
    );
    check_gradients(
        Network::new(4, &[LayerSpec::Softmax], &mut rng).unwrap(),
        x,
        Mode::Train,
        14,
    );
}

#[test]
fn power_norm_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let net = Network::new(4, &[LayerSpec::PowerNorm { target_power: 1.3 }], &mut rng).unwrap();
    let x = random_tensor(&mut rng, 4, 3, 5);
    check_gradients(net, x, Mode::Train, 15);
}

fn three_layer_specs(input: usize, hidden: usize, out: usize) -> Vec<LayerSpec> {
    vec![
        LayerSpec::Conv1d {
            in_channels: input,
            out_channels: hidden,
            kernel_size: 3,
        },
        LayerSpec::batch_norm(hidden),
        LayerSpec::Relu,
        LayerSpec::Conv1d {
            in_channels: hidden,
            out_channels: hidden,
            kernel_size: 3,
        },
        LayerSpec::batch_norm(hidden),
        LayerSpec::Relu,
        LayerSpec::Conv1d {
            in_channels: hidden,
            out_channels: out,
            kernel_size: 3,
        },
        LayerSpec::Softmax,
    ]
}

#[test]
fn three_layer_network_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let net = Network::new(4, &three_layer_specs(4, 6, 5), &mut rng).unwrap();
    let x = random_tensor(&mut rng, 4, 3, 6);
    check_gradients(net, x, Mode::Train, 16);
}

#[test]
fn softmax_columns_sum_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let net = Network::new(5, &[LayerSpec::Softmax], &mut rng).unwrap();
    let mut x = random_tensor(&mut rng, 5, 2, 4);
    x.data_mut()[0] = 800.0;
    let y = net.predict(&x).unwrap();
    for b in 0..2 {
        for p in 0..4 {
            let s: f64 = (0..5).map(|c| y.get(c, b, p)).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }
    assert!(y.is_finite());
}

#[test]
fn batch_norm_inference_is_affine_in_running_stats() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut net = Network::new(2, &[LayerSpec::batch_norm(2)], &mut rng).unwrap();
    let state = vec![
        vec![2.0, 0.5],
        vec![-1.0, 0.25],
        vec![0.3, -0.7],
        vec![4.0, 0.09],
    ];
    net.load_state(&state).unwrap();
    let x = random_tensor(&mut rng, 2, 2, 3);
    let y = net.predict(&x).unwrap();
    for c in 0..2 {
        for b in 0..2 {
            for p in 0..3 {
                let expect = state[0][c] * (x.get(c, b, p) - state[2][c])
                    / (state[3][c] + 1e-5).sqrt()
                    + state[1][c];
                assert!((y.get(c, b, p) - expect).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn running_stats_follow_momentum() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut net = Network::new(1, &[LayerSpec::batch_norm(1)], &mut rng).unwrap();
    let x = Tensor::from_vec(1, 1, 4, vec![1.0, 2.0, 3.0, 6.0]);
    let (_, rec) = net.forward(&x, Mode::Train).unwrap();
    assert_eq!(net.buffers()[0], &vec![0.0]);
    net.commit_stats(&rec);
    // mean 3, unbiased variance 14/3
    assert!((net.buffers()[0][0] - 0.1 * 3.0).abs() < 1e-12);
    assert!((net.buffers()[1][0] - (0.9 + 0.1 * 14.0 / 3.0)).abs() < 1e-12);
}

#[test]
fn power_norm_sets_block_power() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let scale = rng.random_range(1e-3..1e3);
        let x = Tensor::from_fn(6, 4, 5, |_, _, _| scale * rng.random_range(-1.0..1.0));
        let y = power_normalize(&x, 1.0).unwrap();
        for b in 0..4 {
            let block = y.block(b);
            let mean = block.norm_sqr() / 15.0;
            assert!((mean - 1.0).abs() < 1e-12);
        }
        // scale invariance
        let mut x2 = x.clone();
        x2.data_mut().iter_mut().for_each(|v| *v *= 7.5);
        let y2 = power_normalize(&x2, 1.0).unwrap();
        for (a, b) in y.data().iter().zip(y2.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
    assert_eq!(
        power_normalize(&Tensor::zeros(2, 1, 3), 1.0),
        Err(NeuralError::DegenerateInput)
    );
}

#[test]
fn backward_without_record_fails() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let net = Network::new(4, &three_layer_specs(4, 6, 5), &mut rng).unwrap();
    let g = Tensor::zeros(5, 1, 3);
    assert!(matches!(
        net.backward(&Default::default(), &g),
        Err(NeuralError::MissingRecord)
    ));
}

#[test]
fn shape_errors_are_reported() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let err = Network::new(4, &three_layer_specs(3, 6, 5), &mut rng).unwrap_err();
    assert_eq!(
        err,
        NeuralError::ShapeMismatch {
            layer: 0,
            expected: 3,
            actual: 4
        }
    );
    let net = Network::new(4, &three_layer_specs(4, 6, 5), &mut rng).unwrap();
    assert!(matches!(
        net.predict(&Tensor::zeros(3, 1, 2)),
        Err(NeuralError::ShapeMismatch { .. })
    ));
}

#[test]
fn small_network_learns_identity_code() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut net = Network::new(4, &three_layer_specs(4, 16, 4), &mut rng).unwrap();
    let mut adam = risae_core::neural::AdamState::new(
        risae_core::neural::AdamConfig {
            learning_rate: 1e-2,
            ..Default::default()
        },
        net.param_sizes(),
    );
    let mut last = f64::INFINITY;
    for _ in 0..150 {
        let labels: Vec<usize> = (0..32).map(|_| rng.random_range(0..4)).collect();
        let x = Tensor::one_hot(4, 8, 4, &labels);
        let (y, rec) = net.forward(&x, Mode::Train).unwrap();
        let (loss, g) = bce_loss(&y, &x);
        let (pg, _) = net.backward(&rec, &g).unwrap();
        net.commit_stats(&rec);
        adam.update(net.params_mut(), &pg.0);
        last = loss;
    }
    assert!(last < 0.05, "loss {last}");
    let labels: Vec<usize> = (0..32).map(|i| i % 4).collect();
    let x = Tensor::one_hot(4, 8, 4, &labels);
    assert_eq!(net.predict(&x).unwrap().argmax_channels(), labels);
}

fn single_conv(rng: &mut ChaCha8Rng, ch: usize, kernel: Vec<f64>) -> Network {
    let k = kernel.len();
    let mut net = Network::new(
        ch,
        &[LayerSpec::Conv1d {
            in_channels: ch,
            out_channels: ch,
            kernel_size: k,
        }],
        rng,
    )
    .unwrap();
    let mut w = vec![0.0; ch * ch * k];
    for c in 0..ch {
        w[(c * ch + c) * k..(c * ch + c + 1) * k].copy_from_slice(&kernel);
    }
    net.load_state(&[w, vec![0.0; ch]]).unwrap();
    net
}

#[test]
fn delta_kernel_is_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let net = single_conv(&mut rng, 3, vec![0.0, 1.0, 0.0]);
    let x = random_tensor(&mut rng, 3, 2, 7);
    assert_eq!(net.predict(&x).unwrap(), x);
}

#[test]
fn conv_input_gradient_is_correlation_with_kernel() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let kernel = vec![0.3, -1.2, 0.7];
    let net = single_conv(&mut rng, 1, kernel.clone());
    let x = random_tensor(&mut rng, 1, 1, 6);
    let (y, rec) = net.forward(&x, Mode::Train).unwrap();
    // y[p] = Σ_k w[k] x[p + k - 1], so dL/dx[q] = Σ_k w[k] g[q - k + 1]
    for p in 0..6usize {
        let expect: f64 = (0..3)
            .filter_map(|k| {
                (p + k)
                    .checked_sub(1)
                    .filter(|&s| s < 6)
                    .map(|s| kernel[k] * x.data()[s])
            })
            .sum();
        assert!((y.data()[p] - expect).abs() < 1e-14);
    }
    let g = random_tensor(&mut rng, 1, 1, 6);
    let (_, gx) = net.backward(&rec, &g).unwrap();
    for q in 0..6usize {
        let expect: f64 = (0..3)
            .filter_map(|k| {
                (q + 1)
                    .checked_sub(k)
                    .filter(|&p| p < 6)
                    .map(|p| kernel[k] * g.data()[p])
            })
            .sum();
        assert!((gx.data()[q] - expect).abs() < 1e-14);
    }
}

#[test]
fn elementary_layer_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let relu = Network::new(1, &[LayerSpec::Relu], &mut rng).unwrap();
    let y = relu
        .predict(&Tensor::from_vec(1, 1, 3, vec![-1.0, 0.0, 2.0]))
        .unwrap();
    assert_eq!(y.data(), &[0.0, 0.0, 2.0]);
    let soft = Network::new(8, &[LayerSpec::Softmax], &mut rng).unwrap();
    let y = soft.predict(&Tensor::zeros(8, 1, 2)).unwrap();
    assert!(y.data().iter().all(|&v| (v - 0.125).abs() < 1e-15));
    let x = random_tensor(&mut rng, 2, 1, 4);
    let y = Network::new(2, &[LayerSpec::PowerNorm { target_power: 1.0 }], &mut rng)
        .unwrap()
        .predict(&power_normalize(&x, 1.0).unwrap())
        .unwrap();
    assert!(y
        .data()
        .iter()
        .zip(power_normalize(&x, 1.0).unwrap().data())
        .all(|(a, b)| (a - b).abs() < 1e-14));
}

#[test]
fn zero_upstream_gives_zero_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let net = Network::new(4, &three_layer_specs(4, 6, 5), &mut rng).unwrap();
    let x = random_tensor(&mut rng, 4, 2, 3);
    let (_, rec) = net.forward(&x, Mode::Train).unwrap();
    let (pg, gx) = net.backward(&rec, &Tensor::zeros(5, 2, 3)).unwrap();
    assert!(pg.0.iter().flatten().all(|&v| v == 0.0));
    assert!(gx.data().iter().all(|&v| v == 0.0));
}

#[test]
fn power_norm_target_two() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let x = random_tensor(&mut rng, 8, 1, 5);
    let y = power_normalize(&x, 2.0).unwrap();
    assert!((y.norm_sqr() / 20.0 - 4.0).abs() < 1e-10);
}
