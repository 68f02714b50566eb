use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::autodiff::{grad_check, one_hot, Tape, Tensor};

fn rand_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
    Tensor::from_fn(shape, |_| rng.random_range(-1.0..1.0))
}

fn rel_close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * y.abs().max(1.0))
}

#[test]
fn conv_axis_law() {
    assert_eq!(conv_axis(128, 11, 4, Padding::Same).unwrap(), (32, 3));
    assert_eq!(conv_axis(259, 11, 4, Padding::Same).unwrap(), (65, 4));
    assert_eq!(conv_axis(7, 3, 1, Padding::Valid).unwrap(), (5, 0));
    assert!(matches!(conv_axis(2, 3, 1, Padding::Valid), Err(Error::Shape(_))));
}

#[test]
fn unit_kernel_sums_channels() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = rand_tensor(&mut rng, &[2, 3, 4, 5]);
    let mut tape = Tape::new();
    let xv = tape.constant(x.clone());
    let w = tape.constant(Tensor::full(&[1, 3, 1, 1], 1.0));
    let b = tape.constant(Tensor::zeros(&[1]));
    let y = tape.conv2d(xv, w, b, 1, Padding::Same).unwrap();
    assert_eq!(tape.shape(y), &[2, 1, 4, 5]);
    for s in 0..2 {
        for p in 0..20 {
            let want: f64 = (0..3).map(|c| x.data()[(s * 3 + c) * 20 + p]).sum();
            assert!((tape.value(y).data()[s * 20 + p] - want).abs() < 1e-15);
        }
    }
}

#[test]
fn strided_same_conv_shape() {
    let mut tape = Tape::<f32>::new();
    let x = tape.constant(Tensor::zeros(&[1, 1, 128, 259]));
    let w = tape.constant(Tensor::zeros(&[64, 1, 11, 11]));
    let b = tape.constant(Tensor::zeros(&[64]));
    let y = tape.conv2d(x, w, b, 4, Padding::Same).unwrap();
    assert_eq!(tape.shape(y), &[1, 64, 32, 65]);
    let w2 = tape.constant(Tensor::zeros(&[8, 2, 3, 3]));
    let b2 = tape.constant(Tensor::zeros(&[8]));
    assert!(matches!(tape.conv2d(x, w2, b2, 1, Padding::Same), Err(Error::Shape(_))));
}

#[test]
fn conv_matches_naive_oracle_on_random_configs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let n = rng.random_range(1..3);
        let c = rng.random_range(1..4);
        let f = rng.random_range(1..4);
        let h = rng.random_range(3..9);
        let w = rng.random_range(3..9);
        let kh = rng.random_range(1..=3.min(h));
        let kw = rng.random_range(1..=3.min(w));
        let stride = rng.random_range(1..3);
        let padding = if rng.random_bool(0.5) { Padding::Same } else { Padding::Valid };
        let x = rand_tensor(&mut rng, &[n, c, h, w]);
        let k = rand_tensor(&mut rng, &[f, c, kh, kw]);
        let b = rand_tensor(&mut rng, &[f]);
        let want = conv2d_naive(&x, &k, b.data(), stride, padding).unwrap();
        let mut tape = Tape::new();
        let (xv, kv, bv) = (tape.constant(x), tape.constant(k), tape.constant(b));
        let got = tape.conv2d(xv, kv, bv, stride, padding).unwrap();
        assert_eq!(tape.shape(got), want.shape());
        assert!(rel_close(tape.value(got).data(), want.data(), 1e-10));
    }
}

#[test]
fn depthwise_separable_composition_and_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for stride in [1, 2] {
        let (n, c, f, h, w) = (2, 3, 4, 7, 6);
        let x = rand_tensor(&mut rng, &[n, c, h, w]);
        let dk = rand_tensor(&mut rng, &[c, 3, 3]);
        let pk = rand_tensor(&mut rng, &[f, c]);
        let full = Tensor::from_fn(&[f, c, 3, 3], |i| {
            let (fi, ci, t) = (i / (c * 9), (i / 9) % c, i % 9);
            pk.data()[fi * c + ci] * dk.data()[ci * 9 + t]
        });
        let want = conv2d_naive(&x, &full, &vec![0.0; f], stride, Padding::Same).unwrap();
        let mut tape = Tape::new();
        let (xv, dv, pv) = (tape.constant(x.clone()), tape.constant(dk.clone()), tape.constant(pk));
        let got = tape.depthwise_separable_conv(xv, dv, pv, stride, Padding::Same).unwrap();
        assert!(rel_close(tape.value(got).data(), want.data(), 1e-12));

        let eye = tape.constant(Tensor::from_fn(&[c, c], |i| if i / c == i % c { 1.0 } else { 0.0 }));
        let pure = tape.depthwise_separable_conv(xv, dv, eye, stride, Padding::Same).unwrap();
        let per_channel = Tensor::from_fn(&[c, c, 3, 3], |i| {
            let (fi, ci, t) = (i / (c * 9), (i / 9) % c, i % 9);
            if fi == ci {
                dk.data()[ci * 9 + t]
            } else {
                0.0
            }
        });
        let want = conv2d_naive(&x, &per_channel, &vec![0.0; c], stride, Padding::Same).unwrap();
        assert!(rel_close(tape.value(pure).data(), want.data(), 1e-12));
    }
    assert_eq!(depthwise_separable_params(8, 8, 3, 3), (136, 576));
}

#[test]
fn batchnorm_train_standardizes_and_applies_affine() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = Tensor::from_fn(&[8, 2, 3, 3], |_| rng.random_range(-4.0..9.0));
    for (g, b) in [(1.0, 0.0), (2.0, 3.0)] {
        let mut tape = Tape::new();
        let xv = tape.constant(x.clone());
        let gv = tape.constant(Tensor::full(&[2], g));
        let bv = tape.constant(Tensor::full(&[2], b));
        let mut st = BatchNormState::new(2);
        let y = tape.batchnorm2d(xv, gv, bv, &mut st, Mode::Train).unwrap();
        let yd = tape.value(y).data();
        for ch in 0..2 {
            let vals: Vec<f64> = (0..8).flat_map(|s| yd[(s * 2 + ch) * 9..][..9].to_vec()).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
            assert!((mean - b).abs() < 1e-12);
            // ε = 1e-3 shrinks the variance by var/(var+ε)
            assert!((var.sqrt() - g).abs() < g * 1e-3, "{var}");
        }
        assert_eq!(st.updates, 1);
        assert!(st.running_mean.iter().all(|&m| m != 0.0));
    }
}

#[test]
fn batchnorm_eval_is_batch_independent() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x = rand_tensor(&mut rng, &[4, 2, 2, 2]);
    let mut st = BatchNormState::new(2);
    let mut tape = Tape::new();
    let (g, b) = (tape.constant(Tensor::full(&[2], 1.5)), tape.constant(Tensor::full(&[2], -0.5)));
    let xv = tape.constant(x.clone());
    tape.batchnorm2d(xv, g, b, &mut st, Mode::Train).unwrap();
    let full = tape.batchnorm2d(xv, g, b, &mut st, Mode::Eval).unwrap();
    let first = tape.constant(Tensor::new(vec![1, 2, 2, 2], x.data()[..8].to_vec()).unwrap());
    let single = tape.batchnorm2d(first, g, b, &mut st, Mode::Eval).unwrap();
    assert_eq!(&tape.value(full).data()[..8], tape.value(single).data());
    let tiny = tape.constant(Tensor::zeros(&[1, 2, 1, 1]));
    assert!(tape.batchnorm2d(tiny, g, b, &mut st, Mode::Train).is_err());
}

#[test]
fn relu_maxpool_and_adaptive_pool_basics() {
    let mut tape = Tape::new();
    let x = tape.param(Tensor::new(vec![4], vec![-2.0, 0.0, 0.5, 3.0]).unwrap());
    let y = tape.relu(x).unwrap();
    assert_eq!(tape.value(y).data(), &[0.0, 0.0, 0.5, 3.0]);
    let s = tape.weighted_sum(y, &Tensor::full(&[4], 1.0)).unwrap();
    tape.backward(s).unwrap();
    assert_eq!(tape.grad(x).unwrap(), &[0.0, 0.0, 1.0, 1.0]);

    let mut tape = Tape::new();
    let c = tape.param(Tensor::full(&[1, 1, 5, 5], 2.0));
    let p = tape.maxpool2d(c, 3, 2).unwrap();
    assert_eq!(tape.shape(p), &[1, 1, 2, 2]);
    assert!(tape.value(p).data().iter().all(|&v| v == 2.0));
    let s = tape.weighted_sum(p, &Tensor::full(&[4], 1.0)).unwrap();
    tape.backward(s).unwrap();
    let g = tape.grad(c).unwrap();
    let hot: Vec<usize> = (0..25).filter(|&i| g[i] != 0.0).collect();
    assert_eq!(hot, vec![0, 2, 10, 12]);
    let small = tape.constant(Tensor::zeros(&[1, 1, 2, 5]));
    assert!(matches!(tape.maxpool2d(small, 3, 2), Err(Error::Shape(_))));

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x = rand_tensor(&mut rng, &[2, 3, 5, 7]);
    let xv = tape.constant(x.clone());
    let g = tape.adaptive_avg_pool(xv, 1, 1).unwrap();
    for pl in 0..6 {
        let mean = x.data()[pl * 35..(pl + 1) * 35].iter().sum::<f64>() / 35.0;
        assert!((tape.value(g).data()[pl] - mean).abs() < 1e-14);
    }
    let up = tape.adaptive_avg_pool(xv, 9, 9).unwrap();
    assert_eq!(tape.shape(up), &[2, 3, 9, 9]);
}

#[test]
fn cross_entropy_closed_forms() {
    let mut tape = Tape::new();
    let l = tape.constant(Tensor::full(&[3, 5], 0.7));
    let t = one_hot::<f64>(&[0, 2, 4], 5).unwrap();
    let loss = tape.softmax_cross_entropy(l, &t).unwrap();
    assert!((tape.value(loss).data()[0] - 5f64.ln()).abs() < 1e-12);

    let mut prev = f64::INFINITY;
    for gap in [0.0, 10.0, 20.0] {
        let mut row = vec![0.0; 5];
        row[1] = gap;
        let l = tape.constant(Tensor::new(vec![1, 5], row).unwrap());
        let lv = tape.softmax_cross_entropy(l, &one_hot(&[1], 5).unwrap()).unwrap();
        let loss = tape.value(lv).data()[0];
        let exact = (4.0 * (-gap).exp()).ln_1p();
        assert!((loss - exact).abs() <= 1e-12 * exact.max(1e-300) + 1e-15, "{loss} vs {exact}");
        assert!(loss < prev);
        prev = loss;
    }

    let bad = Tensor::new(vec![1, 5], vec![0.5, 0.5, 0.0, 0.0, 0.0]).unwrap();
    let l = tape.constant(Tensor::zeros(&[1, 5]));
    assert!(matches!(tape.softmax_cross_entropy(l, &bad), Err(Error::Argument(_))));
}

#[test]
fn softmax_rows_and_shift_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let logits = Tensor::from_fn(&[6, 5], |_| rng.random_range(-30.0..30.0));
    let shifted = Tensor::from_fn(&[6, 5], |i| logits.data()[i] + 17.25 * (i / 5) as f64);
    let mut tape = Tape::new();
    let l = tape.constant(logits);
    let s = tape.softmax(l).unwrap();
    for row in tape.value(s).data().chunks(5) {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
    let t = one_hot::<f64>(&[0, 1, 2, 3, 4, 0], 5).unwrap();
    let a = tape.softmax_cross_entropy(l, &t).unwrap();
    let l2 = tape.constant(shifted);
    let b = tape.softmax_cross_entropy(l2, &t).unwrap();
    assert!((tape.value(a).data()[0] - tape.value(b).data()[0]).abs() < 1e-9);
}

#[test]
fn grad_checks_on_spec_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let dense = grad_check(
        &[rand_tensor(&mut rng, &[2, 4]), rand_tensor(&mut rng, &[3, 4]), rand_tensor(&mut rng, &[3])],
        |t, v| {
            let y = t.dense(v[0], v[1], v[2])?;
            t.weighted_sum(y, &Tensor::from_fn(&[6], |i| 0.3 + i as f64 * 0.1))
        },
    )
    .unwrap();
    assert!(dense.max_error < 1e-6, "{dense:?}");

    let conv = grad_check(
        &[rand_tensor(&mut rng, &[1, 2, 5, 5]), rand_tensor(&mut rng, &[3, 2, 3, 3]), rand_tensor(&mut rng, &[3])],
        |t, v| {
            let y = t.conv2d(v[0], v[1], v[2], 1, Padding::Same)?;
            t.weighted_sum(y, &Tensor::from_fn(&[75], |i| ((i * 7) % 11) as f64 / 11.0 - 0.4))
        },
    )
    .unwrap();
    assert!(conv.max_error < 1e-6, "{conv:?}");

    let bn = grad_check(
        &[rand_tensor(&mut rng, &[4, 3, 2, 2]), rand_tensor(&mut rng, &[3]), rand_tensor(&mut rng, &[3])],
        |t, v| {
            let mut st = BatchNormState::new(3);
            let y = t.batchnorm2d(v[0], v[1], v[2], &mut st, Mode::Train)?;
            t.weighted_sum(y, &Tensor::from_fn(&[48], |i| ((i * 5) % 13) as f64 / 13.0 - 0.5))
        },
    )
    .unwrap();
    assert!(bn.max_error < 1e-5, "{bn:?}");

    let targets = one_hot::<f64>(&[0, 3, 4, 1], 5).unwrap();
    let ce = grad_check(&[rand_tensor(&mut rng, &[4, 5])], |t, v| t.softmax_cross_entropy(v[0], &targets)).unwrap();
    assert!(ce.max_error < 1e-6, "{ce:?}");
}

#[test]
fn fan_out_accumulates_and_forward_is_deterministic() {
    let mut tape = Tape::new();
    let x = tape.param(Tensor::new(vec![1, 2], vec![1.0, -2.0]).unwrap());
    let a = tape.relu(x).unwrap();
    let s1 = tape.weighted_sum(a, &Tensor::full(&[2], 1.0)).unwrap();
    let s2 = tape.weighted_sum(x, &Tensor::full(&[2], 3.0)).unwrap();
    let both = tape.reshape(s1, &[1, 1]).unwrap();
    let w = tape.constant(Tensor::full(&[1, 1], 1.0));
    let b = tape.constant(Tensor::full(&[1], 0.0));
    let d = tape.dense(both, w, b).unwrap();
    let ds = tape.weighted_sum(d, &Tensor::full(&[1], 1.0)).unwrap();
    tape.backward(ds).unwrap();
    tape.backward(s2).unwrap();
    assert_eq!(tape.grad(x).unwrap(), &[4.0, 3.0]);

    let run = || {
        let mut tape = Tape::<f32>::new();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let x = tape.constant(Tensor::from_fn(&[2, 1, 9, 9], |_| rng.random_range(-1.0..1.0)));
        let k = tape.constant(Tensor::from_fn(&[4, 1, 3, 3], |_| rng.random_range(-1.0..1.0)));
        let b = tape.constant(Tensor::zeros(&[4]));
        let y = tape.conv2d(x, k, b, 2, Padding::Same).unwrap();
        let y = tape.dropout(y, 0.3, 5).unwrap();
        tape.value(y).data().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

#[test]
fn non_finite_values_are_caught_when_checking() {
    let mut tape = Tape::<f64>::new().with_finite_check(true);
    let x = tape.constant(Tensor::new(vec![1, 2], vec![f64::NAN, 1.0]).unwrap());
    assert!(matches!(tape.softmax(x), Err(Error::Training(_))));
    let y = tape.constant(Tensor::new(vec![2], vec![f64::INFINITY, 1.0]).unwrap());
    assert!(matches!(tape.weighted_sum(y, &Tensor::full(&[2], 1.0)), Err(Error::Training(_))));
}
