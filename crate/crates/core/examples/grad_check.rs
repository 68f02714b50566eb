//! Finite-difference gradient checks of the layer set in double precision.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ymir::autodiff::{grad_check, one_hot, BatchNormState, Mode, Padding, Tensor};

fn random(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
    Tensor::from_fn(shape, |_| rng.random_range(-1.0..1.0))
}

fn weights(n: usize) -> Tensor<f64> {
    Tensor::from_fn(&[n], |i| ((i * 7) % 11) as f64 / 11.0 - 0.45)
}

fn main() -> ymir::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let report = |name: &str, r: ymir::autodiff::GradCheckReport| {
        println!("{name:<22} {:>5} coordinates  max error {:.2e}", r.coordinates, r.max_error);
    };

    let r = grad_check(&[random(&mut rng, &[3, 5]), random(&mut rng, &[4, 5]), random(&mut rng, &[4])], |t, v| {
        let y = t.dense(v[0], v[1], v[2])?;
        t.weighted_sum(y, &weights(12))
    })?;
    report("dense", r);

    let r = grad_check(
        &[random(&mut rng, &[2, 2, 7, 6]), random(&mut rng, &[3, 2, 3, 3]), random(&mut rng, &[3])],
        |t, v| {
            let y = t.conv2d(v[0], v[1], v[2], 2, Padding::Same)?;
            t.weighted_sum(y, &weights(2 * 3 * 4 * 3))
        },
    )?;
    report("conv2d (stride 2)", r);

    let r = grad_check(
        &[random(&mut rng, &[1, 3, 6, 6]), random(&mut rng, &[3, 3, 3]), random(&mut rng, &[4, 3])],
        |t, v| {
            let y = t.depthwise_separable_conv(v[0], v[1], v[2], 1, Padding::Valid)?;
            t.weighted_sum(y, &weights(4 * 4 * 4))
        },
    )?;
    report("depthwise separable", r);

    let r = grad_check(&[random(&mut rng, &[4, 2, 3, 3]), random(&mut rng, &[2]), random(&mut rng, &[2])], |t, v| {
        let mut state = BatchNormState::new(2);
        let y = t.batchnorm2d(v[0], v[1], v[2], &mut state, Mode::Train)?;
        t.weighted_sum(y, &weights(72))
    })?;
    report("batchnorm (train)", r);

    let r = grad_check(&[random(&mut rng, &[2, 2, 7, 7])], |t, v| {
        let y = t.maxpool2d(v[0], 3, 2)?;
        t.weighted_sum(y, &weights(2 * 2 * 3 * 3))
    })?;
    report("maxpool 3/2", r);

    let r = grad_check(&[random(&mut rng, &[1, 3, 7, 5])], |t, v| {
        let y = t.adaptive_avg_pool(v[0], 4, 4)?;
        t.weighted_sum(y, &weights(48))
    })?;
    report("adaptive avg pool", r);

    let targets = one_hot::<f64>(&[2, 0, 4], 5)?;
    let r = grad_check(&[random(&mut rng, &[3, 5])], |t, v| t.softmax_cross_entropy(v[0], &targets))?;
    report("softmax cross-entropy", r);
    Ok(())
}
