use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{Backward, Real, Tape, Tensor, Var};
use crate::error::{Error, Result};

struct Relu;

impl<T: Real> Backward<T> for Relu {
    fn name(&self) -> &'static str {
        "relu"
    }

    fn backward(&self, x: &[&Tensor<T>], _: &Tensor<T>, g: &[T], _: &[bool]) -> Vec<Option<Vec<T>>> {
        let dx = x[0].data().iter().zip(g).map(|(&v, &gv)| if v > T::zero() { gv } else { T::zero() }).collect();
        vec![Some(dx)]
    }
}

struct Dropout<T> {
    mask: Vec<T>,
}

impl<T: Real> Backward<T> for Dropout<T> {
    fn name(&self) -> &'static str {
        "dropout"
    }

    fn backward(&self, _: &[&Tensor<T>], _: &Tensor<T>, g: &[T], _: &[bool]) -> Vec<Option<Vec<T>>> {
        vec![Some(g.iter().zip(&self.mask).map(|(&a, &m)| a * m).collect())]
    }
}

struct Softmax;

impl<T: Real> Backward<T> for Softmax {
    fn name(&self) -> &'static str {
        "softmax"
    }

    fn backward(&self, _: &[&Tensor<T>], y: &Tensor<T>, g: &[T], _: &[bool]) -> Vec<Option<Vec<T>>> {
        let k = *y.shape().last().unwrap();
        let mut dx = vec![T::zero(); g.len()];
        for ((yr, gr), dr) in y.data().chunks(k).zip(g.chunks(k)).zip(dx.chunks_mut(k)) {
            let dot: T = yr.iter().zip(gr).map(|(&a, &b)| a * b).sum();
            for ((d, &yv), &gv) in dr.iter_mut().zip(yr).zip(gr) {
                *d = yv * (gv - dot);
            }
        }
        vec![Some(dx)]
    }
}

/// Row-wise stabilized softmax of a flat row of logits.
pub(crate) fn softmax_row<T: Real>(row: &[T], out: &mut [T]) {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for (o, &v) in out.iter_mut().zip(row) {
        *o = (v - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

impl<T: Real> Tape<T> {
    pub fn relu(&mut self, x: Var) -> Result<Var> {
        let xv = self.value(x);
        let data = xv.data().iter().map(|&v| if v > T::zero() { v } else { T::zero() }).collect();
        let value = Tensor::new(xv.shape().to_vec(), data)?;
        self.record(value, &[x], Box::new(Relu))
    }

    /// Inverted dropout: survivors are scaled by `1/(1-rate)`. The mask is
    /// drawn from `seed`.
    pub fn dropout(&mut self, x: Var, rate: f64, seed: u64) -> Result<Var> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Argument(format!("dropout rate {rate} outside [0, 1)")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let keep = T::of(1.0 / (1.0 - rate));
        let xv = self.value(x);
        let mask: Vec<T> =
            (0..xv.len()).map(|_| if rng.random::<f64>() < rate { T::zero() } else { keep }).collect();
        let data = xv.data().iter().zip(&mask).map(|(&a, &m)| a * m).collect();
        let value = Tensor::new(xv.shape().to_vec(), data)?;
        self.record(value, &[x], Box::new(Dropout { mask }))
    }

    /// Softmax over the last axis.
    pub fn softmax(&mut self, x: Var) -> Result<Var> {
        let xv = self.value(x);
        let k = *xv.shape().last().unwrap();
        let mut data = vec![T::zero(); xv.len()];
        for (row, out) in xv.data().chunks(k).zip(data.chunks_mut(k)) {
            softmax_row(row, out);
        }
        let value = Tensor::new(xv.shape().to_vec(), data)?;
        self.record(value, &[x], Box::new(Softmax))
    }
}
