use crate::autodiff::ops::activation::softmax_row;
use crate::autodiff::{Backward, Real, Tape, Tensor, Var};
use crate::error::{Error, Result};

struct SoftmaxCrossEntropy<T> {
    probs: Vec<T>,
    targets: Vec<T>,
    n: usize,
}

impl<T: Real> Backward<T> for SoftmaxCrossEntropy<T> {
    fn name(&self) -> &'static str {
        "softmax_cross_entropy"
    }

    fn backward(&self, _: &[&Tensor<T>], _: &Tensor<T>, g: &[T], _: &[bool]) -> Vec<Option<Vec<T>>> {
        let scale = g[0] / T::of(self.n as f64);
        vec![Some(self.probs.iter().zip(&self.targets).map(|(&p, &t)| (p - t) * scale).collect())]
    }
}

/// Builds an `N×K` one-hot matrix.
pub fn one_hot<T: Real>(labels: &[usize], k: usize) -> Result<Tensor<T>> {
    if labels.is_empty() || k == 0 {
        return Err(Error::Argument("one_hot needs at least one label and one class".into()));
    }
    let mut t = Tensor::zeros(&[labels.len(), k]);
    for (i, &l) in labels.iter().enumerate() {
        if l >= k {
            return Err(Error::Argument(format!("label {l} outside [0, {k})")));
        }
        t.data_mut()[i * k + l] = T::one();
    }
    Ok(t)
}

impl<T: Real> Tape<T> {
    /// Mean of `−log softmax(logits)[target]` over rows; `targets` must be one-hot.
    pub fn softmax_cross_entropy(&mut self, logits: Var, targets: &Tensor<T>) -> Result<Var> {
        let [n, k] = self.value(logits).dims2()?;
        if targets.shape() != [n, k] {
            return Err(Error::Shape(format!("targets {:?} vs logits {:?}", targets.shape(), [n, k])));
        }
        for (r, row) in targets.data().chunks(k).enumerate() {
            let ones = row.iter().filter(|&&v| v == T::one()).count();
            let zeros = row.iter().filter(|&&v| v == T::zero()).count();
            if ones != 1 || zeros != k - 1 {
                return Err(Error::Argument(format!("target row {r} is not one-hot")));
            }
        }
        let ld = self.value(logits).data();
        let mut probs = vec![T::zero(); n * k];
        let mut total = T::zero();
        for ((row, p), t) in ld.chunks(k).zip(probs.chunks_mut(k)).zip(targets.data().chunks(k)) {
            softmax_row(row, p);
            let top = (0..k).fold(0, |b, j| if row[j] > row[b] { j } else { b });
            let max = row[top];
            let rest: T = (0..k).filter(|&j| j != top).map(|j| (row[j] - max).exp()).sum();
            let target = t.iter().position(|&v| v == T::one()).unwrap();
            total += (max - row[target]) + rest.ln_1p();
        }
        let loss = total / T::of(n as f64);
        let backward = SoftmaxCrossEntropy { probs, targets: targets.data().to_vec(), n };
        self.record(Tensor::scalar(loss), &[logits], Box::new(backward))
    }
}
