use crate::autodiff::{Backward, Real, Tape, Tensor, Var};
use crate::error::{Error, Result};

struct Reshape;

impl<T: Real> Backward<T> for Reshape {
    fn name(&self) -> &'static str {
        "reshape"
    }

    fn backward(&self, _: &[&Tensor<T>], _: &Tensor<T>, g: &[T], _: &[bool]) -> Vec<Option<Vec<T>>> {
        vec![Some(g.to_vec())]
    }
}

struct WeightedSum<T> {
    weights: Vec<T>,
}

impl<T: Real> Backward<T> for WeightedSum<T> {
    fn name(&self) -> &'static str {
        "weighted_sum"
    }

    fn backward(&self, _: &[&Tensor<T>], _: &Tensor<T>, g: &[T], _: &[bool]) -> Vec<Option<Vec<T>>> {
        vec![Some(self.weights.iter().map(|&w| w * g[0]).collect())]
    }
}

impl<T: Real> Tape<T> {
    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        let value = self.value(x).clone().reshape(shape)?;
        self.record(value, &[x], Box::new(Reshape))
    }

    /// `N×…` to `N×rest`.
    pub fn flatten(&mut self, x: Var) -> Result<Var> {
        let shape = self.shape(x);
        let n = shape[0];
        let rest: usize = shape[1..].iter().product();
        self.reshape(x, &[n, rest])
    }

    /// `Σ x·w` with constant weights; turns any output into a scalar.
    pub fn weighted_sum(&mut self, x: Var, weights: &Tensor<T>) -> Result<Var> {
        let xv = self.value(x);
        if xv.len() != weights.len() {
            return Err(Error::Shape(format!("weights {:?} do not match input {:?}", weights.shape(), xv.shape())));
        }
        let s: T = xv.data().iter().zip(weights.data()).map(|(&a, &b)| a * b).sum();
        self.record(Tensor::scalar(s), &[x], Box::new(WeightedSum { weights: weights.data().to_vec() }))
    }
}
