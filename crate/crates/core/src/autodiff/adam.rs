use crate::autodiff::{Real, Tensor};
use crate::error::{Error, Result};

/// A named trainable tensor with its Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter<T> {
    pub name: String,
    pub value: Tensor<T>,
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub t: u64,
}

impl<T: Real> Parameter<T> {
    pub fn new(name: impl Into<String>, value: Tensor<T>) -> Self {
        let len = value.len();
        Parameter { name: name.into(), value, m: vec![T::zero(); len], v: vec![T::zero(); len], t: 0 }
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for Adam {
    fn default() -> Self {
        Adam { learning_rate: 1e-4, beta1: 0.9, beta2: 0.999, epsilon: 1e-7 }
    }
}

impl Adam {
    pub fn new(learning_rate: f64) -> Self {
        Adam { learning_rate, ..Adam::default() }
    }

    /// One bias-corrected update of `param` from `grad`.
    pub fn step<T: Real>(&self, param: &mut Parameter<T>, grad: &[T]) -> Result<()> {
        if grad.len() != param.len() {
            return Err(Error::Shape(format!(
                "gradient of length {} for parameter `{}` of length {}",
                grad.len(),
                param.name,
                param.len()
            )));
        }
        param.t += 1;
        let (b1, b2) = (T::of(self.beta1), T::of(self.beta2));
        let c1 = T::of(1.0 - self.beta1.powi(param.t as i32));
        let c2 = T::of(1.0 - self.beta2.powi(param.t as i32));
        let lr = T::of(self.learning_rate);
        let eps = T::of(self.epsilon);
        let one = T::one();
        for (((theta, m), v), &g) in
            param.value.data_mut().iter_mut().zip(&mut param.m).zip(&mut param.v).zip(grad)
        {
            *m = b1 * *m + (one - b1) * g;
            *v = b2 * *v + (one - b2) * g * g;
            let update = lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            if update != T::zero() {
                *theta -= update;
            }
        }
        Ok(())
    }
}
