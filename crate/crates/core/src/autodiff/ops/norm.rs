use crate::autodiff::ops::Mode;
use crate::autodiff::{Backward, Real, Tape, Tensor, Var};
use crate::error::{Error, Result};

pub const BN_MOMENTUM: f64 = 0.99;
pub const BN_EPSILON: f64 = 1e-3;

/// Running statistics of one batch-norm layer.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormState<T> {
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
    pub momentum: f64,
    pub epsilon: f64,
    pub updates: u64,
}

impl<T: Real> BatchNormState<T> {
    pub fn new(channels: usize) -> Self {
        BatchNormState {
            running_mean: vec![T::zero(); channels],
            running_var: vec![T::one(); channels],
            momentum: BN_MOMENTUM,
            epsilon: BN_EPSILON,
            updates: 0,
        }
    }

    pub fn channels(&self) -> usize {
        self.running_mean.len()
    }
}

struct BatchNorm<T> {
    xhat: Vec<T>,
    inv_std: Vec<T>,
    train: bool,
    c: usize,
    hw: usize,
}

impl<T: Real> Backward<T> for BatchNorm<T> {
    fn name(&self) -> &'static str {
        "batchnorm2d"
    }

    fn backward(&self, ins: &[&Tensor<T>], _: &Tensor<T>, g: &[T], needs: &[bool]) -> Vec<Option<Vec<T>>> {
        let gamma = ins[1].data();
        let (c, hw) = (self.c, self.hw);
        let n = g.len() / (c * hw);
        let m = T::of((n * hw) as f64);
        let mut sum_g = vec![T::zero(); c];
        let mut sum_gx = vec![T::zero(); c];
        for s in 0..n {
            for ch in 0..c {
                let off = (s * c + ch) * hw;
                for (&gv, &xh) in g[off..off + hw].iter().zip(&self.xhat[off..off + hw]) {
                    sum_g[ch] += gv;
                    sum_gx[ch] += gv * xh;
                }
            }
        }
        let dx = needs[0].then(|| {
            let mut dx = vec![T::zero(); g.len()];
            for s in 0..n {
                for ch in 0..c {
                    let off = (s * c + ch) * hw;
                    let scale = gamma[ch] * self.inv_std[ch];
                    for i in off..off + hw {
                        dx[i] = if self.train {
                            scale * (g[i] - (sum_g[ch] + self.xhat[i] * sum_gx[ch]) / m)
                        } else {
                            scale * g[i]
                        };
                    }
                }
            }
            dx
        });
        vec![dx, needs[1].then_some(sum_gx), needs[2].then_some(sum_g)]
    }
}

impl<T: Real> Tape<T> {
    /// Per-channel normalization over N, H and W. Train mode normalizes with
    /// the biased batch variance and folds the unbiased one into `state`.
    pub fn batchnorm2d(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        state: &mut BatchNormState<T>,
        mode: Mode,
    ) -> Result<Var> {
        let [n, c, h, w] = self.value(x).dims4()?;
        let hw = h * w;
        if self.value(gamma).len() != c || self.value(beta).len() != c || state.channels() != c {
            return Err(Error::Shape(format!("batchnorm2d: {c} channels but parameters/state disagree")));
        }
        let xd = self.value(x).data();
        let eps = T::of(state.epsilon);
        let (mean, var) = match mode {
            Mode::Train => {
                let m = n * hw;
                if m < 2 {
                    return Err(Error::Shape("batchnorm2d train mode needs at least two values per channel".into()));
                }
                let mut mean = vec![0.0f64; c];
                let mut var = vec![0.0f64; c];
                for s in 0..n {
                    for ch in 0..c {
                        mean[ch] += xd[(s * c + ch) * hw..][..hw].iter().map(|v| v.as_f64()).sum::<f64>();
                    }
                }
                mean.iter_mut().for_each(|v| *v /= m as f64);
                for s in 0..n {
                    for ch in 0..c {
                        var[ch] += xd[(s * c + ch) * hw..][..hw]
                            .iter()
                            .map(|v| (v.as_f64() - mean[ch]).powi(2))
                            .sum::<f64>();
                    }
                }
                let mom = state.momentum;
                for ch in 0..c {
                    let unbiased = var[ch] / (m - 1) as f64;
                    var[ch] /= m as f64;
                    state.running_mean[ch] = T::of(mom * state.running_mean[ch].as_f64() + (1.0 - mom) * mean[ch]);
                    state.running_var[ch] = T::of(mom * state.running_var[ch].as_f64() + (1.0 - mom) * unbiased);
                }
                state.updates += 1;
                (mean.into_iter().map(T::of).collect::<Vec<T>>(), var.into_iter().map(T::of).collect::<Vec<T>>())
            }
            Mode::Eval => {
                if state.updates == 0 {
                    log::warn!("batchnorm2d evaluated before any training step; using default statistics");
                }
                (state.running_mean.clone(), state.running_var.clone())
            }
        };
        let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
        let gd = self.value(gamma).data();
        let bd = self.value(beta).data();
        let mut xhat = vec![T::zero(); xd.len()];
        let mut out = vec![T::zero(); xd.len()];
        for s in 0..n {
            for ch in 0..c {
                let off = (s * c + ch) * hw;
                for i in off..off + hw {
                    xhat[i] = (xd[i] - mean[ch]) * inv_std[ch];
                    out[i] = gd[ch] * xhat[i] + bd[ch];
                }
            }
        }
        let value = Tensor::new(vec![n, c, h, w], out)?;
        let train = mode == Mode::Train;
        self.record(value, &[x, gamma, beta], Box::new(BatchNorm { xhat, inv_std, train, c, hw }))
    }
}
