use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};

pub const GRAD_CHECK_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    /// `max |analytic − numeric| / max(1, |numeric|)` over all coordinates.
    pub max_error: f64,
    pub coordinates: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_error < tolerance
    }
}

/// Compares reverse-mode gradients of a scalar function against central
/// differences on every coordinate of every input.
pub fn grad_check<F>(inputs: &[Tensor<f64>], f: F) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Result<Var>,
{
    let eval = |values: &[Tensor<f64>], track: bool| -> Result<(Tape<f64>, Vec<Var>, Var)> {
        let mut tape = Tape::new().with_finite_check(true);
        let vars: Vec<Var> = values.iter().map(|t| tape.leaf(t.clone(), track)).collect();
        let out = f(&mut tape, &vars)?;
        if tape.value(out).len() != 1 {
            return Err(Error::Shape("grad_check needs a scalar-valued function".into()));
        }
        Ok((tape, vars, out))
    };
    let (mut tape, vars, out) = eval(inputs, true)?;
    tape.backward(out)?;
    let analytic: Vec<Vec<f64>> = vars
        .iter()
        .zip(inputs)
        .map(|(&v, t)| tape.grad(v).map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; t.len()]))
        .collect();
    let mut work = inputs.to_vec();
    let mut max_error = 0.0f64;
    let mut coordinates = 0;
    for i in 0..inputs.len() {
        for j in 0..inputs[i].len() {
            let orig = inputs[i].data()[j];
            work[i].data_mut()[j] = orig + GRAD_CHECK_STEP;
            let (t, _, o) = eval(&work, false)?;
            let plus = t.value(o).data()[0];
            work[i].data_mut()[j] = orig - GRAD_CHECK_STEP;
            let (t, _, o) = eval(&work, false)?;
            let minus = t.value(o).data()[0];
            work[i].data_mut()[j] = orig;
            let numeric = (plus - minus) / (2.0 * GRAD_CHECK_STEP);
            let err = (analytic[i][j] - numeric).abs() / numeric.abs().max(1.0);
            max_error = max_error.max(err);
            coordinates += 1;
        }
    }
    Ok(GradCheckReport { max_error, coordinates })
}
