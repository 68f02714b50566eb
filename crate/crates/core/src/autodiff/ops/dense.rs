use crate::autodiff::{gemm, Backward, Real, Tape, Tensor, Var};
use crate::error::{Error, Result};

struct Dense {
    n: usize,
    inp: usize,
    out: usize,
}

impl<T: Real> Backward<T> for Dense {
    fn name(&self) -> &'static str {
        "dense"
    }

    fn backward(&self, ins: &[&Tensor<T>], _: &Tensor<T>, g: &[T], needs: &[bool]) -> Vec<Option<Vec<T>>> {
        let (x, w) = (ins[0].data(), ins[1].data());
        let (n, inp, out) = (self.n, self.inp, self.out);
        let dx = needs[0].then(|| {
            let mut dx = vec![T::zero(); n * inp];
            gemm(n, out, inp, T::one(), (g, out, 1), (w, inp, 1), T::zero(), (&mut dx, inp, 1));
            dx
        });
        let dw = needs[1].then(|| {
            let mut dw = vec![T::zero(); out * inp];
            gemm(out, n, inp, T::one(), (g, 1, out), (x, inp, 1), T::zero(), (&mut dw, inp, 1));
            dw
        });
        let db = needs[2].then(|| {
            let mut db = vec![T::zero(); out];
            for row in g.chunks(out) {
                db.iter_mut().zip(row).for_each(|(d, &v)| *d += v);
            }
            db
        });
        vec![dx, dw, db]
    }
}

impl<T: Real> Tape<T> {
    /// `y = x·Wᵀ + b` with `x` N×in, `W` out×in, `b` out.
    pub fn dense(&mut self, x: Var, weights: Var, bias: Var) -> Result<Var> {
        let [n, inp] = self.value(x).dims2()?;
        let [out, win] = self.value(weights).dims2()?;
        if win != inp || self.value(bias).len() != out {
            return Err(Error::Shape(format!(
                "dense: input width {inp}, weights {:?}, bias {}",
                self.value(weights).shape(),
                self.value(bias).len()
            )));
        }
        let mut y = Vec::with_capacity(n * out);
        for _ in 0..n {
            y.extend_from_slice(self.value(bias).data());
        }
        gemm(
            n,
            inp,
            out,
            T::one(),
            (self.value(x).data(), inp, 1),
            (self.value(weights).data(), 1, inp),
            T::one(),
            (&mut y, out, 1),
        );
        let value = Tensor::new(vec![n, out], y)?;
        self.record(value, &[x, weights, bias], Box::new(Dense { n, inp, out }))
    }
}
