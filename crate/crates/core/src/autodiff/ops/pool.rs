use crate::autodiff::ops::{conv_axis, Padding};
use crate::autodiff::{Backward, Real, Tape, Tensor, Var};
use crate::error::Result;

struct MaxPool {
    argmax: Vec<usize>,
    in_len: usize,
}

impl<T: Real> Backward<T> for MaxPool {
    fn name(&self) -> &'static str {
        "maxpool2d"
    }

    fn backward(&self, _: &[&Tensor<T>], _: &Tensor<T>, g: &[T], _: &[bool]) -> Vec<Option<Vec<T>>> {
        let mut dx = vec![T::zero(); self.in_len];
        for (&i, &gv) in self.argmax.iter().zip(g) {
            dx[i] += gv;
        }
        vec![Some(dx)]
    }
}

struct AdaptiveAvg {
    h: usize,
    w: usize,
    oh: usize,
    ow: usize,
}

/// Bounds `[floor(i·n/o), ceil((i+1)·n/o))` of output cell `i`.
pub(crate) fn adaptive_interval(i: usize, n: usize, o: usize) -> (usize, usize) {
    (i * n / o, ((i + 1) * n).div_ceil(o))
}

impl<T: Real> Backward<T> for AdaptiveAvg {
    fn name(&self) -> &'static str {
        "adaptive_avg_pool"
    }

    fn backward(&self, _: &[&Tensor<T>], _: &Tensor<T>, g: &[T], _: &[bool]) -> Vec<Option<Vec<T>>> {
        let (h, w, oh, ow) = (self.h, self.w, self.oh, self.ow);
        let planes = g.len() / (oh * ow);
        let mut dx = vec![T::zero(); planes * h * w];
        for pl in 0..planes {
            let d = &mut dx[pl * h * w..(pl + 1) * h * w];
            for oy in 0..oh {
                let (y0, y1) = adaptive_interval(oy, h, oh);
                for ox in 0..ow {
                    let (x0, x1) = adaptive_interval(ox, w, ow);
                    let share = g[(pl * oh + oy) * ow + ox] / T::of(((y1 - y0) * (x1 - x0)) as f64);
                    for y in y0..y1 {
                        for v in &mut d[y * w + x0..y * w + x1] {
                            *v += share;
                        }
                    }
                }
            }
        }
        vec![Some(dx)]
    }
}

impl<T: Real> Tape<T> {
    /// Valid-padded max pooling; gradient goes to the first maximum in
    /// row-major window order.
    pub fn maxpool2d(&mut self, x: Var, window: usize, stride: usize) -> Result<Var> {
        let [n, c, h, w] = self.value(x).dims4()?;
        let (ho, _) = conv_axis(h, window, stride, Padding::Valid)?;
        let (wo, _) = conv_axis(w, window, stride, Padding::Valid)?;
        let xd = self.value(x).data();
        let mut out = vec![T::zero(); n * c * ho * wo];
        let mut argmax = vec![0usize; n * c * ho * wo];
        for pl in 0..n * c {
            let base = pl * h * w;
            let plane = &xd[base..base + h * w];
            let o = &mut out[pl * ho * wo..(pl + 1) * ho * wo];
            let a = &mut argmax[pl * ho * wo..(pl + 1) * ho * wo];
            for oy in 0..ho {
                let orow = &mut o[oy * wo..(oy + 1) * wo];
                let arow = &mut a[oy * wo..(oy + 1) * wo];
                for ox in 0..wo {
                    let idx = oy * stride * w + ox * stride;
                    orow[ox] = plane[idx];
                    arow[ox] = idx;
                }
                for i in 0..window {
                    let row = &plane[(oy * stride + i) * w..(oy * stride + i + 1) * w];
                    for j in 0..window {
                        for ox in 0..wo {
                            let col = ox * stride + j;
                            let v = row[col];
                            if v > orow[ox] {
                                orow[ox] = v;
                                arow[ox] = (oy * stride + i) * w + col;
                            }
                        }
                    }
                }
            }
            a.iter_mut().for_each(|v| *v += base);
        }
        let in_len = xd.len();
        let value = Tensor::new(vec![n, c, ho, wo], out)?;
        self.record(value, &[x], Box::new(MaxPool { argmax, in_len }))
    }

    /// Averages over `oh×ow` near-equal cells; cells overlap when the input
    /// is smaller than the grid.
    pub fn adaptive_avg_pool(&mut self, x: Var, oh: usize, ow: usize) -> Result<Var> {
        let [n, c, h, w] = self.value(x).dims4()?;
        if oh == 0 || ow == 0 {
            return Err(crate::error::Error::Shape("adaptive pool grid must be positive".into()));
        }
        let xd = self.value(x).data();
        let mut out = Vec::with_capacity(n * c * oh * ow);
        for pl in 0..n * c {
            let p = &xd[pl * h * w..(pl + 1) * h * w];
            for oy in 0..oh {
                let (y0, y1) = adaptive_interval(oy, h, oh);
                for ox in 0..ow {
                    let (x0, x1) = adaptive_interval(ox, w, ow);
                    let mut acc = T::zero();
                    for y in y0..y1 {
                        for &v in &p[y * w + x0..y * w + x1] {
                            acc += v;
                        }
                    }
                    out.push(acc / T::of(((y1 - y0) * (x1 - x0)) as f64));
                }
            }
        }
        let value = Tensor::new(vec![n, c, oh, ow], out)?;
        self.record(value, &[x], Box::new(AdaptiveAvg { h, w, oh, ow }))
    }
}
