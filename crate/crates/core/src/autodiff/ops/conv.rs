use crate::autodiff::ops::{conv_axis, Padding};
use crate::autodiff::{gemm, Backward, Real, Tape, Tensor, Var};
use crate::error::{Error, Result};

/// Geometry of one 2-D sliding window.
#[derive(Debug, Clone, Copy)]
struct Window {
    h: usize,
    w: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    ho: usize,
    wo: usize,
    pt: usize,
    pl: usize,
}

impl Window {
    fn new(h: usize, w: usize, kh: usize, kw: usize, stride: usize, padding: Padding) -> Result<Self> {
        let (ho, pt) = conv_axis(h, kh, stride, padding)?;
        let (wo, pl) = conv_axis(w, kw, stride, padding)?;
        Ok(Window { h, w, kh, kw, stride, ho, wo, pt, pl })
    }

    fn positions(&self) -> usize {
        self.ho * self.wo
    }

    /// Input coordinate for output `o` and kernel tap `k`, if inside the image.
    #[inline]
    fn src(o: usize, k: usize, stride: usize, pad: usize, extent: usize) -> Option<usize> {
        let i = (o * stride + k).checked_sub(pad)?;
        (i < extent).then_some(i)
    }

    /// Output columns `ox` whose input column `ox·stride + j − pl` lies in `[0, w)`.
    #[inline]
    fn valid_cols(&self, j: usize) -> (usize, usize) {
        let lo = if self.pl > j { (self.pl - j).div_ceil(self.stride) } else { 0 };
        let hi = if self.w + self.pl > j { ((self.w + self.pl - j - 1) / self.stride + 1).min(self.wo) } else { 0 };
        (lo.min(hi), hi)
    }

    /// Output rows per band so that one band of columns holds about
    /// `COL_BLOCK` values.
    fn band_rows(&self, k: usize) -> usize {
        (COL_BLOCK / (k * self.wo).max(1)).clamp(1, self.ho)
    }

    /// Samples sharing one GEMM when a single sample has fewer than
    /// `MIN_COLS` output positions.
    fn group_size(&self, n: usize) -> usize {
        MIN_COLS.div_ceil(self.positions().max(1)).clamp(1, n.max(1))
    }

    /// Unfolds output rows `oy0..oy1` of `C×H×W` into
    /// `(C·kh·kw)×((oy1−oy0)·wo)` with row stride `ld`.
    fn im2col<T: Real>(&self, x: &[T], channels: usize, oy0: usize, oy1: usize, col: &mut [T], ld: usize) {
        let p = (oy1 - oy0) * self.wo;
        let s = self.stride;
        for c in 0..channels {
            let plane = &x[c * self.h * self.w..(c + 1) * self.h * self.w];
            for i in 0..self.kh {
                for j in 0..self.kw {
                    let (lo, hi) = self.valid_cols(j);
                    let row = &mut col[((c * self.kh + i) * self.kw + j) * ld..][..p];
                    for oy in oy0..oy1 {
                        let dst = &mut row[(oy - oy0) * self.wo..(oy - oy0 + 1) * self.wo];
                        let Some(iy) = Self::src(oy, i, s, self.pt, self.h) else {
                            dst.fill(T::zero());
                            continue;
                        };
                        dst[..lo].fill(T::zero());
                        dst[hi..].fill(T::zero());
                        if lo == hi {
                            continue;
                        }
                        let first = lo * s + j - self.pl;
                        let src = &plane[iy * self.w..(iy + 1) * self.w];
                        if s == 1 {
                            dst[lo..hi].copy_from_slice(&src[first..first + hi - lo]);
                        } else {
                            for (d, v) in dst[lo..hi].iter_mut().zip(src[first..].iter().step_by(s)) {
                                *d = *v;
                            }
                        }
                    }
                }
            }
        }
    }

    /// Adjoint of [`Window::im2col`]: scatters columns back, accumulating.
    fn col2im<T: Real>(&self, col: &[T], channels: usize, oy0: usize, oy1: usize, dx: &mut [T], ld: usize) {
        let p = (oy1 - oy0) * self.wo;
        let s = self.stride;
        for c in 0..channels {
            let plane = &mut dx[c * self.h * self.w..(c + 1) * self.h * self.w];
            for i in 0..self.kh {
                for j in 0..self.kw {
                    let (lo, hi) = self.valid_cols(j);
                    if lo == hi {
                        continue;
                    }
                    let first = lo * s + j - self.pl;
                    let row = &col[((c * self.kh + i) * self.kw + j) * ld..][..p];
                    for oy in oy0..oy1 {
                        let Some(iy) = Self::src(oy, i, s, self.pt, self.h) else { continue };
                        let r = (oy - oy0) * self.wo;
                        let src = &row[r + lo..r + hi];
                        let dst = &mut plane[iy * self.w + first..(iy + 1) * self.w];
                        if s == 1 {
                            dst.iter_mut().zip(src).for_each(|(d, &v)| *d += v);
                        } else {
                            dst.iter_mut().step_by(s).zip(src).for_each(|(d, &v)| *d += v);
                        }
                    }
                }
            }
        }
    }
}

/// Target size of one im2col band, in elements.
const COL_BLOCK: usize = 1 << 17;

/// Smallest GEMM width worth issuing.
const MIN_COLS: usize = 1024;

struct Conv2d {
    win: Window,
    n: usize,
    c: usize,
    f: usize,
}

impl<T: Real> Backward<T> for Conv2d {
    fn name(&self) -> &'static str {
        "conv2d"
    }

    fn backward(&self, ins: &[&Tensor<T>], _: &Tensor<T>, g: &[T], needs: &[bool]) -> Vec<Option<Vec<T>>> {
        let (x, w) = (ins[0].data(), ins[1].data());
        let (win, n, c, f) = (self.win, self.n, self.c, self.f);
        let p = win.positions();
        let k = c * win.kh * win.kw;
        let in_plane = c * win.h * win.w;
        let mut dx = needs[0].then(|| vec![T::zero(); x.len()]);
        let mut dw = needs[1].then(|| vec![T::zero(); w.len()]);
        let db = needs[2].then(|| {
            let mut db = vec![T::zero(); f];
            for s in 0..n {
                for (fi, d) in db.iter_mut().enumerate() {
                    *d += g[(s * f + fi) * p..][..p].iter().copied().sum::<T>();
                }
            }
            db
        });
        let group = win.group_size(n);
        if group > 1 {
            let width = group * p;
            let mut col = vec![T::zero(); k * width];
            let mut gt = vec![T::zero(); f * width];
            let mut dcol = if needs[0] { vec![T::zero(); k * width] } else { Vec::new() };
            for s0 in (0..n).step_by(group) {
                let m = group.min(n - s0);
                let q = m * p;
                for si in 0..m {
                    let gs = &g[(s0 + si) * f * p..(s0 + si + 1) * f * p];
                    for fi in 0..f {
                        gt[fi * q + si * p..][..p].copy_from_slice(&gs[fi * p..(fi + 1) * p]);
                    }
                }
                if let Some(dw) = dw.as_mut() {
                    for si in 0..m {
                        win.im2col(&x[(s0 + si) * in_plane..][..in_plane], c, 0, win.ho, &mut col[si * p..], q);
                    }
                    gemm(f, q, k, T::one(), (&gt, q, 1), (&col, 1, q), T::one(), (dw, k, 1));
                }
                if let Some(dx) = dx.as_mut() {
                    gemm(k, f, q, T::one(), (w, 1, k), (&gt, q, 1), T::zero(), (&mut dcol, q, 1));
                    for si in 0..m {
                        win.col2im(&dcol[si * p..], c, 0, win.ho, &mut dx[(s0 + si) * in_plane..][..in_plane], q);
                    }
                }
            }
            return vec![dx, dw, db];
        }
        let band = win.band_rows(k);
        let mut col = vec![T::zero(); k * band * win.wo];
        let mut dcol = if needs[0] { vec![T::zero(); k * band * win.wo] } else { Vec::new() };
        for s in 0..n {
            let gs = &g[s * f * p..(s + 1) * f * p];
            let xs = &x[s * in_plane..(s + 1) * in_plane];
            for oy0 in (0..win.ho).step_by(band) {
                let oy1 = (oy0 + band).min(win.ho);
                let q = (oy1 - oy0) * win.wo;
                let gq = &gs[oy0 * win.wo..];
                if let Some(dw) = dw.as_mut() {
                    win.im2col(xs, c, oy0, oy1, &mut col, q);
                    gemm(f, q, k, T::one(), (gq, p, 1), (&col, 1, q), T::one(), (dw, k, 1));
                }
                if let Some(dx) = dx.as_mut() {
                    gemm(k, f, q, T::one(), (w, 1, k), (gq, p, 1), T::zero(), (&mut dcol, q, 1));
                    win.col2im(&dcol, c, oy0, oy1, &mut dx[s * in_plane..(s + 1) * in_plane], q);
                }
            }
        }
        vec![dx, dw, db]
    }
}

struct DepthwiseSeparable<T> {
    win: Window,
    n: usize,
    c: usize,
    f: usize,
    mid: Vec<T>,
}

fn depthwise_forward<T: Real>(win: &Window, x: &[T], k: &[T], out: &mut [T]) {
    let taps = win.kh * win.kw;
    for oy in 0..win.ho {
        for ox in 0..win.wo {
            let mut acc = T::zero();
            for i in 0..win.kh {
                let Some(iy) = Window::src(oy, i, win.stride, win.pt, win.h) else { continue };
                for j in 0..win.kw {
                    if let Some(ix) = Window::src(ox, j, win.stride, win.pl, win.w) {
                        acc += x[iy * win.w + ix] * k[i * win.kw + j];
                    }
                }
            }
            out[oy * win.wo + ox] = acc;
        }
    }
    debug_assert_eq!(k.len(), taps);
}

impl<T: Real> Backward<T> for DepthwiseSeparable<T> {
    fn name(&self) -> &'static str {
        "depthwise_separable_conv"
    }

    fn backward(&self, ins: &[&Tensor<T>], _: &Tensor<T>, g: &[T], needs: &[bool]) -> Vec<Option<Vec<T>>> {
        let (x, dk, pk) = (ins[0].data(), ins[1].data(), ins[2].data());
        let (win, n, c, f) = (self.win, self.n, self.c, self.f);
        let p = win.positions();
        let hw = win.h * win.w;
        let taps = win.kh * win.kw;
        let mut dx = needs[0].then(|| vec![T::zero(); x.len()]);
        let mut ddk = needs[1].then(|| vec![T::zero(); dk.len()]);
        let mut dpk = needs[2].then(|| vec![T::zero(); pk.len()]);
        let mut dmid = vec![T::zero(); c * p];
        for s in 0..n {
            let gs = &g[s * f * p..(s + 1) * f * p];
            let mid = &self.mid[s * c * p..(s + 1) * c * p];
            if let Some(dpk) = dpk.as_mut() {
                gemm(f, p, c, T::one(), (gs, p, 1), (mid, 1, p), T::one(), (dpk, c, 1));
            }
            if !(needs[0] || needs[1]) {
                continue;
            }
            gemm(c, f, p, T::one(), (pk, 1, c), (gs, p, 1), T::zero(), (&mut dmid, p, 1));
            for ch in 0..c {
                let xp = &x[(s * c + ch) * hw..][..hw];
                let dm = &dmid[ch * p..(ch + 1) * p];
                let kern = &dk[ch * taps..(ch + 1) * taps];
                for oy in 0..win.ho {
                    for i in 0..win.kh {
                        let Some(iy) = Window::src(oy, i, win.stride, win.pt, win.h) else { continue };
                        for ox in 0..win.wo {
                            let gv = dm[oy * win.wo + ox];
                            for j in 0..win.kw {
                                if let Some(ix) = Window::src(ox, j, win.stride, win.pl, win.w) {
                                    if let Some(ddk) = ddk.as_mut() {
                                        ddk[ch * taps + i * win.kw + j] += gv * xp[iy * win.w + ix];
                                    }
                                    if let Some(dx) = dx.as_mut() {
                                        dx[(s * c + ch) * hw + iy * win.w + ix] += gv * kern[i * win.kw + j];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        vec![dx, ddk, dpk]
    }
}

/// Weights in a depthwise-separable block versus the equivalent full convolution.
pub fn depthwise_separable_params(c: usize, f: usize, kh: usize, kw: usize) -> (usize, usize) {
    (c * kh * kw + f * c, f * c * kh * kw)
}

/// Direct nested-loop cross-correlation, used as a test oracle.
pub fn conv2d_naive(x: &Tensor<f64>, w: &Tensor<f64>, b: &[f64], stride: usize, padding: Padding) -> Result<Tensor<f64>> {
    let [n, c, h, wd] = x.dims4()?;
    let [f, c2, kh, kw] = w.dims4()?;
    if c != c2 {
        return Err(Error::Shape("channel mismatch".into()));
    }
    let (ho, pt) = conv_axis(h, kh, stride, padding)?;
    let (wo, pl) = conv_axis(wd, kw, stride, padding)?;
    let mut out = Tensor::zeros(&[n, f, ho, wo]);
    let (xd, wdat) = (x.data(), w.data());
    for s in 0..n {
        for fi in 0..f {
            for oy in 0..ho {
                for ox in 0..wo {
                    let mut acc = b[fi];
                    for ci in 0..c {
                        for i in 0..kh {
                            for j in 0..kw {
                                let iy = (oy * stride + i) as isize - pt as isize;
                                let ix = (ox * stride + j) as isize - pl as isize;
                                if iy < 0 || ix < 0 || iy >= h as isize || ix >= wd as isize {
                                    continue;
                                }
                                acc += xd[((s * c + ci) * h + iy as usize) * wd + ix as usize]
                                    * wdat[((fi * c + ci) * kh + i) * kw + j];
                            }
                        }
                    }
                    out.data_mut()[((s * f + fi) * ho + oy) * wo + ox] = acc;
                }
            }
        }
    }
    Ok(out)
}

impl<T: Real> Tape<T> {
    /// Cross-correlation of `N×C×H×W` input with `F×C×kh×kw` kernels plus a
    /// per-filter bias.
    pub fn conv2d(&mut self, x: Var, kernels: Var, bias: Var, stride: usize, padding: Padding) -> Result<Var> {
        let [n, c, h, w] = self.value(x).dims4()?;
        let [f, kc, kh, kw] = self.value(kernels).dims4()?;
        if kc != c {
            return Err(Error::Shape(format!("conv2d: input has {c} channels, kernels expect {kc}")));
        }
        if self.value(bias).len() != f {
            return Err(Error::Shape(format!("conv2d: bias length {} for {f} filters", self.value(bias).len())));
        }
        let win = Window::new(h, w, kh, kw, stride, padding)?;
        let p = win.positions();
        let k = c * kh * kw;
        let xd = self.value(x).data();
        let wd = self.value(kernels).data();
        let bd = self.value(bias).data();
        let mut out = vec![T::zero(); n * f * p];
        let group = win.group_size(n);
        if group > 1 {
            let width = group * p;
            let mut col = vec![T::zero(); k * width];
            let mut prod = vec![T::zero(); f * width];
            for s0 in (0..n).step_by(group) {
                let m = group.min(n - s0);
                let q = m * p;
                for si in 0..m {
                    win.im2col(&xd[(s0 + si) * c * h * w..][..c * h * w], c, 0, win.ho, &mut col[si * p..], q);
                }
                gemm(f, k, q, T::one(), (wd, k, 1), (&col, q, 1), T::zero(), (&mut prod, q, 1));
                for si in 0..m {
                    let os = &mut out[(s0 + si) * f * p..][..f * p];
                    for (fi, row) in os.chunks_mut(p).enumerate() {
                        let src = &prod[fi * q + si * p..][..p];
                        row.iter_mut().zip(src).for_each(|(o, &v)| *o = v + bd[fi]);
                    }
                }
            }
        } else {
            let band = win.band_rows(k);
            let mut col = vec![T::zero(); k * band * win.wo];
            for s in 0..n {
                let os = &mut out[s * f * p..(s + 1) * f * p];
                for (fi, row) in os.chunks_mut(p).enumerate() {
                    row.fill(bd[fi]);
                }
                let xs = &xd[s * c * h * w..(s + 1) * c * h * w];
                for oy0 in (0..win.ho).step_by(band) {
                    let oy1 = (oy0 + band).min(win.ho);
                    let q = (oy1 - oy0) * win.wo;
                    win.im2col(xs, c, oy0, oy1, &mut col, q);
                    gemm(f, k, q, T::one(), (wd, k, 1), (&col, q, 1), T::one(), (&mut os[oy0 * win.wo..], p, 1));
                }
            }
        }
        let value = Tensor::new(vec![n, f, win.ho, win.wo], out)?;
        self.record(value, &[x, kernels, bias], Box::new(Conv2d { win, n, c, f }))
    }

    /// Per-channel `C×kh×kw` spatial filtering followed by `F×C` pointwise mixing.
    pub fn depthwise_separable_conv(
        &mut self,
        x: Var,
        depth: Var,
        point: Var,
        stride: usize,
        padding: Padding,
    ) -> Result<Var> {
        let [n, c, h, w] = self.value(x).dims4()?;
        let (kc, kh, kw) = match self.value(depth).shape() {
            &[kc, kh, kw] => (kc, kh, kw),
            s => return Err(Error::Shape(format!("depthwise kernels must be C×kh×kw, got {s:?}"))),
        };
        let [f, pc] = self.value(point).dims2()?;
        if kc != c || pc != c {
            return Err(Error::Shape(format!("depthwise-separable: input {c} channels, kernels {kc}/{pc}")));
        }
        let win = Window::new(h, w, kh, kw, stride, padding)?;
        let p = win.positions();
        let xd = self.value(x).data();
        let dk = self.value(depth).data();
        let pk = self.value(point).data();
        let mut mid = vec![T::zero(); n * c * p];
        for s in 0..n {
            for ch in 0..c {
                depthwise_forward(
                    &win,
                    &xd[(s * c + ch) * h * w..][..h * w],
                    &dk[ch * kh * kw..(ch + 1) * kh * kw],
                    &mut mid[(s * c + ch) * p..][..p],
                );
            }
        }
        let mut out = vec![T::zero(); n * f * p];
        for s in 0..n {
            gemm(
                f,
                c,
                p,
                T::one(),
                (pk, c, 1),
                (&mid[s * c * p..(s + 1) * c * p], p, 1),
                T::zero(),
                (&mut out[s * f * p..(s + 1) * f * p], p, 1),
            );
        }
        let value = Tensor::new(vec![n, f, win.ho, win.wo], out)?;
        self.record(value, &[x, depth, point], Box::new(DepthwiseSeparable { win, n, c, f, mid }))
    }
}
