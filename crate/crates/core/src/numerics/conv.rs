//! 2-D cross-correlation and max pooling on `channels × height × width`
//! tensors.

use crate::error::{Error, Result};
use crate::numerics::linalg::sgemm;
use crate::numerics::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Padding {
    /// No padding; output shrinks by `kernel − 1`.
    Valid,
    /// Zero padding of `(kernel − 1) / 2`; output keeps the input extent.
    Same,
}

impl Padding {
    pub fn amount(self, kernel: usize) -> usize {
        match self {
            Padding::Valid => 0,
            Padding::Same => (kernel - 1) / 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Padding::Valid => "valid",
            Padding::Same => "same",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "valid" => Some(Padding::Valid),
            "same" => Some(Padding::Same),
            _ => None,
        }
    }
}

/// Geometry of one convolution call.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ConvGeom {
    pub c_in: usize,
    pub h: usize,
    pub w: usize,
    pub kh: usize,
    pub kw: usize,
    pub ph: usize,
    pub pw: usize,
}

impl ConvGeom {
    pub fn out_h(&self) -> usize {
        self.h + 2 * self.ph + 1 - self.kh
    }

    pub fn out_w(&self) -> usize {
        self.w + 2 * self.pw + 1 - self.kw
    }

    pub fn patch_len(&self) -> usize {
        self.c_in * self.kh * self.kw
    }

    fn check(&self) -> Result<()> {
        if self.kh > self.h + 2 * self.ph || self.kw > self.w + 2 * self.pw {
            return Err(Error::dim(format!(
                "{}×{} kernel larger than padded {}×{} input",
                self.kh,
                self.kw,
                self.h + 2 * self.ph,
                self.w + 2 * self.pw
            )));
        }
        Ok(())
    }
}

/// Unrolls every receptive field into a column: rows index `(c, u, v)`,
/// columns index output positions `(y, x)`.
pub(crate) fn im2col(input: &[f32], g: &ConvGeom) -> Vec<f32> {
    let (oh, ow) = (g.out_h(), g.out_w());
    let ohw = oh * ow;
    let mut cols = vec![0.0f32; g.patch_len() * ohw];
    for c in 0..g.c_in {
        let plane = &input[c * g.h * g.w..(c + 1) * g.h * g.w];
        for u in 0..g.kh {
            for v in 0..g.kw {
                let row = ((c * g.kh + u) * g.kw + v) * ohw;
                // valid x range: 0 <= x + v - pw < w
                let x_lo = g.pw.saturating_sub(v);
                let x_hi = (g.w + g.pw).saturating_sub(v).min(ow);
                if x_lo >= x_hi {
                    continue;
                }
                for y in 0..oh {
                    let sy = y + u;
                    if sy < g.ph || sy - g.ph >= g.h {
                        continue;
                    }
                    let src_row = (sy - g.ph) * g.w;
                    let sx = x_lo + v - g.pw;
                    let dst = row + y * ow + x_lo;
                    cols[dst..dst + (x_hi - x_lo)]
                        .copy_from_slice(&plane[src_row + sx..src_row + sx + (x_hi - x_lo)]);
                }
            }
        }
    }
    cols
}

/// Cross-correlation returning the output and the unrolled input columns.
pub(crate) fn conv2d_raw(
    input: &[f32],
    g: &ConvGeom,
    kernels: &[f32],
    c_out: usize,
    bias: Option<&[f32]>,
) -> Result<(Vec<f32>, Vec<f32>)> {
    g.check()?;
    let ohw = g.out_h() * g.out_w();
    let cols = im2col(input, g);
    let mut out = vec![0.0f32; c_out * ohw];
    if let Some(b) = bias {
        for (o, chunk) in out.chunks_mut(ohw).enumerate() {
            chunk.fill(b[o]);
        }
    }
    let beta = if bias.is_some() { 1.0 } else { 0.0 };
    sgemm(
        c_out,
        g.patch_len(),
        ohw,
        1.0,
        kernels,
        false,
        &cols,
        false,
        beta,
        &mut out,
    );
    Ok((out, cols))
}

/// Kernel gradient `ΔK[o, (c,u,v)] = Σ_yx ΔZ[o, y, x] · X[c, y+u, x+v]`,
/// i.e. the input correlated with the output delta, accumulated into `dk`.
pub(crate) fn conv2d_kernel_grad(
    cols: &[f32],
    delta: &[f32],
    c_out: usize,
    patch_len: usize,
    ohw: usize,
    dk: &mut [f32],
) {
    sgemm(c_out, ohw, patch_len, 1.0, delta, false, cols, true, 1.0, dk);
}

/// Rotates every kernel by 180° and swaps the channel axes:
/// `F[c, o, u, v] = K[o, c, kh−1−u, kw−1−v]`.
pub(crate) fn flip_kernels(kernels: &[f32], c_out: usize, c_in: usize, kh: usize, kw: usize) -> Vec<f32> {
    let mut f = vec![0.0f32; kernels.len()];
    for o in 0..c_out {
        for c in 0..c_in {
            for u in 0..kh {
                for v in 0..kw {
                    let src = ((o * c_in + c) * kh + u) * kw + v;
                    let dst = ((c * c_out + o) * kh + (kh - 1 - u)) * kw + (kw - 1 - v);
                    f[dst] = kernels[src];
                }
            }
        }
    }
    f
}

/// Input gradient: the output delta fully convolved with the 180°-flipped
/// kernels. `g` is the forward geometry.
pub(crate) fn conv2d_input_grad(
    delta: &[f32],
    g: &ConvGeom,
    kernels: &[f32],
    c_out: usize,
) -> Result<Vec<f32>> {
    let flipped = flip_kernels(kernels, c_out, g.c_in, g.kh, g.kw);
    let back = ConvGeom {
        c_in: c_out,
        h: g.out_h(),
        w: g.out_w(),
        kh: g.kh,
        kw: g.kw,
        ph: g.kh - 1 - g.ph,
        pw: g.kw - 1 - g.pw,
    };
    let (dx, _) = conv2d_raw(delta, &back, &flipped, g.c_in, None)?;
    debug_assert_eq!(dx.len(), g.c_in * g.h * g.w);
    Ok(dx)
}

/// Multi-channel cross-correlation with shared kernels plus per-filter bias.
///
/// `input` is `c_in×h×w`, `kernels` is `c_out×c_in×kh×kw` (odd extents),
/// `bias` has `c_out` entries.
pub fn conv2d(input: &Tensor, kernels: &Tensor, bias: &Tensor, padding: Padding) -> Result<Tensor> {
    if input.rank() != 3 || kernels.rank() != 4 || bias.rank() != 1 {
        return Err(Error::dim(
            "conv2d expects input c×h×w, kernels o×c×kh×kw and a bias vector",
        ));
    }
    let [c_in, h, w] = [input.shape()[0], input.shape()[1], input.shape()[2]];
    let [c_out, kc, kh, kw] = [
        kernels.shape()[0],
        kernels.shape()[1],
        kernels.shape()[2],
        kernels.shape()[3],
    ];
    if kc != c_in {
        return Err(Error::dim(format!(
            "kernels expect {kc} input channels, input has {c_in}"
        )));
    }
    if bias.len() != c_out {
        return Err(Error::dim(format!(
            "bias has {} entries for {c_out} filters",
            bias.len()
        )));
    }
    if kh % 2 == 0 || kw % 2 == 0 {
        return Err(Error::param(format!("kernel extents must be odd, got {kh}×{kw}")));
    }
    let g = ConvGeom {
        c_in,
        h,
        w,
        kh,
        kw,
        ph: padding.amount(kh),
        pw: padding.amount(kw),
    };
    let (out, _) = conv2d_raw(input.data(), &g, kernels.data(), c_out, Some(bias.data()))?;
    Tensor::new(&[c_out, g.out_h(), g.out_w()], out)
}

/// For each pooled output cell, the flat input index of the selected maximum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PoolMask {
    pub input_shape: [usize; 3],
    pub k: usize,
    pub indices: Vec<usize>,
}

/// Non-overlapping `k×k` max pooling with stride `k`; trailing rows and
/// columns that do not fill a window are dropped. Ties pick the lowest flat
/// index.
pub fn maxpool2d(input: &Tensor, k: usize) -> Result<(Tensor, PoolMask)> {
    pool(input, k, false)
}

/// As [`maxpool2d`], but a trailing partial window still yields an output
/// cell, so the extent is `ceil(h / k)`.
pub fn maxpool2d_ceil(input: &Tensor, k: usize) -> Result<(Tensor, PoolMask)> {
    pool(input, k, true)
}

fn pool(input: &Tensor, k: usize, ceil: bool) -> Result<(Tensor, PoolMask)> {
    if k == 0 {
        return Err(Error::param("pool size must be positive"));
    }
    if input.rank() != 3 {
        return Err(Error::dim("maxpool2d expects c×h×w input"));
    }
    let [c, h, w] = [input.shape()[0], input.shape()[1], input.shape()[2]];
    if h == 0 || w == 0 || (!ceil && (h < k || w < k)) {
        return Err(Error::dim(format!("{h}×{w} input smaller than pool {k}")));
    }
    let (oh, ow) = if ceil {
        (h.div_ceil(k), w.div_ceil(k))
    } else {
        (h / k, w / k)
    };
    let x = input.data();
    let mut out = Vec::with_capacity(c * oh * ow);
    let mut indices = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        let base = ch * h * w;
        for i in 0..oh {
            let ku = k.min(h - i * k);
            for j in 0..ow {
                let kv = k.min(w - j * k);
                let mut best = base + (i * k) * w + j * k;
                let mut best_v = x[best];
                for u in 0..ku {
                    let row = base + (i * k + u) * w + j * k;
                    for (v, &val) in x[row..row + kv].iter().enumerate() {
                        if val > best_v {
                            best_v = val;
                            best = row + v;
                        }
                    }
                }
                out.push(best_v);
                indices.push(best);
            }
        }
    }
    let mask = PoolMask {
        input_shape: [c, h, w],
        k,
        indices,
    };
    Ok((Tensor::new(&[c, oh, ow], out)?, mask))
}

/// Routes pooled-output gradients back to the recorded argmax positions.
pub fn maxpool2d_backward(grad: &Tensor, mask: &PoolMask) -> Result<Tensor> {
    if grad.len() != mask.indices.len() {
        return Err(Error::dim(format!(
            "pool gradient has {} cells, mask has {}",
            grad.len(),
            mask.indices.len()
        )));
    }
    let mut dx = Tensor::zeros(&mask.input_shape);
    let d = dx.data_mut();
    for (&idx, &g) in mask.indices.iter().zip(grad.data()) {
        d[idx] += g;
    }
    Ok(dx)
}
