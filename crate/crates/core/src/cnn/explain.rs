//! Class-discriminative heat maps for classifiers.

use crate::cnn::network::Network;
use crate::error::{Error, Result};
use crate::numerics::Tensor;

fn class_delta(net: &Network, class_idx: usize) -> Result<Tensor> {
    let classes = net
        .classes()
        .ok_or_else(|| Error::Structure("explanations need a softmax classifier".into()))?;
    if class_idx >= classes {
        return Err(Error::param(format!(
            "class {class_idx} outside {classes} outputs"
        )));
    }
    let mut d = Tensor::zeros(&[classes]);
    d.data_mut()[class_idx] = 1.0;
    Ok(d)
}

/// Scales to `[0, 1]` by the maximum; an all-zero map stays zero.
fn unit_max(mut t: Tensor) -> Tensor {
    let m = t.max();
    if m > 0.0 {
        t.data_mut().iter_mut().for_each(|v| *v /= m);
    } else {
        t.data_mut().fill(0.0);
    }
    t
}

/// Bilinear resize with pixel centers aligned (`src = (dst + ½)·in/out − ½`,
/// clamped to the grid).
pub fn resize_bilinear(img: &Tensor, out_h: usize, out_w: usize) -> Result<Tensor> {
    if img.rank() != 2 || img.is_empty() || out_h == 0 || out_w == 0 {
        return Err(Error::dim(format!("cannot resize {:?}", img.shape())));
    }
    let (h, w) = (img.shape()[0], img.shape()[1]);
    let src = |dst: usize, n_in: usize, n_out: usize| -> (usize, usize, f32) {
        let s = ((dst as f32 + 0.5) * n_in as f32 / n_out as f32 - 0.5).clamp(0.0, (n_in - 1) as f32);
        let i0 = s.floor() as usize;
        let i1 = (i0 + 1).min(n_in - 1);
        (i0, i1, s - i0 as f32)
    };
    Ok(Tensor::from_fn(&[out_h, out_w], |i| {
        let (y0, y1, fy) = src(i / out_w, h, out_h);
        let (x0, x1, fx) = src(i % out_w, w, out_w);
        let top = img.at2(y0, x0) * (1.0 - fx) + img.at2(y0, x1) * fx;
        let bottom = img.at2(y1, x0) * (1.0 - fx) + img.at2(y1, x1) * fx;
        top * (1.0 - fy) + bottom * fy
    }))
}

/// Grad-CAM on the last convolution: channel weights are the spatial means
/// of `∂logit/∂A`, the map is `relu(Σ_k α_k A_k)` resized to the input and
/// scaled to `[0, 1]`.
pub fn grad_cam(net: &Network, x: &Tensor, class_idx: usize) -> Result<Tensor> {
    let delta = class_delta(net, class_idx)?;
    let conv = net
        .last_conv()
        .ok_or_else(|| Error::Structure("Grad-CAM needs a convolution layer".into()))?;
    let tape = net.forward(x, None)?;
    let n = net.layers.len();
    let grad = net.backprop(&tape, n - 1, delta, conv + 1, None)?;
    let act = tape.activation(conv).expect("conv output is on the tape");
    let [c, h, w] = [act.shape()[0], act.shape()[1], act.shape()[2]];
    let hw = h * w;
    let mut cam = vec![0.0f32; hw];
    for k in 0..c {
        let g = &grad.data()[k * hw..(k + 1) * hw];
        let alpha = g.iter().map(|&v| v as f64).sum::<f64>() / hw as f64;
        let a = &act.data()[k * hw..(k + 1) * hw];
        for (o, &v) in cam.iter_mut().zip(a) {
            *o += (alpha * v as f64) as f32;
        }
    }
    cam.iter_mut().for_each(|v| *v = v.max(0.0));
    let (ih, iw) = spatial(net)?;
    Ok(unit_max(resize_bilinear(&Tensor::new(&[h, w], cam)?, ih, iw)?))
}

/// `|∂logit/∂x|` per pixel (max over input channels), scaled to `[0, 1]`.
pub fn saliency(net: &Network, x: &Tensor, class_idx: usize) -> Result<Tensor> {
    let delta = class_delta(net, class_idx)?;
    let tape = net.forward(x, None)?;
    let n = net.layers.len();
    let grad = net.backprop(&tape, n - 1, delta, 0, None)?;
    let (h, w) = spatial(net)?;
    let hw = h * w;
    let chans = grad.len() / hw;
    let map = Tensor::from_fn(&[h, w], |i| {
        (0..chans)
            .map(|c| grad.data()[c * hw + i].abs())
            .fold(0.0, f32::max)
    });
    Ok(unit_max(map))
}

fn spatial(net: &Network) -> Result<(usize, usize)> {
    match net.input_shape.as_slice() {
        [_, h, w] => Ok((*h, *w)),
        s => Err(Error::Structure(format!("input {s:?} is not an image"))),
    }
}

/// Share of the map's total mass inside `mask` (non-zero entries).
pub fn mass_fraction(map: &Tensor, mask: &Tensor) -> Result<f64> {
    if map.shape() != mask.shape() {
        return Err(Error::dim("map and mask differ in shape"));
    }
    let total = map.sum();
    if total <= 0.0 {
        return Ok(0.0);
    }
    let inside: f64 = map
        .data()
        .iter()
        .zip(mask.data())
        .filter(|(_, &m)| m != 0.0)
        .map(|(&v, _)| v as f64)
        .sum();
    Ok(inside / total)
}
