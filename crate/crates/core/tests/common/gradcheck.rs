//! Finite-difference gradient oracle: a naive f64 forward pass over a
//! network's parameters and random toy networks to check against.

use lsit::cnn::{Activation, Gradients, Layer, LayerSpec, Loss, Network, Norm, Target};
use lsit::numerics::Padding;
use lsit::{seeded_rng, SeededRng, Tensor};
use rand::Rng;

/// Naive f64 forward pass over the network's parameters, with one parameter
/// optionally shifted. Also returns the relu sign / pool winner pattern so
/// callers can spot finite differences that straddle a kink. Dropout uses
/// the masks recorded by the analytic pass.
pub struct Oracle<'a> {
    pub net: &'a Network,
    pub masks: Vec<Option<Vec<f64>>>,
}

#[derive(Clone, Copy)]
pub struct Bump {
    layer: usize,
    bias: bool,
    idx: usize,
    by: f64,
}

impl Oracle<'_> {
    fn apply_mask(&self, layer: usize, a: &mut [f64]) {
        if let Some(m) = &self.masks[layer] {
            a.iter_mut().zip(m).for_each(|(v, f)| *v *= f);
        }
    }

    fn params(&self, layer: usize, bump: Option<Bump>) -> (Vec<f64>, Vec<f64>) {
        let (w, b) = self.net.layers[layer].params().unwrap();
        let mut w: Vec<f64> = w.data().iter().map(|&v| v as f64).collect();
        let mut b: Vec<f64> = b.data().iter().map(|&v| v as f64).collect();
        if let Some(bp) = bump.filter(|bp| bp.layer == layer) {
            if bp.bias {
                b[bp.idx] += bp.by;
            } else {
                w[bp.idx] += bp.by;
            }
        }
        (w, b)
    }

    pub fn loss(&self, x: &Tensor, target: Target, bump: Option<Bump>) -> (f64, Vec<u32>) {
        let norm = self.net.norm;
        let mut a: Vec<f64> = x
            .data()
            .iter()
            .map(|&v| ((v - norm.center) * norm.scale) as f64)
            .collect();
        let mut shape = self.net.input_shape.clone();
        let mut pattern = Vec::new();
        let mut logits = Vec::new();
        let relu = |v: &mut Vec<f64>, act: Activation, pattern: &mut Vec<u32>| {
            if act == Activation::Relu {
                for z in v.iter_mut() {
                    pattern.push((*z > 0.0) as u32);
                    *z = z.max(0.0);
                }
            }
        };
        for (li, layer) in self.net.layers.iter().enumerate() {
            match layer {
                Layer::Conv {
                    kernels,
                    padding,
                    activation,
                    ..
                } => {
                    let (w, b) = self.params(li, bump);
                    let ks = kernels.shape();
                    let (co, ci, k) = (ks[0], ks[1], ks[2]);
                    let (h, wd) = (shape[1] as isize, shape[2] as isize);
                    let p = match padding {
                        Padding::Valid => 0,
                        Padding::Same => (k as isize - 1) / 2,
                    };
                    let oh = h + 2 * p - k as isize + 1;
                    let ow = wd + 2 * p - k as isize + 1;
                    let mut out = vec![0.0; co * (oh * ow) as usize];
                    for o in 0..co {
                        for y in 0..oh {
                            for xx in 0..ow {
                                let mut s = b[o];
                                for c in 0..ci {
                                    for dy in 0..k as isize {
                                        for dx in 0..k as isize {
                                            let (iy, ix) = (y + dy - p, xx + dx - p);
                                            if iy < 0 || ix < 0 || iy >= h || ix >= wd {
                                                continue;
                                            }
                                            let wi = ((o * ci + c) * k + dy as usize) * k + dx as usize;
                                            s += w[wi] * a[(c as isize * h * wd + iy * wd + ix) as usize];
                                        }
                                    }
                                }
                                out[(o as isize * oh * ow + y * ow + xx) as usize] = s;
                            }
                        }
                    }
                    relu(&mut out, *activation, &mut pattern);
                    a = out;
                    shape = vec![co, oh as usize, ow as usize];
                }
                Layer::MaxPool { k, ceil } => {
                    let (c, h, w) = (shape[0], shape[1], shape[2]);
                    let (oh, ow) = if *ceil {
                        (h.div_ceil(*k), w.div_ceil(*k))
                    } else {
                        (h / k, w / k)
                    };
                    let mut out = Vec::with_capacity(c * oh * ow);
                    for ch in 0..c {
                        for y in 0..oh {
                            for x in 0..ow {
                                let mut best = (f64::NEG_INFINITY, 0u32);
                                for iy in y * k..((y + 1) * k).min(h) {
                                    for ix in x * k..((x + 1) * k).min(w) {
                                        let v = a[ch * h * w + iy * w + ix];
                                        if v > best.0 {
                                            best = (v, (iy * w + ix) as u32);
                                        }
                                    }
                                }
                                pattern.push(best.1);
                                out.push(best.0);
                            }
                        }
                    }
                    a = out;
                    shape = vec![c, oh, ow];
                }
                Layer::Flatten => shape = vec![a.len()],
                Layer::Dense { activation, .. } => {
                    let (w, b) = self.params(li, bump);
                    let n_in = a.len();
                    let mut out: Vec<f64> = (0..b.len())
                        .map(|o| b[o] + (0..n_in).map(|i| w[o * n_in + i] * a[i]).sum::<f64>())
                        .collect();
                    relu(&mut out, *activation, &mut pattern);
                    a = out;
                    self.apply_mask(li, &mut a);
                    shape = vec![a.len()];
                }
                Layer::Dropout { .. } => self.apply_mask(li, &mut a),
                Layer::SoftmaxOutput { .. } => logits = a.clone(),
            }
        }
        let loss = match target {
            Target::Class(c) => {
                let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lse = m + logits.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
                lse - logits[c]
            }
            Target::Image(t) => {
                let n = a.len() as f64;
                a.iter()
                    .zip(t.data())
                    .map(|(y, &t)| {
                        let d = y - ((t - norm.center) * norm.scale) as f64;
                        d * d
                    })
                    .sum::<f64>()
                    / n
            }
        };
        (loss, pattern)
    }
}

pub const H: f64 = 1e-3;
pub const REL_TOL: f64 = 1e-4;

/// Worst per-group relative error `‖g − g_fd‖ / max(‖g‖, ‖g_fd‖)` over the
/// parameter groups, plus the number of entries checked and skipped. With
/// `dropout_seed` the analytic pass samples dropout masks.
pub fn gradient_check(
    net: &Network,
    x: &Tensor,
    target: Target,
    dropout_seed: Option<u64>,
    max_per_group: usize,
) -> (f64, usize, usize) {
    let mut grads = Gradients::zeros(net);
    let mut rng = dropout_seed.map(seeded_rng);
    let (_, tape) = net.sample_gradients(x, target, rng.as_mut(), &mut grads).unwrap();
    let masks = (0..net.layers.len())
        .map(|l| tape.dropout_mask(l).map(|m| m.iter().map(|&f| f as f64).collect()))
        .collect();
    let oracle = Oracle { net, masks };
    let (_, base) = oracle.loss(x, target, None);
    let (mut worst, mut checked, mut skipped) = (0.0f64, 0, 0);
    for (li, g) in grads.layers.iter().enumerate() {
        let Some(g) = g else { continue };
        for (bias, analytic) in [(false, &g.w), (true, &g.b)] {
            let step = analytic.len().div_ceil(max_per_group).max(1);
            let (mut diff, mut na, mut nf) = (0.0, 0.0, 0.0);
            for idx in (0..analytic.len()).step_by(step) {
                let eval = |by| {
                    oracle.loss(
                        x,
                        target,
                        Some(Bump {
                            layer: li,
                            bias,
                            idx,
                            by,
                        }),
                    )
                };
                // a step that flips a relu or pool winner is retried smaller
                let fd = [H, H / 10.0, H / 100.0].into_iter().find_map(|h| {
                    let ((lp, pp), (lm, pm)) = (eval(h), eval(-h));
                    (pp == base && pm == base).then(|| (lp - lm) / (2.0 * h))
                });
                let Some(fd) = fd else {
                    skipped += 1;
                    continue;
                };
                checked += 1;
                let an = analytic[idx] as f64;
                diff += (an - fd).powi(2);
                na += an * an;
                nf += fd * fd;
            }
            let scale = na.sqrt().max(nf.sqrt());
            if scale > 1e-9 {
                worst = worst.max(diff.sqrt() / scale);
            }
        }
    }
    (worst, checked, skipped)
}

pub fn random_toy(rng: &mut SeededRng, seed: u64) -> (Network, Tensor, bool) {
    let c_in = rng.gen_range(1..=2);
    let classify = rng.gen_bool(0.6);
    // image nets keep every relu unit live, so they stay small to limit kinks
    let side = if classify { 12 } else { 7 };
    let act = |r: &mut SeededRng| {
        if r.gen_bool(0.75) {
            Activation::Relu
        } else {
            Activation::Linear
        }
    };
    let mut specs = Vec::new();
    let n_conv = rng.gen_range(1..=2);
    for _ in 0..n_conv {
        let k = [1, 3, 5][rng.gen_range(0..3)];
        let pad = if rng.gen_bool(0.5) { Padding::Same } else { Padding::Valid };
        specs.push(LayerSpec::conv(rng.gen_range(2..=4), k, pad, act(rng)));
    }
    let norm = if rng.gen_bool(0.5) { Norm::PIXELS } else { Norm::IDENTITY };
    if classify {
        if rng.gen_bool(0.7) {
            specs.push(LayerSpec::MaxPool {
                k: rng.gen_range(2..=3),
                ceil: rng.gen_bool(0.5),
            });
        }
        specs.push(LayerSpec::Flatten);
        if rng.gen_bool(0.3) {
            specs.push(LayerSpec::Dropout { rate: 0.25 });
        }
        if rng.gen_bool(0.6) {
            specs.push(LayerSpec::Dense {
                units: rng.gen_range(3..=8),
                activation: act(rng),
                dropout: if rng.gen_bool(0.4) { 0.3 } else { 0.0 },
            });
        }
        specs.push(LayerSpec::dense(rng.gen_range(2..=4), Activation::Linear));
        specs.push(LayerSpec::Softmax);
    } else {
        // image-to-image: same-padded convs ending in one linear channel
        specs.clear();
        for _ in 0..n_conv {
            specs.push(LayerSpec::conv(rng.gen_range(2..=4), 3, Padding::Same, act(rng)));
        }
        specs.push(LayerSpec::conv(1, rng.gen_range(0..2) * 2 + 1, Padding::Same, Activation::Linear));
    }
    let loss = if classify {
        Loss::CategoricalCrossEntropy
    } else {
        Loss::Mse
    };
    let mut net = Network::new(&[c_in, side, side], &specs, loss, norm, seed).unwrap();
    // non-zero biases so their gradients are exercised off the origin
    for l in &mut net.layers {
        if let Some((_, b)) = l.params_mut() {
            b.data_mut().iter_mut().for_each(|v| *v = rng.gen_range(-0.2..0.2));
        }
    }
    let x = if norm == Norm::PIXELS {
        Tensor::from_fn(&[c_in, side, side], |_| rng.gen_range(0.0..255.0))
    } else {
        Tensor::from_fn(&[c_in, side, side], |_| rng.gen_range(-1.0..1.0))
    };
    (net, x, classify)
}

/// One toy network's outcome.
pub struct NetCheck {
    pub seed: u64,
    pub classify: bool,
    pub worst: f64,
    pub checked: usize,
    pub specs: Vec<LayerSpec>,
}

/// Checks `nets` random toy networks drawn from `root`. Sample points where
/// a unit sits on a relu kink are redrawn, since such a kink spoils every
/// upstream difference.
pub fn check_random_nets(root: u64, nets: u64) -> Vec<NetCheck> {
    let mut rng = seeded_rng(root);
    (0..nets)
        .map(|seed| {
            let (net, mut x, classify) = random_toy(&mut rng, seed);
            let hi = if net.norm == Norm::PIXELS { 255.0 } else { 1.0 };
            let image_target = Tensor::from_fn(&x.shape()[1..], |_| rng.gen_range(0.0..hi));
            let target = if classify {
                Target::Class(rng.gen_range(0..net.classes().unwrap()))
            } else {
                Target::Image(&image_target)
            };
            let mut attempt = 0;
            loop {
                let (worst, checked, skipped) = gradient_check(&net, &x, target, Some(seed), 120);
                if skipped * 20 <= checked + skipped {
                    return NetCheck {
                        seed,
                        classify,
                        worst,
                        checked,
                        specs: net.specs(),
                    };
                }
                attempt += 1;
                assert!(attempt < 5, "net {seed}: every draw sits on a kink");
                x = Tensor::from_fn(x.shape(), |i| x.data()[i] + rng.gen_range(-0.05..0.05) * hi);
            }
        })
        .collect()
}
