use rand::Rng;

use crate::cnn::layer::{Activation, Layer, LayerSpec};
use crate::error::{Error, Result};
use crate::numerics::conv::{conv2d_input_grad, conv2d_kernel_grad, conv2d_raw, ConvGeom};
use crate::numerics::linalg::sgemm;
use crate::numerics::{maxpool2d, maxpool2d_backward, maxpool2d_ceil, softmax_slice, PoolMask, Tensor};
use crate::{seeded_rng, SeededRng};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Loss {
    Mse,
    CategoricalCrossEntropy,
}

impl Loss {
    pub fn name(self) -> &'static str {
        match self {
            Loss::Mse => "mse",
            Loss::CategoricalCrossEntropy => "categorical_cross_entropy",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "mse" => Ok(Loss::Mse),
            "categorical_cross_entropy" => Ok(Loss::CategoricalCrossEntropy),
            _ => Err(Error::Format(format!("unknown loss `{s}`"))),
        }
    }
}

/// Pixel normalization `u = (x − center)·scale`, applied to inputs and, for
/// image targets, to targets too.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norm {
    pub center: f32,
    pub scale: f32,
}

impl Norm {
    pub const IDENTITY: Norm = Norm {
        center: 0.0,
        scale: 1.0,
    };
    /// Maps the 8-bit range to roughly `[−2, 2]`.
    pub const PIXELS: Norm = Norm {
        center: 128.0,
        scale: 1.0 / 64.0,
    };

    pub fn apply(&self, t: &Tensor) -> Tensor {
        let Norm { center, scale } = *self;
        t.map(|v| (v - center) * scale)
    }

    pub fn invert(&self, t: &Tensor) -> Tensor {
        let Norm { center, scale } = *self;
        t.map(|v| v / scale + center)
    }
}

/// What one sample is trained towards.
#[derive(Clone, Copy, Debug)]
pub enum Target<'a> {
    Class(usize),
    /// Image in raw (unnormalized) units.
    Image(&'a Tensor),
}

#[derive(Clone, Debug)]
enum Aux {
    None,
    Cols(Vec<f32>),
    Pool(PoolMask),
    /// Per-element inverted-dropout factor, `0` or `1/(1 − rate)`.
    Mask(Vec<f32>),
}

/// Cached activations of one forward pass. `acts[i]` is the input of layer
/// `start + i`; the last entry is the network output.
#[derive(Clone, Debug)]
pub struct Tape {
    start: usize,
    acts: Vec<Tensor>,
    aux: Vec<Aux>,
}

impl Tape {
    pub fn output(&self) -> &Tensor {
        self.acts.last().expect("tape holds at least the input")
    }

    /// Output of layer `layer`.
    pub fn activation(&self, layer: usize) -> Option<&Tensor> {
        self.acts.get((layer + 1).checked_sub(self.start)?)
    }

    pub fn start(&self) -> usize {
        self.start
    }

    /// The dropout mask applied by `layer`, if any.
    pub fn dropout_mask(&self, layer: usize) -> Option<&[f32]> {
        match self.aux.get(layer.checked_sub(self.start)?)? {
            Aux::Mask(m) => Some(m),
            _ => None,
        }
    }
}

/// Gradient of the loss for one parameterized layer.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamGrads {
    pub w: Vec<f32>,
    pub b: Vec<f32>,
}

/// One entry per layer; `None` for frozen or parameter-free layers.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Option<ParamGrads>>,
}

impl Gradients {
    pub fn zeros(net: &Network) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .zip(&net.frozen)
                .map(|(l, &frozen)| {
                    let (w, b) = l.params()?;
                    (!frozen).then(|| ParamGrads {
                        w: vec![0.0; w.len()],
                        b: vec![0.0; b.len()],
                    })
                })
                .collect(),
        }
    }

    pub fn scale(&mut self, f: f32) {
        for g in self.layers.iter_mut().flatten() {
            g.w.iter_mut().chain(g.b.iter_mut()).for_each(|v| *v *= f);
        }
    }

    pub fn add(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            if let (Some(a), Some(b)) = (a, b) {
                a.w.iter_mut().zip(&b.w).for_each(|(x, y)| *x += y);
                a.b.iter_mut().zip(&b.b).for_each(|(x, y)| *x += y);
            }
        }
    }

    pub fn norm(&self) -> f64 {
        self.layers
            .iter()
            .flatten()
            .flat_map(|g| g.w.iter().chain(&g.b))
            .map(|&v| (v as f64) * (v as f64))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub layers: Vec<Layer>,
    pub frozen: Vec<bool>,
    pub loss: Loss,
    pub input_shape: Vec<usize>,
    pub norm: Norm,
    /// Seed the parameters were initialized from.
    pub seed: u64,
}

impl Network {
    /// Builds and initializes a network from layer specs.
    pub fn new(input_shape: &[usize], specs: &[LayerSpec], loss: Loss, norm: Norm, seed: u64) -> Result<Self> {
        let mut rng = seeded_rng(seed);
        let mut shape = input_shape.to_vec();
        let mut layers = Vec::with_capacity(specs.len());
        for spec in specs {
            let layer = Layer::init(spec, &shape, &mut rng)?;
            shape = spec.output_shape(&shape)?;
            layers.push(layer);
        }
        Self::from_layers(input_shape, layers, loss, norm, seed)
    }

    /// Wraps existing layers after checking that they compose.
    pub fn from_layers(input_shape: &[usize], layers: Vec<Layer>, loss: Loss, norm: Norm, seed: u64) -> Result<Self> {
        let net = Self {
            frozen: vec![false; layers.len()],
            layers,
            loss,
            input_shape: input_shape.to_vec(),
            norm,
            seed,
        };
        net.validate()?;
        Ok(net)
    }

    /// The same parameters on another input extent. Only networks whose
    /// layers all accept the new shapes (fully convolutional ones) succeed.
    pub fn with_input_shape(&self, input_shape: &[usize]) -> Result<Network> {
        let mut net = Network::from_layers(input_shape, self.layers.clone(), self.loss, self.norm, self.seed)?;
        net.frozen = self.frozen.clone();
        let mut shape = net.input_shape.clone();
        for layer in &net.layers {
            layer.check_input(&shape)?;
            shape = layer.spec().output_shape(&shape)?;
        }
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Structure("network has no layers".into()));
        }
        if self.frozen.len() != self.layers.len() {
            return Err(Error::Structure("frozen flags do not match layers".into()));
        }
        let softmax: Vec<usize> = self
            .layers
            .iter()
            .enumerate()
            .filter(|(_, l)| matches!(l, Layer::SoftmaxOutput { .. }))
            .map(|(i, _)| i)
            .collect();
        match self.loss {
            Loss::CategoricalCrossEntropy if softmax != [self.layers.len() - 1] => {
                return Err(Error::Structure(
                    "cross-entropy needs exactly one softmax, as the last layer".into(),
                ))
            }
            Loss::Mse if !softmax.is_empty() => {
                return Err(Error::Structure("mse networks have no softmax layer".into()))
            }
            _ => {}
        }
        self.shapes().map(|_| ())
    }

    /// Output extent of every layer.
    pub fn shapes(&self) -> Result<Vec<Vec<usize>>> {
        let mut shape = self.input_shape.clone();
        let mut out = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            l.check_input(&shape)?;
            shape = l.spec().output_shape(&shape)?;
            out.push(shape.clone());
        }
        Ok(out)
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(Layer::spec).collect()
    }

    pub fn output_shape(&self) -> Vec<usize> {
        self.shapes()
            .ok()
            .and_then(|s| s.last().cloned())
            .unwrap_or_default()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// Number of output classes of a classifier.
    pub fn classes(&self) -> Option<usize> {
        match self.layers.last()? {
            Layer::SoftmaxOutput { classes } => Some(*classes),
            _ => None,
        }
    }

    /// Index of the lowest parameterized layer that is not frozen.
    pub fn first_trainable(&self) -> Option<usize> {
        (0..self.layers.len()).find(|&i| !self.frozen[i] && self.layers[i].params().is_some())
    }

    /// Index of the last convolution.
    pub fn last_conv(&self) -> Option<usize> {
        self.layers.iter().rposition(|l| matches!(l, Layer::Conv { .. }))
    }

    /// Freezes every layer except those listed.
    pub fn freeze_all_but(&mut self, trainable: &[usize]) {
        for (i, f) in self.frozen.iter_mut().enumerate() {
            *f = !trainable.contains(&i);
        }
    }

    /// Raw pixels to the normalized input the first layer expects.
    pub fn prepare_input(&self, x: &Tensor) -> Result<Tensor> {
        if x.len() != self.input_shape.iter().product::<usize>() {
            return Err(Error::dim(format!(
                "network expects input {:?}, got {:?}",
                self.input_shape,
                x.shape()
            )));
        }
        self.norm.apply(x).reshape(&self.input_shape)
    }

    /// Forward pass from raw pixels. With `rng`, dropout is active and masks
    /// are drawn from it; without, the pass is deterministic inference.
    pub fn forward(&self, x: &Tensor, rng: Option<&mut SeededRng>) -> Result<Tape> {
        self.forward_from(0, self.prepare_input(x)?, rng)
    }

    /// Forward pass from an already normalized activation entering `start`.
    pub fn forward_from(&self, start: usize, input: Tensor, mut rng: Option<&mut SeededRng>) -> Result<Tape> {
        if start > self.layers.len() {
            return Err(Error::dim(format!("no layer {start}")));
        }
        let mut acts = Vec::with_capacity(self.layers.len() - start + 1);
        let mut aux = Vec::with_capacity(self.layers.len() - start);
        acts.push(input);
        for layer in &self.layers[start..] {
            let x = acts.last().expect("input pushed above");
            layer.check_input(x.shape())?;
            let (y, a) = forward_layer(layer, x, rng.as_deref_mut())?;
            acts.push(y);
            aux.push(a);
        }
        Ok(Tape { start, acts, aux })
    }

    /// Loss of one sample and its gradient with respect to the activation
    /// entering layer `from` (the returned index).
    pub fn loss_delta(&self, tape: &Tape, target: Target) -> Result<(f64, Tensor, usize)> {
        let n = self.layers.len();
        match (self.loss, target) {
            (Loss::CategoricalCrossEntropy, Target::Class(c)) => {
                let logits = tape
                    .activation(n - 2)
                    .ok_or_else(|| Error::State("tape does not reach the logits".into()))?;
                let classes = logits.len();
                if c >= classes {
                    return Err(Error::Data(format!("label {c} outside {classes} classes")));
                }
                let z = logits.data();
                let m = z.iter().cloned().fold(f32::NEG_INFINITY, f32::max) as f64;
                let lse = m + z.iter().map(|&v| (v as f64 - m).exp()).sum::<f64>().ln();
                let loss = lse - z[c] as f64;
                // p − onehot in f64 so a confident correct class keeps its
                // small residual instead of rounding against 1
                let delta = Tensor::from_fn(&[classes], |j| {
                    let p = (z[j] as f64 - lse).exp();
                    (if j == c { p - 1.0 } else { p }) as f32
                });
                Ok((loss, delta, n - 1))
            }
            (Loss::Mse, Target::Image(t)) => {
                let y = tape.output();
                if t.len() != y.len() {
                    return Err(Error::dim(format!(
                        "target has {} values, output {}",
                        t.len(),
                        y.len()
                    )));
                }
                let t = self.norm.apply(t);
                let k = y.len() as f64;
                let mut loss = 0.0f64;
                let delta: Vec<f32> = y
                    .data()
                    .iter()
                    .zip(t.data())
                    .map(|(&a, &b)| {
                        let d = a as f64 - b as f64;
                        loss += d * d;
                        (2.0 * d / k) as f32
                    })
                    .collect();
                Ok((loss / k, Tensor::new(y.shape(), delta)?, n))
            }
            _ => Err(Error::Data(format!(
                "target kind does not match the {} loss",
                self.loss.name()
            ))),
        }
    }

    /// Propagates `delta`, the gradient with respect to the activation
    /// entering layer `from`, back to the activation entering layer `stop`.
    /// Parameter gradients of unfrozen layers in `stop..from` are accumulated
    /// into `grads`.
    pub fn backprop(
        &self,
        tape: &Tape,
        from: usize,
        delta: Tensor,
        stop: usize,
        grads: Option<&mut Gradients>,
    ) -> Result<Tensor> {
        self.backprop_inner(tape, from, delta, stop, grads, true)
    }

    /// With `input_delta` false the delta entering layer `stop` is skipped
    /// (and the returned tensor is meaningless); training needs only the
    /// parameter gradients.
    fn backprop_inner(
        &self,
        tape: &Tape,
        from: usize,
        delta: Tensor,
        stop: usize,
        mut grads: Option<&mut Gradients>,
        input_delta: bool,
    ) -> Result<Tensor> {
        if stop < tape.start || from > self.layers.len() || stop > from {
            return Err(Error::State(format!(
                "tape from layer {} cannot back-propagate {from} → {stop}",
                tape.start
            )));
        }
        let mut d = delta;
        for i in (stop..from).rev() {
            let x = &tape.acts[i - tape.start];
            let y = &tape.acts[i + 1 - tape.start];
            if d.len() != y.len() {
                return Err(Error::dim(format!("delta for layer {i} has the wrong size")));
            }
            let g = match grads.as_deref_mut() {
                Some(gs) if !self.frozen[i] => gs.layers[i].as_mut(),
                _ => None,
            };
            d = backward_layer(&self.layers[i], x, y, &tape.aux[i - tape.start], d, g, input_delta || i > stop)?;
        }
        Ok(d)
    }

    /// Loss and accumulated parameter gradients for one sample.
    pub fn sample_gradients(
        &self,
        x: &Tensor,
        target: Target,
        rng: Option<&mut SeededRng>,
        grads: &mut Gradients,
    ) -> Result<(f64, Tape)> {
        let tape = self.forward(x, rng)?;
        self.tape_gradients(tape, target, grads)
    }

    pub(crate) fn tape_gradients(&self, tape: Tape, target: Target, grads: &mut Gradients) -> Result<(f64, Tape)> {
        let (loss, delta, from) = self.loss_delta(&tape, target)?;
        if let Some(stop) = self.first_trainable() {
            self.backprop_inner(&tape, from, delta, stop.max(tape.start), Some(grads), false)?;
        }
        Ok((loss, tape))
    }

    /// Class index (ties to the lowest) and probability vector.
    pub fn predict(&self, x: &Tensor) -> Result<(usize, Vec<f32>)> {
        if self.loss != Loss::CategoricalCrossEntropy {
            return Err(Error::Structure("predict needs a classifier".into()));
        }
        let tape = self.forward(x, None)?;
        let p = tape.output().data().to_vec();
        Ok((argmax(&p), p))
    }

    /// Predicts each image of an `N×…` stack.
    pub fn predict_batch(&self, xs: &Tensor) -> Result<Vec<(usize, Vec<f32>)>> {
        xs.unstack().iter().map(|x| self.predict(x)).collect()
    }

    /// Runs an image-to-image network and maps the output back to pixels,
    /// clamped to `[0, 255]`, in the input's shape. Accepts one image or an
    /// `N×h×w` stack.
    pub fn denoise(&self, x: &Tensor) -> Result<Tensor> {
        if self.loss != Loss::Mse {
            return Err(Error::Structure("denoise needs an image-to-image network".into()));
        }
        let per: usize = self.input_shape.iter().product();
        if x.len() == per {
            let y = self.forward(x, None)?.output().clone();
            return self
                .norm
                .invert(&y)
                .map(|v| v.clamp(0.0, 255.0))
                .reshape(x.shape());
        }
        if x.rank() < 2 || x.len() % per != 0 {
            return Err(Error::dim(format!("cannot denoise {:?}", x.shape())));
        }
        let outs = x
            .unstack()
            .iter()
            .map(|img| self.denoise(img))
            .collect::<Result<Vec<_>>>()?;
        Tensor::stack(&outs.iter().collect::<Vec<_>>())
    }
}

pub(crate) fn argmax(p: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

fn conv_geom(kernels: &Tensor, x: &Tensor, padding: crate::numerics::Padding) -> ConvGeom {
    let k = kernels.shape();
    ConvGeom {
        c_in: x.shape()[0],
        h: x.shape()[1],
        w: x.shape()[2],
        kh: k[2],
        kw: k[3],
        ph: padding.amount(k[2]),
        pw: padding.amount(k[3]),
    }
}

fn dropout_mask(len: usize, rate: f32, rng: &mut SeededRng) -> Vec<f32> {
    let keep = 1.0 / (1.0 - rate);
    (0..len)
        .map(|_| if rng.gen::<f32>() < rate { 0.0 } else { keep })
        .collect()
}

fn relu_in_place(v: &mut [f32]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

fn forward_layer(layer: &Layer, x: &Tensor, rng: Option<&mut SeededRng>) -> Result<(Tensor, Aux)> {
    Ok(match layer {
        Layer::Conv {
            kernels,
            bias,
            padding,
            activation,
        } => {
            let g = conv_geom(kernels, x, *padding);
            let c_out = kernels.shape()[0];
            let (mut out, cols) = conv2d_raw(x.data(), &g, kernels.data(), c_out, Some(bias.data()))?;
            if *activation == Activation::Relu {
                relu_in_place(&mut out);
            }
            (Tensor::new(&[c_out, g.out_h(), g.out_w()], out)?, Aux::Cols(cols))
        }
        Layer::MaxPool { k, ceil } => {
            let (y, mask) = if *ceil {
                maxpool2d_ceil(x, *k)?
            } else {
                maxpool2d(x, *k)?
            };
            (y, Aux::Pool(mask))
        }
        Layer::Flatten => (x.clone().reshape(&[x.len()])?, Aux::None),
        Layer::Dense {
            w,
            b,
            activation,
            dropout,
        } => {
            let (units, d_in) = (w.shape()[0], w.shape()[1]);
            let mut out = b.data().to_vec();
            sgemm(units, d_in, 1, 1.0, w.data(), false, x.data(), false, 1.0, &mut out);
            if *activation == Activation::Relu {
                relu_in_place(&mut out);
            }
            let aux = match rng {
                Some(rng) if *dropout > 0.0 => {
                    let m = dropout_mask(units, *dropout, rng);
                    out.iter_mut().zip(&m).for_each(|(o, f)| *o *= f);
                    Aux::Mask(m)
                }
                _ => Aux::None,
            };
            (Tensor::new(&[units], out)?, aux)
        }
        Layer::Dropout { rate } => match rng {
            Some(rng) if *rate > 0.0 => {
                let m = dropout_mask(x.len(), *rate, rng);
                let data = x.data().iter().zip(&m).map(|(v, f)| v * f).collect();
                (Tensor::new(x.shape(), data)?, Aux::Mask(m))
            }
            _ => (x.clone(), Aux::None),
        },
        Layer::SoftmaxOutput { .. } => {
            (Tensor::new(x.shape(), softmax_slice(x.data()))?, Aux::None)
        }
    })
}

fn backward_layer(
    layer: &Layer,
    x: &Tensor,
    y: &Tensor,
    aux: &Aux,
    mut d: Tensor,
    grads: Option<&mut ParamGrads>,
    need_input: bool,
) -> Result<Tensor> {
    let relu_gate = |d: &mut Tensor| {
        for (g, &o) in d.data_mut().iter_mut().zip(y.data()) {
            if o <= 0.0 {
                *g = 0.0;
            }
        }
    };
    let apply_mask = |d: &mut Tensor| {
        if let Aux::Mask(m) = aux {
            d.data_mut().iter_mut().zip(m).for_each(|(g, f)| *g *= f);
        }
    };
    match layer {
        Layer::Conv {
            kernels,
            padding,
            activation,
            ..
        } => {
            if *activation == Activation::Relu {
                relu_gate(&mut d);
            }
            let g = conv_geom(kernels, x, *padding);
            let c_out = kernels.shape()[0];
            let ohw = g.out_h() * g.out_w();
            if let Some(pg) = grads {
                let Aux::Cols(cols) = aux else {
                    return Err(Error::State("conv tape entry lacks its columns".into()));
                };
                conv2d_kernel_grad(cols, d.data(), c_out, g.patch_len(), ohw, &mut pg.w);
                for (o, bsum) in pg.b.iter_mut().enumerate() {
                    *bsum += d.data()[o * ohw..(o + 1) * ohw].iter().sum::<f32>();
                }
            }
            if !need_input {
                return Ok(Tensor::zeros(x.shape()));
            }
            let dx = conv2d_input_grad(d.data(), &g, kernels.data(), c_out)?;
            Tensor::new(x.shape(), dx)
        }
        Layer::MaxPool { .. } => {
            let Aux::Pool(mask) = aux else {
                return Err(Error::State("pool tape entry lacks its mask".into()));
            };
            maxpool2d_backward(&d, mask)
        }
        Layer::Flatten => d.reshape(x.shape()),
        Layer::Dense { w, activation, .. } => {
            apply_mask(&mut d);
            if *activation == Activation::Relu {
                relu_gate(&mut d);
            }
            let (units, d_in) = (w.shape()[0], w.shape()[1]);
            if let Some(pg) = grads {
                sgemm(units, 1, d_in, 1.0, d.data(), false, x.data(), false, 1.0, &mut pg.w);
                pg.b.iter_mut().zip(d.data()).for_each(|(b, g)| *b += g);
            }
            if !need_input {
                return Ok(Tensor::zeros(x.shape()));
            }
            let mut dx = vec![0.0f32; d_in];
            sgemm(1, units, d_in, 1.0, d.data(), false, w.data(), false, 0.0, &mut dx);
            Tensor::new(x.shape(), dx)
        }
        Layer::Dropout { .. } => {
            apply_mask(&mut d);
            Ok(d)
        }
        Layer::SoftmaxOutput { .. } => {
            // vector-Jacobian product of softmax: p ⊙ (d − p·d)
            let p = y.data();
            let dot: f32 = p.iter().zip(d.data()).map(|(a, b)| a * b).sum();
            let dz = p.iter().zip(d.data()).map(|(&pi, &di)| pi * (di - dot)).collect();
            Tensor::new(x.shape(), dz)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Padding;

    fn toy(seed: u64) -> Network {
        Network::new(
            &[1, 8, 8],
            &[
                LayerSpec::conv(3, 3, Padding::Valid, Activation::Relu),
                LayerSpec::pool(2),
                LayerSpec::Flatten,
                LayerSpec::dense(5, Activation::Relu),
                LayerSpec::dense(3, Activation::Linear),
                LayerSpec::Softmax,
            ],
            Loss::CategoricalCrossEntropy,
            Norm::IDENTITY,
            seed,
        )
        .unwrap()
    }

    #[test]
    fn structure_rules() {
        let bad = Network::new(
            &[4],
            &[LayerSpec::dense(2, Activation::Linear)],
            Loss::CategoricalCrossEntropy,
            Norm::IDENTITY,
            0,
        );
        assert!(matches!(bad, Err(Error::Structure(_))));
        let bad = Network::new(
            &[4],
            &[LayerSpec::dense(2, Activation::Linear), LayerSpec::Softmax],
            Loss::Mse,
            Norm::IDENTITY,
            0,
        );
        assert!(matches!(bad, Err(Error::Structure(_))));
    }

    #[test]
    fn inference_is_deterministic_and_normalized() {
        let net = toy(1);
        let x = Tensor::from_fn(&[8, 8], |i| (i as f32 * 0.37).sin());
        let a = net.forward(&x, None).unwrap();
        let b = net.forward(&x, None).unwrap();
        assert_eq!(a.output(), b.output());
        let s: f32 = a.output().data().iter().sum();
        assert!((s - 1.0).abs() < 1e-6);
        assert!(net.forward(&Tensor::zeros(&[7, 7]), None).is_err());
    }

    #[test]
    fn cross_entropy_delta_is_probabilities_minus_one_hot() {
        let net = toy(2);
        let x = Tensor::from_fn(&[8, 8], |i| (i % 5) as f32);
        let tape = net.forward(&x, None).unwrap();
        let (loss, delta, from) = net.loss_delta(&tape, Target::Class(1)).unwrap();
        let p = tape.output().data();
        assert_eq!(from, net.layers.len() - 1);
        assert!((loss + (p[1] as f64).ln()).abs() < 1e-5);
        for (i, (&d, &pi)) in delta.data().iter().zip(p).enumerate() {
            let want = pi - if i == 1 { 1.0 } else { 0.0 };
            assert!((d - want).abs() < 1e-7);
        }
        assert!(net.loss_delta(&tape, Target::Class(3)).is_err());
    }

    #[test]
    fn frozen_layers_get_no_gradient_slot() {
        let mut net = toy(3);
        net.freeze_all_but(&[4]);
        let g = Gradients::zeros(&net);
        assert!(g.layers.iter().enumerate().all(|(i, e)| e.is_some() == (i == 4)));
        assert_eq!(net.first_trainable(), Some(4));
    }

    #[test]
    fn seeded_dropout_masks_repeat() {
        let net = Network::new(
            &[6],
            &[
                LayerSpec::Dense {
                    units: 40,
                    activation: Activation::Relu,
                    dropout: 0.5,
                },
                LayerSpec::dense(2, Activation::Linear),
                LayerSpec::Softmax,
            ],
            Loss::CategoricalCrossEntropy,
            Norm::IDENTITY,
            4,
        )
        .unwrap();
        let x = Tensor::full(&[6], 1.0);
        let a = net.forward(&x, Some(&mut seeded_rng(9))).unwrap();
        let b = net.forward(&x, Some(&mut seeded_rng(9))).unwrap();
        assert_eq!(a.dropout_mask(0), b.dropout_mask(0));
        let m = a.dropout_mask(0).unwrap();
        assert!(m.iter().all(|&v| v == 0.0 || v == 2.0));
        assert!(net.forward(&x, None).unwrap().dropout_mask(0).is_none());
    }
}
