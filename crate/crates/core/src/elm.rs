//! Extreme-learning-machine autoencoder with online-sequential updates.
//!
//! The hidden layer `sigmoid(x·W_inᵀ + b_in)` is drawn once from a seed and
//! never trained. Only the readout `β` is fitted, by ridge least squares in a
//! single batch or chunk by chunk with recursive least squares. Both routes
//! agree up to round-off.

use std::fs;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::io::KeyValues;
use crate::numerics::linalg::sgemm;
use crate::numerics::{dlt, ridge_solve64, sigmoid, Cholesky, Mat64, Tensor};
use crate::seeded_rng;

pub const DEFAULT_HIDDEN: usize = 2000;
pub const DEFAULT_C_REG: f64 = 100.0;

/// Affine maps between pixel values and the units the model sees:
/// `u = (x − center)·scale`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scaling {
    pub in_center: f32,
    pub in_scale: f32,
    pub out_center: f32,
    pub out_scale: f32,
}

impl Scaling {
    pub const IDENTITY: Scaling = Scaling {
        in_center: 0.0,
        in_scale: 1.0,
        out_center: 0.0,
        out_scale: 1.0,
    };

    /// Pixel scaling for `d_in` inputs. Targets map `[0, 255]` to about
    /// `[−1, 1]`; inputs are shrunk further by `sqrt(3/d_in)` so that a
    /// pre-activation summed over `d_in` uniform weights stays near unit
    /// variance instead of saturating the sigmoid.
    pub fn pixels(d_in: usize) -> Self {
        let out_scale = 1.0 / 128.0;
        Scaling {
            in_center: 128.0,
            in_scale: out_scale * (3.0 / d_in.max(1) as f32).sqrt() * 2.0,
            out_center: 128.0,
            out_scale,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ElmModel {
    d_in: usize,
    d_hidden: usize,
    d_out: usize,
    seed: u64,
    /// `d_hidden × d_in`
    w_in: Tensor,
    b_in: Tensor,
    /// `d_hidden × d_out`
    pub beta: Tensor,
    pub c_reg: f64,
    pub scaling: Scaling,
}

impl ElmModel {
    /// Random hidden layer with weights and biases uniform in `[−1, 1]`;
    /// `β` starts at zero.
    pub fn new(d_in: usize, d_hidden: usize, d_out: usize, seed: u64) -> Result<Self> {
        if d_in == 0 || d_hidden == 0 || d_out == 0 {
            return Err(Error::param(format!(
                "ELM extents must be positive: {d_in}/{d_hidden}/{d_out}"
            )));
        }
        let mut rng = seeded_rng(seed);
        let w_in = Tensor::from_fn(&[d_hidden, d_in], |_| rng.gen_range(-1.0f32..=1.0));
        let b_in = Tensor::from_fn(&[d_hidden], |_| rng.gen_range(-1.0f32..=1.0));
        Ok(Self {
            d_in,
            d_hidden,
            d_out,
            seed,
            w_in,
            b_in,
            beta: Tensor::zeros(&[d_hidden, d_out]),
            c_reg: DEFAULT_C_REG,
            scaling: Scaling::IDENTITY,
        })
    }

    /// Autoencoder over `side × side` images with pixel scaling.
    pub fn denoiser(side: usize, d_hidden: usize, seed: u64) -> Result<Self> {
        let d = side * side;
        let mut m = Self::new(d, d_hidden, d, seed)?;
        m.scaling = Scaling::pixels(d);
        Ok(m)
    }

    /// Model with an explicit hidden layer, for tests and checkpoints.
    pub fn from_parts(w_in: Tensor, b_in: Tensor, beta: Tensor, seed: u64) -> Result<Self> {
        if w_in.rank() != 2 || b_in.rank() != 1 || beta.rank() != 2 {
            return Err(Error::dim("ELM parts must be W (h×d), b (h), β (h×o)"));
        }
        let (d_hidden, d_in) = (w_in.shape()[0], w_in.shape()[1]);
        if b_in.len() != d_hidden || beta.shape()[0] != d_hidden {
            return Err(Error::dim(format!(
                "hidden extents disagree: W {:?}, b {:?}, β {:?}",
                w_in.shape(),
                b_in.shape(),
                beta.shape()
            )));
        }
        let d_out = beta.shape()[1];
        Ok(Self {
            d_in,
            d_hidden,
            d_out,
            seed,
            w_in,
            b_in,
            beta,
            c_reg: DEFAULT_C_REG,
            scaling: Scaling::IDENTITY,
        })
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_hidden(&self) -> usize {
        self.d_hidden
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn w_in(&self) -> &Tensor {
        &self.w_in
    }

    pub fn b_in(&self) -> &Tensor {
        &self.b_in
    }

    /// `sigmoid(x·W_inᵀ + b_in)` row by row; `x` is `n × d_in`.
    pub fn hidden_map(&self, x: &Tensor) -> Result<Tensor> {
        if x.rank() != 2 || x.shape()[1] != self.d_in {
            return Err(Error::dim(format!(
                "hidden_map expects n×{}, got {:?}",
                self.d_in,
                x.shape()
            )));
        }
        let n = x.shape()[0];
        let mut h = vec![0.0f32; n * self.d_hidden];
        for row in h.chunks_mut(self.d_hidden) {
            row.copy_from_slice(self.b_in.data());
        }
        sgemm(
            n,
            self.d_in,
            self.d_hidden,
            1.0,
            x.data(),
            false,
            self.w_in.data(),
            true,
            1.0,
            &mut h,
        );
        for v in &mut h {
            *v = sigmoid(*v);
        }
        let h = Tensor::new(&[n, self.d_hidden], h)?;
        h.ensure_finite("hidden activations")?;
        Ok(h)
    }

    fn hidden64(&self, x: &Tensor) -> Result<Mat64> {
        Mat64::from_tensor(&self.hidden_map(x)?)
    }

    fn check_targets(&self, x: &Tensor, t: &Tensor) -> Result<()> {
        if t.rank() != 2 || t.shape()[1] != self.d_out || t.shape()[0] != x.shape()[0] {
            return Err(Error::dim(format!(
                "targets must be {}×{}, got {:?}",
                x.shape()[0],
                self.d_out,
                t.shape()
            )));
        }
        if x.shape()[0] == 0 {
            return Err(Error::dim("training needs at least one sample"));
        }
        t.ensure_finite("targets")
    }

    /// Fits `β` by ridge regression on the whole set at once.
    pub fn train_batch(&mut self, x: &Tensor, t: &Tensor, c_reg: f64) -> Result<()> {
        let h = self.hidden64(x)?;
        self.check_targets(x, t)?;
        let beta = ridge_solve64(&h, &Mat64::from_tensor(t)?, c_reg)?;
        self.set_beta(&beta, c_reg)
    }

    fn set_beta(&mut self, beta: &Mat64, c_reg: f64) -> Result<()> {
        if !beta.is_finite() {
            return Err(Error::Numeric("β is not finite".into()));
        }
        self.beta = beta.to_tensor();
        self.c_reg = c_reg;
        Ok(())
    }

    /// `hidden_map(x)·β`.
    pub fn predict(&self, x: &Tensor) -> Result<Tensor> {
        let h = self.hidden_map(x)?;
        let n = x.shape()[0];
        let mut out = vec![0.0f32; n * self.d_out];
        sgemm(
            n,
            self.d_hidden,
            self.d_out,
            1.0,
            h.data(),
            false,
            self.beta.data(),
            false,
            0.0,
            &mut out,
        );
        Tensor::new(&[n, self.d_out], out)
    }

    pub fn mse(&self, x: &Tensor, t: &Tensor) -> Result<f64> {
        let y = self.predict(x)?;
        self.check_targets(x, t)?;
        Ok(y.data()
            .iter()
            .zip(t.data())
            .map(|(&a, &b)| (a as f64 - b as f64).powi(2))
            .sum::<f64>()
            / y.len() as f64)
    }

    fn side(&self) -> Result<usize> {
        let s = (self.d_in as f64).sqrt().round() as usize;
        if s * s != self.d_in || self.d_in != self.d_out {
            return Err(Error::dim(format!(
                "model is {}→{}, not a square-image autoencoder",
                self.d_in, self.d_out
            )));
        }
        Ok(s)
    }

    /// Flattens `N×s×s` (or one `s×s`) pixel images into scaled input rows.
    pub fn encode_inputs(&self, imgs: &Tensor) -> Result<Tensor> {
        let s = self.side()?;
        let n = image_count(imgs, s)?;
        let Scaling { in_center, in_scale, .. } = self.scaling;
        imgs.map(|v| (v - in_center) * in_scale).reshape(&[n, s * s])
    }

    pub fn encode_targets(&self, imgs: &Tensor) -> Result<Tensor> {
        let s = self.side()?;
        let n = image_count(imgs, s)?;
        let Scaling { out_center, out_scale, .. } = self.scaling;
        imgs.map(|v| (v - out_center) * out_scale).reshape(&[n, s * s])
    }

    /// Denoises `N×s×s` (or one `s×s`) pixel images; output is clamped to
    /// `[0, 255]` and keeps the input's shape.
    pub fn denoise(&self, noisy: &Tensor) -> Result<Tensor> {
        let x = self.encode_inputs(noisy)?;
        let Scaling { out_center, out_scale, .. } = self.scaling;
        let y = self.predict(&x)?;
        y.map(|v| (v / out_scale + out_center).clamp(0.0, 255.0))
            .reshape(noisy.shape())
    }

    /// Batch fit of the denoising map from noisy to clean pixel images.
    pub fn fit_denoiser(&mut self, noisy: &Tensor, clean: &Tensor, c_reg: f64) -> Result<()> {
        if noisy.shape() != clean.shape() {
            return Err(Error::dim("noisy and clean stacks differ in shape"));
        }
        let x = self.encode_inputs(noisy)?;
        let t = self.encode_targets(clean)?;
        self.train_batch(&x, &t, c_reg)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        dlt::write(&dir.join("w_in.dlt"), &self.w_in)?;
        dlt::write(&dir.join("b_in.dlt"), &self.b_in)?;
        dlt::write(&dir.join("beta.dlt"), &self.beta)?;
        let mut kv = KeyValues::new();
        kv.set("kind", "elm");
        kv.set("d_in", self.d_in);
        kv.set("d_hidden", self.d_hidden);
        kv.set("d_out", self.d_out);
        kv.set("activation", "sigmoid");
        kv.set("c_reg", self.c_reg);
        kv.set("seed", self.seed);
        let s = self.scaling;
        kv.set("in_center", s.in_center);
        kv.set("in_scale", s.in_scale);
        kv.set("out_center", s.out_center);
        kv.set("out_scale", s.out_scale);
        kv.save(&dir.join("manifest.txt"))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let kv = KeyValues::load(&dir.join("manifest.txt"))?;
        if kv.get("kind") != Some("elm") || kv.get("activation") != Some("sigmoid") {
            return Err(Error::Format("not a sigmoid ELM checkpoint".into()));
        }
        let mut m = Self::from_parts(
            dlt::read(&dir.join("w_in.dlt"))?,
            dlt::read(&dir.join("b_in.dlt"))?,
            dlt::read(&dir.join("beta.dlt"))?,
            kv.require_parsed("seed")?,
        )?;
        let expect = [m.d_in, m.d_hidden, m.d_out];
        let got: [usize; 3] = [
            kv.require_parsed("d_in")?,
            kv.require_parsed("d_hidden")?,
            kv.require_parsed("d_out")?,
        ];
        if expect != got {
            return Err(Error::Format(format!(
                "manifest extents {got:?} disagree with tensors {expect:?}"
            )));
        }
        m.c_reg = kv.require_parsed("c_reg")?;
        m.scaling = Scaling {
            in_center: kv.require_parsed("in_center")?,
            in_scale: kv.require_parsed("in_scale")?,
            out_center: kv.require_parsed("out_center")?,
            out_scale: kv.require_parsed("out_scale")?,
        };
        Ok(m)
    }
}

fn image_count(imgs: &Tensor, s: usize) -> Result<usize> {
    match imgs.shape() {
        [h, w] if *h == s && *w == s => Ok(1),
        [n, h, w] if *h == s && *w == s => Ok(*n),
        other => Err(Error::dim(format!("expected {s}×{s} images, got {other:?}"))),
    }
}

/// Recursive least-squares state for chunked training.
///
/// `p` is the inverse of the regularized Gram matrix `HᵀH + I/C` over every
/// sample seen so far and `beta` the matching ridge solution.
#[derive(Clone, Debug)]
pub struct OselmState {
    pub p: Mat64,
    pub beta: Mat64,
    pub c_reg: f64,
    pub chunks_seen: usize,
    pub samples_seen: usize,
}

impl OselmState {
    pub fn init(model: &ElmModel, x0: &Tensor, t0: &Tensor, c_reg: f64) -> Result<Self> {
        if !(c_reg > 0.0) || !c_reg.is_finite() {
            return Err(Error::param(format!("c_reg must be positive, got {c_reg}")));
        }
        let h = model.hidden64(x0)?;
        model.check_targets(x0, t0)?;
        let mut gram = h.tmul(&h)?;
        gram.add_diagonal(1.0 / c_reg);
        let p = Cholesky::factor(&gram)?.inverse()?;
        let beta = p.mul(&h.tmul(&Mat64::from_tensor(t0)?)?)?;
        Ok(Self {
            p,
            beta,
            c_reg,
            chunks_seen: 1,
            samples_seen: x0.shape()[0],
        })
    }

    /// `P ← P − P Hᵀ (I + H P Hᵀ)⁻¹ H P`, then `β ← β + P Hᵀ (T − Hβ)`.
    pub fn update(&mut self, model: &ElmModel, x: &Tensor, t: &Tensor) -> Result<()> {
        let h = model.hidden64(x)?;
        model.check_targets(x, t)?;
        if self.p.rows() != model.d_hidden || self.beta.cols() != model.d_out {
            return Err(Error::State("state does not belong to this model".into()));
        }
        let ph_t = self.p.mul_t(&h)?; // d×m
        let mut k = h.mul(&ph_t)?; // m×m
        k.add_diagonal(1.0);
        let chol = Cholesky::factor(&k)
            .map_err(|e| Error::Numeric(format!("ill-conditioned update: {e}")))?;
        let gain = chol.solve(&ph_t.transpose())?; // m×d = K⁻¹ H P
        let delta = ph_t.mul(&gain)?;
        self.p.add_assign(&delta, -1.0);
        self.p.symmetrize();
        let mut resid = Mat64::from_tensor(t)?;
        resid.add_assign(&h.mul(&self.beta)?, -1.0);
        let step = self.p.mul_t(&h)?.mul(&resid)?;
        self.beta.add_assign(&step, 1.0);
        if !self.p.is_finite() || !self.beta.is_finite() {
            return Err(Error::Numeric("sequential update diverged".into()));
        }
        self.chunks_seen += 1;
        self.samples_seen += x.shape()[0];
        Ok(())
    }

    /// Copies `β` into the model.
    pub fn apply_to(&self, model: &mut ElmModel) -> Result<()> {
        if self.beta.rows() != model.d_hidden || self.beta.cols() != model.d_out {
            return Err(Error::State("state does not belong to this model".into()));
        }
        model.set_beta(&self.beta, self.c_reg)
    }
}

pub fn oselm_init(model: &ElmModel, x0: &Tensor, t0: &Tensor, c_reg: f64) -> Result<OselmState> {
    OselmState::init(model, x0, t0, c_reg)
}

pub fn oselm_update(state: &mut OselmState, model: &ElmModel, x: &Tensor, t: &Tensor) -> Result<()> {
    state.update(model, x, t)
}
