use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::Tensor;
use crate::seeded_rng;

/// Background level of every synthetic frame.
pub const BACKGROUND: f32 = 128.0;
/// Peak deviation from the background at `|contrast| = 1`.
pub const AMPLITUDE: f32 = 100.0;

/// Generative parameters of one synthetic cell class.
#[derive(Clone, Debug, PartialEq)]
pub struct CellClassSpec {
    pub name: String,
    pub disc_radius_px: f64,
    pub ring_period_px: f64,
    /// Amplitude kept per ring period, in `(0, 1]`.
    pub ring_decay: f64,
    /// Sign picks a bright (> 0) or dark (< 0) center.
    pub contrast: f64,
    pub center_jitter_px: f64,
    pub radius_jitter_frac: f64,
}

impl CellClassSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = self.disc_radius_px > 0.0
            && self.ring_period_px > 1.0
            && self.ring_decay > 0.0
            && self.ring_decay <= 1.0
            && (-1.0..=1.0).contains(&self.contrast)
            && self.center_jitter_px >= 0.0
            && self.radius_jitter_frac >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::param(format!("invalid class spec {self:?}")))
        }
    }

    fn params(&self) -> [f64; 4] {
        [
            self.disc_radius_px,
            self.ring_period_px,
            self.ring_decay,
            self.contrast,
        ]
    }

    /// True when at least one generative parameter differs by 10% or more.
    pub fn distinct_from(&self, other: &CellClassSpec) -> bool {
        self.params()
            .iter()
            .zip(other.params())
            .any(|(&a, b)| (a - b).abs() >= 0.1 * a.abs().max(b.abs()))
    }

    /// Radius that encloses the disc and its first three rings.
    pub fn ring_support_radius(&self) -> f64 {
        self.disc_radius_px * (1.0 + self.radius_jitter_frac) + 3.0 * self.ring_period_px
    }

    /// `name R P decay contrast jitter radius_jitter`, the manifest encoding.
    pub fn to_record(&self) -> String {
        format!(
            "{} {} {} {} {} {} {}",
            self.name,
            self.disc_radius_px,
            self.ring_period_px,
            self.ring_decay,
            self.contrast,
            self.center_jitter_px,
            self.radius_jitter_frac
        )
    }

    pub fn from_record(s: &str) -> Result<Self> {
        let f: Vec<&str> = s.split_whitespace().collect();
        if f.len() != 7 {
            return Err(Error::Format(format!("class record needs 7 fields: `{s}`")));
        }
        let num = |i: usize| -> Result<f64> {
            f[i].parse()
                .map_err(|_| Error::Format(format!("bad number `{}` in class record", f[i])))
        };
        let spec = Self {
            name: f[0].to_string(),
            disc_radius_px: num(1)?,
            ring_period_px: num(2)?,
            ring_decay: num(3)?,
            contrast: num(4)?,
            center_jitter_px: num(5)?,
            radius_jitter_frac: num(6)?,
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn class(name: &str, r: f64, p: f64, decay: f64, contrast: f64) -> CellClassSpec {
    CellClassSpec {
        name: name.to_string(),
        disc_radius_px: r,
        ring_period_px: p,
        ring_decay: decay,
        contrast,
        center_jitter_px: 1.5,
        radius_jitter_frac: 0.08,
    }
}

/// The six stand-in classes, in the order bead10, bead20, mcf7, hepg2, rbc, wbc.
pub fn default_classes() -> Vec<CellClassSpec> {
    vec![
        class("bead10", 5.0, 5.0, 0.55, -0.8),
        class("bead20", 9.0, 6.5, 0.65, -0.9),
        class("mcf7", 8.0, 8.5, 0.45, 0.5),
        class("hepg2", 10.0, 7.0, 0.55, 0.65),
        class("rbc", 3.5, 4.0, 0.5, 0.75),
        class("wbc", 5.5, 5.5, 0.6, 0.9),
    ]
}

/// `size × size` indicator (1 inside) of the ring support around the frame
/// center, widened by the center jitter.
pub fn ring_support_mask(spec: &CellClassSpec, size: usize) -> Tensor {
    let c = (size as f64 - 1.0) / 2.0;
    let r = spec.ring_support_radius() + spec.center_jitter_px;
    Tensor::from_fn(&[size, size], |i| {
        let (y, x) = ((i / size) as f64 - c, (i % size) as f64 - c);
        if y * y + x * x <= r * r {
            1.0
        } else {
            0.0
        }
    })
}

/// Radially symmetric diffraction-like pattern over a mid-gray background.
///
/// Inside the (jittered) disc the profile is 1; outside it is a cosine of
/// period `ring_period_px` damped by `ring_decay` per period, so the profile
/// is continuous at the disc edge. Center offset and radius are drawn from
/// `seed`.
pub fn generate_pattern(spec: &CellClassSpec, master_size: usize, seed: u64) -> Result<Tensor> {
    spec.validate()?;
    if master_size < 96 {
        return Err(Error::param(format!(
            "master size must be at least 96, got {master_size}"
        )));
    }
    let mut rng = seeded_rng(seed);
    let jitter = |rng: &mut crate::SeededRng, a: f64| if a > 0.0 { rng.gen_range(-a..=a) } else { 0.0 };
    let oy = jitter(&mut rng, spec.center_jitter_px);
    let ox = jitter(&mut rng, spec.center_jitter_px);
    let radius = spec.disc_radius_px * (1.0 + jitter(&mut rng, spec.radius_jitter_frac));
    let c = (master_size as f64 - 1.0) / 2.0;
    let (cy, cx) = (c + oy, c + ox);
    let amp = AMPLITUDE as f64 * spec.contrast;
    let n = master_size;
    Ok(Tensor::from_fn(&[n, n], |i| {
        let (y, x) = ((i / n) as f64 - cy, (i % n) as f64 - cx);
        let r = (x * x + y * y).sqrt();
        let profile = if r < radius {
            1.0
        } else {
            let t = (r - radius) / spec.ring_period_px;
            spec.ring_decay.powf(t) * (2.0 * PI * t).cos()
        };
        (BACKGROUND as f64 + amp * profile).clamp(0.0, 255.0) as f32
    }))
}
