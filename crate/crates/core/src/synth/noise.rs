use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::numerics::Tensor;
use crate::{seeded_rng, SeededRng};

/// Additive Gaussian corruption `z̃ = z + n`, `n ~ N(mean, variance)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub mean: f64,
    pub variance: f64,
    pub seed: u64,
    /// Clamp the result to `[0, 255]`.
    pub clip: bool,
}

impl NoiseSpec {
    pub fn new(variance: f64, seed: u64) -> Self {
        Self {
            mean: 0.0,
            variance,
            seed,
            clip: true,
        }
    }
}

pub fn add_gaussian_noise(img: &Tensor, spec: &NoiseSpec) -> Result<Tensor> {
    add_gaussian_noise_with(img, spec.mean, spec.variance, spec.clip, &mut seeded_rng(spec.seed))
}

/// As [`add_gaussian_noise`] but drawing from a caller-owned stream.
pub fn add_gaussian_noise_with(
    img: &Tensor,
    mean: f64,
    variance: f64,
    clip: bool,
    rng: &mut SeededRng,
) -> Result<Tensor> {
    if !(variance >= 0.0) || !variance.is_finite() {
        return Err(Error::param(format!("noise variance must be ≥ 0, got {variance}")));
    }
    if variance == 0.0 && mean == 0.0 {
        return Ok(img.clone());
    }
    let normal = Normal::new(mean, variance.sqrt())
        .map_err(|e| Error::param(format!("noise distribution: {e}")))?;
    let mut out = img.clone();
    for v in out.data_mut() {
        let noisy = *v as f64 + normal.sample(rng);
        *v = if clip { noisy.clamp(0.0, 255.0) } else { noisy } as f32;
    }
    Ok(out)
}
