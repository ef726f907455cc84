//! Classical baseline denoisers on single `h×w` images.
//!
//! Every filter reads outside the frame by replicating the nearest border
//! pixel.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numerics::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FilterKind {
    Gaussian,
    Average,
    Median,
    Bilateral,
}

impl FilterKind {
    pub const ALL: [FilterKind; 4] = [
        FilterKind::Gaussian,
        FilterKind::Average,
        FilterKind::Median,
        FilterKind::Bilateral,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FilterKind::Gaussian => "gaussian",
            FilterKind::Average => "average",
            FilterKind::Median => "median",
            FilterKind::Bilateral => "bilateral",
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FilterKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::param(format!("unknown filter `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterSpec {
    pub kind: FilterKind,
    pub kernel: usize,
    pub sigma_spatial: f64,
    pub sigma_color: f64,
}

impl FilterSpec {
    /// Baseline settings: 3×3 everywhere, bilateral sigmas of 3.
    pub fn default_for(kind: FilterKind) -> Self {
        let (sigma_spatial, sigma_color) = match kind {
            FilterKind::Bilateral => (3.0, 3.0),
            _ => (default_sigma(3), 0.0),
        };
        Self {
            kind,
            kernel: 3,
            sigma_spatial,
            sigma_color,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_kernel(self.kernel)?;
        match self.kind {
            FilterKind::Gaussian => check_sigma(self.sigma_spatial, "sigma"),
            FilterKind::Bilateral => {
                check_sigma(self.sigma_spatial, "sigma_space")?;
                check_sigma(self.sigma_color, "sigma_color")
            }
            _ => Ok(()),
        }
    }

    pub fn apply(&self, img: &Tensor) -> Result<Tensor> {
        self.validate()?;
        match self.kind {
            FilterKind::Gaussian => gaussian_filter(img, self.kernel, self.sigma_spatial),
            FilterKind::Average => average_filter(img, self.kernel),
            FilterKind::Median => median_filter(img, self.kernel),
            FilterKind::Bilateral => {
                bilateral_filter(img, self.kernel, self.sigma_color, self.sigma_spatial)
            }
        }
    }

    /// Applies the filter to each image of an `N×h×w` stack.
    pub fn apply_batch(&self, batch: &Tensor) -> Result<Tensor> {
        if batch.rank() != 3 {
            return Err(Error::dim(format!("expected N×h×w, got {:?}", batch.shape())));
        }
        let out = batch
            .unstack()
            .iter()
            .map(|img| self.apply(img))
            .collect::<Result<Vec<_>>>()?;
        Tensor::stack(&out.iter().collect::<Vec<_>>())
    }
}

/// Sigma a 3×3-style library picks when none is given:
/// `0.3·((k − 1)/2 − 1) + 0.8`, i.e. 0.8 for `k = 3`.
pub fn default_sigma(k: usize) -> f64 {
    0.3 * ((k as f64 - 1.0) * 0.5 - 1.0) + 0.8
}

fn check_kernel(k: usize) -> Result<()> {
    if k == 0 || k % 2 == 0 {
        Err(Error::param(format!("kernel size must be odd and ≥ 1, got {k}")))
    } else {
        Ok(())
    }
}

fn check_sigma(s: f64, what: &str) -> Result<()> {
    if s > 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("{what} must be positive, got {s}")))
    }
}

fn dims(img: &Tensor) -> Result<(usize, usize)> {
    if img.rank() != 2 || img.is_empty() {
        return Err(Error::dim(format!("expected a non-empty h×w image, got {:?}", img.shape())));
    }
    Ok((img.shape()[0], img.shape()[1]))
}

#[inline]
fn clamp_idx(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

/// Normalized sampled Gaussian of odd length `k`.
pub fn gaussian_kernel(k: usize, sigma: f64) -> Result<Vec<f64>> {
    check_kernel(k)?;
    check_sigma(sigma, "sigma")?;
    let r = (k / 2) as f64;
    let w: Vec<f64> = (0..k)
        .map(|i| {
            let x = i as f64 - r;
            (-x * x / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let s: f64 = w.iter().sum();
    Ok(w.into_iter().map(|v| v / s).collect())
}

fn separable(img: &Tensor, kernel: &[f64]) -> Result<Tensor> {
    let (h, w) = dims(img)?;
    let r = (kernel.len() / 2) as isize;
    let src = img.data();
    let mut tmp = vec![0.0f64; h * w];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(i, &kv)| kv * src[y * w + clamp_idx(x as isize + i as isize - r, w)] as f64)
                .sum();
        }
    }
    let mut out = vec![0.0f32; h * w];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(i, &kv)| kv * tmp[clamp_idx(y as isize + i as isize - r, h) * w + x])
                .sum::<f64>() as f32;
        }
    }
    Tensor::new(&[h, w], out)
}

pub fn gaussian_filter(img: &Tensor, k: usize, sigma: f64) -> Result<Tensor> {
    separable(img, &gaussian_kernel(k, sigma)?)
}

pub fn average_filter(img: &Tensor, k: usize) -> Result<Tensor> {
    check_kernel(k)?;
    separable(img, &vec![1.0 / k as f64; k])
}

pub fn median_filter(img: &Tensor, k: usize) -> Result<Tensor> {
    check_kernel(k)?;
    let (h, w) = dims(img)?;
    let r = (k / 2) as isize;
    let src = img.data();
    let mut window = Vec::with_capacity(k * k);
    let out = (0..h * w)
        .map(|i| {
            let (y, x) = ((i / w) as isize, (i % w) as isize);
            window.clear();
            for dy in -r..=r {
                let yy = clamp_idx(y + dy, h);
                for dx in -r..=r {
                    window.push(src[yy * w + clamp_idx(x + dx, w)]);
                }
            }
            let mid = window.len() / 2;
            *window.select_nth_unstable_by(mid, f32::total_cmp).1
        })
        .collect();
    Tensor::new(&[h, w], out)
}

/// Edge-preserving smoothing over a square `k×k` window.
pub fn bilateral_filter(img: &Tensor, k: usize, sigma_color: f64, sigma_space: f64) -> Result<Tensor> {
    check_kernel(k)?;
    check_sigma(sigma_color, "sigma_color")?;
    check_sigma(sigma_space, "sigma_space")?;
    let (h, w) = dims(img)?;
    let r = (k / 2) as isize;
    let src = img.data();
    let cs = -0.5 / (sigma_color * sigma_color);
    let ss = -0.5 / (sigma_space * sigma_space);
    let spatial: Vec<f64> = (-r..=r)
        .flat_map(|dy| (-r..=r).map(move |dx| (ss * (dy * dy + dx * dx) as f64).exp()))
        .collect();
    let out = (0..h * w)
        .map(|i| {
            let (y, x) = ((i / w) as isize, (i % w) as isize);
            let c = src[i] as f64;
            let (mut num, mut den) = (0.0f64, 0.0f64);
            let mut j = 0;
            for dy in -r..=r {
                let yy = clamp_idx(y + dy, h);
                for dx in -r..=r {
                    let v = src[yy * w + clamp_idx(x + dx, w)] as f64;
                    let wt = spatial[j] * (cs * (v - c) * (v - c)).exp();
                    num += wt * v;
                    den += wt;
                    j += 1;
                }
            }
            (num / den) as f32
        })
        .collect();
    Tensor::new(&[h, w], out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_parsing_and_defaults() {
        assert_eq!("median".parse::<FilterKind>().unwrap(), FilterKind::Median);
        assert!("bm3d".parse::<FilterKind>().is_err());
        assert!((default_sigma(3) - 0.8).abs() < 1e-12);
        let b = FilterSpec::default_for(FilterKind::Bilateral);
        assert_eq!((b.kernel, b.sigma_color, b.sigma_spatial), (3, 3.0, 3.0));
    }

    #[test]
    fn even_or_zero_kernel_rejected() {
        let img = Tensor::full(&[4, 4], 1.0);
        assert!(gaussian_filter(&img, 2, 0.8).is_err());
        assert!(average_filter(&img, 4).is_err());
        assert!(median_filter(&img, 0).is_err());
        assert!(bilateral_filter(&img, 3, 0.0, 1.0).is_err());
    }

    #[test]
    fn average_of_scaled_impulse() {
        let mut img = Tensor::zeros(&[5, 5]);
        img.data_mut()[12] = 9.0;
        let out = average_filter(&img, 3).unwrap();
        for y in 0..5 {
            for x in 0..5 {
                let want = if (1..=3).contains(&y) && (1..=3).contains(&x) { 1.0 } else { 0.0 };
                assert!((out.at2(y, x) - want).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn median_removes_impulse_and_keeps_ramp() {
        let mut img = Tensor::full(&[6, 6], 10.0);
        img.data_mut()[14] = 200.0;
        assert!(median_filter(&img, 3).unwrap().data().iter().all(|&v| v == 10.0));
        let ramp = Tensor::from_fn(&[6, 6], |i| (i % 6) as f32);
        let out = median_filter(&ramp, 3).unwrap();
        for y in 1..5 {
            for x in 1..5 {
                assert_eq!(out.at2(y, x), ramp.at2(y, x));
            }
        }
    }

    #[test]
    fn bilateral_keeps_step_edge() {
        let img = Tensor::from_fn(&[8, 8], |i| if i % 8 < 4 { 0.0 } else { 100.0 });
        let out = bilateral_filter(&img, 3, 3.0, 3.0).unwrap();
        for (i, &v) in out.data().iter().enumerate() {
            if i % 8 < 4 {
                assert!(v < 50.0);
            } else {
                assert!(v > 50.0);
            }
        }
    }
}
