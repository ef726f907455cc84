//! Brute-force reference implementations shared by the integration tests.
//! Everything here is deliberately naive and computed in f64.

#![allow(dead_code)]

pub mod gradcheck;
pub mod oselm;

use lsit::Tensor;

pub fn px(img: &Tensor, y: isize, x: isize) -> f64 {
    let (h, w) = (img.shape()[0] as isize, img.shape()[1] as isize);
    let (y, x) = (y.clamp(0, h - 1), x.clamp(0, w - 1));
    img.data()[(y * w + x) as usize] as f64
}

fn per_pixel(img: &Tensor, f: impl Fn(isize, isize) -> f64) -> Vec<f64> {
    let (h, w) = (img.shape()[0], img.shape()[1]);
    (0..h * w)
        .map(|i| f((i / w) as isize, (i % w) as isize))
        .collect()
}

/// Direct 2-D weighted sum with the unnormalized Gaussian, normalized by the
/// 2-D weight total.
pub fn gaussian_oracle(img: &Tensor, k: usize, sigma: f64) -> Vec<f64> {
    let r = (k / 2) as isize;
    per_pixel(img, |y, x| {
        let (mut num, mut den) = (0.0, 0.0);
        for dy in -r..=r {
            for dx in -r..=r {
                let wt = (-((dy * dy + dx * dx) as f64) / (2.0 * sigma * sigma)).exp();
                num += wt * px(img, y + dy, x + dx);
                den += wt;
            }
        }
        num / den
    })
}

pub fn average_oracle(img: &Tensor, k: usize) -> Vec<f64> {
    let r = (k / 2) as isize;
    per_pixel(img, |y, x| {
        let mut s = 0.0;
        for dy in -r..=r {
            for dx in -r..=r {
                s += px(img, y + dy, x + dx);
            }
        }
        s / (k * k) as f64
    })
}

pub fn median_oracle(img: &Tensor, k: usize) -> Vec<f64> {
    let r = (k / 2) as isize;
    per_pixel(img, |y, x| {
        let mut v = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                v.push(px(img, y + dy, x + dx));
            }
        }
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    })
}

pub fn bilateral_oracle(img: &Tensor, k: usize, sc: f64, ss: f64) -> Vec<f64> {
    let r = (k / 2) as isize;
    per_pixel(img, |y, x| {
        let c = px(img, y, x);
        let (mut num, mut den) = (0.0, 0.0);
        for dy in -r..=r {
            for dx in -r..=r {
                let v = px(img, y + dy, x + dx);
                let ds = (dy * dy + dx * dx) as f64;
                let wt = (-ds / (2.0 * ss * ss)).exp() * (-(v - c) * (v - c) / (2.0 * sc * sc)).exp();
                num += wt * v;
                den += wt;
            }
        }
        num / den
    })
}

/// Largest absolute difference between a filter output and an oracle,
/// relative to the image's dynamic range (at least 1).
pub fn max_rel_err(out: &Tensor, oracle: &[f64]) -> f64 {
    let range = oracle.iter().cloned().fold(f64::MIN, f64::max) - oracle.iter().cloned().fold(f64::MAX, f64::min);
    out.data()
        .iter()
        .zip(oracle)
        .map(|(&a, &b)| (a as f64 - b).abs() / range.max(1.0))
        .fold(0.0, f64::max)
}
