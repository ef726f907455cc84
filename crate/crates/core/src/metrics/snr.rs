use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Reported value when a residual is exactly zero.
pub const SNR_CAP_DB: f64 = 120.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnrSample {
    pub snr_in: f64,
    pub snr_out: f64,
    pub snr_imp: f64,
    /// The denoised image equals the clean one, so `snr_out` is the cap.
    pub exact_recovery: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SnrReport {
    pub samples: Vec<SnrSample>,
}

fn mean(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = v.clone().count();
    if n == 0 {
        return f64::NAN;
    }
    v.sum::<f64>() / n as f64
}

fn std(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = mean(v.clone());
    let n = v.clone().count();
    if n < 2 {
        return 0.0;
    }
    (v.map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64).sqrt()
}

impl SnrReport {
    pub fn from_samples(samples: Vec<SnrSample>) -> Self {
        Self { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean_snr_in(&self) -> f64 {
        mean(self.samples.iter().map(|s| s.snr_in))
    }

    pub fn mean_snr_out(&self) -> f64 {
        mean(self.samples.iter().map(|s| s.snr_out))
    }

    pub fn mean_snr_imp(&self) -> f64 {
        mean(self.samples.iter().map(|s| s.snr_imp))
    }

    /// Sample standard deviation of the per-image improvement.
    pub fn std_snr_imp(&self) -> f64 {
        std(self.samples.iter().map(|s| s.snr_imp))
    }

    pub fn extend(&mut self, other: SnrReport) {
        self.samples.extend(other.samples);
    }
}

fn ratio_db(signal: f64, residual: f64) -> (f64, bool) {
    if residual == 0.0 {
        (SNR_CAP_DB, true)
    } else {
        ((10.0 * (signal / residual).log10()).min(SNR_CAP_DB), false)
    }
}

/// SNR figures for one image given as flat pixel slices.
pub fn snr_sample(clean: &[f32], noisy: &[f32], denoised: &[f32]) -> Result<SnrSample> {
    if clean.len() != noisy.len() || clean.len() != denoised.len() {
        return Err(Error::dim(format!(
            "SNR inputs differ in size: {}, {}, {}",
            clean.len(),
            noisy.len(),
            denoised.len()
        )));
    }
    let (mut sig, mut res_in, mut res_out) = (0.0f64, 0.0f64, 0.0f64);
    for ((&x, &n), &d) in clean.iter().zip(noisy).zip(denoised) {
        let x = x as f64;
        sig += x * x;
        res_in += (n as f64 - x).powi(2);
        res_out += (d as f64 - x).powi(2);
    }
    if !(sig.is_finite() && res_in.is_finite() && res_out.is_finite()) {
        return Err(Error::Numeric("non-finite values in SNR inputs".into()));
    }
    if sig == 0.0 {
        return Err(Error::UndefinedReference);
    }
    let (snr_in, _) = ratio_db(sig, res_in);
    let (snr_out, exact) = ratio_db(sig, res_out);
    // identical residuals give an exact zero rather than a rounding remainder
    let snr_imp = if res_in == res_out { 0.0 } else { snr_out - snr_in };
    Ok(SnrSample {
        snr_in,
        snr_out,
        snr_imp,
        exact_recovery: exact,
    })
}

/// SNR improvement of `denoised` over `noisy` against `clean`.
///
/// Rank-2 inputs are one image; rank-3 inputs are a batch `N×h×w`, scored per
/// image. All three shapes must match.
pub fn snr_imp(clean: &Tensor, noisy: &Tensor, denoised: &Tensor) -> Result<SnrReport> {
    if clean.shape() != noisy.shape() || clean.shape() != denoised.shape() {
        return Err(Error::dim(format!(
            "SNR shapes differ: {:?}, {:?}, {:?}",
            clean.shape(),
            noisy.shape(),
            denoised.shape()
        )));
    }
    let per = match clean.rank() {
        2 => clean.len(),
        3 => clean.shape()[1] * clean.shape()[2],
        r => return Err(Error::dim(format!("SNR expects rank 2 or 3, got {r}"))),
    };
    if per == 0 {
        return Err(Error::dim("empty image"));
    }
    let samples = clean
        .data()
        .chunks(per)
        .zip(noisy.data().chunks(per))
        .zip(denoised.data().chunks(per))
        .map(|((c, n), d)| snr_sample(c, n, d))
        .collect::<Result<Vec<_>>>()?;
    Ok(SnrReport::from_samples(samples))
}
