//! Synthetic lens-free shadow-image cytometry.
//!
//! The crate covers the whole pipeline: a generator for labeled diffraction
//! patterns with rotation augmentation and leakage-safe splits, Gaussian
//! corruption, classical filters, an extreme-learning-machine autoencoder with
//! online-sequential updates, a from-scratch CNN engine (denoiser, classifier,
//! head-only transfer learning) and the evaluation suite (SNR improvement,
//! confusion-derived metrics, ROC/AUC, Grad-CAM and saliency maps).

pub mod classical;
pub mod cnn;
pub mod elm;
pub mod error;
pub mod io;
pub mod metrics;
pub mod numerics;
pub mod synth;

pub use error::{Error, Result};
pub use numerics::Tensor;

/// Deterministic generator used for every seeded stream in the crate.
pub type SeededRng = rand_chacha::ChaCha8Rng;

/// Derives an independent stream seed from a root seed and a list of indices.
///
/// SplitMix64 finalizer applied per component, so `(seed, a, b)` never
/// collides with `(seed, b, a)` in practice.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    parts.iter().fold(mix(seed), |acc, &p| mix(acc ^ mix(p)))
}

pub fn seeded_rng(seed: u64) -> SeededRng {
    use rand::SeedableRng;
    SeededRng::seed_from_u64(seed)
}
