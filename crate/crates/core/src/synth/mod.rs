//! Synthetic diffraction-pattern datasets: class generators, rotation
//! augmentation, leakage-safe folds, Gaussian corruption and on-disk storage.

mod dataset;
mod noise;
mod pattern;
mod store;

pub use dataset::{
    build_dataset, Dataset, Sample, Split, SplitCounts, SplitRealization, MASTER_SIZE, ROTATIONS,
    ROTATION_STEP_DEG, SUPPORTED_WINDOWS,
};
pub use noise::{add_gaussian_noise, add_gaussian_noise_with, NoiseSpec};
pub use pattern::{default_classes, generate_pattern, ring_support_mask, CellClassSpec, AMPLITUDE, BACKGROUND};
pub use store::{export_pgm, load_dataset, save_dataset, MANIFEST};
