//! Convolutional networks with hand-written back-propagation.
//!
//! Samples run one at a time as `channels × height × width` tensors.
//! Convolutions are cross-correlations lowered to matrix products; the
//! backward pass reuses the unrolled input columns from the forward tape.

pub mod adam;
pub mod arch;
pub mod checkpoint;
pub mod explain;
pub mod layer;
pub mod network;
pub mod train;

pub use adam::AdamState;
pub use arch::{build_classifier, build_deep_classifier, build_denoiser, build_fc_denoiser, Architecture};
pub use checkpoint::{load_network, save_network};
pub use explain::{grad_cam, mass_fraction, saliency};
pub use layer::{Activation, Layer, LayerSpec};
pub use network::{Gradients, Loss, Network, Norm, ParamGrads, Tape, Target};
pub use train::{
    class_examples, extend_head, fit, image_examples, train_classifier, train_denoiser, transfer_learn,
    EpochRecord, Example, History, NoiseSchedule, TrainConfig,
};
