//! Named architectures.

use std::fmt;
use std::str::FromStr;

use crate::cnn::layer::{Activation, LayerSpec};
use crate::cnn::network::{Loss, Network, Norm};
use crate::error::{Error, Result};
use crate::numerics::Padding;

use Activation::{Linear, Relu};
use Padding::{Same, Valid};

/// Kernel sizes of the convolutional denoiser, last one the single-filter
/// head.
pub const DENOISER_KERNELS: [usize; 7] = [3, 3, 5, 5, 7, 7, 1];
pub const DENOISER_FILTERS: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Architecture {
    /// Three valid convs, two pools, three dense layers.
    Classifier,
    /// The wide and deep sweep variant with dropout and ceil-mode pools.
    DeepClassifier,
    /// Seven same-padded convs with a linear 1×1 head.
    ConvDenoiser,
    /// Dense autoencoder 512/256/512.
    FcDenoiser,
    /// Dense autoencoder 256/128/64/128/256.
    FcDenoiserDeep,
}

impl Architecture {
    pub const ALL: [Architecture; 5] = [
        Architecture::Classifier,
        Architecture::DeepClassifier,
        Architecture::ConvDenoiser,
        Architecture::FcDenoiser,
        Architecture::FcDenoiserDeep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Architecture::Classifier => "classifier",
            Architecture::DeepClassifier => "deep-classifier",
            Architecture::ConvDenoiser => "cnn-denoiser",
            Architecture::FcDenoiser => "fc-denoiser",
            Architecture::FcDenoiserDeep => "fc-denoiser-deep",
        }
    }

    pub fn is_classifier(self) -> bool {
        matches!(self, Architecture::Classifier | Architecture::DeepClassifier)
    }

    /// `classes` is ignored by the denoisers.
    pub fn build(self, input: usize, classes: usize, seed: u64) -> Result<Network> {
        match self {
            Architecture::Classifier => build_classifier(input, classes, seed),
            Architecture::DeepClassifier => build_deep_classifier(input, classes, seed),
            Architecture::ConvDenoiser => build_denoiser(input, seed),
            Architecture::FcDenoiser => build_fc_denoiser(input, &[512, 256, 512], seed),
            Architecture::FcDenoiserDeep => build_fc_denoiser(input, &[256, 128, 64, 128, 256], seed),
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Architecture::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::param(format!("unknown architecture `{s}`")))
    }
}

fn check_classes(classes: usize) -> Result<()> {
    if classes < 2 {
        return Err(Error::param(format!("a classifier needs ≥ 2 classes, got {classes}")));
    }
    Ok(())
}

pub fn classifier_specs(classes: usize) -> Vec<LayerSpec> {
    vec![
        LayerSpec::conv(64, 3, Valid, Relu),
        LayerSpec::conv(32, 3, Valid, Relu),
        LayerSpec::pool(3),
        LayerSpec::conv(16, 3, Valid, Relu),
        LayerSpec::pool(3),
        LayerSpec::Flatten,
        LayerSpec::dense(128, Relu),
        LayerSpec::dense(64, Relu),
        LayerSpec::dense(classes, Linear),
        LayerSpec::Softmax,
    ]
}

/// The canonical classifier on `input × input` frames: 50 gives
/// 48, 46, 15, 13, 4 and a flatten width of 256.
pub fn build_classifier(input: usize, classes: usize, seed: u64) -> Result<Network> {
    check_classes(classes)?;
    Network::new(
        &[1, input, input],
        &classifier_specs(classes),
        Loss::CategoricalCrossEntropy,
        Norm::PIXELS,
        seed,
    )
}

pub fn build_deep_classifier(input: usize, classes: usize, seed: u64) -> Result<Network> {
    check_classes(classes)?;
    let ceil = |k| LayerSpec::MaxPool { k, ceil: true };
    let specs = vec![
        LayerSpec::conv(512, 3, Same, Relu),
        ceil(3),
        LayerSpec::conv(128, 3, Same, Relu),
        LayerSpec::Dropout { rate: 0.5 },
        ceil(2),
        LayerSpec::conv(64, 3, Same, Relu),
        LayerSpec::Dropout { rate: 0.2 },
        ceil(2),
        LayerSpec::conv(32, 3, Same, Relu),
        LayerSpec::Dropout { rate: 0.2 },
        ceil(3),
        LayerSpec::conv(16, 3, Same, Relu),
        ceil(3),
        LayerSpec::conv(8, 3, Same, Relu),
        ceil(3),
        LayerSpec::Flatten,
        LayerSpec::dense(256, Relu),
        LayerSpec::Dense {
            units: 128,
            activation: Relu,
            dropout: 0.2,
        },
        LayerSpec::dense(classes, Linear),
        LayerSpec::Softmax,
    ];
    Network::new(
        &[1, input, input],
        &specs,
        Loss::CategoricalCrossEntropy,
        Norm::PIXELS,
        seed,
    )
}

pub fn denoiser_specs() -> Vec<LayerSpec> {
    let n = DENOISER_KERNELS.len();
    DENOISER_KERNELS
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            if i + 1 == n {
                LayerSpec::conv(1, k, Same, Linear)
            } else {
                LayerSpec::conv(DENOISER_FILTERS, k, Same, Relu)
            }
        })
        .collect()
}

/// Size-preserving convolutional denoiser trained with MSE in normalized
/// pixel units.
pub fn build_denoiser(input: usize, seed: u64) -> Result<Network> {
    if input < 36 {
        return Err(Error::dim(format!("denoiser input must be ≥ 36, got {input}")));
    }
    Network::new(&[1, input, input], &denoiser_specs(), Loss::Mse, Norm::PIXELS, seed)
}

/// Dense autoencoder over the flattened frame with relu hidden layers and a
/// linear reconstruction layer.
pub fn build_fc_denoiser(input: usize, hidden: &[usize], seed: u64) -> Result<Network> {
    let mut specs = vec![LayerSpec::Flatten];
    specs.extend(hidden.iter().map(|&u| LayerSpec::dense(u, Relu)));
    specs.push(LayerSpec::dense(input * input, Linear));
    Network::new(&[1, input, input], &specs, Loss::Mse, Norm::PIXELS, seed)
}
