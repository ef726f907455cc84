use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{Padding, Tensor};
use crate::SeededRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Linear,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Linear => "linear",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "linear" => Ok(Activation::Linear),
            _ => Err(Error::Format(format!("unknown activation `{s}`"))),
        }
    }
}

/// Architecture of one layer without its parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum LayerSpec {
    Conv {
        filters: usize,
        kernel: usize,
        padding: Padding,
        activation: Activation,
    },
    /// `ceil` keeps trailing partial windows.
    MaxPool { k: usize, ceil: bool },
    Flatten,
    Dense {
        units: usize,
        activation: Activation,
        dropout: f32,
    },
    Dropout { rate: f32 },
    Softmax,
}

impl LayerSpec {
    pub fn conv(filters: usize, kernel: usize, padding: Padding, activation: Activation) -> Self {
        LayerSpec::Conv {
            filters,
            kernel,
            padding,
            activation,
        }
    }

    pub fn dense(units: usize, activation: Activation) -> Self {
        LayerSpec::Dense {
            units,
            activation,
            dropout: 0.0,
        }
    }

    pub fn pool(k: usize) -> Self {
        LayerSpec::MaxPool { k, ceil: false }
    }

    fn check_rate(rate: f32) -> Result<()> {
        if (0.0..1.0).contains(&rate) {
            Ok(())
        } else {
            Err(Error::param(format!("dropout rate must be in [0, 1), got {rate}")))
        }
    }

    /// Output extent for a given input extent.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let spatial = || -> Result<[usize; 3]> {
            match input {
                [c, h, w] => Ok([*c, *h, *w]),
                _ => Err(Error::dim(format!("{self} needs c×h×w input, got {input:?}"))),
            }
        };
        match *self {
            LayerSpec::Conv {
                filters,
                kernel,
                padding,
                ..
            } => {
                let [_, h, w] = spatial()?;
                if filters == 0 || kernel % 2 == 0 {
                    return Err(Error::param(format!("invalid layer {self}")));
                }
                let p = padding.amount(kernel);
                if h + 2 * p < kernel || w + 2 * p < kernel {
                    return Err(Error::dim(format!("{h}×{w} input too small for {self}")));
                }
                Ok(vec![filters, h + 2 * p + 1 - kernel, w + 2 * p + 1 - kernel])
            }
            LayerSpec::MaxPool { k, ceil } => {
                let [c, h, w] = spatial()?;
                if k == 0 {
                    return Err(Error::param("pool size must be positive"));
                }
                let (oh, ow) = if ceil {
                    (h.div_ceil(k), w.div_ceil(k))
                } else {
                    (h / k, w / k)
                };
                if oh == 0 || ow == 0 {
                    return Err(Error::dim(format!("{h}×{w} input too small for {self}")));
                }
                Ok(vec![c, oh, ow])
            }
            LayerSpec::Flatten => Ok(vec![input.iter().product()]),
            LayerSpec::Dense { units, dropout, .. } => {
                Self::check_rate(dropout)?;
                if input.len() != 1 {
                    return Err(Error::dim(format!("{self} needs a flat input, got {input:?}")));
                }
                if units == 0 {
                    return Err(Error::param("dense layer needs at least one unit"));
                }
                Ok(vec![units])
            }
            LayerSpec::Dropout { rate } => {
                Self::check_rate(rate)?;
                Ok(input.to_vec())
            }
            LayerSpec::Softmax => {
                if input.len() != 1 {
                    return Err(Error::dim("softmax needs a flat input"));
                }
                Ok(input.to_vec())
            }
        }
    }
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayerSpec::Conv {
                filters,
                kernel,
                padding,
                activation,
            } => write!(
                f,
                "conv {filters} {kernel} {} {}",
                padding.name(),
                activation.name()
            ),
            LayerSpec::MaxPool { k, ceil } => {
                write!(f, "maxpool {k} {}", if *ceil { "ceil" } else { "floor" })
            }
            LayerSpec::Flatten => f.write_str("flatten"),
            LayerSpec::Dense {
                units,
                activation,
                dropout,
            } => write!(f, "dense {units} {} {dropout}", activation.name()),
            LayerSpec::Dropout { rate } => write!(f, "dropout {rate}"),
            LayerSpec::Softmax => f.write_str("softmax"),
        }
    }
}

impl FromStr for LayerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let f: Vec<&str> = s.split_whitespace().collect();
        let bad = || Error::Format(format!("bad layer spec `{s}`"));
        let num = |i: usize| -> Result<usize> { f.get(i).ok_or_else(bad)?.parse().map_err(|_| bad()) };
        let rate = |i: usize| -> Result<f32> { f.get(i).ok_or_else(bad)?.parse().map_err(|_| bad()) };
        let word = |i: usize| -> Result<&str> { f.get(i).copied().ok_or_else(bad) };
        let spec = match (f.first().copied(), f.len()) {
            (Some("conv"), 5) => LayerSpec::Conv {
                filters: num(1)?,
                kernel: num(2)?,
                padding: Padding::parse(word(3)?).ok_or_else(bad)?,
                activation: Activation::parse(word(4)?)?,
            },
            (Some("maxpool"), 3) => LayerSpec::MaxPool {
                k: num(1)?,
                ceil: match word(2)? {
                    "ceil" => true,
                    "floor" => false,
                    _ => return Err(bad()),
                },
            },
            (Some("flatten"), 1) => LayerSpec::Flatten,
            (Some("dense"), 4) => LayerSpec::Dense {
                units: num(1)?,
                activation: Activation::parse(word(2)?)?,
                dropout: rate(3)?,
            },
            (Some("dropout"), 2) => LayerSpec::Dropout { rate: rate(1)? },
            (Some("softmax"), 1) => LayerSpec::Softmax,
            _ => return Err(bad()),
        };
        Ok(spec)
    }
}

/// A layer with its parameters. Conv kernels are `c_out×c_in×k×k`, dense
/// weights `out×in`.
#[derive(Clone, Debug, PartialEq)]
pub enum Layer {
    Conv {
        kernels: Tensor,
        bias: Tensor,
        padding: Padding,
        activation: Activation,
    },
    MaxPool {
        k: usize,
        ceil: bool,
    },
    Flatten,
    Dense {
        w: Tensor,
        b: Tensor,
        activation: Activation,
        dropout: f32,
    },
    Dropout {
        rate: f32,
    },
    SoftmaxOutput {
        classes: usize,
    },
}

fn uniform(shape: &[usize], limit: f32, rng: &mut SeededRng) -> Tensor {
    Tensor::from_fn(shape, |_| rng.gen_range(-limit..=limit))
}

/// Init bound: `sqrt(6 / fan_in)` for relu layers, `sqrt(6 / (fan_in + fan_out))`
/// for linear ones.
fn init_limit(activation: Activation, fan_in: usize, fan_out: usize) -> f32 {
    match activation {
        Activation::Relu => (6.0 / fan_in as f32).sqrt(),
        Activation::Linear => (6.0 / (fan_in + fan_out) as f32).sqrt(),
    }
}

impl Layer {
    /// Fresh layer for `spec` on an input of extent `input`; weights uniform
    /// within the init bound, biases zero.
    pub fn init(spec: &LayerSpec, input: &[usize], rng: &mut SeededRng) -> Result<Self> {
        spec.output_shape(input)?;
        Ok(match *spec {
            LayerSpec::Conv {
                filters,
                kernel,
                padding,
                activation,
            } => {
                let c_in = input[0];
                let fan_in = c_in * kernel * kernel;
                let limit = init_limit(activation, fan_in, filters * kernel * kernel);
                Layer::Conv {
                    kernels: uniform(&[filters, c_in, kernel, kernel], limit, rng),
                    bias: Tensor::zeros(&[filters]),
                    padding,
                    activation,
                }
            }
            LayerSpec::MaxPool { k, ceil } => Layer::MaxPool { k, ceil },
            LayerSpec::Flatten => Layer::Flatten,
            LayerSpec::Dense {
                units,
                activation,
                dropout,
            } => {
                let limit = init_limit(activation, input[0], units);
                Layer::Dense {
                    w: uniform(&[units, input[0]], limit, rng),
                    b: Tensor::zeros(&[units]),
                    activation,
                    dropout,
                }
            }
            LayerSpec::Dropout { rate } => Layer::Dropout { rate },
            LayerSpec::Softmax => Layer::SoftmaxOutput { classes: input[0] },
        })
    }

    pub fn spec(&self) -> LayerSpec {
        match self {
            Layer::Conv {
                kernels,
                padding,
                activation,
                ..
            } => LayerSpec::Conv {
                filters: kernels.shape()[0],
                kernel: kernels.shape()[2],
                padding: *padding,
                activation: *activation,
            },
            Layer::MaxPool { k, ceil } => LayerSpec::MaxPool { k: *k, ceil: *ceil },
            Layer::Flatten => LayerSpec::Flatten,
            Layer::Dense {
                w,
                activation,
                dropout,
                ..
            } => LayerSpec::Dense {
                units: w.shape()[0],
                activation: *activation,
                dropout: *dropout,
            },
            Layer::Dropout { rate } => LayerSpec::Dropout { rate: *rate },
            Layer::SoftmaxOutput { .. } => LayerSpec::Softmax,
        }
    }

    /// `(weights, bias)` of parameterized layers.
    pub fn params(&self) -> Option<(&Tensor, &Tensor)> {
        match self {
            Layer::Conv { kernels, bias, .. } => Some((kernels, bias)),
            Layer::Dense { w, b, .. } => Some((w, b)),
            _ => None,
        }
    }

    pub fn params_mut(&mut self) -> Option<(&mut Tensor, &mut Tensor)> {
        match self {
            Layer::Conv { kernels, bias, .. } => Some((kernels, bias)),
            Layer::Dense { w, b, .. } => Some((w, b)),
            _ => None,
        }
    }

    pub fn param_count(&self) -> usize {
        self.params().map_or(0, |(w, b)| w.len() + b.len())
    }

    /// Extent the parameters expect on the input side, where one is implied.
    pub(crate) fn check_input(&self, input: &[usize]) -> Result<()> {
        let ok = match self {
            Layer::Conv { kernels, .. } => input.len() == 3 && input[0] == kernels.shape()[1],
            Layer::Dense { w, .. } => input == [w.shape()[1]],
            Layer::SoftmaxOutput { classes } => input == [*classes],
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::dim(format!(
                "layer `{}` cannot take input {input:?}",
                self.spec()
            )))
        }
    }
}
