use crate::error::{Error, Result};
use crate::numerics::Tensor;

pub fn relu(x: &Tensor) -> Tensor {
    x.map(|v| v.max(0.0))
}

pub fn sigmoid(v: f32) -> f32 {
    1.0 / (1.0 + (-v).exp())
}

/// Shift-stabilized softmax over a flat vector of logits.
pub fn softmax(logits: &Tensor) -> Result<Tensor> {
    logits.ensure_finite("softmax logits")?;
    if logits.is_empty() {
        return Err(Error::dim("softmax of an empty vector"));
    }
    Ok(Tensor::new(logits.shape(), softmax_slice(logits.data()))?)
}

pub(crate) fn softmax_slice(z: &[f32]) -> Vec<f32> {
    let m = z.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let e: Vec<f64> = z.iter().map(|&v| ((v - m) as f64).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| (v / s) as f32).collect()
}
