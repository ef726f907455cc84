use crate::cnn::network::{Gradients, Network};
use crate::error::{Error, Result};

/// Adam with bias-corrected moments, one moment pair per parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    moments: Vec<Option<Moments>>,
}

#[derive(Clone, Debug, PartialEq)]
struct Moments {
    m_w: Vec<f32>,
    v_w: Vec<f32>,
    m_b: Vec<f32>,
    v_b: Vec<f32>,
}

impl AdamState {
    pub fn new(net: &Network, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            moments: net
                .layers
                .iter()
                .map(|l| {
                    l.params().map(|(w, b)| Moments {
                        m_w: vec![0.0; w.len()],
                        v_w: vec![0.0; w.len()],
                        m_b: vec![0.0; b.len()],
                        v_b: vec![0.0; b.len()],
                    })
                })
                .collect(),
        }
    }

    /// Applies one update to every layer that has a gradient entry.
    pub fn step(&mut self, net: &mut Network, grads: &Gradients) -> Result<()> {
        if grads.layers.len() != net.layers.len() || self.moments.len() != net.layers.len() {
            return Err(Error::dim("gradients, optimizer and network disagree on layer count"));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        // folds both bias corrections into the step size
        let alpha = (self.lr * c2.sqrt() / c1) as f32;
        let eps_hat = (self.epsilon * c2.sqrt()) as f32;
        let (b1, b2) = (self.beta1 as f32, self.beta2 as f32);
        for ((layer, g), mom) in net.layers.iter_mut().zip(&grads.layers).zip(&mut self.moments) {
            let (Some(g), Some(mom)) = (g, mom.as_mut()) else {
                continue;
            };
            let (w, b) = layer
                .params_mut()
                .ok_or_else(|| Error::Structure("gradient for a parameter-free layer".into()))?;
            if g.w.len() != w.len() || g.b.len() != b.len() || mom.m_w.len() != w.len() {
                return Err(Error::dim("gradient shape does not match parameters"));
            }
            update(w.data_mut(), &g.w, &mut mom.m_w, &mut mom.v_w, b1, b2, alpha, eps_hat);
            update(b.data_mut(), &g.b, &mut mom.m_b, &mut mom.v_b, b1, b2, alpha, eps_hat);
        }
        Ok(())
    }
}

#[allow(clippy::too_many_arguments)]
fn update(p: &mut [f32], g: &[f32], m: &mut [f32], v: &mut [f32], b1: f32, b2: f32, alpha: f32, eps: f32) {
    for i in 0..p.len() {
        let gi = g[i];
        m[i] = b1 * m[i] + (1.0 - b1) * gi;
        v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
        p[i] -= alpha * m[i] / (v[i].sqrt() + eps);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnn::layer::{Activation, LayerSpec};
    use crate::cnn::network::{Loss, Norm, ParamGrads};

    fn net() -> Network {
        Network::new(
            &[3],
            &[LayerSpec::dense(2, Activation::Linear)],
            Loss::Mse,
            Norm::IDENTITY,
            1,
        )
        .unwrap()
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut n = net();
        let before = n.clone();
        let mut adam = AdamState::new(&n, 1e-3);
        let g = Gradients::zeros(&n);
        for _ in 0..5 {
            adam.step(&mut n, &g).unwrap();
        }
        assert_eq!(n, before);
        assert_eq!(adam.step, 5);
    }

    #[test]
    fn constant_gradient_steps_approach_lr() {
        let mut n = net();
        let mut adam = AdamState::new(&n, 1e-3);
        let g = Gradients {
            layers: vec![Some(ParamGrads {
                w: vec![0.3; 6],
                b: vec![-2.0; 2],
            })],
        };
        let mut last = n.layers[0].params().unwrap().0.data()[0];
        for k in 0..200 {
            adam.step(&mut n, &g).unwrap();
            let now = n.layers[0].params().unwrap().0.data()[0];
            let stepped = (last - now) as f64;
            // scalar oracle: bias-corrected m/sqrt(v) is exactly 1 for constant g
            assert!((stepped - 1e-3).abs() < 1e-6, "step {k}: {stepped}");
            last = now;
        }
        let b = n.layers[0].params().unwrap().1.data()[0];
        assert!((b as f64 - 0.2).abs() < 1e-4);
    }
}
