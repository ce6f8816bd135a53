//! Adam optimizer with L2 weight decay folded into the gradient.

use crate::model::mlp::{Gradients, MlpClassifier};

/// Optimizer hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

impl AdamConfig {
    pub fn new(learning_rate: f64, weight_decay: f64) -> Self {
        AdamConfig {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay,
        }
    }
}

/// First and second moment accumulators per parameter, plus the step count.
#[derive(Debug, Clone)]
pub struct Adam {
    config: AdamConfig,
    step: u64,
    first: Gradients,
    second: Gradients,
}

impl Adam {
    pub fn new(model: &MlpClassifier, config: AdamConfig) -> Self {
        Adam {
            config,
            step: 0,
            first: model.zero_gradients(),
            second: model.zero_gradients(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update. Weight decay contributes `wd * theta` to the gradient of
    /// weights (biases are not decayed), so a zero loss gradient with zero
    /// decay leaves parameters bit-identical.
    pub fn step(&mut self, model: &mut MlpClassifier, grads: &Gradients) {
        self.step += 1;
        let t = self.step as i32;
        let c = self.config;
        let bias1 = 1.0 - c.beta1.powi(t);
        let bias2 = 1.0 - c.beta2.powi(t);
        for (k, layer) in model.layers_mut().iter_mut().enumerate() {
            let gw = grads.layers[k].weights.as_slice();
            let mw = self.first.layers[k].weights.as_mut_slice();
            let vw = self.second.layers[k].weights.as_mut_slice();
            for (((theta, &g), m), v) in layer
                .weights
                .as_mut_slice()
                .iter_mut()
                .zip(gw)
                .zip(mw.iter_mut())
                .zip(vw.iter_mut())
            {
                let g = g + c.weight_decay * *theta;
                *m = c.beta1 * *m + (1.0 - c.beta1) * g;
                *v = c.beta2 * *v + (1.0 - c.beta2) * g * g;
                let m_hat = *m / bias1;
                let v_hat = *v / bias2;
                *theta -= c.learning_rate * m_hat / (v_hat.sqrt() + c.epsilon);
            }
            let gb = &grads.layers[k].biases;
            let mb = &mut self.first.layers[k].biases;
            let vb = &mut self.second.layers[k].biases;
            for (((theta, &g), m), v) in layer
                .biases
                .iter_mut()
                .zip(gb)
                .zip(mb.iter_mut())
                .zip(vb.iter_mut())
            {
                *m = c.beta1 * *m + (1.0 - c.beta1) * g;
                *v = c.beta2 * *v + (1.0 - c.beta2) * g * g;
                let m_hat = *m / bias1;
                let v_hat = *v / bias2;
                *theta -= c.learning_rate * m_hat / (v_hat.sqrt() + c.epsilon);
            }
        }
    }
}
