//! Small feed-forward classifier with explicit forward and backward passes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Mat;

/// One dense layer: `out x in` weights plus a bias per output.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Mat,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros_like(&self) -> Layer {
        Layer {
            weights: Mat::zeros(self.weights.rows(), self.weights.cols()),
            biases: vec![0.0; self.biases.len()],
        }
    }
}

/// Per-layer parameter gradients, shaped like the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

/// Rectifier MLP emitting logits from its final affine layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpClassifier {
    dims: Vec<usize>,
    layers: Vec<Layer>,
}

impl MlpClassifier {
    /// Fresh model with uniform fan-in initialization: weights drawn from
    /// `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`, biases zero.
    pub fn new(dims: &[usize], seed: u64) -> Result<Self> {
        Self::check_dims(dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for w in dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let mut weights = Mat::zeros(fan_out, fan_in);
            for v in weights.as_mut_slice() {
                *v = rng.gen_range(-bound..bound);
            }
            layers.push(Layer {
                weights,
                biases: vec![0.0; fan_out],
            });
        }
        Ok(MlpClassifier {
            dims: dims.to_vec(),
            layers,
        })
    }

    /// Reassemble a model from explicit parameters (checkpoint loading).
    pub fn from_parameters(dims: Vec<usize>, layers: Vec<Layer>) -> Result<Self> {
        Self::check_dims(&dims)?;
        if layers.len() != dims.len() - 1 {
            return Err(Error::DimensionMismatch {
                context: "layer count".into(),
                expected: dims.len() - 1,
                got: layers.len(),
            });
        }
        for (k, layer) in layers.iter().enumerate() {
            if layer.weights.rows() != dims[k + 1] || layer.weights.cols() != dims[k] {
                return Err(Error::DimensionMismatch {
                    context: format!("layer {k} weights"),
                    expected: dims[k + 1] * dims[k],
                    got: layer.weights.rows() * layer.weights.cols(),
                });
            }
            if layer.biases.len() != dims[k + 1] {
                return Err(Error::DimensionMismatch {
                    context: format!("layer {k} biases"),
                    expected: dims[k + 1],
                    got: layer.biases.len(),
                });
            }
            if !layer.weights.is_finite() || layer.biases.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    context: format!("layer {k} parameters"),
                });
            }
        }
        Ok(MlpClassifier { dims, layers })
    }

    fn check_dims(dims: &[usize]) -> Result<()> {
        if dims.len() < 2 {
            return Err(Error::InvalidConfig {
                reason: "model needs at least input and output dimensions".into(),
            });
        }
        if dims.contains(&0) {
            return Err(Error::InvalidConfig {
                reason: "all layer dimensions must be positive".into(),
            });
        }
        Ok(())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn class_count(&self) -> usize {
        *self.dims.last().expect("dims nonempty")
    }

    pub fn hidden_layer_count(&self) -> usize {
        self.dims.len() - 2
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.rows() * l.weights.cols() + l.biases.len())
            .sum()
    }

    /// Zero-shaped gradient buffer for this model.
    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            layers: self.layers.iter().map(Layer::zeros_like).collect(),
        }
    }

    fn check_input(&self, features: &Mat) -> Result<()> {
        if features.cols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "model input".into(),
                expected: self.input_dim(),
                got: features.cols(),
            });
        }
        Ok(())
    }

    /// All post-activation values, `activations[0]` being the input and the
    /// last entry the logits (no rectifier on the output layer).
    pub fn forward_full(&self, features: &Mat) -> Result<Vec<Mat>> {
        self.check_input(features)?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(features.clone());
        for (k, layer) in self.layers.iter().enumerate() {
            let prev = activations.last().expect("nonempty");
            let mut out = prev.matmul_nt(&layer.weights);
            for row in 0..out.rows() {
                let r = out.row_mut(row);
                for (v, b) in r.iter_mut().zip(&layer.biases) {
                    *v += b;
                }
                if k + 1 < self.layers.len() {
                    for v in r.iter_mut() {
                        if *v < 0.0 {
                            *v = 0.0;
                        }
                    }
                }
            }
            activations.push(out);
        }
        Ok(activations)
    }

    /// Logits for a batch of feature rows.
    pub fn forward(&self, features: &Mat) -> Result<Mat> {
        Ok(self.forward_full(features)?.pop().expect("nonempty"))
    }

    /// Penultimate-layer activations, one row per sample.
    pub fn penultimate(&self, features: &Mat) -> Result<Mat> {
        if self.hidden_layer_count() == 0 {
            return Err(Error::UnsupportedModel {
                reason: "embedding export needs at least one hidden layer".into(),
            });
        }
        let mut activations = self.forward_full(features)?;
        activations.pop();
        Ok(activations.pop().expect("hidden layer present"))
    }

    /// Backpropagate a logit gradient into parameter gradients.
    ///
    /// `activations` must come from [`forward_full`] on the same input. The
    /// rectifier subgradient at exactly zero is zero.
    pub fn backward(&self, activations: &[Mat], dlogits: &Mat) -> Gradients {
        debug_assert_eq!(activations.len(), self.layers.len() + 1);
        let mut grads = self.zero_gradients();
        let mut delta = dlogits.clone();
        for k in (0..self.layers.len()).rev() {
            let prev = &activations[k];
            grads.layers[k].weights = delta.matmul_tn(prev);
            for i in 0..delta.rows() {
                for (b, &d) in grads.layers[k].biases.iter_mut().zip(delta.row(i)) {
                    *b += d;
                }
            }
            if k > 0 {
                let mut upstream = delta.matmul_nn(&self.layers[k].weights);
                for (u, &a) in upstream.as_mut_slice().iter_mut().zip(prev.as_slice()) {
                    if a <= 0.0 {
                        *u = 0.0;
                    }
                }
                delta = upstream;
            }
        }
        grads
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_parameters_give_zero_logits() {
        let mut model = MlpClassifier::new(&[3, 4, 2], 1).unwrap();
        for layer in model.layers_mut() {
            for v in layer.weights.as_mut_slice() {
                *v = 0.0;
            }
        }
        let x = Mat::from_rows(&[vec![1.0, -2.0, 3.0]]);
        let logits = model.forward(&x).unwrap();
        assert!(logits.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_single_layer_passes_inputs_through() {
        let dims = vec![3, 3];
        let layer = Layer {
            weights: Mat::identity(3),
            biases: vec![0.0; 3],
        };
        let model = MlpClassifier::from_parameters(dims, vec![layer]).unwrap();
        let x = Mat::from_rows(&[vec![0.5, -1.0, 2.0], vec![0.0, 0.25, -3.0]]);
        let logits = model.forward(&x).unwrap();
        assert_eq!(logits, x);
    }

    #[test]
    fn forward_matches_independent_matrix_multiply() {
        let model = MlpClassifier::new(&[4, 5, 3], 99).unwrap();
        let x = Mat::from_rows(&[vec![0.1, -0.7, 0.4, 1.2], vec![0.9, 0.0, -0.3, 0.5]]);
        let logits = model.forward(&x).unwrap();

        // Re-evaluate with plain nested loops.
        for (row_idx, row) in x.iter_rows().enumerate() {
            let l0 = &model.layers()[0];
            let mut hidden = [0.0; 5];
            for (j, h) in hidden.iter_mut().enumerate() {
                let mut acc = l0.biases[j];
                for (k, &v) in row.iter().enumerate() {
                    acc += l0.weights[(j, k)] * v;
                }
                *h = acc.max(0.0);
            }
            let l1 = &model.layers()[1];
            for j in 0..3 {
                let mut acc = l1.biases[j];
                for (k, &h) in hidden.iter().enumerate() {
                    acc += l1.weights[(j, k)] * h;
                }
                assert!((logits[(row_idx, j)] - acc).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn forward_rejects_wrong_input_width() {
        let model = MlpClassifier::new(&[4, 2], 0).unwrap();
        let x = Mat::from_rows(&[vec![1.0, 2.0]]);
        assert!(model.forward(&x).is_err());
    }

    #[test]
    fn penultimate_requires_a_hidden_layer() {
        let model = MlpClassifier::new(&[3, 2], 0).unwrap();
        let x = Mat::from_rows(&[vec![1.0, 2.0, 3.0]]);
        assert!(matches!(
            model.penultimate(&x),
            Err(Error::UnsupportedModel { .. })
        ));

        let model = MlpClassifier::new(&[3, 4, 2], 0).unwrap();
        let p = model.penultimate(&x).unwrap();
        assert_eq!(p.cols(), 4);
        // The penultimate rows equal the recorded hidden activations.
        let acts = model.forward_full(&x).unwrap();
        assert_eq!(p, acts[1]);
    }

    #[test]
    fn same_seed_same_model() {
        let a = MlpClassifier::new(&[6, 8, 3], 1234).unwrap();
        let b = MlpClassifier::new(&[6, 8, 3], 1234).unwrap();
        assert_eq!(a, b);
        let c = MlpClassifier::new(&[6, 8, 3], 1235).unwrap();
        assert_ne!(a, c);
    }
}
