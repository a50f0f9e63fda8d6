use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::Result;
use crate::eval::mse_loss;
use crate::matrix::Matrix;
use crate::mlp::Mlp;
use crate::network::P1KanNetwork;

/// A trainable model mapping rows of inputs to rows of outputs.
///
/// Gradients and parameter tensors are listed in the same order so they can be
/// handed directly to [`crate::Adam::step`].
pub trait Regressor {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn predict(&self, x: &Matrix) -> Result<Matrix>;
    /// Mean squared error on the batch and its gradient per parameter tensor.
    fn loss_and_grads(&self, x: &Matrix, target: &Matrix) -> Result<(f64, Vec<Vec<f64>>)>;
    fn parameters(&self) -> Vec<&[f64]>;
    fn parameters_mut(&mut self) -> Vec<&mut [f64]>;
    fn parameter_names(&self) -> Vec<String>;
    /// Hook run after every optimizer step.
    fn after_update(&mut self) {}

    fn parameter_shapes(&self) -> Vec<usize> {
        self.parameters().iter().map(|p| p.len()).collect()
    }
}

impl Regressor for P1KanNetwork {
    fn input_dim(&self) -> usize {
        P1KanNetwork::input_dim(self)
    }

    fn output_dim(&self) -> usize {
        P1KanNetwork::output_dim(self)
    }

    fn predict(&self, x: &Matrix) -> Result<Matrix> {
        P1KanNetwork::predict(self, x)
    }

    fn loss_and_grads(&self, x: &Matrix, target: &Matrix) -> Result<(f64, Vec<Vec<f64>>)> {
        let fwd = self.forward(x)?;
        let (loss, grad_out) = mse_loss(&fwd.output, target)?;
        let grads = self.backward(&fwd, &grad_out)?;
        let flat = grads
            .into_iter()
            .flat_map(|g| [g.coeffs, g.logits])
            .collect();
        Ok((loss, flat))
    }

    fn parameters(&self) -> Vec<&[f64]> {
        self.layers()
            .iter()
            .flat_map(|l| [l.coeffs(), l.logits()])
            .collect()
    }

    fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(2 * self.layers().len());
        for layer in self.layers_mut() {
            let (coeffs, logits) = layer.params_mut();
            out.push(coeffs);
            out.push(logits);
        }
        out
    }

    fn parameter_names(&self) -> Vec<String> {
        (0..self.layers().len())
            .flat_map(|l| [format!("layer{l}.coeffs"), format!("layer{l}.logits")])
            .collect()
    }

    fn after_update(&mut self) {
        self.clamp_logits();
    }
}

impl Regressor for Mlp {
    fn input_dim(&self) -> usize {
        Mlp::input_dim(self)
    }

    fn output_dim(&self) -> usize {
        Mlp::output_dim(self)
    }

    fn predict(&self, x: &Matrix) -> Result<Matrix> {
        Mlp::predict(self, x)
    }

    fn loss_and_grads(&self, x: &Matrix, target: &Matrix) -> Result<(f64, Vec<Vec<f64>>)> {
        let (out, cache) = self.forward(x)?;
        let (loss, grad_out) = mse_loss(&out, target)?;
        let g = self.backward(&cache, &grad_out)?;
        let flat = g
            .weights
            .into_iter()
            .zip(g.biases)
            .flat_map(|(w, b)| [w, b])
            .collect();
        Ok((loss, flat))
    }

    fn parameters(&self) -> Vec<&[f64]> {
        self.weights()
            .iter()
            .zip(self.biases())
            .flat_map(|(w, b)| [w.as_slice(), b.as_slice()])
            .collect()
    }

    fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        let (weights, biases) = self.params_mut();
        weights
            .iter_mut()
            .zip(biases.iter_mut())
            .flat_map(|(w, b)| [w.as_mut_slice(), b.as_mut_slice()])
            .collect()
    }

    fn parameter_names(&self) -> Vec<String> {
        (0..self.weights().len())
            .flat_map(|l| [format!("layer{l}.weight"), format!("layer{l}.bias")])
            .collect()
    }
}
