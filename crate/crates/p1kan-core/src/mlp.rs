//! Feedforward ReLU baseline: affine + ReLU on hidden layers, identity head.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::linalg::{gemm_a_b, gemm_a_bt, gemm_at_b};
use crate::matrix::Matrix;
use crate::rng::RngState;

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    widths: Vec<usize>,
    /// `weights[l]` is `widths[l + 1] x widths[l]`, row-major.
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// Inputs to every layer; post-ReLU for all but the first.
#[derive(Debug, Clone)]
pub struct MlpCache {
    activations: Vec<Matrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Mlp {
    /// He-uniform weights (`U(-sqrt(6/fan_in), sqrt(6/fan_in))`, i.e. standard
    /// deviation `sqrt(2/fan_in)`) and zero biases.
    pub fn build(widths: &[usize], rng: &mut RngState) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(CoreError::InvalidArgument(
                "an MLP needs at least two positive widths",
            ));
        }
        let mut weights = Vec::with_capacity(widths.len() - 1);
        let mut biases = Vec::with_capacity(widths.len() - 1);
        for w in widths.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = libm::sqrt(6.0 / fan_in as f64);
            weights.push(
                (0..fan_in * fan_out)
                    .map(|_| rng.uniform(-bound, bound))
                    .collect(),
            );
            biases.push(vec![0.0; fan_out]);
        }
        Ok(Mlp {
            widths: widths.to_vec(),
            weights,
            biases,
        })
    }

    pub fn from_parts(
        widths: &[usize],
        weights: Vec<Vec<f64>>,
        biases: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(CoreError::InvalidArgument(
                "an MLP needs at least two positive widths",
            ));
        }
        let layers = widths.len() - 1;
        if weights.len() != layers || biases.len() != layers {
            return Err(CoreError::ShapeMismatch {
                what: "MLP layer count",
                expected: layers,
                found: weights.len().min(biases.len()),
            });
        }
        for (l, w) in widths.windows(2).enumerate() {
            if weights[l].len() != w[0] * w[1] {
                return Err(CoreError::ShapeMismatch {
                    what: "MLP weight matrix",
                    expected: w[0] * w[1],
                    found: weights[l].len(),
                });
            }
            if biases[l].len() != w[1] {
                return Err(CoreError::ShapeMismatch {
                    what: "MLP bias vector",
                    expected: w[1],
                    found: biases[l].len(),
                });
            }
        }
        if weights
            .iter()
            .chain(&biases)
            .flatten()
            .any(|v| !v.is_finite())
        {
            return Err(CoreError::InvalidArgument("MLP parameters must be finite"));
        }
        Ok(Mlp {
            widths: widths.to_vec(),
            weights,
            biases,
        })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        self.widths[self.widths.len() - 1]
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.biases
    }

    pub(crate) fn params_mut(&mut self) -> (&mut Vec<Vec<f64>>, &mut Vec<Vec<f64>>) {
        (&mut self.weights, &mut self.biases)
    }

    pub fn count_params(&self) -> usize {
        self.weights.iter().chain(&self.biases).map(Vec::len).sum()
    }

    pub fn forward(&self, x: &Matrix) -> Result<(Matrix, MlpCache)> {
        if x.cols() != self.input_dim() {
            return Err(CoreError::ShapeMismatch {
                what: "MLP input width",
                expected: self.input_dim(),
                found: x.cols(),
            });
        }
        if let Some(pos) = x.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(CoreError::NonFiniteInput {
                sample: pos / x.cols(),
                coord: pos % x.cols(),
            });
        }
        let n = x.rows();
        let last = self.weights.len() - 1;
        let mut activations = Vec::with_capacity(self.weights.len());
        let mut h = x.clone();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let (fan_in, fan_out) = (self.widths[l], self.widths[l + 1]);
            let mut z = Matrix::zeros(n, fan_out);
            for s in 0..n {
                z.row_mut(s).copy_from_slice(b);
            }
            gemm_a_bt(n, fan_in, fan_out, h.as_slice(), w, 1.0, z.as_mut_slice());
            if l < last {
                for v in z.as_mut_slice() {
                    *v = v.max(0.0);
                }
            }
            activations.push(core::mem::replace(&mut h, z));
        }
        Ok((h, MlpCache { activations }))
    }

    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        Ok(self.forward(x)?.0)
    }

    /// Backpropagation; the ReLU derivative is taken as 0 at exactly 0.
    pub fn backward(&self, cache: &MlpCache, grad_out: &Matrix) -> Result<MlpGrads> {
        if cache.activations.len() != self.weights.len() {
            return Err(CoreError::ShapeMismatch {
                what: "MLP cache layers",
                expected: self.weights.len(),
                found: cache.activations.len(),
            });
        }
        let n = cache.activations[0].rows();
        if grad_out.rows() != n || grad_out.cols() != self.output_dim() {
            return Err(CoreError::ShapeMismatch {
                what: "output gradient",
                expected: n * self.output_dim(),
                found: grad_out.rows() * grad_out.cols(),
            });
        }
        let layers = self.weights.len();
        let mut g_w: Vec<Vec<f64>> = Vec::with_capacity(layers);
        let mut g_b: Vec<Vec<f64>> = Vec::with_capacity(layers);
        let mut delta = grad_out.clone();
        for l in (0..layers).rev() {
            let (fan_in, fan_out) = (self.widths[l], self.widths[l + 1]);
            let input = &cache.activations[l];
            let mut gw = vec![0.0; fan_out * fan_in];
            gemm_at_b(
                fan_out,
                n,
                fan_in,
                delta.as_slice(),
                input.as_slice(),
                0.0,
                &mut gw,
            );
            let mut gb = vec![0.0; fan_out];
            for row in delta.iter_rows() {
                for (acc, d) in gb.iter_mut().zip(row) {
                    *acc += d;
                }
            }
            g_w.push(gw);
            g_b.push(gb);
            if l > 0 {
                let mut next = Matrix::zeros(n, fan_in);
                gemm_a_b(
                    n,
                    fan_out,
                    fan_in,
                    delta.as_slice(),
                    &self.weights[l],
                    0.0,
                    next.as_mut_slice(),
                );
                // input > 0 exactly where the ReLU below was open
                for (g, a) in next.as_mut_slice().iter_mut().zip(input.as_slice()) {
                    if *a <= 0.0 {
                        *g = 0.0;
                    }
                }
                delta = next;
            }
        }
        g_w.reverse();
        g_b.reverse();
        Ok(MlpGrads {
            weights: g_w,
            biases: g_b,
        })
    }

    /// Post-ReLU output of the first hidden layer.
    pub fn first_hidden(&self, x: &Matrix) -> Result<Matrix> {
        let (_, cache) = self.forward(x)?;
        cache
            .activations
            .get(1)
            .cloned()
            .ok_or(CoreError::InvalidArgument("network has no hidden layer"))
    }
}
