//! Stacked P1-KAN layers.
//!
//! Layer 0 lives on the problem domain. Every later layer lives on the output
//! lattice of the layer before it, recomputed from the current coefficients on
//! each forward pass and widened to at least [`LATTICE_EPS`] per coordinate.
//! The lattice bounds depend on the coefficients through `min`/`max`, and the
//! backward pass routes gradient through the selected extreme element.

use alloc::vec;
use alloc::vec::Vec;

use crate::domain::HyperRectangle;
use crate::error::{CoreError, Result};
use crate::layer::{ForwardCache, InputPolicy, P1KanLayer};
use crate::matrix::Matrix;
use crate::rng::RngState;

/// Minimum width of a propagated support.
pub const LATTICE_EPS: f64 = 1e-8;
/// How far inner-layer activations may stray outside their support (relative
/// to `max(1, |bound|)`) before the forward pass reports an error.
pub const SUPPORT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct P1KanNetwork {
    layers: Vec<P1KanLayer>,
    domain: HyperRectangle,
}

/// Outputs plus everything `backward` needs.
#[derive(Debug, Clone)]
pub struct NetworkForward {
    pub output: Matrix,
    pub caches: Vec<ForwardCache>,
    /// Support each layer was evaluated on; `supports[0]` is the domain.
    pub supports: Vec<HyperRectangle>,
    /// `widened[l][k]`: whether coordinate `k` of `supports[l + 1]` was widened.
    pub widened: Vec<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParamGrads {
    pub coeffs: Vec<f64>,
    pub logits: Vec<f64>,
}

/// Widen every coordinate narrower than `eps` symmetrically to width `eps`.
pub fn widen_degenerate(lattice: &HyperRectangle, eps: f64) -> (HyperRectangle, Vec<bool>) {
    let d = lattice.dim();
    let mut lower = lattice.lower().to_vec();
    let mut upper = lattice.upper().to_vec();
    let mut widened = vec![false; d];
    for k in 0..d {
        if upper[k] - lower[k] < eps {
            let mid = 0.5 * (lower[k] + upper[k]);
            lower[k] = mid - 0.5 * eps;
            upper[k] = mid + 0.5 * eps;
            widened[k] = true;
        }
    }
    let b = HyperRectangle::new(lower, upper).expect("widening keeps bounds ordered");
    (b, widened)
}

impl P1KanNetwork {
    /// `widths = [d, n_0, ..., out]`; one layer per consecutive pair, each
    /// built with [`P1KanLayer::new`] and `init_scale = 1`.
    pub fn build(
        widths: &[usize],
        meshes: usize,
        domain: HyperRectangle,
        rng: &mut RngState,
    ) -> Result<Self> {
        Self::build_with_scale(widths, meshes, domain, rng, 1.0)
    }

    pub fn build_with_scale(
        widths: &[usize],
        meshes: usize,
        domain: HyperRectangle,
        rng: &mut RngState,
        init_scale: f64,
    ) -> Result<Self> {
        if widths.len() < 2 {
            return Err(CoreError::InvalidArgument(
                "a network needs at least an input and an output width",
            ));
        }
        let layers = widths
            .windows(2)
            .map(|w| P1KanLayer::new(w[0], w[1], meshes, rng, init_scale))
            .collect::<Result<Vec<_>>>()?;
        Self::from_layers(layers, domain)
    }

    pub fn from_layers(layers: Vec<P1KanLayer>, domain: HyperRectangle) -> Result<Self> {
        let first = layers.first().ok_or(CoreError::InvalidArgument(
            "a network needs at least one layer",
        ))?;
        if domain.dim() != first.d_in() {
            return Err(CoreError::ShapeMismatch {
                what: "domain dimension",
                expected: first.d_in(),
                found: domain.dim(),
            });
        }
        for pair in layers.windows(2) {
            if pair[0].d_out() != pair[1].d_in() {
                return Err(CoreError::ShapeMismatch {
                    what: "consecutive layer widths",
                    expected: pair[0].d_out(),
                    found: pair[1].d_in(),
                });
            }
        }
        for dim in 0..domain.dim() {
            if !(domain.width(dim) > 0.0) {
                return Err(CoreError::ZeroWidth { dim });
            }
        }
        Ok(P1KanNetwork { layers, domain })
    }

    pub fn layers(&self) -> &[P1KanLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [P1KanLayer] {
        &mut self.layers
    }

    pub fn domain(&self) -> &HyperRectangle {
        &self.domain
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].d_in()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].d_out()
    }

    /// `[d, n_0, ..., out]`
    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_dim()];
        w.extend(self.layers.iter().map(P1KanLayer::d_out));
        w
    }

    pub fn meshes(&self) -> usize {
        self.layers[0].meshes()
    }

    /// `sum_l d_out (M + 1) d_in + M d_in`
    pub fn count_params(&self) -> usize {
        self.layers.iter().map(P1KanLayer::num_params).sum()
    }

    pub fn clamp_logits(&mut self) {
        for layer in &mut self.layers {
            layer.clamp_logits();
        }
    }

    pub fn forward(&self, x: &Matrix) -> Result<NetworkForward> {
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut supports = Vec::with_capacity(self.layers.len());
        let mut widened = Vec::with_capacity(self.layers.len().saturating_sub(1));
        let mut support = self.domain.clone();
        let mut policy = InputPolicy::Clamp;
        let mut current: Option<Matrix> = None;
        for (l, layer) in self.layers.iter().enumerate() {
            let input = current.as_ref().unwrap_or(x);
            let (out, cache) = layer.forward(&support, input, policy)?;
            caches.push(cache);
            supports.push(support);
            current = Some(out);
            if l + 1 < self.layers.len() {
                let (next, flags) = widen_degenerate(&layer.output_lattice(), LATTICE_EPS);
                support = next;
                widened.push(flags);
                policy = InputPolicy::Tolerance(SUPPORT_TOLERANCE);
            } else {
                // placeholder, never read
                support = HyperRectangle::unit(0);
            }
        }
        Ok(NetworkForward {
            output: current.expect("at least one layer"),
            caches,
            supports,
            widened,
        })
    }

    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        Ok(self.forward(x)?.output)
    }

    /// Parameter gradients for every layer, given `d loss / d output`.
    pub fn backward(
        &self,
        fwd: &NetworkForward,
        grad_out: &Matrix,
    ) -> Result<Vec<LayerParamGrads>> {
        if fwd.caches.len() != self.layers.len() || fwd.widened.len() + 1 != self.layers.len() {
            return Err(CoreError::ShapeMismatch {
                what: "forward record layers",
                expected: self.layers.len(),
                found: fwd.caches.len(),
            });
        }
        let mut grads: Vec<LayerParamGrads> = Vec::with_capacity(self.layers.len());
        let mut upstream = grad_out.clone();
        // gradient w.r.t. the support of the layer above the current one
        let mut support_grad: Option<(Vec<f64>, Vec<f64>)> = None;
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let g = layer.backward(&fwd.caches[l], &upstream)?;
            let mut coeffs = g.coeffs;
            if let Some((g_lo, g_hi)) = support_grad.take() {
                route_lattice_grad(layer, &fwd.widened[l], &g_lo, &g_hi, &mut coeffs);
            }
            grads.push(LayerParamGrads {
                coeffs,
                logits: g.logits,
            });
            support_grad = Some((g.support_lower, g.support_upper));
            upstream = g.input;
        }
        grads.reverse();
        Ok(grads)
    }
}

/// Push gradients on the next layer's support bounds back into this layer's
/// coefficients through the widening map and the lattice `min`/`max`.
fn route_lattice_grad(
    layer: &P1KanLayer,
    widened: &[bool],
    g_lo: &[f64],
    g_hi: &[f64],
    coeffs: &mut [f64],
) {
    let (arg_min, arg_max) = layer.lattice_extremes();
    let d_in = layer.d_in();
    for k in 0..layer.d_out() {
        let (gl, gh) = if widened[k] {
            // lo' = mid - eps/2, hi' = mid + eps/2, mid = (lo + hi)/2
            let s = 0.5 * (g_lo[k] + g_hi[k]);
            (s, s)
        } else {
            (g_lo[k], g_hi[k])
        };
        for i in 0..d_in {
            coeffs[layer.coeff_index(k, arg_min[k * d_in + i], i)] += gl;
            coeffs[layer.coeff_index(k, arg_max[k * d_in + i], i)] += gh;
        }
    }
}
