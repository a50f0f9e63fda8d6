//! A single P1-KAN layer.
//!
//! For each input direction `i` the support `[lo_i, hi_i]` is cut into `M`
//! intervals by vertices
//!
//! ```text
//! v_j = lo + (hi - lo) * (w_1 + ... + w_j) / (w_1 + ... + w_M),   w_m = exp(-y_m)
//! ```
//!
//! and each output is `out_k = sum_i sum_j a[k][j][i] * hat_j(x_i)` where
//! `hat_j` is the piecewise-linear function equal to 1 at `v_j` and 0 at every
//! other vertex. At most two hats are non-zero at any point, so a forward pass
//! touches two coefficients per (sample, direction, output).
//!
//! Storage:
//! - coefficients `a[k][j][i]`: flat index `(k * (M + 1) + j) * d_in + i`
//! - logits `y[m][i]` (m = 0..M): flat index `m * d_in + i`

use alloc::vec;
use alloc::vec::Vec;

use crate::domain::HyperRectangle;
use crate::error::{CoreError, Result};
use crate::matrix::Matrix;
use crate::rng::RngState;

/// Logits are kept in `[-LOGIT_CLAMP, LOGIT_CLAMP]` after every update.
pub const LOGIT_CLAMP: f64 = 50.0;

#[derive(Debug, Clone, PartialEq)]
pub struct P1KanLayer {
    d_in: usize,
    d_out: usize,
    meshes: usize,
    coeffs: Vec<f64>,
    logits: Vec<f64>,
}

/// Mesh vertices for every input direction plus the quantities the backward
/// pass needs to differentiate through vertex placement.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexGrid {
    d_in: usize,
    meshes: usize,
    /// `d_in x (M + 1)`, row per direction.
    vertices: Vec<f64>,
    /// Normalized cumulative weights `r_j`, `d_in x (M + 1)`; `r_0 = 0`, `r_M = 1`.
    ratios: Vec<f64>,
    /// Normalized weights `p_m = w_m / sum(w)`, `d_in x M`.
    weights: Vec<f64>,
    support: HyperRectangle,
}

impl VertexGrid {
    pub fn dim(&self) -> usize {
        self.d_in
    }

    pub fn meshes(&self) -> usize {
        self.meshes
    }

    /// The `M + 1` sorted vertices of direction `i`.
    pub fn direction(&self, i: usize) -> &[f64] {
        let n = self.meshes + 1;
        &self.vertices[i * n..(i + 1) * n]
    }

    pub fn support(&self) -> &HyperRectangle {
        &self.support
    }

    /// Distance from `x` to the nearest vertex of direction `i`.
    pub fn distance_to_knot(&self, i: usize, x: f64) -> f64 {
        self.direction(i)
            .iter()
            .map(|v| libm::fabs(x - v))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Result of locating a point on a 1-D mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisEval {
    /// `j` such that the point lies in `[v_j, v_{j+1})` (closed for the last interval).
    pub interval: usize,
    /// `hat_j(x)`
    pub left: f64,
    /// `hat_{j+1}(x)`
    pub right: f64,
}

/// How a layer treats inputs that fall outside its support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InputPolicy {
    /// Project every coordinate onto the support. Used on the problem domain.
    Clamp,
    /// Accept points up to `tol * max(1, |bound|)` outside, project them, and
    /// reject anything further out.
    Tolerance(f64),
}

/// What `backward` needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    n: usize,
    d_in: usize,
    intervals: Vec<u32>,
    left: Vec<f64>,
    right: Vec<f64>,
    input: Matrix,
    grid: VertexGrid,
}

impl ForwardCache {
    pub fn batch_size(&self) -> usize {
        self.n
    }

    /// Inputs after projection onto the support.
    pub fn input(&self) -> &Matrix {
        &self.input
    }

    pub fn grid(&self) -> &VertexGrid {
        &self.grid
    }

    /// Active interval and the two non-zero hat values for sample `s`, direction `i`.
    pub fn basis(&self, s: usize, i: usize) -> BasisEval {
        let idx = s * self.d_in + i;
        BasisEval {
            interval: self.intervals[idx] as usize,
            left: self.left[idx],
            right: self.right[idx],
        }
    }
}

/// Gradients of a scalar loss with respect to everything a layer's output
/// depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub coeffs: Vec<f64>,
    pub logits: Vec<f64>,
    pub input: Matrix,
    pub support_lower: Vec<f64>,
    pub support_upper: Vec<f64>,
}

/// Vertices for every direction from the logits `y` (`M x d_in`) and a support
/// box with positive width in each direction.
pub fn compute_vertices(
    logits: &[f64],
    meshes: usize,
    d_in: usize,
    support: &HyperRectangle,
) -> Result<VertexGrid> {
    if meshes == 0 {
        return Err(CoreError::InvalidArgument("meshes must be at least 1"));
    }
    if logits.len() != meshes * d_in {
        return Err(CoreError::ShapeMismatch {
            what: "vertex logits",
            expected: meshes * d_in,
            found: logits.len(),
        });
    }
    if support.dim() != d_in {
        return Err(CoreError::ShapeMismatch {
            what: "support dimension",
            expected: d_in,
            found: support.dim(),
        });
    }
    let n = meshes + 1;
    let mut vertices = vec![0.0; d_in * n];
    let mut ratios = vec![0.0; d_in * n];
    let mut weights = vec![0.0; d_in * meshes];
    let mut cumulative = vec![0.0; n];
    for i in 0..d_in {
        let (lo, hi) = (support.lower()[i], support.upper()[i]);
        if !(hi > lo) {
            return Err(CoreError::ZeroWidth { dim: i });
        }
        let column = (0..meshes).map(|m| logits[m * d_in + i]);
        if column.clone().any(|y| !y.is_finite()) {
            return Err(CoreError::InvalidArgument("vertex logits must be finite"));
        }
        // exp(-(y - min y)) <= 1, and the largest term is exactly 1
        let y_min = column.clone().fold(f64::INFINITY, f64::min);
        let w = &mut weights[i * meshes..(i + 1) * meshes];
        for (m, y) in column.enumerate() {
            w[m] = libm::exp(-(y - y_min));
        }
        cumulative[0] = 0.0;
        for m in 0..meshes {
            cumulative[m + 1] = cumulative[m] + w[m];
        }
        let total = cumulative[meshes];
        for p in w.iter_mut() {
            *p /= total;
        }
        let r = &mut ratios[i * n..(i + 1) * n];
        let v = &mut vertices[i * n..(i + 1) * n];
        for j in 0..n {
            r[j] = cumulative[j] / total;
            v[j] = lo + (hi - lo) * r[j];
        }
        r[meshes] = 1.0;
        v[0] = lo;
        v[meshes] = hi;
    }
    Ok(VertexGrid {
        d_in,
        meshes,
        vertices,
        ratios,
        weights,
        support: support.clone(),
    })
}

fn locate(vertices: &[f64], x: f64) -> Option<BasisEval> {
    let last = vertices.len().checked_sub(1)?;
    if last == 0 || !(x >= vertices[0] && x <= vertices[last]) {
        return None;
    }
    let j = if x == vertices[last] {
        // closed last interval; skip intervals that collapsed to zero width
        (0..last).rev().find(|&j| vertices[j] < vertices[j + 1])?
    } else {
        // first vertex strictly above x is at index >= 1 since v_0 <= x < v_last
        vertices.partition_point(|&v| v <= x) - 1
    };
    let h = vertices[j + 1] - vertices[j];
    Some(BasisEval {
        interval: j,
        left: (vertices[j + 1] - x) / h,
        right: (x - vertices[j]) / h,
    })
}

/// Locate `x` on one direction's sorted vertices and return the two active
/// hat values. `x` must already lie within the first and last vertex.
pub fn basis_eval(vertices: &[f64], x: f64) -> Result<BasisEval> {
    if vertices.len() < 2 {
        return Err(CoreError::InvalidArgument(
            "a mesh needs at least two vertices",
        ));
    }
    locate(vertices, x).ok_or(CoreError::OutOfSupport {
        sample: 0,
        coord: 0,
        value: x,
    })
}

impl P1KanLayer {
    /// Uniform mesh (zero logits) and coefficients uniform on
    /// `[-init_scale / d_in, init_scale / d_in]`.
    pub fn new(
        d_in: usize,
        d_out: usize,
        meshes: usize,
        rng: &mut RngState,
        init_scale: f64,
    ) -> Result<Self> {
        if d_in == 0 || d_out == 0 || meshes == 0 {
            return Err(CoreError::InvalidArgument(
                "layer widths and mesh count must be at least 1",
            ));
        }
        if !(init_scale >= 0.0 && init_scale.is_finite()) {
            return Err(CoreError::InvalidArgument(
                "init_scale must be finite and non-negative",
            ));
        }
        let bound = init_scale / d_in as f64;
        let coeffs = (0..d_out * (meshes + 1) * d_in)
            .map(|_| {
                if bound == 0.0 {
                    0.0
                } else {
                    rng.uniform(-bound, bound)
                }
            })
            .collect();
        Ok(P1KanLayer {
            d_in,
            d_out,
            meshes,
            coeffs,
            logits: vec![0.0; meshes * d_in],
        })
    }

    pub fn from_parts(
        d_in: usize,
        d_out: usize,
        meshes: usize,
        coeffs: Vec<f64>,
        logits: Vec<f64>,
    ) -> Result<Self> {
        if d_in == 0 || d_out == 0 || meshes == 0 {
            return Err(CoreError::InvalidArgument(
                "layer widths and mesh count must be at least 1",
            ));
        }
        if coeffs.len() != d_out * (meshes + 1) * d_in {
            return Err(CoreError::ShapeMismatch {
                what: "coefficient tensor",
                expected: d_out * (meshes + 1) * d_in,
                found: coeffs.len(),
            });
        }
        if logits.len() != meshes * d_in {
            return Err(CoreError::ShapeMismatch {
                what: "vertex logits",
                expected: meshes * d_in,
                found: logits.len(),
            });
        }
        if coeffs.iter().chain(&logits).any(|v| !v.is_finite()) {
            return Err(CoreError::InvalidArgument(
                "layer parameters must be finite",
            ));
        }
        Ok(P1KanLayer {
            d_in,
            d_out,
            meshes,
            coeffs,
            logits,
        })
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn meshes(&self) -> usize {
        self.meshes
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn logits_mut(&mut self) -> &mut [f64] {
        &mut self.logits
    }

    pub fn params_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.coeffs, &mut self.logits)
    }

    pub fn num_params(&self) -> usize {
        self.coeffs.len() + self.logits.len()
    }

    #[inline]
    pub fn coeff_index(&self, k: usize, j: usize, i: usize) -> usize {
        (k * (self.meshes + 1) + j) * self.d_in + i
    }

    #[inline]
    pub fn coeff(&self, k: usize, j: usize, i: usize) -> f64 {
        self.coeffs[self.coeff_index(k, j, i)]
    }

    pub fn clamp_logits(&mut self) {
        for y in &mut self.logits {
            *y = y.clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
        }
    }

    pub fn vertices(&self, support: &HyperRectangle) -> Result<VertexGrid> {
        compute_vertices(&self.logits, self.meshes, self.d_in, support)
    }

    /// The exact range of the layer over its support:
    /// `[sum_i min_j a[k][j][i], sum_i max_j a[k][j][i]]` for each output `k`.
    pub fn output_lattice(&self) -> HyperRectangle {
        let (lower, upper) = self.lattice_bounds();
        HyperRectangle::new(lower, upper).expect("min-sums never exceed max-sums")
    }

    fn lattice_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lower = vec![0.0; self.d_out];
        let mut upper = vec![0.0; self.d_out];
        let (arg_min, arg_max) = self.lattice_extremes();
        for k in 0..self.d_out {
            for i in 0..self.d_in {
                lower[k] += self.coeff(k, arg_min[k * self.d_in + i], i);
                upper[k] += self.coeff(k, arg_max[k * self.d_in + i], i);
            }
        }
        (lower, upper)
    }

    /// Index `j` of the smallest and largest coefficient for each `(k, i)`,
    /// laid out `k * d_in + i`. Ties go to the lowest `j`.
    pub fn lattice_extremes(&self) -> (Vec<usize>, Vec<usize>) {
        let mut arg_min = vec![0usize; self.d_out * self.d_in];
        let mut arg_max = vec![0usize; self.d_out * self.d_in];
        for k in 0..self.d_out {
            for i in 0..self.d_in {
                let (mut jmin, mut jmax) = (0, 0);
                for j in 1..=self.meshes {
                    let a = self.coeff(k, j, i);
                    if a < self.coeff(k, jmin, i) {
                        jmin = j;
                    }
                    if a > self.coeff(k, jmax, i) {
                        jmax = j;
                    }
                }
                arg_min[k * self.d_in + i] = jmin;
                arg_max[k * self.d_in + i] = jmax;
            }
        }
        (arg_min, arg_max)
    }

    pub fn forward(
        &self,
        support: &HyperRectangle,
        x: &Matrix,
        policy: InputPolicy,
    ) -> Result<(Matrix, ForwardCache)> {
        if x.cols() != self.d_in {
            return Err(CoreError::ShapeMismatch {
                what: "layer input width",
                expected: self.d_in,
                found: x.cols(),
            });
        }
        let grid = self.vertices(support)?;
        let n = x.rows();
        let d_in = self.d_in;
        let stride = self.meshes + 1;
        let mut input = x.clone();
        let mut intervals = vec![0u32; n * d_in];
        let mut left = vec![0.0; n * d_in];
        let mut right = vec![0.0; n * d_in];
        let mut out = Matrix::zeros(n, self.d_out);

        for s in 0..n {
            let row = input.row_mut(s);
            for (i, slot) in row.iter_mut().enumerate() {
                let v = *slot;
                if !v.is_finite() {
                    return Err(CoreError::NonFiniteInput {
                        sample: s,
                        coord: i,
                    });
                }
                let (lo, hi) = (support.lower()[i], support.upper()[i]);
                if let InputPolicy::Tolerance(tol) = policy {
                    if v < lo - tol * lo.abs().max(1.0) || v > hi + tol * hi.abs().max(1.0) {
                        return Err(CoreError::OutOfSupport {
                            sample: s,
                            coord: i,
                            value: v,
                        });
                    }
                }
                let v = v.clamp(lo, hi);
                *slot = v;
                let b = locate(grid.direction(i), v).ok_or(CoreError::OutOfSupport {
                    sample: s,
                    coord: i,
                    value: v,
                })?;
                let idx = s * d_in + i;
                intervals[idx] = b.interval as u32;
                left[idx] = b.left;
                right[idx] = b.right;
            }
            let out_row = out.row_mut(s);
            for (k, o) in out_row.iter_mut().enumerate() {
                let block = &self.coeffs[k * stride * d_in..(k + 1) * stride * d_in];
                let mut acc = 0.0;
                for i in 0..d_in {
                    let idx = s * d_in + i;
                    let j = intervals[idx] as usize;
                    acc += block[j * d_in + i] * left[idx] + block[(j + 1) * d_in + i] * right[idx];
                }
                *o = acc;
            }
        }

        let cache = ForwardCache {
            n,
            d_in,
            intervals,
            left,
            right,
            input,
            grid,
        };
        Ok((out, cache))
    }

    /// Gradients given `d loss / d out` for the batch in `cache`.
    ///
    /// Inside an interval `out_k` is linear in `x` with slope
    /// `(a[k][j+1] - a[k][j]) / h`, and moving vertex `v_j` (resp. `v_{j+1}`)
    /// changes it by `-slope * hat_j(x)` (resp. `-slope * hat_{j+1}(x)`). At a
    /// vertex the interval chosen by the half-open bracketing supplies the slope.
    pub fn backward(&self, cache: &ForwardCache, grad_out: &Matrix) -> Result<LayerGrads> {
        let n = cache.n;
        if cache.d_in != self.d_in || cache.grid.meshes != self.meshes {
            return Err(CoreError::ShapeMismatch {
                what: "forward cache",
                expected: self.d_in,
                found: cache.d_in,
            });
        }
        if grad_out.rows() != n || grad_out.cols() != self.d_out {
            return Err(CoreError::ShapeMismatch {
                what: "output gradient",
                expected: n * self.d_out,
                found: grad_out.rows() * grad_out.cols(),
            });
        }
        let d_in = self.d_in;
        let m = self.meshes;
        let stride = m + 1;
        let mut g_coeffs = vec![0.0; self.coeffs.len()];
        let mut g_input = Matrix::zeros(n, d_in);
        // d loss / d v_j per direction
        let mut g_vert = vec![0.0; d_in * stride];

        for s in 0..n {
            let g_row = grad_out.row(s);
            for i in 0..d_in {
                let idx = s * d_in + i;
                let j = cache.intervals[idx] as usize;
                let (wl, wr) = (cache.left[idx], cache.right[idx]);
                let verts = cache.grid.direction(i);
                let h = verts[j + 1] - verts[j];
                let mut slope_sum = 0.0;
                for (k, &g) in g_row.iter().enumerate() {
                    let base = k * stride * d_in;
                    let lo_idx = base + j * d_in + i;
                    let hi_idx = base + (j + 1) * d_in + i;
                    g_coeffs[lo_idx] += g * wl;
                    g_coeffs[hi_idx] += g * wr;
                    slope_sum += g * (self.coeffs[hi_idx] - self.coeffs[lo_idx]);
                }
                let dx = slope_sum / h;
                g_input.set(s, i, dx);
                g_vert[i * stride + j] -= dx * wl;
                g_vert[i * stride + j + 1] -= dx * wr;
            }
        }

        let mut g_logits = vec![0.0; self.logits.len()];
        let mut g_lower = vec![0.0; d_in];
        let mut g_upper = vec![0.0; d_in];
        let support = &cache.grid.support;
        for i in 0..d_in {
            let gv = &g_vert[i * stride..(i + 1) * stride];
            let r = &cache.grid.ratios[i * stride..(i + 1) * stride];
            let p = &cache.grid.weights[i * m..(i + 1) * m];
            let width = support.upper()[i] - support.lower()[i];
            // v_j = lo + (hi - lo) r_j
            for j in 0..stride {
                g_lower[i] += gv[j] * (1.0 - r[j]);
                g_upper[i] += gv[j] * r[j];
            }
            // d r_j / d y_m = p_m (r_j - [j > m]) over the interior vertices
            let weighted: f64 = (1..m).map(|j| gv[j] * r[j]).sum();
            let mut tail = 0.0; // sum of gv[j] for m < j < M
            for mm in (0..m).rev() {
                g_logits[mm * d_in + i] = width * p[mm] * (weighted - tail);
                if mm >= 1 {
                    tail += gv[mm];
                }
            }
        }

        Ok(LayerGrads {
            coeffs: g_coeffs,
            logits: g_logits,
            input: g_input,
            support_lower: g_lower,
            support_upper: g_upper,
        })
    }
}
