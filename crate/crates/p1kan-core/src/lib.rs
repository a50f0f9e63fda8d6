//! P1-KAN: Kolmogorov-Arnold layers whose univariate functions are P1
//! (piecewise-linear) finite elements on trainable meshes.
//!
//! Every layer takes a batch together with the axis-aligned box its inputs
//! live in, and reports the exact box its outputs live in. Stacking layers
//! threads those boxes forward, so no grid adaptation or squashing is needed
//! between layers.
//!
//! The crate is `no_std` (it needs `alloc`). Enable the `std` feature for
//! runtime CPU feature detection in the dense kernels used by the MLP.
#![no_std]
#![deny(unsafe_code)]
// `!(a > b)` is used on purpose so that NaN takes the rejecting branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod benchmarks;
pub mod domain;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod layer;
mod linalg;
pub mod matrix;
pub mod mlp;
pub mod model;
pub mod network;
pub mod optim;
pub mod rng;

pub use benchmarks::{function_a, function_b, TargetFunction, TargetKind};
pub use domain::HyperRectangle;
pub use error::{CoreError, Result};
pub use eval::{evaluate, mse_loss};
pub use gradcheck::{finite_diff_grad, DEFAULT_STEP};
pub use layer::{
    basis_eval, compute_vertices, BasisEval, ForwardCache, InputPolicy, LayerGrads, P1KanLayer,
    VertexGrid, LOGIT_CLAMP,
};
pub use matrix::Matrix;
pub use mlp::{Mlp, MlpCache, MlpGrads};
pub use model::Regressor;
pub use network::{
    widen_degenerate, LayerParamGrads, NetworkForward, P1KanNetwork, LATTICE_EPS, SUPPORT_TOLERANCE,
};
pub use optim::{Adam, AdamConfig};
pub use rng::{sample_uniform_batch, seed_rng, RngState};
