//! p-norm regression (pNR) as a differentiable layer.
//!
//! Given appearance features `H` and pose features `P` of a source view, the
//! layer estimates a pose-invariant feature `F` from `H ≈ P·F` under an L2
//! or L1 objective and predicts target appearance `H_t = P_t·F`. Gradients
//! flow through the solve, so feature extractors and the image generator
//! around it train end to end.
//!
//! Modules, bottom-up:
//!
//! * [`tensor`]: dense matrices, Cholesky, the autodiff tape, `PNRM` files
//! * [`solver`]: least squares, IRLS least absolute deviation, masking,
//!   multi-shot stacking, an LP reference solver
//! * [`layer`]: the solver as a tape node, plus gradient checking
//! * [`synth`]: seeded regression instances and toy person images
//! * [`model`]: toy extractors/generator/discriminators and training
//! * [`metrics`]: SSIM, recovery error, checkpoint evaluation

pub mod error;
pub mod image;
pub mod layer;
pub mod metrics;
pub mod model;
pub mod solver;
pub mod synth;
pub mod tensor;

pub use error::{Error, Result};
pub use image::Image;
pub use solver::{Norm, PnrConfig, RegressionProblem, RegressionSolution};
pub use tensor::{Matrix, NodeId, Tape};
