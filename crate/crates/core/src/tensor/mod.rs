//! Dense matrices, the Cholesky solver, the `PNRM` file format and the
//! autodiff tape.

mod linalg;
mod matrix;
mod tape;

pub mod io;

pub use linalg::{cholesky_solve_spd, Cholesky};
pub use matrix::Matrix;
pub use tape::{sigmoid, BackwardRule, BinaryOp, Gradients, NodeId, Tape, UnaryOp};
