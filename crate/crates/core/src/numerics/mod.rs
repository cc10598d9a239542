//! Grid sampling, finite differences, residual norms and the KdV soliton
//! verification pipeline.

mod exec;
mod fd;
mod grid;
pub mod kdv;
mod norms;
mod residual;

use thiserror::Error;

use crate::expr::ExprError;

pub use exec::Exec;
pub use fd::{fd_partial, fd_partial_with};
pub use grid::{Axis, Boundary, Grid, GridField, MIN_POINTS};
pub use norms::{interior_norms, pairwise_sum, Norms, BOUNDARY_LAYERS};
pub use residual::{equation_residual_norms, evaluate_on_grid, Evaluated, ResidualNorm, SampledFields};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("axis `{axis}` has {points} points; at least {} are required", MIN_POINTS)]
    GridTooCoarse { axis: String, points: usize },
    #[error("invalid grid: {0}")]
    BadGrid(String),
    #[error("expected {expected} samples, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("non-finite sample {value} at grid index {index:?}")]
    NonFinite { index: Vec<usize>, value: f64 },
    #[error("finite differences of order {0} are not available (1, 2 or 3)")]
    BadOrder(usize),
    #[error("cannot resolve `{0}` from the sampled fields")]
    Unresolvable(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}
