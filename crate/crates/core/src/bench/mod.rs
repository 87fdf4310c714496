//! Benchmark problems with known solutions and the error measures used to
//! judge a discrete solution against them.

mod metrics;
mod problems;

pub use metrics::{e_c, e_g, GridError};
pub use problems::{parse_expr, BenchError, ProblemKind, TestProblem};

use crate::stencil::UniformityStats;

/// Errors and stencil statistics of one refinement step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorReport<T> {
    pub step: usize,
    pub n_interior: usize,
    pub e_c: T,
    pub e_g: T,
    /// Grid points inside the domain not covered by a kept triangle.
    pub uncovered: usize,
    /// Threshold used when refining after this step.
    pub eps_bar: Option<T>,
    pub stats: Option<UniformityStats<T>>,
}
