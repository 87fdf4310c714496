//! Adaptive meshless RBF-FD solver for second-order elliptic Dirichlet
//! problems `Lu = Δu + c(x)u = f` on planar domains with point singularities.
//!
//! The pipeline per refinement step:
//!
//! 1. [`stencil::select_all`] picks `k` well-spread neighbors for every
//!    interior center;
//! 2. [`rbf::compute_weights`] turns each stencil into a row of
//!    finite-difference weights;
//! 3. [`system::assemble`] and [`system::solve`] produce the discrete
//!    solution on all centers;
//! 4. [`refine::refine`] marks stencil edges by an error indicator and inserts
//!    new centers around them.
//!
//! [`driver::run`] chains these steps for one of the benchmark problems in
//! [`bench`](mod@bench).
//!
//! All numerical code is generic over [`Real`]; the `*64` aliases below fix
//! the scalar to `f64`, which is what the benchmarks use.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod centers;
pub mod dense;
pub mod driver;
pub mod geometry;
pub mod io;
pub mod kdtree;
pub mod rbf;
pub mod refine;
mod scalar;
pub mod stencil;
pub mod system;

pub use geometry::{Domain, Point2, Segment};
pub use scalar::Real;

pub type Point = Point2<f64>;
pub type Domain64 = Domain<f64>;
pub type CenterSet64 = centers::CenterSet<f64>;
pub type Stencil64 = stencil::Stencil<f64>;
pub type StencilParams64 = stencil::StencilParams<f64>;
pub type RbfConfig64 = rbf::RbfConfig<f64>;
pub type StencilWeights64 = rbf::StencilWeights<f64>;
pub type SparseSystem64 = system::SparseSystem<f64>;
pub type DiscreteSolution64 = system::DiscreteSolution<f64>;
pub type RefineParams64 = refine::RefineParams<f64>;
pub type TestProblem64 = bench::TestProblem<f64>;
pub type RunConfig64 = driver::RunConfig<f64>;
pub type ErrorReport64 = bench::ErrorReport<f64>;
