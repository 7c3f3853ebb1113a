//! Structure-preserving filtering of modal finite element fields.
//!
//! A field on one element is a coefficient vector in an orthonormal
//! polynomial basis. Pointwise linear constraints such as `u ≥ 0` define
//! half-spaces in coefficient space, and [`filter::filter_element`] moves the
//! coefficients into their intersection by repeated projection onto the most
//! violated hyperplane. The violation is located by a lattice scan refined by
//! gradient descent ([`minimize`]). [`dgsolver`] applies the filter after
//! every step of a discontinuous Galerkin advection solver.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`.

#![allow(
    clippy::needless_range_loop,
    clippy::neg_cmp_op_on_partial_ord,
    clippy::type_complexity
)]

pub mod basis;
pub mod dgsolver;
pub mod error;
pub mod filter;
pub mod geometry;
pub mod minimize;
pub mod scalar;
pub mod tuner;

pub use error::{Error, Result};
pub use scalar::{Point, Scalar};

pub type BasisF64 = basis::OrthoBasis<f64>;
pub type MeshF64 = geometry::Mesh<f64>;
pub type FilterPlanF64 = filter::FilterPlan<f64>;
pub type FilterConfigF64 = filter::FilterConfig<f64>;
pub type LineSearchParamsF64 = minimize::LineSearchParams<f64>;
pub type SolverF64 = dgsolver::DgSolver<f64>;
pub type SolverConfigF64 = dgsolver::SolverConfig<f64>;
pub type DGStateF64 = dgsolver::DGState<f64>;
