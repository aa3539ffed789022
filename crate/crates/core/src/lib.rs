//! Gradient-enhanced least-squares polynomial approximation.
//!
//! A surrogate `f(x) ≈ Σ α_j P_j(x)` is fitted from function values *and*
//! gradients at a small set of points. Each point contributes one value row and
//! `l` derivative rows to the least-squares system, so a basis of size `M`
//! needs roughly `M / (l + 1)` evaluations instead of `M`.
//!
//! Modules:
//!
//! * [`indexset`] hyperbolic multi-index sets defining the tensor basis.
//! * [`basis`] Chebyshev / Hermite / monomial evaluation with first derivatives.
//! * [`sampling`] uniform, Latin hypercube and maxvol point selection.
//! * [`gels`] system assembly, rank-revealing solve and the fitting driver.
//! * [`stats`] PCE moments, Monte Carlo references, empirical CDFs.
//! * [`expr`] expression parser with reverse-mode gradients and op counting.
//! * [`paramlin`] parametric linear systems and DAEs with sensitivities.
//! * [`randfield`] EOLE Gaussian and lognormal random fields.
//! * [`experiment`] the value-vs-gradient comparison sweep.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod error;
pub mod experiment;
pub mod expr;
pub mod gels;
pub mod indexset;
pub mod paramlin;
pub mod randfield;
pub mod sampling;
pub mod stats;

pub use error::{Error, Result};
