//! Linear optimization over products of probability simplices under an
//! averaged Kullback–Leibler constraint.
//!
//! The decision variable is one joint distribution over `A × B` per state
//! `s`, and the problem is
//!
//! ```text
//! minimize   Σ_s p_s Σ_{a,b} c[s,a,b] q[s,a,b]
//! subject to g(q) = Σ_s p_s Σ_{a,b} q[s,a,b] ln(q[s,a,b] / t_b) ≤ 0,
//!            t_b  = Σ_{s,a} p_s q[s,a,b]
//! ```
//!
//! Solving proceeds in two phases:
//!
//! 1. [`attain`] runs a multiplicative fixed point restricted to the per-state
//!    minimal-cost supports and decides whether the unconstrained minimum
//!    `c_min` is reachable inside the constraint set.
//! 2. Otherwise [`lagrange`] bisects on the multiplier `λ ∈ (0, λ_max]`,
//!    solving each Lagrangian subproblem with the Bregman proximal gradient
//!    engine in [`bpg`].
//!
//! Costs that do not depend on `a` reduce to a distortion-rate problem which
//! [`ba`] solves with the Blahut–Arimoto iteration. [`oracle`] carries
//! independent checks (KKT residuals, a closed-form solution of the 2×2×2
//! coordination game, and a grid brute force for tiny instances) and
//! [`generators`] builds the benchmark instances.
//!
//! The crate is `no_std` + `alloc` with the `std` feature disabled; `std`
//! only adds wall-clock timing, and `parallel` evaluates per-state updates
//! with rayon.
//!
//! ```
//! use entropic_lp_core::{generators, lagrange, BisectionConfig, Phase};
//!
//! let report = lagrange::full_solve(generators::ghn_instance(), &BisectionConfig::default()).unwrap();
//! assert_eq!(report.phase, Phase::Active);
//! assert!((report.value - 0.18929).abs() < 1e-4);
//! ```
#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod attain;
pub mod ba;
pub mod bpg;
pub mod entropy;
mod error;
pub mod generators;
pub mod instance;
pub mod lagrange;
pub mod oracle;
mod sum;
mod timer;

pub use attain::AttainReport;
pub use ba::ReducedInstance;
pub use bpg::{BpgConfig, BpgOutcome, IterLimits, TraceRecord};
pub use entropy::ExtendedReal;
pub use error::{Error, Result};
pub use instance::{
    CostSummary, Dims, JointPolicy, MarginalB, NormalizedCosts, ProblemInstance, SupportPattern,
    ValidatedInstance,
};
pub use lagrange::{BisectionConfig, OuterRecord, Phase, SolveReport};

/// Tolerance used for every simplex-sum check.
pub const SIMPLEX_TOL: f64 = 1e-12;
