//! Stochastic primal-dual methods for convex-concave minimax problems with
//! expectation constraints.
//!
//! The crate solves
//!
//! ```text
//! min_{x ∈ X} max_{y ∈ Y}  E[f(x, y, ω)]
//!   s.t.  E[h_i(x, ξ)] ≤ 0,  i = 1..m1
//!         E[g_j(y, ζ)] ≤ 0,  j = 1..m2
//! ```
//!
//! through its Lagrangian saddle reformulation, using only a sampling oracle
//! for function values and (sub)gradients. Two solvers are provided:
//!
//! * [`solver::run_basic_cspd`]: constant step sizes tied to a fixed horizon.
//! * [`solver::run_adp_cspd`]: horizon-free step sizes with anchor
//!   (majorization) terms pulling every block toward its initial point.
//!
//! Everything here is `no_std` + `alloc`; IO, configuration files and the
//! experiment CLI live in the companion `cspd` crate.
#![no_std]
#![warn(missing_debug_implementations)]
// `!(x > 0.0)` style checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod linalg;
pub mod metrics;
pub mod problem;
pub mod problems;
pub mod prox;
pub mod rng;
pub mod schedule;
pub mod solver;

pub use error::{Error, Result};
pub use linalg::{euclidean_norm, positive_part, Matrix};
pub use problem::{
    Dims, ExactOracle, IterateState, ProblemConstants, ProblemInstance, ReferenceSolution,
    RunningAverage, SamplingOracle,
};
pub use prox::ProjectionOp;
pub use rng::{SampleStream, Slot};
pub use schedule::{LeadingCoefficients, ScheduleKind, StepMultipliers, StepSchedule, StepSizes};
pub use solver::{CheckpointRecord, InitialPoint, RunConfig, RunTrace};
