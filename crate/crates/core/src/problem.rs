//! Problem abstraction: dimensions, constants, oracles and iterate state.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{config_err, Result};
use crate::linalg::{euclidean_norm, Matrix};
use crate::prox::ProjectionOp;
use crate::rng::SampleStream;

/// Block sizes of a minimax problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    /// Dimension of the minimizing block `x`.
    pub dx: usize,
    /// Dimension of the maximizing block `y`.
    pub dy: usize,
    /// Number of expectation constraints on `x`.
    pub m1: usize,
    /// Number of expectation constraints on `y`.
    pub m2: usize,
}

impl Dims {
    pub fn new(dx: usize, dy: usize, m1: usize, m2: usize) -> Result<Self> {
        let d = Self { dx, dy, m1, m2 };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dx == 0 || self.dy == 0 {
            return Err(config_err("dx and dy must be at least 1"));
        }
        Ok(())
    }
}

/// Moment and Lipschitz bounds of the oracles.
///
/// `c_x`, `c_y` bound the objective's gradient noise and Lipschitz moduli,
/// `c_h`, `c_g` the constraint Jacobians, `sigma_h`, `sigma_g` the noise of
/// sampled constraint values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemConstants {
    pub c_x: f64,
    pub c_y: f64,
    pub c_h: f64,
    pub c_g: f64,
    pub sigma_h: f64,
    pub sigma_g: f64,
}

impl Default for ProblemConstants {
    fn default() -> Self {
        Self {
            c_x: 1.0,
            c_y: 1.0,
            c_h: 1.0,
            c_g: 1.0,
            sigma_h: 0.0,
            sigma_g: 0.0,
        }
    }
}

impl ProblemConstants {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.c_x,
            self.c_y,
            self.c_h,
            self.c_g,
            self.sigma_h,
            self.sigma_g,
        ];
        if all.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(config_err(
                "problem constants must be finite and nonnegative",
            ));
        }
        Ok(())
    }

    /// Constants as the step-size formulas consume them: an empty constraint
    /// side gets `C = 1`, a nonempty side must have `C > 0`.
    pub fn for_schedule(&self, dims: &Dims) -> Result<Self> {
        self.validate()?;
        let mut c = *self;
        if dims.m1 == 0 {
            c.c_h = 1.0;
        } else if c.c_h <= 0.0 {
            return Err(config_err("c_h must be positive when x-constraints exist"));
        }
        if dims.m2 == 0 {
            c.c_g = 1.0;
        } else if c.c_g <= 0.0 {
            return Err(config_err("c_g must be positive when y-constraints exist"));
        }
        Ok(c)
    }
}

/// Stochastic first- and zeroth-order information.
///
/// Every call must draw its randomness from `rng` only, so that independent
/// streams give independent samples. Output buffers are pre-sized by the
/// caller: gradients to `dx`/`dy`, values to `m1`/`m2`, Jacobians to
/// `dx × m1` / `dy × m2` with column `j` holding `∇h_j`.
pub trait SamplingOracle: Send + Sync {
    fn sample_grad_x(&self, x: &[f64], y: &[f64], rng: &mut SampleStream, out: &mut [f64]);
    fn sample_grad_y(&self, x: &[f64], y: &[f64], rng: &mut SampleStream, out: &mut [f64]);
    fn sample_h_value(&self, x: &[f64], rng: &mut SampleStream, out: &mut [f64]);
    fn sample_h_jacobian(&self, x: &[f64], rng: &mut SampleStream, out: &mut Matrix);
    fn sample_g_value(&self, y: &[f64], rng: &mut SampleStream, out: &mut [f64]);
    fn sample_g_jacobian(&self, y: &[f64], rng: &mut SampleStream, out: &mut Matrix);
}

/// Closed-form expectations `F`, `H`, `G` and their (sub)gradients.
pub trait ExactOracle: Send + Sync {
    fn objective(&self, x: &[f64], y: &[f64]) -> f64;
    fn grad_x(&self, x: &[f64], y: &[f64], out: &mut [f64]);
    fn grad_y(&self, x: &[f64], y: &[f64], out: &mut [f64]);
    fn h_value(&self, x: &[f64], out: &mut [f64]);
    fn h_jacobian(&self, x: &[f64], out: &mut Matrix);
    fn g_value(&self, y: &[f64], out: &mut [f64]);
    fn g_jacobian(&self, y: &[f64], out: &mut Matrix);

    /// `argmax_{y ∈ Ỹ} F(x, y)` when it has a closed form.
    fn best_response_y(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// `argmin_{x ∈ X̃} F(x, y)` when it has a closed form.
    fn best_response_x(&self, _y: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

/// An expectation-constrained minimax problem. Immutable once built and
/// cheap to clone; oracles are shared behind `Arc`.
#[derive(Clone)]
pub struct ProblemInstance {
    pub name: &'static str,
    pub dims: Dims,
    pub constants: ProblemConstants,
    pub oracle: Arc<dyn SamplingOracle>,
    pub exact: Option<Arc<dyn ExactOracle>>,
    pub proj_x: ProjectionOp,
    pub proj_y: ProjectionOp,
    /// `min_{x ∈ X̃} F(x, y)` is attained for every `y` (X̃ bounded or
    /// `F(·, y)` strongly convex).
    pub x_best_response_attained: bool,
    /// `max_{y ∈ Ỹ} F(x, y)` is attained for every `x`.
    pub y_best_response_attained: bool,
}

impl core::fmt::Debug for ProblemInstance {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("name", &self.name)
            .field("dims", &self.dims)
            .field("constants", &self.constants)
            .field("has_exact", &self.exact.is_some())
            .field("proj_x", &self.proj_x)
            .field("proj_y", &self.proj_y)
            .finish()
    }
}

impl ProblemInstance {
    pub fn exact(&self) -> Result<&dyn ExactOracle> {
        self.exact
            .as_deref()
            .ok_or(crate::error::Error::MissingExactOracle)
    }

    pub fn validate(&self) -> Result<()> {
        self.dims.validate()?;
        self.constants.validate()?;
        self.proj_x.validate(self.dims.dx)?;
        self.proj_y.validate(self.dims.dy)
    }

    /// Exact Lagrangian `F(x,y) + ⟨γ, H(x)⟩ − ⟨λ, G(y)⟩`.
    pub fn lagrangian(&self, x: &[f64], y: &[f64], gamma: &[f64], lambda: &[f64]) -> Result<f64> {
        let ex = self.exact()?;
        let mut h = vec![0.0; self.dims.m1];
        let mut g = vec![0.0; self.dims.m2];
        ex.h_value(x, &mut h);
        ex.g_value(y, &mut g);
        Ok(ex.objective(x, y) + crate::linalg::dot(gamma, &h) - crate::linalg::dot(lambda, &g))
    }
}

/// Running sums for the averaged iterates `x̄_t = (1/t) Σ_{k=1..t} x_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningAverage {
    pub x_sum: Vec<f64>,
    pub y_sum: Vec<f64>,
    pub t: u64,
}

impl RunningAverage {
    pub fn new(dx: usize, dy: usize) -> Self {
        Self {
            x_sum: vec![0.0; dx],
            y_sum: vec![0.0; dy],
            t: 0,
        }
    }

    /// Adds one `(x, y)` pair to the sums.
    pub fn update_running_average(&mut self, x_new: &[f64], y_new: &[f64]) {
        debug_assert_eq!(x_new.len(), self.x_sum.len());
        debug_assert_eq!(y_new.len(), self.y_sum.len());
        for (s, v) in self.x_sum.iter_mut().zip(x_new) {
            *s += v;
        }
        for (s, v) in self.y_sum.iter_mut().zip(y_new) {
            *s += v;
        }
        self.t += 1;
    }

    /// Mean of the pushed `x` values; zeros before the first update.
    pub fn x_mean(&self) -> Vec<f64> {
        mean_of(&self.x_sum, self.t)
    }

    pub fn y_mean(&self) -> Vec<f64> {
        mean_of(&self.y_sum, self.t)
    }
}

fn mean_of(sum: &[f64], t: u64) -> Vec<f64> {
    if t == 0 {
        return vec![0.0; sum.len()];
    }
    let n = t as f64;
    sum.iter().map(|s| s / n).collect()
}

/// Current primal-dual point plus the running diagnostics of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub gamma: Vec<f64>,
    pub lambda: Vec<f64>,
    pub average: RunningAverage,
    pub max_gamma_norm: f64,
    pub max_lambda_norm: f64,
}

impl IterateState {
    pub fn new(x: Vec<f64>, y: Vec<f64>, gamma: Vec<f64>, lambda: Vec<f64>) -> Self {
        let average = RunningAverage::new(x.len(), y.len());
        Self {
            max_gamma_norm: euclidean_norm(&gamma),
            max_lambda_norm: euclidean_norm(&lambda),
            x,
            y,
            gamma,
            lambda,
            average,
        }
    }

    /// Number of completed iterations.
    pub fn t(&self) -> u64 {
        self.average.t
    }

    /// Adds the current `(x, y)` to the running average and refreshes the
    /// multiplier-norm maxima.
    pub fn record_current(&mut self) {
        self.average.update_running_average(&self.x, &self.y);
        self.max_gamma_norm = self.max_gamma_norm.max(euclidean_norm(&self.gamma));
        self.max_lambda_norm = self.max_lambda_norm.max(euclidean_norm(&self.lambda));
    }
}

/// A high-accuracy saddle point `(x*, y*, γ*, λ*)` of the Lagrangian.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub x_star: Vec<f64>,
    pub y_star: Vec<f64>,
    pub gamma_star: Vec<f64>,
    pub lambda_star: Vec<f64>,
    /// `F(x*, y*)`.
    pub f_star: f64,
    /// Certified accuracy: bounds feasibility violation, complementary
    /// slackness and the fixed-point residual of the saddle conditions.
    pub tolerance: f64,
    /// Iterations spent by the deterministic solver.
    pub iterations: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn running_average_examples() {
        let mut avg = RunningAverage::new(2, 1);
        avg.update_running_average(&[2.0, 4.0], &[1.0]);
        avg.update_running_average(&[4.0, 8.0], &[3.0]);
        assert_eq!(avg.t, 2);
        assert_eq!(avg.x_mean(), vec![3.0, 6.0]);
        assert_eq!(avg.y_mean(), vec![2.0]);

        let mut one = RunningAverage::new(1, 1);
        one.update_running_average(&[0.25], &[-1.5]);
        assert_eq!(one.x_mean(), vec![0.25]);

        let mut same = RunningAverage::new(1, 1);
        for _ in 0..1000 {
            same.update_running_average(&[0.5], &[0.5]);
        }
        assert_eq!(same.x_mean(), vec![0.5]);
    }

    #[test]
    fn schedule_constants_defaults() {
        let dims = Dims::new(2, 2, 0, 3).unwrap();
        let c = ProblemConstants {
            c_h: 0.0,
            c_g: 2.0,
            ..Default::default()
        };
        let s = c.for_schedule(&dims).unwrap();
        assert_eq!(s.c_h, 1.0);
        assert_eq!(s.c_g, 2.0);
        let bad = ProblemConstants {
            c_g: 0.0,
            ..Default::default()
        };
        assert!(bad.for_schedule(&dims).is_err());
        assert!(Dims::new(0, 1, 0, 0).is_err());
    }
}
