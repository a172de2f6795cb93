//! Step-size schedules.
//!
//! Both schedules are driven by four leading coefficients, one per block:
//!
//! | block | basic (horizon `N`) | adaptive (iteration `t`)                          |
//! |-------|---------------------|---------------------------------------------------|
//! | γ     | `β = c_γ √N`        | `β_t = c_γ √(t+1)`, `τ_t = c_γ (√(t+2) − √(t+1))` |
//! | λ     | `α = c_λ √N`        | `α_t = c_λ √(t+1)`, `ν_t = c_λ (√(t+2) − √(t+1))` |
//! | x     | `η = c_x √N`        | `η_t = c_x √(t+2)`, `ρ_t = c_x (√(t+3) − √(t+2))` |
//! | y     | `κ = c_y √N`        | `κ_t = c_y √(t+2)`, `φ_t = c_y (√(t+3) − √(t+2))` |
//!
//! The theoretical coefficients come from the problem constants; the
//! experiment presets pin them directly. Multipliers then scale the dual
//! (γ, λ) and primal (x, y) coefficients on top of either.

use crate::error::{config_err, Result};
use crate::problem::ProblemConstants;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    /// Constant steps tuned to a horizon known in advance.
    BasicFixed { horizon: u64 },
    /// Steps depending only on the iteration index.
    AdaptiveOpen,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepMultipliers {
    pub dual_scale: f64,
    pub primal_scale: f64,
}

impl Default for StepMultipliers {
    fn default() -> Self {
        Self {
            dual_scale: 1.0,
            primal_scale: 1.0,
        }
    }
}

impl StepMultipliers {
    pub fn validate(&self) -> Result<()> {
        if !(self.dual_scale > 0.0 && self.dual_scale.is_finite())
            || !(self.primal_scale > 0.0 && self.primal_scale.is_finite())
        {
            return Err(config_err("step multipliers must be positive and finite"));
        }
        Ok(())
    }
}

/// Leading coefficients `(c_γ, c_λ, c_x, c_y)` of the four step families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeadingCoefficients {
    pub gamma: f64,
    pub lambda: f64,
    pub x: f64,
    pub y: f64,
}

impl LeadingCoefficients {
    /// Constant-step theory: `η = 4√N C_h²`, `κ = 4√N C_g²`, `α = β = 4√N`.
    pub fn basic_theory(c: &ProblemConstants) -> Self {
        Self {
            gamma: 4.0,
            lambda: 4.0,
            x: 4.0 * c.c_h * c.c_h,
            y: 4.0 * c.c_g * c.c_g,
        }
    }

    /// Horizon-free theory: `β_t = C_h²√(t+1)`, `α_t = C_g²√(t+1)`,
    /// `η_t = κ_t = 16√(t+2)`.
    pub fn adaptive_theory(c: &ProblemConstants) -> Self {
        Self {
            gamma: c.c_h * c.c_h,
            lambda: c.c_g * c.c_g,
            x: 16.0,
            y: 16.0,
        }
    }

    /// One dual coefficient for both multipliers, one primal for both blocks.
    pub fn uniform(dual: f64, primal: f64) -> Self {
        Self {
            gamma: dual,
            lambda: dual,
            x: primal,
            y: primal,
        }
    }

    /// Quadratic-saddle experiment: dual 500, primal 30.
    pub fn qcqp_experiment() -> Self {
        Self::uniform(500.0, 30.0)
    }

    /// Robust-pricing experiment: dual 100, primal 10.
    pub fn pricing_experiment() -> Self {
        Self::uniform(100.0, 10.0)
    }

    fn scaled(&self, m: &StepMultipliers) -> Self {
        Self {
            gamma: self.gamma * m.dual_scale,
            lambda: self.lambda * m.dual_scale,
            x: self.x * m.primal_scale,
            y: self.y * m.primal_scale,
        }
    }

    fn validate(&self) -> Result<()> {
        let all = [self.gamma, self.lambda, self.x, self.y];
        if all.iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
            return Err(config_err("leading step coefficients must be positive"));
        }
        Ok(())
    }
}

/// Step sizes of one iteration. The anchor weights `rho`, `phi`, `tau`,
/// `nu` are zero under the basic schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSizes {
    pub eta: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
    pub phi: f64,
    pub tau: f64,
    pub nu: f64,
}

fn sqrt(v: f64) -> f64 {
    libm::sqrt(v)
}

/// Constant steps for a run of `n` iterations from explicit coefficients.
pub fn basic_steps_with(
    n: u64,
    coefficients: &LeadingCoefficients,
    multipliers: &StepMultipliers,
) -> Result<StepSizes> {
    if n < 1 {
        return Err(config_err("basic schedule needs a horizon N >= 1"));
    }
    multipliers.validate()?;
    let c = coefficients.scaled(multipliers);
    c.validate()?;
    let root = sqrt(n as f64);
    Ok(StepSizes {
        eta: c.x * root,
        kappa: c.y * root,
        alpha: c.lambda * root,
        beta: c.gamma * root,
        rho: 0.0,
        phi: 0.0,
        tau: 0.0,
        nu: 0.0,
    })
}

/// Theoretical constant steps for horizon `n`.
pub fn basic_steps(
    n: u64,
    constants: &ProblemConstants,
    multipliers: &StepMultipliers,
) -> Result<StepSizes> {
    basic_steps_with(
        n,
        &LeadingCoefficients::basic_theory(constants),
        multipliers,
    )
}

/// Horizon-free steps at iteration `t` from explicit coefficients.
pub fn adaptive_steps_with(
    t: u64,
    coefficients: &LeadingCoefficients,
    multipliers: &StepMultipliers,
) -> StepSizes {
    let c = coefficients.scaled(multipliers);
    let t = t as f64;
    let (r1, r2, r3) = (sqrt(t + 1.0), sqrt(t + 2.0), sqrt(t + 3.0));
    StepSizes {
        eta: c.x * r2,
        kappa: c.y * r2,
        alpha: c.lambda * r1,
        beta: c.gamma * r1,
        rho: c.x * (r3 - r2),
        phi: c.y * (r3 - r2),
        tau: c.gamma * (r2 - r1),
        nu: c.lambda * (r2 - r1),
    }
}

/// Theoretical horizon-free steps at iteration `t`.
pub fn adaptive_steps(
    t: u64,
    constants: &ProblemConstants,
    multipliers: &StepMultipliers,
) -> StepSizes {
    adaptive_steps_with(
        t,
        &LeadingCoefficients::adaptive_theory(constants),
        multipliers,
    )
}

/// A complete schedule: kind, coefficients and multipliers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    pub kind: ScheduleKind,
    pub coefficients: LeadingCoefficients,
    pub multipliers: StepMultipliers,
}

impl StepSchedule {
    /// The theoretical schedule of `kind` for problem constants `constants`
    /// (already normalized with [`ProblemConstants::for_schedule`]).
    pub fn theory(kind: ScheduleKind, constants: &ProblemConstants) -> Self {
        let coefficients = match kind {
            ScheduleKind::BasicFixed { .. } => LeadingCoefficients::basic_theory(constants),
            ScheduleKind::AdaptiveOpen => LeadingCoefficients::adaptive_theory(constants),
        };
        Self {
            kind,
            coefficients,
            multipliers: StepMultipliers::default(),
        }
    }

    pub fn with_coefficients(kind: ScheduleKind, coefficients: LeadingCoefficients) -> Self {
        Self {
            kind,
            coefficients,
            multipliers: StepMultipliers::default(),
        }
    }

    pub fn scaled(mut self, multipliers: StepMultipliers) -> Self {
        self.multipliers = multipliers;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.multipliers.validate()?;
        self.coefficients.scaled(&self.multipliers).validate()?;
        if let ScheduleKind::BasicFixed { horizon } = self.kind {
            if horizon < 1 {
                return Err(config_err("basic schedule needs a horizon N >= 1"));
            }
        }
        Ok(())
    }

    /// Steps used in iteration `t` (0-based).
    pub fn steps_at(&self, t: u64) -> Result<StepSizes> {
        match self.kind {
            ScheduleKind::BasicFixed { horizon } => {
                basic_steps_with(horizon, &self.coefficients, &self.multipliers)
            }
            ScheduleKind::AdaptiveOpen => Ok(adaptive_steps_with(
                t,
                &self.coefficients,
                &self.multipliers,
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn consts(c_h: f64, c_g: f64) -> ProblemConstants {
        ProblemConstants {
            c_h,
            c_g,
            ..Default::default()
        }
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn basic_examples() {
        let m = StepMultipliers::default();
        let s = basic_steps(100, &consts(2.0, 1.0), &m).unwrap();
        assert_eq!(s.eta, 160.0);
        assert_eq!(s.beta, 40.0);
        assert_eq!(s.alpha, 40.0);
        assert_eq!((s.rho, s.phi, s.tau, s.nu), (0.0, 0.0, 0.0, 0.0));

        let one = basic_steps(1, &consts(1.0, 1.0), &m).unwrap();
        assert_eq!(
            (one.eta, one.kappa, one.alpha, one.beta),
            (4.0, 4.0, 4.0, 4.0)
        );

        assert!(basic_steps(0, &consts(1.0, 1.0), &m).is_err());
    }

    #[test]
    fn qcqp_preset_matches_experiment_steps() {
        let n = 10_000u64;
        let s = basic_steps_with(
            n,
            &LeadingCoefficients::qcqp_experiment(),
            &StepMultipliers::default(),
        )
        .unwrap();
        assert_eq!(s.alpha, 500.0 * 100.0);
        assert_eq!(s.beta, 500.0 * 100.0);
        assert_eq!(s.eta, 30.0 * 100.0);
        assert_eq!(s.kappa, 30.0 * 100.0);
    }

    #[test]
    fn adaptive_examples() {
        let s = adaptive_steps(0, &consts(1.0, 1.0), &StepMultipliers::default());
        assert_eq!(s.beta, 1.0);
        assert!((s.tau - 0.414_213_562_373_095).abs() < 1e-12);
        assert!((s.eta - 22.627_416_997_969_52).abs() < 1e-12);
        assert!((s.rho - 5.085_395_923_132_513).abs() < 1e-12);

        let p = adaptive_steps_with(
            2,
            &LeadingCoefficients::pricing_experiment(),
            &StepMultipliers::default(),
        );
        assert!(rel(p.beta, 100.0 * 3f64.sqrt()) < 1e-15);
    }

    #[test]
    fn telescoping_identities() {
        for c_h in [0.3, 1.0, 7.5] {
            let c = consts(c_h, 2.0);
            let m = StepMultipliers {
                dual_scale: 3.0,
                primal_scale: 0.5,
            };
            let mut tau_sum = 0.0;
            let beta0 = adaptive_steps(0, &c, &m).beta;
            for t in 0..=10_000u64 {
                let s = adaptive_steps(t, &c, &m);
                let next = adaptive_steps(t + 1, &c, &m);
                assert!(rel(s.beta + s.tau, next.beta) < 1e-12);
                assert!(rel(s.alpha + s.nu, next.alpha) < 1e-12);
                assert!(rel(s.eta + s.rho, next.eta) < 1e-12);
                assert!(rel(s.kappa + s.phi, next.kappa) < 1e-12);
                assert!(next.beta >= s.beta && next.eta >= s.eta);
                assert!(s.tau > 0.0 && next.tau < s.tau);
                assert!(s.rho > 0.0 && next.rho < s.rho);
                tau_sum += s.tau;
                let n = t + 1;
                let expected = c_h * c_h * ((n + 1) as f64).sqrt() * m.dual_scale;
                assert!(rel(beta0 + tau_sum, expected) < 1e-9);
            }
        }
    }

    #[test]
    fn basic_scales_as_root_horizon() {
        let c = consts(1.7, 0.4);
        let m = StepMultipliers::default();
        for n in [1u64, 25, 1000, 12345] {
            let a = basic_steps(n, &c, &m).unwrap();
            let b = basic_steps(4 * n, &c, &m).unwrap();
            for (x, y) in [
                (a.eta, b.eta),
                (a.kappa, b.kappa),
                (a.alpha, b.alpha),
                (a.beta, b.beta),
            ] {
                assert!(rel(y / x, 2.0) < 1e-14);
            }
        }
    }

    #[test]
    fn schedule_dispatch() {
        let c = consts(1.0, 1.0);
        let basic = StepSchedule::theory(ScheduleKind::BasicFixed { horizon: 16 }, &c);
        assert_eq!(basic.steps_at(0).unwrap(), basic.steps_at(15).unwrap());
        let adaptive = StepSchedule::theory(ScheduleKind::AdaptiveOpen, &c);
        assert!(adaptive.steps_at(3).unwrap().beta > adaptive.steps_at(2).unwrap().beta);
        let bad = StepSchedule::theory(ScheduleKind::BasicFixed { horizon: 0 }, &c);
        assert!(bad.validate().is_err());
    }
}
