//! Euclidean projections and the prox-map updates of both solvers.
//!
//! Every prox step here minimizes a linear term plus squared distances over
//! a simple set. Completing the square turns each one into a projected
//! gradient step, which is how they are implemented.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{config_err, Result};
use crate::linalg::dot;

/// Feasible sets with closed-form (or one-dimensional root) projections.
#[derive(Debug, Clone, PartialEq)]
pub enum ProjectionOp {
    FullSpace,
    /// `{v : lower ≤ v ≤ upper}`
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    /// `{v : ‖v − center‖ ≤ radius}`
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    /// `{v : Σ diag_i (v_i − center_i)² ≤ radius²}`
    DiagEllipsoid {
        center: Vec<f64>,
        diag: Vec<f64>,
        radius: f64,
    },
    NonnegOrthant,
}

const ELLIPSOID_MAX_ITERS: usize = 200;
const ELLIPSOID_RESIDUAL_TOL: f64 = 1e-12;

impl ProjectionOp {
    /// Checks internal consistency and, when the set carries its own
    /// dimension, that it equals `dim`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let check_len = |len: usize, what: &str| {
            if len != dim {
                Err(config_err(format!(
                    "{what} has dimension {len}, expected {dim}"
                )))
            } else {
                Ok(())
            }
        };
        match self {
            Self::FullSpace | Self::NonnegOrthant => Ok(()),
            Self::Box { lower, upper } => {
                check_len(lower.len(), "box lower bound")?;
                check_len(upper.len(), "box upper bound")?;
                if lower.iter().zip(upper).any(|(l, u)| !(l <= u)) {
                    return Err(config_err("box requires lower <= upper"));
                }
                Ok(())
            }
            Self::Ball { center, radius } => {
                check_len(center.len(), "ball center")?;
                if !(*radius > 0.0) || !radius.is_finite() {
                    return Err(config_err("ball radius must be positive"));
                }
                Ok(())
            }
            Self::DiagEllipsoid {
                center,
                diag,
                radius,
            } => {
                check_len(center.len(), "ellipsoid center")?;
                check_len(diag.len(), "ellipsoid diagonal")?;
                if diag.iter().any(|d| !(*d > 0.0)) {
                    return Err(config_err("ellipsoid diagonal must be positive"));
                }
                if !(*radius > 0.0) || !radius.is_finite() {
                    return Err(config_err("ellipsoid radius must be positive"));
                }
                Ok(())
            }
        }
    }

    /// Whether the set is bounded.
    pub fn is_bounded(&self) -> bool {
        matches!(
            self,
            Self::Box { .. } | Self::Ball { .. } | Self::DiagEllipsoid { .. }
        )
    }

    /// Membership test with slack `tol`.
    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        match self {
            Self::FullSpace => true,
            Self::NonnegOrthant => v.iter().all(|&a| a >= -tol),
            Self::Box { lower, upper } => v
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(&a, (&l, &u))| a >= l - tol && a <= u + tol),
            Self::Ball { center, radius } => crate::linalg::distance(v, center) <= radius + tol,
            Self::DiagEllipsoid {
                center,
                diag,
                radius,
            } => {
                let q: f64 = v
                    .iter()
                    .zip(center)
                    .zip(diag)
                    .map(|((a, c), m)| m * (a - c) * (a - c))
                    .sum();
                libm::sqrt(q) <= radius + tol
            }
        }
    }

    /// Euclidean projection of `v`, allocating the result.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(v.len())?;
        let mut out = v.to_vec();
        self.project_in_place(&mut out);
        Ok(out)
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        let expected = match self {
            Self::FullSpace | Self::NonnegOrthant => return Ok(()),
            Self::Box { lower, .. } => lower.len(),
            Self::Ball { center, .. } | Self::DiagEllipsoid { center, .. } => center.len(),
        };
        if expected != n {
            return Err(config_err(format!(
                "projection expects dimension {expected}, got {n}"
            )));
        }
        Ok(())
    }

    /// Projects `v` in place. Dimensions are assumed validated.
    pub fn project_in_place(&self, v: &mut [f64]) {
        match self {
            Self::FullSpace => {}
            Self::NonnegOrthant => {
                for a in v.iter_mut() {
                    *a = a.max(0.0);
                }
            }
            Self::Box { lower, upper } => {
                for ((a, &l), &u) in v.iter_mut().zip(lower).zip(upper) {
                    *a = a.clamp(l, u);
                }
            }
            Self::Ball { center, radius } => {
                let dist = crate::linalg::distance(v, center);
                if dist > *radius {
                    let scale = radius / dist;
                    for (a, c) in v.iter_mut().zip(center) {
                        *a = c + (*a - c) * scale;
                    }
                }
            }
            Self::DiagEllipsoid {
                center,
                diag,
                radius,
            } => project_diag_ellipsoid(v, center, diag, *radius),
        }
    }
}

/// Projection onto `{y : Σ m_i (y_i − c_i)² ≤ r²}`.
///
/// The KKT point is `y_i = c_i + (v_i − c_i)/(1 + ν m_i)` for the unique
/// `ν ≥ 0` that puts `y` on the boundary; `ν` is found by bisection after
/// doubling an upper bracket. The feasible end of the bracket is returned.
fn project_diag_ellipsoid(v: &mut [f64], center: &[f64], diag: &[f64], radius: f64) {
    let r2 = radius * radius;
    let excess = |nu: f64| -> f64 {
        v.iter()
            .zip(center)
            .zip(diag)
            .map(|((a, c), m)| {
                let w = (a - c) / (1.0 + nu * m);
                m * w * w
            })
            .sum::<f64>()
            - r2
    };
    if excess(0.0) <= 0.0 {
        return;
    }
    let mut hi = 1.0 / diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut doublings = 0;
    while excess(hi) > 0.0 && doublings < 2000 {
        hi *= 2.0;
        doublings += 1;
    }
    let mut lo = 0.0;
    for _ in 0..ELLIPSOID_MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let e = excess(mid);
        if e > 0.0 {
            lo = mid;
        } else {
            hi = mid;
            if -e <= ELLIPSOID_RESIDUAL_TOL * r2.max(1.0) {
                break;
            }
        }
    }
    for ((a, c), m) in v.iter_mut().zip(center).zip(diag) {
        *a = c + (*a - c) / (1.0 + hi * m);
    }
}

fn check_same_len(a: usize, b: usize, what: &str) -> Result<()> {
    if a != b {
        return Err(config_err(format!("{what}: length {a} vs {b}")));
    }
    Ok(())
}

/// `argmax_{γ ≥ 0} { sampleᵀγ − (β/2)‖γ_t − γ‖² } = max(γ_t + sample/β, 0)`.
pub fn dual_prox_basic(gamma_t: &[f64], sample: &[f64], beta: f64) -> Result<Vec<f64>> {
    let mut out = alloc::vec![0.0; gamma_t.len()];
    dual_prox_basic_into(gamma_t, sample, beta, &mut out)?;
    Ok(out)
}

pub fn dual_prox_basic_into(
    gamma_t: &[f64],
    sample: &[f64],
    beta: f64,
    out: &mut [f64],
) -> Result<()> {
    if !(beta > 0.0) {
        return Err(config_err("dual step size must be positive"));
    }
    check_same_len(gamma_t.len(), sample.len(), "dual prox")?;
    for ((o, g), s) in out.iter_mut().zip(gamma_t).zip(sample) {
        *o = (g + s / beta).max(0.0);
    }
    Ok(())
}

/// Anchored multiplier update:
/// `argmax_{γ ≥ 0} { sampleᵀγ − (β/2)‖γ_t − γ‖² − (τ/2)‖γ_0 − γ‖² }`,
/// i.e. `Π₊((β γ_t + τ γ_0 + sample)/(β + τ))`.
///
/// Evaluated as `γ_t + (τ(γ_0 − γ_t) + sample)/(β + τ)`, which is the same
/// point and reduces bit-for-bit to [`dual_prox_basic`] when `τ = 0`.
pub fn dual_prox_adaptive(
    gamma_t: &[f64],
    gamma_0: &[f64],
    sample: &[f64],
    beta: f64,
    tau: f64,
) -> Result<Vec<f64>> {
    let mut out = alloc::vec![0.0; gamma_t.len()];
    dual_prox_adaptive_into(gamma_t, gamma_0, sample, beta, tau, &mut out)?;
    Ok(out)
}

pub fn dual_prox_adaptive_into(
    gamma_t: &[f64],
    gamma_0: &[f64],
    sample: &[f64],
    beta: f64,
    tau: f64,
    out: &mut [f64],
) -> Result<()> {
    if !(beta >= 0.0 && tau >= 0.0 && beta + tau > 0.0) {
        return Err(config_err("need beta >= 0, tau >= 0 and beta + tau > 0"));
    }
    check_same_len(gamma_t.len(), sample.len(), "dual prox")?;
    check_same_len(gamma_t.len(), gamma_0.len(), "dual prox anchor")?;
    let denom = beta + tau;
    for (((o, g), g0), s) in out.iter_mut().zip(gamma_t).zip(gamma_0).zip(sample) {
        *o = (g + (tau * (g0 - g) + s) / denom).max(0.0);
    }
    Ok(())
}

/// `argmin_{x ∈ X} { gᵀx + (η/2)‖x − x_t‖² } = Π_X(x_t − g/η)`.
pub fn primal_prox_basic(
    x_t: &[f64],
    combined_grad: &[f64],
    eta: f64,
    proj: &ProjectionOp,
) -> Result<Vec<f64>> {
    let mut out = alloc::vec![0.0; x_t.len()];
    primal_prox_basic_into(x_t, combined_grad, eta, proj, &mut out)?;
    Ok(out)
}

pub fn primal_prox_basic_into(
    x_t: &[f64],
    combined_grad: &[f64],
    eta: f64,
    proj: &ProjectionOp,
    out: &mut [f64],
) -> Result<()> {
    if !(eta > 0.0) {
        return Err(config_err("primal step size must be positive"));
    }
    check_same_len(x_t.len(), combined_grad.len(), "primal prox")?;
    for ((o, x), g) in out.iter_mut().zip(x_t).zip(combined_grad) {
        *o = x - g / eta;
    }
    proj.project_in_place(out);
    Ok(())
}

/// `argmin_{x ∈ X} { gᵀx + (η/2)‖x − x_t‖² + (ρ/2)‖x − x_0‖² }`
/// `= Π_X((η x_t + ρ x_0 − g)/(η + ρ))`, evaluated in the incremental form
/// `x_t + (ρ(x_0 − x_t) − g)/(η + ρ)` so that `ρ = 0` matches
/// [`primal_prox_basic`] exactly.
pub fn primal_prox_adaptive(
    x_t: &[f64],
    x_0: &[f64],
    combined_grad: &[f64],
    eta: f64,
    rho: f64,
    proj: &ProjectionOp,
) -> Result<Vec<f64>> {
    let mut out = alloc::vec![0.0; x_t.len()];
    primal_prox_adaptive_into(x_t, x_0, combined_grad, eta, rho, proj, &mut out)?;
    Ok(out)
}

pub fn primal_prox_adaptive_into(
    x_t: &[f64],
    x_0: &[f64],
    combined_grad: &[f64],
    eta: f64,
    rho: f64,
    proj: &ProjectionOp,
    out: &mut [f64],
) -> Result<()> {
    if !(eta >= 0.0 && rho >= 0.0 && eta + rho > 0.0) {
        return Err(config_err("need eta >= 0, rho >= 0 and eta + rho > 0"));
    }
    check_same_len(x_t.len(), combined_grad.len(), "primal prox")?;
    check_same_len(x_t.len(), x_0.len(), "primal prox anchor")?;
    let denom = eta + rho;
    for (((o, x), x0), g) in out.iter_mut().zip(x_t).zip(x_0).zip(combined_grad) {
        *o = x + (rho * (x0 - x) - g) / denom;
    }
    proj.project_in_place(out);
    Ok(())
}

/// Ascent step for the maximizing block:
/// `argmax_{y ∈ Y} { gᵀy − (κ/2)‖y − y_t‖² } = Π_Y(y_t + g/κ)`.
pub fn primal_ascent_basic_into(
    y_t: &[f64],
    combined_grad: &[f64],
    kappa: f64,
    proj: &ProjectionOp,
    out: &mut [f64],
) -> Result<()> {
    if !(kappa > 0.0) {
        return Err(config_err("primal step size must be positive"));
    }
    check_same_len(y_t.len(), combined_grad.len(), "primal ascent")?;
    for ((o, y), g) in out.iter_mut().zip(y_t).zip(combined_grad) {
        *o = y + g / kappa;
    }
    proj.project_in_place(out);
    Ok(())
}

/// Anchored ascent step:
/// `argmax_{y ∈ Y} { gᵀy − (κ/2)‖y − y_t‖² − (φ/2)‖y − y_0‖² }`.
pub fn primal_ascent_adaptive_into(
    y_t: &[f64],
    y_0: &[f64],
    combined_grad: &[f64],
    kappa: f64,
    phi: f64,
    proj: &ProjectionOp,
    out: &mut [f64],
) -> Result<()> {
    if !(kappa >= 0.0 && phi >= 0.0 && kappa + phi > 0.0) {
        return Err(config_err("need kappa >= 0, phi >= 0 and kappa + phi > 0"));
    }
    check_same_len(y_t.len(), combined_grad.len(), "primal ascent")?;
    check_same_len(y_t.len(), y_0.len(), "primal ascent anchor")?;
    let denom = kappa + phi;
    for (((o, y), y0), g) in out.iter_mut().zip(y_t).zip(y_0).zip(combined_grad) {
        *o = y + (phi * (y0 - y) + g) / denom;
    }
    proj.project_in_place(out);
    Ok(())
}

/// `∇̃_x f + Σ_i γ_i ∇̃h_i`, written into `out`.
pub fn combine_grad_x_into(
    grad_f_x: &[f64],
    h_jacobian: &crate::linalg::Matrix,
    gamma: &[f64],
    out: &mut [f64],
) -> Result<()> {
    check_combine(grad_f_x, h_jacobian, gamma)?;
    out.copy_from_slice(grad_f_x);
    h_jacobian.mul_vec_acc(gamma, 1.0, out);
    Ok(())
}

pub fn combine_grad_x(
    grad_f_x: &[f64],
    h_jacobian: &crate::linalg::Matrix,
    gamma: &[f64],
) -> Result<Vec<f64>> {
    let mut out = alloc::vec![0.0; grad_f_x.len()];
    combine_grad_x_into(grad_f_x, h_jacobian, gamma, &mut out)?;
    Ok(out)
}

/// `∇̃_y f − Σ_j λ_j ∇̃g_j`, written into `out`.
pub fn combine_grad_y_into(
    grad_f_y: &[f64],
    g_jacobian: &crate::linalg::Matrix,
    lambda: &[f64],
    out: &mut [f64],
) -> Result<()> {
    check_combine(grad_f_y, g_jacobian, lambda)?;
    out.copy_from_slice(grad_f_y);
    g_jacobian.mul_vec_acc(lambda, -1.0, out);
    Ok(())
}

pub fn combine_grad_y(
    grad_f_y: &[f64],
    g_jacobian: &crate::linalg::Matrix,
    lambda: &[f64],
) -> Result<Vec<f64>> {
    let mut out = alloc::vec![0.0; grad_f_y.len()];
    combine_grad_y_into(grad_f_y, g_jacobian, lambda, &mut out)?;
    Ok(out)
}

fn check_combine(grad: &[f64], jac: &crate::linalg::Matrix, mult: &[f64]) -> Result<()> {
    if jac.rows() != grad.len() || jac.cols() != mult.len() {
        return Err(config_err(format!(
            "jacobian is {}x{}, gradient has {} entries and multiplier {}",
            jac.rows(),
            jac.cols(),
            grad.len(),
            mult.len()
        )));
    }
    Ok(())
}

/// Objective of the prox subproblem `gᵀz + (τ/2)‖z − z̄‖²`; shared by tests
/// and the reference solver's diagnostics.
pub fn prox_objective(g: &[f64], tau: f64, anchor: &[f64], z: &[f64]) -> f64 {
    let d = crate::linalg::distance(z, anchor);
    dot(g, z) + 0.5 * tau * d * d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use alloc::vec;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn projection_examples() {
        let ball = ProjectionOp::Ball {
            center: vec![0.0, 0.0],
            radius: 1.0,
        };
        assert!(close(&ball.project(&[3.0, 4.0]).unwrap(), &[0.6, 0.8]));
        let bx = ProjectionOp::Box {
            lower: vec![0.0, 0.0],
            upper: vec![1.0, 1.0],
        };
        assert_eq!(bx.project(&[-1.0, 2.0]).unwrap(), vec![0.0, 1.0]);
        assert_eq!(
            ProjectionOp::NonnegOrthant
                .project(&[-1.0, 2.0, 0.0])
                .unwrap(),
            vec![0.0, 2.0, 0.0]
        );
        assert!(bx.project(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn feasible_points_are_fixed() {
        let e = ProjectionOp::DiagEllipsoid {
            center: vec![1.0, -1.0],
            diag: vec![4.0, 0.25],
            radius: 2.0,
        };
        let v = vec![1.2, -0.5];
        assert_eq!(e.project(&v).unwrap(), v);
    }

    #[test]
    fn ellipsoid_projection_lands_on_boundary() {
        let e = ProjectionOp::DiagEllipsoid {
            center: vec![0.0, 0.0, 0.0],
            diag: vec![1.0, 9.0, 0.01],
            radius: 1.5,
        };
        let p = e.project(&[10.0, -3.0, 40.0]).unwrap();
        let q: f64 = p[0] * p[0] + 9.0 * p[1] * p[1] + 0.01 * p[2] * p[2];
        assert!((q.sqrt() - 1.5).abs() < 1e-10);
        assert!(e.contains(&p, 1e-12));
    }

    #[test]
    fn ellipsoid_with_unit_diag_matches_ball() {
        let e = ProjectionOp::DiagEllipsoid {
            center: vec![0.5, 0.5],
            diag: vec![1.0, 1.0],
            radius: 1.0,
        };
        let b = ProjectionOp::Ball {
            center: vec![0.5, 0.5],
            radius: 1.0,
        };
        let v = [3.0, -2.0];
        let (pe, pb) = (e.project(&v).unwrap(), b.project(&v).unwrap());
        assert!(pe.iter().zip(&pb).all(|(a, b)| (a - b).abs() < 1e-10));
    }

    #[test]
    fn invalid_sets_are_rejected() {
        let bad_box = ProjectionOp::Box {
            lower: vec![1.0],
            upper: vec![0.0],
        };
        assert!(bad_box.validate(1).is_err());
        let bad_ell = ProjectionOp::DiagEllipsoid {
            center: vec![0.0],
            diag: vec![0.0],
            radius: 1.0,
        };
        assert!(bad_ell.validate(1).is_err());
        assert!(ProjectionOp::Ball {
            center: vec![0.0],
            radius: 1.0
        }
        .validate(2)
        .is_err());
    }

    #[test]
    fn dual_prox_examples() {
        assert_eq!(
            dual_prox_basic(&[1.0, 0.0], &[-2.0, 3.0], 2.0).unwrap(),
            vec![0.0, 1.5]
        );
        assert_eq!(dual_prox_basic(&[0.0], &[-1.0], 1.0).unwrap(), vec![0.0]);
        assert_eq!(dual_prox_basic(&[2.0], &[0.0], 5.0).unwrap(), vec![2.0]);
        assert!(dual_prox_basic(&[0.0], &[1.0], 0.0).is_err());
        assert!(dual_prox_basic(&[0.0], &[1.0], -1.0).is_err());
    }

    #[test]
    fn adaptive_dual_prox_examples() {
        assert_eq!(
            dual_prox_adaptive(&[1.0], &[0.0], &[2.0], 1.0, 1.0).unwrap(),
            vec![1.5]
        );
        assert_eq!(
            dual_prox_adaptive(&[0.0], &[0.0], &[-3.0], 2.0, 1.0).unwrap(),
            vec![0.0]
        );
        assert!(dual_prox_adaptive(&[0.0], &[0.0], &[1.0], 0.0, 0.0).is_err());
        let (g, s) = ([0.3, 2.0, 0.0], [-0.7, 1.1, 5.0]);
        let a = dual_prox_adaptive(&g, &[9.0, 9.0, 9.0], &s, 3.0, 0.0).unwrap();
        let b = dual_prox_basic(&g, &s, 3.0).unwrap();
        assert!(a.iter().zip(&b).all(|(p, q)| p.to_bits() == q.to_bits()));
    }

    #[test]
    fn primal_prox_examples() {
        let full = ProjectionOp::FullSpace;
        assert_eq!(
            primal_prox_basic(&[0.0, 0.0], &[2.0, -4.0], 2.0, &full).unwrap(),
            vec![-1.0, 2.0]
        );
        let ball = ProjectionOp::Ball {
            center: vec![0.0, 0.0],
            radius: 1.0,
        };
        assert_eq!(
            primal_prox_basic(&[0.0, 0.0], &[-2.0, 0.0], 1.0, &ball).unwrap(),
            vec![1.0, 0.0]
        );
        assert_eq!(
            primal_prox_basic(&[0.3, -0.2], &[0.0, 0.0], 7.0, &ball).unwrap(),
            vec![0.3, -0.2]
        );
        assert!(primal_prox_basic(&[0.0], &[1.0], 0.0, &full).is_err());
    }

    #[test]
    fn adaptive_primal_prox_examples() {
        let full = ProjectionOp::FullSpace;
        assert_eq!(
            primal_prox_adaptive(&[2.0], &[0.0], &[0.0], 1.0, 1.0, &full).unwrap(),
            vec![1.0]
        );
        let bx = ProjectionOp::Box {
            lower: vec![0.0],
            upper: vec![1.0],
        };
        assert_eq!(
            primal_prox_adaptive(&[1.0], &[1.0], &[-10.0], 1.0, 1.0, &bx).unwrap(),
            vec![1.0]
        );
        assert!(primal_prox_adaptive(&[1.0], &[1.0], &[1.0], 0.0, 0.0, &bx).is_err());
    }

    #[test]
    fn combine_examples() {
        let empty = Matrix::zeros(2, 0);
        assert_eq!(
            combine_grad_x(&[1.0, 0.0], &empty, &[]).unwrap(),
            vec![1.0, 0.0]
        );
        let j = Matrix::from_columns(2, &[vec![0.0, 1.0]]);
        assert_eq!(
            combine_grad_x(&[1.0, 0.0], &j, &[2.0]).unwrap(),
            vec![1.0, 2.0]
        );
        assert_eq!(
            combine_grad_x(&[1.0, 0.0], &j, &[0.0]).unwrap(),
            vec![1.0, 0.0]
        );
        assert_eq!(
            combine_grad_y(&[1.0, 0.0], &j, &[2.0]).unwrap(),
            vec![1.0, -2.0]
        );
        assert!(combine_grad_x(&[1.0], &j, &[2.0]).is_err());
    }
}
