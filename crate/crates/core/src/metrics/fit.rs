//! Log-log rate fits and the dual-bound constant.

use alloc::vec::Vec;

use crate::error::{config_err, Result};
use crate::linalg::{distance, euclidean_norm};
use crate::problem::{ProblemConstants, ReferenceSolution};
use crate::solver::InitialPoint;

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Indices of input points dropped for a nonpositive `N` or value.
    pub excluded: Vec<usize>,
}

/// Ordinary least squares of `ln value` on `ln N`.
pub fn slope_fit(points: &[(f64, f64)]) -> Result<SlopeFit> {
    let mut excluded = Vec::new();
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for (i, &(n, v)) in points.iter().enumerate() {
        if n > 0.0 && v > 0.0 && n.is_finite() && v.is_finite() {
            xs.push(libm::log(n));
            ys.push(libm::log(v));
        } else {
            excluded.push(i);
        }
    }
    if xs.len() < 3 {
        return Err(config_err(alloc::format!(
            "slope fit needs at least 3 positive points, got {}",
            xs.len()
        )));
    }
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(config_err("slope fit needs at least two distinct N"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(SlopeFit {
        slope,
        intercept,
        r2,
        excluded,
    })
}

/// The constant `R` bounding `E‖λ_K‖² + E‖γ_K‖² ≤ 2Re²` under the basic
/// theory schedule.
pub fn theory_constant_r(
    reference: &ReferenceSolution,
    init: &InitialPoint,
    constants: &ProblemConstants,
) -> Result<f64> {
    constants.validate()?;
    let c = constants;
    if !(c.c_h > 0.0 && c.c_g > 0.0) {
        return Err(config_err("theory constant R needs c_h > 0 and c_g > 0"));
    }
    let gs = euclidean_norm(&reference.gamma_star);
    let ls = euclidean_norm(&reference.lambda_star);
    let dg0 = distance(&init.gamma, &reference.gamma_star);
    let dl0 = distance(&init.lambda, &reference.lambda_star);
    let dx0 = distance(&init.x, &reference.x_star);
    let dy0 = distance(&init.y, &reference.y_star);
    let xs = euclidean_norm(&reference.x_star);
    let ys = euclidean_norm(&reference.y_star);
    let (ch2, cg2) = (c.c_h * c.c_h, c.c_g * c.c_g);

    let x_block = 11.0 * c.c_x * c.c_x / (8.0 * ch2)
        + 2.0 * dg0 * dg0
        + gs * c.sigma_h
        + c.sigma_h * c.sigma_h / 8.0
        + 3.0 * gs * gs / 8.0
        + 2.0 * ch2 * dx0 * dx0
        + 2.0 * ch2 * xs * xs
        + 2.0 * ls * ls;
    let y_block = 11.0 * c.c_y * c.c_y / (8.0 * cg2)
        + 2.0 * dl0 * dl0
        + ls * c.sigma_g
        + c.sigma_g * c.sigma_g / 8.0
        + 3.0 * ls * ls / 8.0
        + 2.0 * cg2 * dy0 * dy0
        + 2.0 * cg2 * ys * ys
        + 2.0 * gs * gs;
    let r = x_block + y_block;
    if !r.is_finite() {
        return Err(config_err("theory constant R is not finite"));
    }
    Ok(r)
}
