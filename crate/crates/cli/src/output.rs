//! CSV rows and the JSON sweep summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use cspd_core::metrics::{slope_fit, SlopeFit};
use cspd_core::ReferenceSolution;
use serde::Serialize;

use crate::config::SolverKind;
use crate::experiment::{Row, SweepOutcome};

pub const CSV_HEADER: &str = "run_id,solver,problem,seed,n,obj_gap,abs_obj_gap,feas_x,feas_y,\
duality_gap,max_gamma_norm,max_lambda_norm,wall_ms";

/// Slope the rate plots are compared against.
pub const BENCHMARK_SLOPE: f64 = -0.5;
/// Accepted band for fitted slopes, and the minimum r².
pub const SLOPE_BAND: (f64, f64) = (-0.75, -0.30);
pub const MIN_R2: f64 = 0.9;

/// 17 significant digits, enough to round-trip every `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn render_csv(rows: &[Row]) -> String {
    let mut out = String::with_capacity(64 + rows.len() * 300);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.run_id,
            r.solver.name(),
            r.problem,
            r.seed,
            r.n,
            fmt_f64(r.report.obj_gap),
            fmt_f64(r.abs_obj_gap()),
            fmt_f64(r.report.feas_x),
            fmt_f64(r.report.feas_y),
            fmt_opt(r.report.duality_gap),
            fmt_f64(r.max_gamma_norm),
            fmt_f64(r.max_lambda_norm),
            fmt_opt(r.wall_ms),
        );
    }
    out
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct FitSummary {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Indices of points dropped for being nonpositive.
    pub excluded: Vec<usize>,
    pub within_band: bool,
}

impl FitSummary {
    fn from_fit(f: SlopeFit) -> Self {
        let within_band = f.slope >= SLOPE_BAND.0 && f.slope <= SLOPE_BAND.1 && f.r2 >= MIN_R2;
        Self {
            slope: f.slope,
            intercept: f.intercept,
            r2: f.r2,
            excluded: f.excluded,
            within_band,
        }
    }
}

/// Per-horizon aggregates over seeds for one solver.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SolverSummary {
    pub solver: SolverKind,
    pub problem: String,
    pub n: Vec<u64>,
    pub seeds: Vec<usize>,
    pub mean_abs_obj_gap: Vec<f64>,
    pub stderr: Vec<f64>,
    pub mean_obj_gap: Vec<f64>,
    pub mean_feas: Vec<f64>,
    pub stderr_feas: Vec<f64>,
    pub mean_feas_y: Vec<f64>,
    pub mean_max_gamma_norm: Vec<f64>,
    pub mean_max_lambda_norm: Vec<f64>,
    pub benchmark_slope: f64,
    /// Fit of `mean_abs_obj_gap` against `n`; `None` with fewer than three
    /// usable points.
    pub obj_gap_fit: Option<FitSummary>,
    pub feas_fit: Option<FitSummary>,
}

fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let k = v.len() as f64;
    let mean = v.iter().sum::<f64>() / k;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

fn fit(n: &[u64], v: &[f64]) -> Option<FitSummary> {
    let pts: Vec<(f64, f64)> = n.iter().map(|&n| n as f64).zip(v.iter().copied()).collect();
    slope_fit(&pts).ok().map(FitSummary::from_fit)
}

/// Groups rows by solver and horizon. Rows must come from one problem.
pub fn aggregate(rows: &[Row]) -> Vec<SolverSummary> {
    let mut groups: BTreeMap<SolverKind, BTreeMap<u64, Vec<&Row>>> = BTreeMap::new();
    for r in rows {
        groups
            .entry(r.solver)
            .or_default()
            .entry(r.n)
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|(solver, by_n)| {
            let mut s = SolverSummary {
                solver,
                problem: String::new(),
                n: Vec::new(),
                seeds: Vec::new(),
                mean_abs_obj_gap: Vec::new(),
                stderr: Vec::new(),
                mean_obj_gap: Vec::new(),
                mean_feas: Vec::new(),
                stderr_feas: Vec::new(),
                mean_feas_y: Vec::new(),
                mean_max_gamma_norm: Vec::new(),
                mean_max_lambda_norm: Vec::new(),
                benchmark_slope: BENCHMARK_SLOPE,
                obj_gap_fit: None,
                feas_fit: None,
            };
            for (n, rs) in by_n {
                s.problem = rs[0].problem.to_string();
                let col = |f: &dyn Fn(&Row) -> f64| rs.iter().map(|r| f(r)).collect::<Vec<_>>();
                let (m_abs, se_abs) = mean_stderr(&col(&|r| r.abs_obj_gap()));
                let (m_feas, se_feas) = mean_stderr(&col(&|r| r.report.feas_x));
                s.n.push(n);
                s.seeds.push(rs.len());
                s.mean_abs_obj_gap.push(m_abs);
                s.stderr.push(se_abs);
                s.mean_obj_gap
                    .push(mean_stderr(&col(&|r| r.report.obj_gap)).0);
                s.mean_feas.push(m_feas);
                s.stderr_feas.push(se_feas);
                s.mean_feas_y
                    .push(mean_stderr(&col(&|r| r.report.feas_y)).0);
                s.mean_max_gamma_norm
                    .push(mean_stderr(&col(&|r| r.max_gamma_norm)).0);
                s.mean_max_lambda_norm
                    .push(mean_stderr(&col(&|r| r.max_lambda_norm)).0);
            }
            s.obj_gap_fit = fit(&s.n, &s.mean_abs_obj_gap);
            s.feas_fit = fit(&s.n, &s.mean_feas);
            s
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ReferenceSummary {
    pub f_star: f64,
    pub tolerance: f64,
    pub iterations: u64,
    pub gamma_star: Vec<f64>,
    pub lambda_star: Vec<f64>,
}

impl From<&ReferenceSolution> for ReferenceSummary {
    fn from(r: &ReferenceSolution) -> Self {
        Self {
            f_star: r.f_star,
            tolerance: r.tolerance,
            iterations: r.iterations,
            gamma_star: r.gamma_star.clone(),
            lambda_star: r.lambda_star.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Summary {
    pub schema_version: u32,
    pub problem: String,
    /// False when a run aborted; the CSV then holds only finished runs.
    pub complete: bool,
    pub failure: Option<String>,
    pub reference: ReferenceSummary,
    pub solvers: Vec<SolverSummary>,
}

pub fn summarize(problem: &str, reference: &ReferenceSolution, outcome: &SweepOutcome) -> Summary {
    Summary {
        schema_version: 1,
        problem: problem.to_string(),
        complete: outcome.failure.is_none(),
        failure: outcome
            .failure
            .as_ref()
            .map(|f| format!("{}: {}", f.run_id, f.error)),
        reference: reference.into(),
        solvers: aggregate(&outcome.rows),
    }
}
