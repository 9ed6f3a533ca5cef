//! Obstacle problem `L[u] = f(u)` on `{u > 0}`, `u ≥ 0`, `u = g` on the boundary.
//!
//! When `f(0) > 0` the source is replaced by `f_ε`, which vanishes on
//! `t ≤ 0`, ramps linearly on `(0, ε)` and equals `f` from `ε` on. A
//! geometric sequence of `ε` values is solved with warm starts until two
//! consecutive solutions agree.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryData, PointSet};
use crate::operator::{MonotoneSource, ScalarField};
use crate::solver::{monotone_bracket, SolveReport, Solver, SolverConfig, Start};

#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleConfig {
    pub eps0: f64,
    /// Ratio between consecutive `ε`, in `(0, 1)`.
    pub eps_factor: f64,
    pub eps_steps: usize,
    /// Absolute band for `{u = 0}`; scaled by `‖g‖∞` when that exceeds 1.
    pub coincidence_tol: f64,
    /// Inner solves; its `start` is replaced by the continuation.
    pub inner: SolverConfig,
}

impl Default for ObstacleConfig {
    fn default() -> Self {
        Self {
            eps0: 0.1,
            eps_factor: 0.5,
            eps_steps: 20,
            coincidence_tol: 1e-8,
            inner: SolverConfig::default(),
        }
    }
}

impl ObstacleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps0 > 0.0 && self.eps0.is_finite()) {
            return Err(Error::Config(format!("eps0 must be positive, got {}", self.eps0)));
        }
        if !(self.eps_factor > 0.0 && self.eps_factor < 1.0) {
            return Err(Error::Config(format!(
                "eps_factor must lie in (0, 1), got {}",
                self.eps_factor
            )));
        }
        if self.eps_steps == 0 {
            return Err(Error::Config("eps_steps must be at least 1".into()));
        }
        let last = self.eps0 * self.eps_factor.powi(self.eps_steps as i32);
        if last.is_nan() || last <= 0.0 {
            return Err(Error::Config(format!(
                "schedule underflows: eps0 * eps_factor^eps_steps = {last}"
            )));
        }
        if !(self.coincidence_tol > 0.0 && self.coincidence_tol.is_finite()) {
            return Err(Error::Config(format!(
                "coincidence_tol must be positive, got {}",
                self.coincidence_tol
            )));
        }
        self.inner.validate()
    }
}

/// One continuation step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsStep {
    pub step: usize,
    pub epsilon: f64,
    /// Sup-norm distance to the previous solution (to the start field at step 0).
    pub sup_change: f64,
    pub sweeps: usize,
    pub residual: f64,
}

/// How the source was modified below `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Approximation {
    /// `f(0) = 0`: `f` extended by 0 on negative `t`, one Dirichlet solve.
    ZeroExtension,
    /// `f(0) > 0`: linear ramp on `(0, ε)`; `epsilon` is the last one solved.
    LinearRamp { epsilon: f64 },
}

#[derive(Debug, Clone)]
pub struct ObstacleResult {
    pub u: ScalarField,
    /// Interior indices with `u` inside the coincidence band, ascending.
    pub coincidence: Vec<usize>,
    pub eps_trace: Vec<EpsStep>,
    /// Last inner report; `sweeps_used` and `wall_time` cover all steps.
    pub report: SolveReport,
    pub approximation: Approximation,
    /// The source the final field solves on `{u > 0}`.
    pub terminal_source: MonotoneSource,
}

/// The ramp modification `f_ε`.
pub fn f_epsilon(f: &MonotoneSource, eps: f64) -> Result<MonotoneSource> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Domain(format!("epsilon must be positive, got {eps}")));
    }
    check_source(f)?;
    Ok(MonotoneSource::ramp(f.clone(), eps))
}

fn check_source(f: &MonotoneSource) -> Result<()> {
    let f0 = f.eval(0.0);
    if f0 < 0.0 {
        return Err(Error::Domain(format!(
            "obstacle sources must be non-negative on [0, inf), f(0) = {f0}"
        )));
    }
    Ok(())
}

/// Interior indices with `u ≤ tol`.
pub fn coincidence_set(u: &ScalarField, tol: f64) -> Vec<usize> {
    u.point_set()
        .interior()
        .iter()
        .copied()
        .filter(|&i| u.get(i) <= tol)
        .collect()
}

pub fn solve_obstacle(
    ps: &Arc<PointSet>,
    g: &BoundaryData,
    f: &MonotoneSource,
    cfg: &ObstacleConfig,
) -> Result<ObstacleResult> {
    cfg.validate()?;
    if ps.alpha() >= 1.0 {
        return Err(Error::Domain(format!(
            "the obstacle problem needs alpha < 1, got {}",
            ps.alpha()
        )));
    }
    if let Some(k) = g.values().iter().position(|&v| v < 0.0) {
        return Err(Error::Domain(format!(
            "boundary data must be non-negative, g = {} at boundary point {}",
            g.values()[k],
            ps.boundary()[k]
        )));
    }
    check_source(f)?;

    let timer = Instant::now();
    let solver = Solver::new(ps.clone());
    let band = cfg.coincidence_tol * g.sup_norm().max(1.0);

    if f.eval(0.0) == 0.0 {
        let extended = MonotoneSource::zero_extended(f.clone());
        let start = match cfg.inner.start {
            Start::Both => Start::Both,
            _ => Start::Given(start_field(ps, g, &extended, &cfg.inner)?),
        };
        let inner = SolverConfig {
            start,
            ..cfg.inner.clone()
        };
        let (u, report) = solver.solve(g, &extended, &inner)?;
        let u = clamp_round_off(u, cfg.inner.bisection_tol);
        return Ok(ObstacleResult {
            coincidence: coincidence_set(&u, band),
            u,
            eps_trace: Vec::new(),
            report,
            approximation: Approximation::ZeroExtension,
            terminal_source: extended,
        });
    }

    let mut trace: Vec<EpsStep> = Vec::with_capacity(cfg.eps_steps);
    let mut current: Option<(ScalarField, SolveReport, MonotoneSource, f64)> = None;
    let mut total_sweeps = 0;
    for step in 0..cfg.eps_steps {
        let epsilon = cfg.eps0 * cfg.eps_factor.powi(step as i32);
        let source = f_epsilon(f, epsilon)?;
        let reference = match &current {
            None => start_field(ps, g, &source, &cfg.inner)?,
            Some((prev, ..)) => prev.values().to_vec(),
        };
        let inner = SolverConfig {
            start: Start::Given(reference.clone()),
            ..cfg.inner.clone()
        };
        let (u, report) = solver.solve(g, &source, &inner).map_err(|e| Error::Continuation {
            step,
            trace: trace.clone(),
            source: Box::new(e),
        })?;
        let sup_change = u
            .values()
            .iter()
            .zip(&reference)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        total_sweeps += report.sweeps_used;
        trace.push(EpsStep {
            step,
            epsilon,
            sup_change,
            sweeps: report.sweeps_used,
            residual: report.final_residual,
        });
        current = Some((u, report, source, epsilon));
        if step >= 1 && sup_change < cfg.inner.sweep_tol {
            break;
        }
    }

    let (u, mut report, source, epsilon) = current.expect("at least one continuation step");
    report.sweeps_used = total_sweeps;
    report.wall_time = timer.elapsed().as_secs_f64();
    let u = clamp_round_off(u, cfg.inner.bisection_tol);
    Ok(ObstacleResult {
        coincidence: coincidence_set(&u, band),
        u,
        eps_trace: trace,
        report,
        approximation: Approximation::LinearRamp { epsilon },
        terminal_source: source,
    })
}

/// First iterate: `max(u⁻, 0)` for lower starts, otherwise the requested field.
fn start_field(
    ps: &Arc<PointSet>,
    g: &BoundaryData,
    f: &MonotoneSource,
    inner: &SolverConfig,
) -> Result<Vec<f64>> {
    let (lower, upper) = monotone_bracket(ps, g, f)?;
    Ok(match &inner.start {
        Start::LowerEnvelope | Start::Both => lower.values().iter().map(|v| v.max(0.0)).collect(),
        Start::UpperEnvelope => upper.into_values(),
        Start::Given(v) => v.clone(),
    })
}

fn clamp_round_off(u: ScalarField, tol: f64) -> ScalarField {
    u.map(|v| if v < 0.0 && v >= -tol { 0.0 } else { v })
        .expect("clamping keeps values finite")
}
