//! Monotone sweeps for the discrete Dirichlet problem `L[u] = f(u)`.
//!
//! At an interior point `i` with every other value frozen, the balance
//!
//! ```text
//! H(t) = max_{j≠i} (u_j − t) w_ij + min_{j≠i} (u_j − t) w_ij − f(t),   w_ij = |x_j − x_i|^{−α}
//! ```
//!
//! is strictly decreasing in `t` when `f` is non-decreasing, so it has
//! exactly one root. Replacing `u_i` by that root is the local update. It is
//! monotone in the neighbour values, so sweeps started from the lower
//! envelope rise and sweeps started from the upper envelope fall, and both
//! stay between the envelopes.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::barriers::{envelope_constant, sub_envelope, super_envelope};
use crate::error::{Error, PartialSolve, Result};
use crate::geometry::{euclidean, BoundaryData, PointSet};
use crate::operator::{MonotoneSource, ScalarField};

/// Bracket doublings before a local update gives up.
pub const MAX_DOUBLINGS: u32 = 60;

/// Dense weight matrices are cached up to this many points.
const DENSE_KERNEL_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// In place, ascending interior index order.
    #[default]
    GaussSeidel,
    /// Against a frozen snapshot; parallel over points.
    Jacobi,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum Start {
    #[default]
    LowerEnvelope,
    UpperEnvelope,
    /// Run from both envelopes, return the lower limit and report the gap.
    Both,
    /// One value per point; boundary entries are replaced by `g`.
    Given(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub scheme: Scheme,
    /// Sup-norm change between sweeps below which a solve may stop.
    pub sweep_tol: f64,
    /// Interior residual sup-norm required as well.
    pub residual_tol: f64,
    pub max_sweeps: usize,
    pub bisection_tol: f64,
    pub start: Start,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::GaussSeidel,
            sweep_tol: 1e-10,
            residual_tol: 1e-8,
            max_sweeps: 10_000,
            bisection_tol: 1e-12,
            start: Start::LowerEnvelope,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sweep_tol", self.sweep_tol),
            ("residual_tol", self.residual_tol),
            ("bisection_tol", self.bisection_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_sweeps == 0 {
            return Err(Error::Config("max_sweeps must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Total sweeps, summed over both runs when both starts were used.
    pub sweeps_used: usize,
    pub final_change: f64,
    pub final_residual: f64,
    /// Sup-norm gap between the limits from the lower and upper starts.
    pub bracket_gap: Option<f64>,
    /// Seconds.
    pub wall_time: f64,
    /// `max(‖u⁺‖∞, ‖u⁻‖∞)`.
    pub lambda_bound: f64,
}

/// Weights `|x_j − x_i|^{−α}`, cached densely for desk-scale point sets.
pub struct Kernel {
    ps: Arc<PointSet>,
    dense: Option<Vec<f64>>,
}

impl Kernel {
    pub fn new(ps: Arc<PointSet>) -> Self {
        let n = ps.len();
        let dense = (n <= DENSE_KERNEL_LIMIT).then(|| {
            let mut w = vec![0.0; n * n];
            w.par_chunks_mut(n)
                .enumerate()
                .for_each(|(i, row)| fill_row(&ps, i, row));
            w
        });
        Self { ps, dense }
    }

    pub fn point_set(&self) -> &Arc<PointSet> {
        &self.ps
    }

    /// Row `i`; `scratch` is used when rows are not cached.
    fn row<'a>(&'a self, i: usize, scratch: &'a mut Vec<f64>) -> &'a [f64] {
        let n = self.ps.len();
        match &self.dense {
            Some(w) => &w[i * n..(i + 1) * n],
            None => {
                scratch.resize(n, 0.0);
                fill_row(&self.ps, i, scratch);
                scratch
            }
        }
    }
}

fn fill_row(ps: &PointSet, i: usize, row: &mut [f64]) {
    let xi = ps.point(i);
    let alpha = ps.alpha();
    for (j, (w, xj)) in row.iter_mut().zip(ps.points()).enumerate() {
        *w = if j == i {
            0.0
        } else {
            euclidean(xi, xj).powf(-alpha)
        };
    }
}

#[inline]
fn extrema(values: &[f64], weights: &[f64], t: f64, acc: (f64, f64)) -> (f64, f64) {
    let (mut hi, mut lo) = acc;
    for (&v, &w) in values.iter().zip(weights) {
        let q = (v - t) * w;
        hi = if q > hi { q } else { hi };
        lo = if q < lo { q } else { lo };
    }
    (hi, lo)
}

/// `L`-balance at `i` with `u_i` replaced by `t`.
#[inline]
fn balance(values: &[f64], row: &[f64], i: usize, t: f64) -> f64 {
    let acc = extrema(&values[..i], &row[..i], t, (f64::NEG_INFINITY, f64::INFINITY));
    let (hi, lo) = extrema(&values[i + 1..], &row[i + 1..], t, acc);
    hi + lo
}

/// Root of the local balance at `i`.
///
/// `hint`, when given, is the expected size of the move away from the
/// current value and seeds a small bracket around it.
fn solve_point(
    values: &[f64],
    row: &[f64],
    i: usize,
    f: &MonotoneSource,
    tol: f64,
    hint: Option<f64>,
) -> Result<f64> {
    let h = |t: f64| balance(values, row, i, t) - f.eval(t);
    let (mut lo, mut hi) = values
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (_, &v)| {
            (a.min(v), b.max(v))
        });

    if h(lo) < 0.0 {
        let mut offset = (hi - lo).max(1.0);
        let mut found = false;
        for _ in 0..MAX_DOUBLINGS {
            let cand = lo - offset;
            if h(cand) >= 0.0 {
                hi = lo;
                lo = cand;
                found = true;
                break;
            }
            offset *= 2.0;
        }
        if !found {
            return Err(Error::Divergence {
                index: i,
                doublings: MAX_DOUBLINGS,
            });
        }
    } else if h(hi) > 0.0 {
        let mut offset = (hi - lo).max(1.0);
        let mut found = false;
        for _ in 0..MAX_DOUBLINGS {
            let cand = hi + offset;
            if h(cand) <= 0.0 {
                lo = hi;
                hi = cand;
                found = true;
                break;
            }
            offset *= 2.0;
        }
        if !found {
            return Err(Error::Divergence {
                index: i,
                doublings: MAX_DOUBLINGS,
            });
        }
    }
    let current = values[i];
    if current > lo && current < hi {
        // the sign of h(current) fixes the side of `current` holding the root
        let hc = h(current);
        if hc == 0.0 {
            return Ok(current);
        }
        let up = hc > 0.0;
        if up {
            lo = current;
        } else {
            hi = current;
        }
        if let Some(step) = hint.filter(|s| *s > 0.0) {
            let mut step = step.max(tol);
            loop {
                let probe = if up { current + step } else { current - step };
                if probe <= lo || probe >= hi {
                    break;
                }
                let hp = h(probe);
                if hp == 0.0 {
                    return Ok(probe);
                }
                if (hp > 0.0) == up {
                    if up {
                        lo = probe;
                    } else {
                        hi = probe;
                    }
                } else {
                    if up {
                        hi = probe;
                    } else {
                        lo = probe;
                    }
                    break;
                }
                step *= 2.0;
            }
        }
    }
    Ok(bisect(h, lo, hi, tol))
}

/// Bisection for a decreasing `h` with `h(lo) ≥ 0 ≥ h(hi)`, finished by one
/// secant step inside the final bracket.
fn bisect(h: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let (mut h_lo, mut h_hi) = (f64::NAN, f64::NAN);
    while hi - lo > tol {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        let hm = h(mid);
        if hm == 0.0 {
            return mid;
        }
        if hm > 0.0 {
            lo = mid;
            h_lo = hm;
        } else {
            hi = mid;
            h_hi = hm;
        }
    }
    if h_lo.is_nan() {
        h_lo = h(lo);
    }
    if h_hi.is_nan() {
        h_hi = h(hi);
    }
    // h is piecewise linear, so within a small bracket the secant is usually exact
    let span = h_lo - h_hi;
    if h_lo >= 0.0 && h_hi <= 0.0 && span > 0.0 && span.is_finite() {
        let t = lo + (h_lo / span) * (hi - lo);
        if t >= lo && t <= hi {
            return t;
        }
    }
    lo + 0.5 * (hi - lo)
}

/// Sweep driver holding the cached kernel for one point set.
pub struct Solver {
    kernel: Kernel,
}

impl Solver {
    pub fn new(ps: Arc<PointSet>) -> Self {
        Self {
            kernel: Kernel::new(ps),
        }
    }

    pub fn point_set(&self) -> &Arc<PointSet> {
        self.kernel.point_set()
    }

    fn check_field(&self, u: &ScalarField) -> Result<()> {
        if u.point_set().as_ref() != self.point_set().as_ref() {
            return Err(Error::Usage("field belongs to a different point set".into()));
        }
        Ok(())
    }

    pub fn local_update(&self, u: &ScalarField, i: usize, f: &MonotoneSource, tol: f64) -> Result<f64> {
        self.check_field(u)?;
        if self.point_set().is_boundary(i) {
            return Err(Error::Usage(format!("point {i} is a boundary point")));
        }
        let mut scratch = Vec::new();
        let row = self.kernel.row(i, &mut scratch);
        solve_point(u.values(), row, i, f, tol, None)
    }

    /// One pass of local updates over the interior; returns the sup-norm
    /// change. Boundary values are never written.
    pub fn sweep(
        &self,
        u: &mut ScalarField,
        f: &MonotoneSource,
        scheme: Scheme,
        tol: f64,
    ) -> Result<f64> {
        self.sweep_hinted(u, f, scheme, tol, None)
    }

    fn sweep_hinted(
        &self,
        u: &mut ScalarField,
        f: &MonotoneSource,
        scheme: Scheme,
        tol: f64,
        hint: Option<f64>,
    ) -> Result<f64> {
        self.check_field(u)?;
        let interior = self.point_set().interior();
        match scheme {
            Scheme::GaussSeidel => {
                let mut scratch = Vec::new();
                let values = u.values_mut();
                let mut change: f64 = 0.0;
                for &i in interior {
                    let row = self.kernel.row(i, &mut scratch);
                    let new = solve_point(values, row, i, f, tol, hint)?;
                    change = change.max((new - values[i]).abs());
                    values[i] = new;
                }
                Ok(change)
            }
            Scheme::Jacobi => {
                let snapshot = u.values().to_vec();
                let updated: Vec<f64> = interior
                    .par_iter()
                    .map_init(Vec::new, |scratch, &i| {
                        let row = self.kernel.row(i, scratch);
                        solve_point(&snapshot, row, i, f, tol, hint)
                    })
                    .collect::<Result<_>>()?;
                let values = u.values_mut();
                let mut change: f64 = 0.0;
                for (&i, new) in interior.iter().zip(updated) {
                    change = change.max((new - values[i]).abs());
                    values[i] = new;
                }
                Ok(change)
            }
        }
    }

    /// Interior residual sup-norm using the cached weights.
    pub fn residual_norm(&self, u: &ScalarField, f: &MonotoneSource) -> f64 {
        let values = u.values();
        self.point_set()
            .interior()
            .par_iter()
            .map_init(Vec::new, |scratch, &i| {
                let row = self.kernel.row(i, scratch);
                (balance(values, row, i, values[i]) - f.eval(values[i])).abs()
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Sweep from `u` until both the change and the residual are small.
    pub fn run(&self, mut u: ScalarField, f: &MonotoneSource, cfg: &SolverConfig) -> RunOutcome {
        let mut stats = RunStats::default();
        let mut hint = None;
        for sweep in 1..=cfg.max_sweeps {
            let change = match self.sweep_hinted(&mut u, f, cfg.scheme, cfg.bisection_tol, hint) {
                Ok(c) => c,
                Err(e) => return RunOutcome::Failed(e),
            };
            stats.sweeps = sweep;
            stats.final_change = change;
            hint = Some(change);
            if change < cfg.sweep_tol {
                stats.final_residual = self.residual_norm(&u, f);
                if stats.final_residual < cfg.residual_tol {
                    return RunOutcome::Converged(u, stats);
                }
            }
        }
        stats.final_residual = self.residual_norm(&u, f);
        RunOutcome::Exhausted(u, stats)
    }

    pub fn solve(
        &self,
        g: &BoundaryData,
        f: &MonotoneSource,
        cfg: &SolverConfig,
    ) -> Result<(ScalarField, SolveReport)> {
        cfg.validate()?;
        let ps = self.point_set();
        if g.beta() >= ps.alpha() {
            return Err(Error::Domain(format!(
                "need beta < alpha (beta = {}, alpha = {})",
                g.beta(),
                ps.alpha()
            )));
        }
        let timer = Instant::now();
        let (lower, upper) = monotone_bracket(ps, g, f)?;
        let lambda_bound = lower.sup_norm().max(upper.sup_norm());
        let report = |stats: &RunStats, gap: Option<f64>| SolveReport {
            sweeps_used: stats.sweeps,
            final_change: stats.final_change,
            final_residual: stats.final_residual,
            bracket_gap: gap,
            wall_time: timer.elapsed().as_secs_f64(),
            lambda_bound,
        };
        let finish = |outcome: RunOutcome, prior: usize| match outcome {
            RunOutcome::Converged(u, stats) => Ok((u, stats)),
            RunOutcome::Exhausted(field, mut stats) => {
                stats.sweeps += prior;
                Err(Error::NotConverged(Box::new(PartialSolve {
                    field,
                    report: report(&stats, None),
                })))
            }
            RunOutcome::Failed(e) => Err(e),
        };

        let first = match &cfg.start {
            Start::LowerEnvelope | Start::Both => lower,
            Start::UpperEnvelope => upper.clone(),
            Start::Given(values) => {
                let mut field = ScalarField::new(ps.clone(), values.clone())?;
                let trace = field.values_mut();
                for (&b, &v) in ps.boundary().iter().zip(g.values()) {
                    trace[b] = v;
                }
                field
            }
        };
        let (u, stats) = finish(self.run(first, f, cfg), 0)?;
        if cfg.start != Start::Both {
            return Ok((u, report(&stats, None)));
        }
        let (v, up) = finish(self.run(upper, f, cfg), stats.sweeps)?;
        let gap = u.sup_distance(&v);
        let combined = RunStats {
            sweeps: stats.sweeps + up.sweeps,
            final_change: stats.final_change.max(up.final_change),
            final_residual: stats.final_residual.max(up.final_residual),
        };
        Ok((u, report(&combined, Some(gap))))
    }
}

#[derive(Debug)]
pub enum RunOutcome {
    Converged(ScalarField, RunStats),
    /// Sweep budget spent; the field is the last iterate.
    Exhausted(ScalarField, RunStats),
    Failed(Error),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunStats {
    pub sweeps: usize,
    pub final_change: f64,
    pub final_residual: f64,
}

/// Root of the local balance at interior point `i`, other values frozen.
pub fn local_update(u: &ScalarField, i: usize, f: &MonotoneSource, tol: f64) -> Result<f64> {
    if u.point_set().is_boundary(i) {
        return Err(Error::Usage(format!("point {i} is a boundary point")));
    }
    let ps = u.point_set();
    let mut row = vec![0.0; ps.len()];
    fill_row(ps, i, &mut row);
    solve_point(u.values(), &row, i, f, tol, None)
}

/// One sweep with `cfg.scheme` and `cfg.bisection_tol`, in place.
pub fn sweep(u: &mut ScalarField, f: &MonotoneSource, cfg: &SolverConfig) -> Result<f64> {
    Solver::new(u.point_set().clone()).sweep(u, f, cfg.scheme, cfg.bisection_tol)
}

pub fn solve_dirichlet(
    ps: &Arc<PointSet>,
    g: &BoundaryData,
    f: &MonotoneSource,
    cfg: &SolverConfig,
) -> Result<(ScalarField, SolveReport)> {
    Solver::new(ps.clone()).solve(g, f, cfg)
}

/// Envelope pair `(u⁻, u⁺)` with the cone constant from
/// [`envelope_constant`].
pub fn monotone_bracket(
    ps: &Arc<PointSet>,
    g: &BoundaryData,
    f: &MonotoneSource,
) -> Result<(ScalarField, ScalarField)> {
    let c = envelope_constant(ps, g, f)?;
    Ok((sub_envelope(ps, g, c), super_envelope(ps, g, c)))
}

/// Solution of `L[u] = 0` from the boundary-only root representation: at
/// each interior `x`, the unique `r` with
/// `max_{y∈∂}(g(y) − r)/|y − x|^α + min_{y∈∂}(g(y) − r)/|y − x|^α = 0`.
pub fn solve_homogeneous_closed_form(ps: &Arc<PointSet>, g: &BoundaryData) -> ScalarField {
    let alpha = ps.alpha();
    let bnd = ps.boundary();
    let gv = g.values();
    let (gmin, gmax) = (g.min(), g.max());
    let mut values = vec![0.0; ps.len()];
    for (&b, &v) in bnd.iter().zip(gv) {
        values[b] = v;
    }
    let interior: Vec<(usize, f64)> = ps
        .interior()
        .par_iter()
        .map(|&i| {
            let x = ps.point(i);
            let w: Vec<f64> = bnd
                .iter()
                .map(|&b| euclidean(x, ps.point(b)).powf(-alpha))
                .collect();
            let h = |r: f64| {
                let (hi, lo) = extrema(gv, &w, r, (f64::NEG_INFINITY, f64::INFINITY));
                hi + lo
            };
            // run to floating-point resolution
            (i, bisect(h, gmin, gmax, 0.0))
        })
        .collect();
    for (i, v) in interior {
        values[i] = v;
    }
    ScalarField::new(ps.clone(), values).expect("closed-form values are finite")
}
