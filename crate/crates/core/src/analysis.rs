//! Hölder seminorms, the global Hölder bound, comparison checks and the
//! randomized operator invariant suite.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::barriers::r_star;
use crate::error::{Error, Result};
use crate::geometry::{alpha_distance, euclidean, BoundaryData, PointSet};
use crate::operator::{l_full, l_minus, l_plus, quotient_extrema, MonotoneSource, ScalarField};

/// Absolute slack when comparing a measured seminorm with its bound.
pub const HOLDER_SLACK: f64 = 1e-9;

/// `max |u(x) − u(y)| / |x − y|^β` over pairs of `region`.
pub fn holder_seminorm(u: &ScalarField, beta: f64, region: &[usize]) -> Result<f64> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::Domain(format!("beta must lie in (0, 1], got {beta}")));
    }
    if region.len() < 2 {
        return Err(Error::Domain(format!(
            "a seminorm needs at least two points, region has {}",
            region.len()
        )));
    }
    let ps = u.point_set();
    let v = u.values();
    Ok((0..region.len())
        .into_par_iter()
        .map(|a| {
            let i = region[a];
            region[a + 1..].iter().fold(0.0f64, |m, &j| {
                m.max((v[i] - v[j]).abs() / ps.distance(i, j).powf(beta))
            })
        })
        .reduce(|| 0.0, f64::max))
}

/// Global bound on `[u]_β` for solutions with data `g` and source `f`:
/// `max([g]_β, D·[f(‖g‖∞)]₊ / (1 − Ψ★), D·[f(−‖g‖∞)]₋ / (1 − Ψ★))` with
/// `D = diam^{α−β}`.
pub fn holder_bound(ps: &PointSet, g: &BoundaryData, f: &MonotoneSource) -> Result<f64> {
    let (alpha, beta) = (ps.alpha(), g.beta());
    if beta >= alpha {
        return Err(Error::Domain(format!(
            "the bound needs beta < alpha (beta = {beta}, alpha = {alpha})"
        )));
    }
    let psi_star = r_star(alpha, beta)?.psi_ratio;
    let scale = ps.diameter().powf(alpha - beta) / (1.0 - psi_star);
    let gmax = g.sup_norm();
    let up = f.eval(gmax).max(0.0);
    let down = (-f.eval(-gmax)).max(0.0);
    Ok(g.seminorm().max(scale * up).max(scale * down))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalSeminorm {
    /// Sub-box label, one cell index per axis joined by `-`.
    pub id: String,
    pub points: usize,
    pub seminorm: f64,
    /// `max(2‖u‖∞ / dist(box, ∂)^β, D·[f(−‖u‖∞)]₋ / (1 − Ψ★))`; reported only.
    pub local_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub beta: f64,
    pub global_seminorm: f64,
    pub local_seminorms: Vec<LocalSeminorm>,
    pub bound: f64,
    /// `global_seminorm ≤ bound + HOLDER_SLACK`.
    pub satisfied: bool,
}

/// Global seminorm against [`holder_bound`], plus seminorms on a
/// `cells^dim` partition of the interior bounding box.
pub fn holder_report(
    u: &ScalarField,
    g: &BoundaryData,
    f: &MonotoneSource,
    cells: usize,
) -> Result<HolderReport> {
    let ps = u.point_set();
    let beta = g.beta();
    let all: Vec<usize> = (0..ps.len()).collect();
    let global_seminorm = holder_seminorm(u, beta, &all)?;
    let bound = holder_bound(ps, g, f)?;
    let psi_star = r_star(ps.alpha(), beta)?.psi_ratio;
    let unorm = u.sup_norm();
    let source_term =
        ps.diameter().powf(ps.alpha() - beta) * (-f.eval(-unorm)).max(0.0) / (1.0 - psi_star);

    let mut local_seminorms = Vec::new();
    for (id, members) in interior_boxes(ps, cells.max(1)) {
        if members.len() < 2 {
            continue;
        }
        let dist = members
            .iter()
            .flat_map(|&i| ps.boundary().iter().map(move |&b| (i, b)))
            .map(|(i, b)| ps.distance(i, b))
            .fold(f64::INFINITY, f64::min);
        local_seminorms.push(LocalSeminorm {
            id,
            points: members.len(),
            seminorm: holder_seminorm(u, beta, &members)?,
            local_bound: (2.0 * unorm / dist.powf(beta)).max(source_term),
        });
    }
    Ok(HolderReport {
        beta,
        global_seminorm,
        local_seminorms,
        bound,
        satisfied: global_seminorm <= bound + HOLDER_SLACK,
    })
}

fn interior_boxes(ps: &PointSet, cells: usize) -> Vec<(String, Vec<usize>)> {
    let dim = ps.dim();
    let interior = ps.interior();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for &i in interior {
        for (k, &c) in ps.point(i).iter().enumerate() {
            lo[k] = lo[k].min(c);
            hi[k] = hi[k].max(c);
        }
    }
    let mut boxes: std::collections::BTreeMap<Vec<usize>, Vec<usize>> = Default::default();
    for &i in interior {
        let key: Vec<usize> = ps
            .point(i)
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                let width = hi[k] - lo[k];
                if width <= 0.0 {
                    0
                } else {
                    (((c - lo[k]) / width * cells as f64) as usize).min(cells - 1)
                }
            })
            .collect();
        boxes.entry(key).or_default().push(i);
    }
    boxes
        .into_iter()
        .map(|(key, members)| {
            let id = key.iter().map(usize::to_string).collect::<Vec<_>>().join("-");
            (id, members)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// `u ≤ v + tol` at every point.
    pub holds: bool,
    /// First index violating it.
    pub witness: Option<usize>,
    /// `max(u − v)` over all points.
    pub max_excess: f64,
    /// `u ≤ v + tol` on the boundary.
    pub boundary_ordered: bool,
}

pub fn check_comparison(u: &ScalarField, v: &ScalarField, tol: f64) -> Result<Comparison> {
    if !u.same_points(v) {
        return Err(Error::Usage("comparison needs fields on the same point set".into()));
    }
    let ps = u.point_set();
    let excess = |i: usize| u.get(i) - v.get(i);
    let witness = (0..ps.len()).find(|&i| excess(i) > tol);
    Ok(Comparison {
        holds: witness.is_none(),
        witness,
        max_excess: (0..ps.len()).map(excess).fold(f64::NEG_INFINITY, f64::max),
        boundary_ordered: ps.boundary().iter().all(|&b| excess(b) <= tol),
    })
}

/// Property families checked by [`run_invariant_suite`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    AlphaTriangle,
    Duality,
    TranslationScaling,
    QuadraticPerturbation,
    HolderStability,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::AlphaTriangle,
        Family::Duality,
        Family::TranslationScaling,
        Family::QuadraticPerturbation,
        Family::HolderStability,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::AlphaTriangle => "alpha_triangle",
            Family::Duality => "duality",
            Family::TranslationScaling => "translation_scaling",
            Family::QuadraticPerturbation => "quadratic_perturbation",
            Family::HolderStability => "holder_stability",
        }
    }

    fn needs_operator(self) -> bool {
        self != Family::AlphaTriangle
    }
}

/// Operator families are skipped on sets with fewer points.
pub const MIN_OPERATOR_POINTS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum SuitePoints {
    /// Fresh random cloud per trial: `points` in `[min, max]`, `dim` in `1..=max_dim`.
    Random { min: usize, max: usize, max_dim: usize },
    Fixed(Arc<PointSet>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    pub trials: usize,
    pub points: SuitePoints,
    /// Fixed exponent; otherwise drawn per trial, with `α = 1` one trial in eight.
    pub alpha: Option<f64>,
}

impl SuiteConfig {
    pub fn new(seed: u64, trials: usize) -> Self {
        Self {
            seed,
            trials,
            points: SuitePoints::Random {
                min: 3,
                max: 24,
                max_dim: 3,
            },
            alpha: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub family: Family,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    /// Smallest `bound − observed` seen; negative means a failure.
    pub worst_margin: f64,
}

/// Everything needed to replay one failing check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureInstance {
    pub family: Family,
    pub trial: usize,
    pub alpha: f64,
    pub dim: usize,
    pub coords: Vec<f64>,
    pub boundary: Vec<usize>,
    pub values: Vec<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub trials: usize,
    pub families: Vec<FamilyReport>,
    pub failures: Vec<FailureInstance>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.families.iter().all(|f| f.failed == 0)
    }

    pub fn family(&self, family: Family) -> Option<&FamilyReport> {
        self.families.iter().find(|f| f.family == family)
    }
}

/// Failures kept per family.
const MAX_RECORDED_FAILURES: usize = 5;

pub fn run_invariant_suite(seed: u64, trials: usize) -> Result<SuiteReport> {
    run_invariant_suite_with(&SuiteConfig::new(seed, trials))
}

pub fn run_invariant_suite_with(cfg: &SuiteConfig) -> Result<SuiteReport> {
    if cfg.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    if let Some(a) = cfg.alpha {
        crate::geometry::check_alpha(a)?;
    }
    if let SuitePoints::Random { min, max, max_dim } = cfg.points {
        if min < 2 || max < min || max_dim == 0 {
            return Err(Error::Config(format!(
                "random clouds need 2 <= min <= max and max_dim >= 1 (got {min}, {max}, {max_dim})"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut tally: Vec<FamilyReport> = Family::ALL
        .iter()
        .map(|&family| FamilyReport {
            family,
            passed: 0,
            failed: 0,
            skipped: 0,
            worst_margin: f64::INFINITY,
        })
        .collect();
    let mut failures = Vec::new();

    for trial in 0..cfg.trials {
        let alpha = cfg.alpha.unwrap_or_else(|| {
            if rng.gen_ratio(1, 8) {
                1.0
            } else {
                rng.gen_range(0.05..1.0)
            }
        });
        let ps = match &cfg.points {
            SuitePoints::Fixed(ps) => ps.with_alpha(alpha)?,
            SuitePoints::Random { min, max, max_dim } => random_cloud(&mut rng, *min, *max, *max_dim, alpha),
        };
        let ps = Arc::new(ps);
        let values: Vec<f64> = (0..ps.len()).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let u = ScalarField::new(ps.clone(), values)?;

        for (slot, &family) in tally.iter_mut().zip(Family::ALL.iter()) {
            if family.needs_operator() && ps.len() < MIN_OPERATOR_POINTS {
                slot.skipped += 1;
                continue;
            }
            let (margin, detail) = match family {
                Family::AlphaTriangle => check_triangle(&mut rng, ps.dim(), alpha),
                Family::Duality => check_duality(&u),
                Family::TranslationScaling => check_translation_scaling(&mut rng, &u),
                Family::QuadraticPerturbation => check_quadratic(&mut rng, &u),
                Family::HolderStability => check_stability(&mut rng, &u),
            };
            slot.worst_margin = slot.worst_margin.min(margin);
            if margin >= 0.0 {
                slot.passed += 1;
            } else {
                slot.failed += 1;
                if slot.failed <= MAX_RECORDED_FAILURES {
                    failures.push(FailureInstance {
                        family,
                        trial,
                        alpha,
                        dim: ps.dim(),
                        coords: ps.coords().to_vec(),
                        boundary: ps.boundary().to_vec(),
                        values: u.values().to_vec(),
                        detail,
                    });
                }
            }
        }
    }
    Ok(SuiteReport {
        seed: cfg.seed,
        trials: cfg.trials,
        families: tally,
        failures,
    })
}

fn random_cloud(rng: &mut ChaCha8Rng, min: usize, max: usize, max_dim: usize, alpha: f64) -> PointSet {
    loop {
        let n = rng.gen_range(min..=max);
        let dim = rng.gen_range(1..=max_dim);
        let coords: Vec<f64> = (0..n * dim).map(|_| rng.gen::<f64>()).collect();
        let nb = rng.gen_range(1..n);
        let boundary: Vec<usize> = (0..nb).collect();
        if let Ok(ps) = PointSet::from_flat(dim, coords, &boundary, alpha) {
            return ps;
        }
    }
}

fn random_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect()
}

/// Rounding allowance for quantities of magnitude `scale`.
fn slack(scale: f64) -> f64 {
    1e-12 * (1.0 + scale)
}

/// `|x + y|^α ≤ |x|^α + |y|^α`, with equality forced when one side is 0 and,
/// for `α = 1`, along a ray.
fn check_triangle(rng: &mut ChaCha8Rng, dim: usize, alpha: f64) -> (f64, String) {
    let x = random_vector(rng, dim);
    let y = match rng.gen_range(0..4) {
        0 => vec![0.0; dim],
        1 if alpha == 1.0 => {
            let t: f64 = rng.gen_range(0.0..4.0);
            x.iter().map(|c| t * c).collect()
        }
        _ => random_vector(rng, dim),
    };
    let origin = vec![0.0; dim];
    let d = |v: &[f64]| alpha_distance(v, &origin, alpha).expect("alpha already validated");
    let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
    let (lhs, rhs) = (d(&sum), d(&x) + d(&y));
    let mut margin = rhs - lhs + slack(rhs);
    let zero_y = y.iter().all(|&c| c == 0.0);
    if zero_y {
        margin = margin.min(slack(rhs) - (lhs - rhs).abs());
    }
    (margin, format!("x = {x:?}, y = {y:?}, |x+y|^a = {lhs}, |x|^a + |y|^a = {rhs}"))
}

/// `L[−u] = −L[u]` and `L⁺[−u] = −L⁻[u]`, bit for bit.
fn check_duality(u: &ScalarField) -> (f64, String) {
    let neg = u.map(|v| -v).expect("negation keeps values finite");
    for i in 0..u.len() {
        if l_full(&neg, i) != -l_full(u, i) || l_plus(&neg, i) != -l_minus(u, i) {
            return (
                -f64::MIN_POSITIVE,
                format!("point {i}: L[-u] = {}, -L[u] = {}", l_full(&neg, i), -l_full(u, i)),
            );
        }
    }
    (0.0, String::new())
}

/// Largest weight `|x_j − x_i|^{−α}` seen from `i`.
fn max_weight(ps: &PointSet, i: usize) -> f64 {
    (0..ps.len())
        .filter(|&j| j != i)
        .map(|j| ps.distance(i, j).powf(-ps.alpha()))
        .fold(0.0, f64::max)
}

/// `L[u + c] = L[u]` and `L[λu] = λ L[u]` for `λ > 0`, up to rounding.
fn check_translation_scaling(rng: &mut ChaCha8Rng, u: &ScalarField) -> (f64, String) {
    let c: f64 = rng.gen_range(-10.0..10.0);
    let lam: f64 = rng.gen_range(0.0..10.0);
    let shifted = u.map(|v| v + c).expect("finite");
    let scaled = u.map(|v| lam * v).expect("finite");
    let ps = u.point_set();
    let unorm = u.sup_norm();
    let mut worst = (f64::INFINITY, String::new());
    for i in 0..u.len() {
        let base = l_full(u, i);
        let w = max_weight(ps, i);
        let eps = 16.0 * f64::EPSILON;
        let tol_shift = eps * (c.abs() + unorm) * w;
        let tol_scale = eps * lam * unorm * w;
        let m1 = tol_shift - (l_full(&shifted, i) - base).abs();
        let m2 = tol_scale - (l_full(&scaled, i) - lam * base).abs();
        let m = m1.min(m2);
        if m < worst.0 {
            worst = (m, format!("point {i}, c = {c}, lambda = {lam}"));
        }
    }
    worst
}

/// `|L[u + δ|x − x₀|²] − L[u]| ≤ 4|δ| diam^{2−α}`.
fn check_quadratic(rng: &mut ChaCha8Rng, u: &ScalarField) -> (f64, String) {
    let ps = u.point_set();
    let k = rng.gen_range(0..ps.len());
    let delta: f64 = rng.gen_range(-5.0..5.0);
    let x0 = ps.point(k).to_vec();
    let pert: Vec<f64> = u
        .values()
        .iter()
        .zip(ps.points())
        .map(|(v, x)| v + delta * euclidean(x, &x0).powi(2))
        .collect();
    let pert = ScalarField::new(ps.clone(), pert).expect("finite");
    let bound = 4.0 * delta.abs() * ps.diameter().powf(2.0 - ps.alpha());
    let mut worst = (f64::INFINITY, String::new());
    for i in 0..u.len() {
        let (a, b) = (l_full(&pert, i), l_full(u, i));
        let m = bound + slack(a.abs() + b.abs()) - (a - b).abs();
        if m < worst.0 {
            worst = (m, format!("point {i}, x0 = point {k}, delta = {delta}, bound = {bound}"));
        }
    }
    worst
}

/// `|L[u + Δ] − L[u]| ≤ 2^{2−α} ‖Δ‖∞^{1−α} Lip(Δ)^α`, with both norms of `Δ`
/// measured over the point set.
fn check_stability(rng: &mut ChaCha8Rng, u: &ScalarField) -> (f64, String) {
    let ps = u.point_set();
    let amp = 10f64.powf(rng.gen_range(-6.0..0.0));
    let delta: Vec<f64> = (0..ps.len()).map(|_| amp * rng.gen_range(-1.0..1.0)).collect();
    let sup = delta.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let mut lip = 0.0f64;
    for i in 0..ps.len() {
        for j in i + 1..ps.len() {
            lip = lip.max((delta[i] - delta[j]).abs() / ps.distance(i, j));
        }
    }
    let alpha = ps.alpha();
    let bound = 2f64.powf(2.0 - alpha) * sup.powf(1.0 - alpha) * lip.powf(alpha);
    let moved: Vec<f64> = u.values().iter().zip(&delta).map(|(a, b)| a + b).collect();
    let moved = ScalarField::new(ps.clone(), moved).expect("finite");
    let mut worst = (f64::INFINITY, String::new());
    for i in 0..u.len() {
        let (p1, m1) = quotient_extrema(ps, moved.values(), i);
        let (p0, m0) = quotient_extrema(ps, u.values(), i);
        let change = ((p1 + m1) - (p0 + m0)).abs();
        let m = bound + slack(p0.abs() + m0.abs() + p1.abs() + m1.abs()) - change;
        if m < worst.0 {
            worst = (m, format!("point {i}, |delta| = {sup:e}, lip = {lip:e}, bound = {bound:e}"));
        }
    }
    worst
}
