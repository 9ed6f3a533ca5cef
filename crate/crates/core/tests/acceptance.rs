//! Acceptance criteria, one line per criterion. Exits non-zero if any fail.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use fracinf::barriers::{p_poly, psi_ratio};
use fracinf::{
    build_grid, holder_bound, holder_seminorm, l_full, monotone_bracket, psi_upper_bound,
    r_star, residual_norm, run_invariant_suite, solve_dirichlet, solve_homogeneous_closed_form,
    solve_obstacle, BarrierSpec, BoundaryData, GridSpec, MonotoneSource, ObstacleConfig,
    PointSet, ScalarField, Scheme, Solver, SolverConfig, Start,
};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn grid(counts: &[usize], alpha: f64) -> Arc<PointSet> {
    Arc::new(build_grid(&GridSpec::unit(counts, alpha)).unwrap())
}

fn all(ps: &PointSet) -> Vec<usize> {
    (0..ps.len()).collect()
}

/// Maximizer of Ψ by golden-section search in `s = ln(r − 1)` after a coarse
/// scan; shares nothing with the root finder.
fn argmax_psi(alpha: f64, beta: f64) -> f64 {
    let f = |s: f64| psi_ratio(1.0 + s.exp(), alpha, beta);
    let mut best_s = -30.0;
    let mut s = -30.0;
    while s < 30.0 {
        if f(s) > f(best_s) {
            best_s = s;
        }
        s += 1e-3;
    }
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (best_s - 2e-3, best_s + 2e-3);
    for _ in 0..200 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    1.0 + (0.5 * (a + b)).exp()
}

fn criterion_1() -> Outcome {
    let timer = Instant::now();
    let levels = [0.25, 0.5, 0.75, 0.9];
    let mut pairs = 0;
    for &a in &levels {
        for &b in levels.iter().filter(|&&b| b < a) {
            let c = r_star(a, b).map_err(|e| e.to_string())?;
            let r0 = (1.0 - b) / (a - b);
            check(p_poly(c.r_star, a, b).abs() <= 1e-10, || {
                format!("|p(r*)| = {:e} at ({a}, {b})", p_poly(c.r_star, a, b))
            })?;
            check(c.r_star > r0, || format!("r* <= r0 at ({a}, {b})"))?;
            check(c.psi_ratio > 0.0 && c.psi_ratio < 1.0, || {
                format!("Psi(r*) = {} at ({a}, {b})", c.psi_ratio)
            })?;
            let oracle = argmax_psi(a, b);
            check((oracle - c.r_star).abs() <= 1e-5 * c.r_star, || {
                format!("r* = {} but the oracle gives {oracle} at ({a}, {b})", c.r_star)
            })?;
            pairs += 1;
        }
    }
    let c = r_star(0.5, 0.25).unwrap();
    check((c.r_star - 11.446).abs() <= 0.01, || format!("r*(0.5, 0.25) = {}", c.r_star))?;
    check((c.psi_ratio - 0.2597).abs() <= 0.001, || {
        format!("Psi(r*)(0.5, 0.25) = {}", c.psi_ratio)
    })?;
    let elapsed = timer.elapsed().as_secs_f64();
    check(elapsed < 1.0, || format!("took {elapsed:.2} s"))?;
    Ok(format!(
        "{pairs} pairs; r*(0.5,0.25) = {:.6}, Psi = {:.6}; {elapsed:.3} s",
        c.r_star, c.psi_ratio
    ))
}

fn criterion_2() -> Outcome {
    let timer = Instant::now();
    let alpha = 0.5;
    let cases = [(grid(&[201], alpha), vec![0.5]), (grid(&[41, 41], alpha), vec![0.5, 0.5])];
    let mut worst = f64::INFINITY;
    let mut checked = 0;
    for (ps, x0) in &cases {
        let apex = ps.find(x0).ok_or("grid does not contain x0")?;
        for beta in [alpha / 2.0, alpha] {
            let spec = BarrierSpec::new(alpha, beta, x0.clone(), 1.0).map_err(|e| e.to_string())?;
            let cone = spec.sample(ps);
            for i in (0..ps.len()).filter(|&i| i != apex) {
                let bound = psi_upper_bound(ps.point(i), &spec, ps.diameter()).unwrap();
                let value = l_full(&cone, i);
                worst = worst.min(bound + 1e-12 - value);
                check(value <= bound + 1e-12, || {
                    format!("L = {value} > bound {bound} at point {i}, beta = {beta}, dim {}", ps.dim())
                })?;
                checked += 1;
            }
        }
    }
    let elapsed = timer.elapsed().as_secs_f64();
    check(elapsed < 10.0, || format!("took {elapsed:.2} s"))?;
    Ok(format!("{checked} points, smallest margin {worst:.3e}; {elapsed:.3} s"))
}

fn criterion_3() -> Outcome {
    let mut worst: f64 = 0.0;
    for x in [0.1, 0.25, 0.5, 0.9] {
        for alpha in [0.3, 0.5, 0.8] {
            let ps = Arc::new(
                PointSet::new(1, &[vec![0.0], vec![x], vec![1.0]], &[0, 2], alpha).unwrap(),
            );
            let g = BoundaryData::new(&ps, vec![0.0, 1.0], alpha / 2.0).unwrap();
            let (u, _) = solve_dirichlet(&ps, &g, &MonotoneSource::zero(), &SolverConfig::default())
                .map_err(|e| e.to_string())?;
            let exact = x.powf(alpha) / (x.powf(alpha) + (1.0 - x).powf(alpha));
            let err = (u.get(1) - exact).abs();
            worst = worst.max(err);
            check(err <= 1e-10, || format!("x = {x}, alpha = {alpha}: error {err:e}"))?;
        }
    }
    Ok(format!("12 instances, worst error {worst:.3e}"))
}

fn line_problem(n: usize) -> (Arc<PointSet>, BoundaryData) {
    let ps = grid(&[n], 0.5);
    let g = BoundaryData::new(&ps, vec![0.0, 1.0], 0.25).unwrap();
    (ps, g)
}

fn criterion_4() -> Outcome {
    let timer = Instant::now();
    let mut gaps = Vec::new();
    for n in [26, 101, 401] {
        let (ps, g) = line_problem(n);
        let (u, _) = solve_dirichlet(&ps, &g, &MonotoneSource::zero(), &SolverConfig::default())
            .map_err(|e| e.to_string())?;
        gaps.push((n, u.sup_distance(&solve_homogeneous_closed_form(&ps, &g))));
    }
    let elapsed = timer.elapsed().as_secs_f64();
    let listing = gaps
        .iter()
        .map(|(n, d)| format!("N={n}: {d:.3e}"))
        .collect::<Vec<_>>()
        .join(", ");
    check(gaps[1].1 < 5e-2, || format!("gap at N=101 too large ({listing})"))?;
    check(gaps.windows(2).all(|w| w[1].1 < w[0].1), || {
        format!("gaps not strictly decreasing ({listing})")
    })?;
    check(elapsed < 60.0, || format!("took {elapsed:.2} s"))?;
    Ok(format!("{listing}; {elapsed:.3} s"))
}

/// Gauss–Seidel from `start`, checking every iterate moves in direction `dir`.
fn monotone_run(
    solver: &Solver,
    start: ScalarField,
    f: &MonotoneSource,
    cfg: &SolverConfig,
    dir: f64,
) -> Result<ScalarField, String> {
    let mut u = start;
    for sweep in 1..=cfg.max_sweeps {
        let before = u.clone();
        let change = solver
            .sweep(&mut u, f, Scheme::GaussSeidel, cfg.bisection_tol)
            .map_err(|e| e.to_string())?;
        for i in 0..u.len() {
            let step = dir * (u.get(i) - before.get(i));
            check(step >= -1e-12, || {
                format!("sweep {sweep}, point {i}: moved {step:e} against direction {dir}")
            })?;
        }
        if change < cfg.sweep_tol && solver.residual_norm(&u, f) < cfg.residual_tol {
            return Ok(u);
        }
    }
    Err("no convergence".into())
}

fn criterion_5_and_6() -> (Outcome, Outcome) {
    let mut instances: Vec<(Arc<PointSet>, BoundaryData, MonotoneSource, &str)> = [26, 101, 401]
        .into_iter()
        .map(|n| {
            let (ps, g) = line_problem(n);
            (ps, g, MonotoneSource::zero(), "f=0")
        })
        .collect();
    let (ps, g) = line_problem(101);
    instances.push((ps, g, MonotoneSource::constant(1.0).unwrap(), "f=1"));
    let ps = grid(&[15, 15], 0.5);
    let g = BoundaryData::from_fn(&ps, 0.25, |x| (x[0] - 0.3).abs() + x[1] * x[1]).unwrap();
    instances.push((ps, g, MonotoneSource::power(2.0, 1.5).unwrap(), "2D f=2t^1.5"));

    let cfg = SolverConfig::default();
    let mut max_gap: f64 = 0.0;
    let mut holder_lines = Vec::new();
    let mut holder_ok = Ok(());
    let bracket = (|| -> Result<(), String> {
        for (ps, g, f, label) in &instances {
            let solver = Solver::new(ps.clone());
            let (lo, hi) = monotone_bracket(ps, g, f).map_err(|e| e.to_string())?;
            let up = monotone_run(&solver, lo.clone(), f, &cfg, 1.0)?;
            let down = monotone_run(&solver, hi.clone(), f, &cfg, -1.0)?;
            for limit in [&up, &down] {
                for i in 0..ps.len() {
                    check(lo.get(i) <= limit.get(i) + 1e-12 && limit.get(i) <= hi.get(i) + 1e-12, || {
                        format!("{label} N={}: limit leaves the envelopes at {i}", ps.len())
                    })?;
                }
            }
            let both = SolverConfig {
                start: Start::Both,
                ..cfg.clone()
            };
            let (u, report) = solve_dirichlet(ps, g, f, &both).map_err(|e| e.to_string())?;
            let gap = report.bracket_gap.unwrap();
            max_gap = max_gap.max(gap);
            check(gap <= 1e-6, || format!("{label} N={}: bracket gap {gap:e}", ps.len()))?;

            for field in [&u, &up, &down] {
                let semi = holder_seminorm(field, 0.25, &all(ps)).unwrap();
                let bound = holder_bound(ps, g, f).unwrap();
                if semi > bound + 1e-9 && holder_ok.is_ok() {
                    holder_ok = Err(format!("{label} N={}: seminorm {semi} > bound {bound}", ps.len()));
                }
                if std::ptr::eq(field, &u) {
                    holder_lines.push(format!("{label} N={}: {semi:.4}/{bound:.4}", ps.len()));
                }
            }
        }
        Ok(())
    })();
    let c5 = bracket.map(|_| format!("{} instances, max bracket gap {max_gap:.3e}", instances.len()));
    let c6 = match (&c5, holder_ok) {
        (Err(e), _) => Err(format!("solves did not complete: {e}")),
        (_, Err(e)) => Err(e),
        _ => Ok(format!("seminorm/bound {}", holder_lines.join(", "))),
    };
    (c5, c6)
}

fn criterion_7() -> Outcome {
    let ps = grid(&[21, 21], 0.5);
    let g = BoundaryData::from_fn(&ps, 0.25, |_| 0.0).unwrap();
    let res = solve_obstacle(&ps, &g, &MonotoneSource::constant(1.0).unwrap(), &ObstacleConfig::default())
        .map_err(|e| e.to_string())?;
    check(res.u.values().iter().all(|&v| v == 0.0), || "u is not identically 0".into())?;
    let r = residual_norm(&res.u, &res.terminal_source, ps.interior()).unwrap();
    check(r <= 1e-12, || format!("residual {r:e}"))?;
    check(res.coincidence == ps.interior(), || {
        format!("coincidence has {} of {} interior points", res.coincidence.len(), ps.interior().len())
    })?;
    Ok(format!("u = 0, residual {r:.1e}, {} coincident points", res.coincidence.len()))
}

fn criterion_8() -> Outcome {
    let (ps, g) = line_problem(101);
    let f = MonotoneSource::constant(0.1).unwrap();
    let res = solve_obstacle(&ps, &g, &f, &ObstacleConfig::default()).map_err(|e| e.to_string())?;
    let changes: Vec<f64> = res.eps_trace.iter().map(|s| s.sup_change).collect();
    let tail = &changes[changes.len().saturating_sub(5)..];
    check(tail.windows(2).all(|w| w[1] <= w[0]), || format!("last changes {tail:?}"))?;
    check(res.u.values().iter().all(|&v| v >= 0.0), || "negative values".into())?;
    let positive: Vec<usize> = ps
        .interior()
        .iter()
        .copied()
        .filter(|&i| res.u.get(i) > 1e-6)
        .collect();
    let r = residual_norm(&res.u, &f, &positive).unwrap();
    check(r <= 1e-6, || format!("residual {r:e} on the positivity set"))?;
    check(res.u.get(0) == 0.0 && res.u.get(100) == 1.0, || "boundary values changed".into())?;
    Ok(format!(
        "{} steps, last change {:.3e}, residual {r:.3e} on {} positive points",
        changes.len(),
        changes.last().unwrap(),
        positive.len()
    ))
}

fn criterion_9() -> Outcome {
    let timer = Instant::now();
    let report = run_invariant_suite(0, 1000).map_err(|e| e.to_string())?;
    let elapsed = timer.elapsed().as_secs_f64();
    let summary = report
        .families
        .iter()
        .map(|f| format!("{} {}/{}", f.family.name(), f.passed, f.passed + f.failed + f.skipped))
        .collect::<Vec<_>>()
        .join(", ");
    check(report.passed(), || format!("failures: {summary}"))?;
    check(elapsed < 30.0, || format!("took {elapsed:.2} s"))?;
    Ok(format!("{summary}; {elapsed:.3} s"))
}

fn square_problem(side: usize) -> (Arc<PointSet>, BoundaryData, MonotoneSource) {
    let ps = grid(&[side, side], 0.5);
    let g = BoundaryData::from_fn(&ps, 0.25, |x| x[0] * (1.0 - x[1]) + 0.5 * x[1]).unwrap();
    (ps, g, MonotoneSource::constant(1.0).unwrap())
}

/// Median wall time of one Gauss–Seidel sweep from the lower envelope.
fn sweep_time(side: usize) -> f64 {
    let (ps, g, f) = square_problem(side);
    let solver = Solver::new(ps.clone());
    let (lo, _) = monotone_bracket(&ps, &g, &f).unwrap();
    let mut times = Vec::new();
    for _ in 0..3 {
        let mut u = lo.clone();
        for _ in 0..3 {
            let t = Instant::now();
            solver.sweep(&mut u, &f, Scheme::GaussSeidel, 1e-12).unwrap();
            times.push(t.elapsed().as_secs_f64());
        }
    }
    times.sort_by(f64::total_cmp);
    times[times.len() / 2]
}

fn criterion_10() -> Outcome {
    let (ps, g, f) = square_problem(50);
    let cfg = SolverConfig {
        sweep_tol: 1e-8,
        ..SolverConfig::default()
    };
    let timer = Instant::now();
    let (_, report) = solve_dirichlet(&ps, &g, &f, &cfg).map_err(|e| e.to_string())?;
    let elapsed = timer.elapsed().as_secs_f64();
    check(elapsed < 60.0, || format!("50x50 solve took {elapsed:.2} s"))?;

    let scaled: Vec<(usize, f64)> = [20, 30, 50]
        .into_iter()
        .map(|side| {
            let n = (side * side) as f64;
            (side * side, sweep_time(side) / (n * n))
        })
        .collect();
    let hi = scaled.iter().map(|s| s.1).fold(0.0, f64::max);
    let lo = scaled.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let listing = scaled
        .iter()
        .map(|(n, c)| format!("N={n}: {:.3e} ns/N^2", c * 1e9))
        .collect::<Vec<_>>()
        .join(", ");
    check(hi / lo <= 2.0, || format!("per-sweep cost/N^2 spread {:.2} ({listing})", hi / lo))?;
    Ok(format!(
        "50x50 in {elapsed:.2} s ({} sweeps); {listing}; spread {:.2}",
        report.sweeps_used,
        hi / lo
    ))
}

fn main() -> ExitCode {
    let (c5, c6) = criterion_5_and_6();
    let results: Vec<(&str, Outcome)> = vec![
        ("1 barrier constants", criterion_1()),
        ("2 barrier inequality", criterion_2()),
        ("3 single interior point", criterion_3()),
        ("4 oracle refinement", criterion_4()),
        ("5 monotone bracketing", c5),
        ("6 Hölder control", c6),
        ("7 obstacle, zero data", criterion_7()),
        ("8 obstacle consistency", criterion_8()),
        ("9 invariant suite", criterion_9()),
        ("10 performance", criterion_10()),
    ];
    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {name}: {detail}");
            }
        }
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
