//! `fracinf` command-line front end.
//!
//! Exit codes: 0 success, 2 convergence failure, 3 invariant violation,
//! 4 input error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fracinf::export::{render_solution, write_text, write_trace_csv};
use fracinf::{
    build_grid, export_solution, holder_report, r_star, run_invariant_suite, solve_dirichlet,
    solve_homogeneous_closed_form, solve_obstacle, BoundaryData, Error, Export, Format, GridSpec,
    MonotoneSource, ObstacleConfig, PointSet, PointSetFile, Scheme, SolutionRecord,
    SolutionTable, SolveReport, SolverConfig, Start,
};

const EXIT_CONVERGENCE: u8 = 2;
const EXIT_INVARIANT: u8 = 3;
const EXIT_INPUT: u8 = 4;

#[derive(Parser)]
#[command(name = "fracinf", version, about = "Hölder infinity Laplacian solvers on point sets")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Operator exponent in (0, 1]; overrides the value stored in input files.
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Hölder exponent of the boundary data [default: alpha / 2].
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// Sweep tolerance (sup-norm change between sweeps).
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    max_sweeps: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = SchemeArg::GaussSeidel)]
    scheme: SchemeArg,
    /// Output path [default: stdout].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    GaussSeidel,
    Jacobi,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum StartArg {
    Lower,
    Upper,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Write a tensor grid on a box as a point-set JSON file.
    Grid {
        /// Points per axis, e.g. 21,21.
        #[arg(long, value_delimiter = ',', required = true)]
        counts: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        lower: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        upper: Option<Vec<f64>>,
        /// Boundary data: `const:C` or `linear:C,A1,..,Ad` for C + A·x.
        #[arg(long)]
        boundary: Option<String>,
    },
    /// Solve L[u] = f(u) with the Dirichlet data of the input file.
    Solve {
        #[arg(long)]
        input: PathBuf,
        /// `const:C`, `power:A,P` or `table:PATH`.
        #[arg(long, default_value = "const:0")]
        source: String,
        #[arg(long, value_enum, default_value_t = StartArg::Lower)]
        start: StartArg,
    },
    /// Solve the obstacle problem u ≥ 0 by epsilon continuation.
    SolveObstacle {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "const:0")]
        source: String,
        #[arg(long, default_value_t = 0.1)]
        eps0: f64,
        #[arg(long, default_value_t = 0.5)]
        eps_factor: f64,
        #[arg(long, default_value_t = 20)]
        eps_steps: usize,
        #[arg(long, default_value_t = 1e-8)]
        coincidence_tol: f64,
        /// Continuation trace CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Closed-form solution of L[u] = 0.
    Homogeneous {
        #[arg(long)]
        input: PathBuf,
    },
    /// Barrier constants r0, r★, Ψ(r★) for every pair with beta < alpha.
    BarrierTable {
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,0.75,0.9")]
        alphas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,0.75,0.9")]
        betas: Vec<f64>,
    },
    /// Hölder seminorms of a solution file against the global bound.
    Holder {
        /// Solution CSV (needs --alpha) or JSON.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "const:0")]
        source: String,
        /// Sub-boxes per axis for the local seminorms.
        #[arg(long, default_value_t = 2)]
        cells: usize,
    },
    /// Randomized operator invariant suite.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    let lib = e.chain().find_map(|c| c.downcast_ref::<Error>());
    match lib {
        Some(Error::NotConverged(_) | Error::Divergence { .. }) => EXIT_CONVERGENCE,
        Some(Error::Continuation { source, .. })
            if matches!(**source, Error::NotConverged(_) | Error::Divergence { .. }) =>
        {
            EXIT_CONVERGENCE
        }
        _ => EXIT_INPUT,
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let g = &cli.global;
    match &cli.command {
        Command::Grid {
            counts,
            lower,
            upper,
            boundary,
        } => grid(g, counts, lower.as_deref(), upper.as_deref(), boundary.as_deref()),
        Command::Solve {
            input,
            source,
            start,
        } => solve(g, input, source, *start),
        Command::SolveObstacle {
            input,
            source,
            eps0,
            eps_factor,
            eps_steps,
            coincidence_tol,
            trace,
        } => {
            let cfg = ObstacleConfig {
                eps0: *eps0,
                eps_factor: *eps_factor,
                eps_steps: *eps_steps,
                coincidence_tol: *coincidence_tol,
                inner: solver_config(g, Start::LowerEnvelope),
            };
            obstacle(g, input, source, &cfg, trace.as_deref())
        }
        Command::Homogeneous { input } => homogeneous(g, input),
        Command::BarrierTable { alphas, betas } => barrier_table(g, alphas, betas),
        Command::Holder {
            input,
            source,
            cells,
        } => holder(g, input, source, *cells),
        Command::Verify { seed, trials } => verify(g, *seed, *trials),
    }
}

fn solver_config(g: &Global, start: Start) -> SolverConfig {
    let defaults = SolverConfig::default();
    SolverConfig {
        scheme: match g.scheme {
            SchemeArg::GaussSeidel => Scheme::GaussSeidel,
            SchemeArg::Jacobi => Scheme::Jacobi,
        },
        sweep_tol: g.tol.unwrap_or(defaults.sweep_tol),
        max_sweeps: g.max_sweeps.unwrap_or(defaults.max_sweeps),
        start,
        ..defaults
    }
}

fn format(g: &Global) -> Format {
    match g.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    }
}

/// Point set and boundary data from a point-set file, with CLI overrides.
fn load_problem(g: &Global, input: &Path) -> anyhow::Result<(Arc<PointSet>, BoundaryData)> {
    let file = PointSetFile::read(input)?;
    let mut ps = file.point_set()?;
    if let Some(alpha) = g.alpha {
        ps = ps.with_alpha(alpha)?;
    }
    let beta = g.beta.unwrap_or(ps.alpha() / 2.0);
    let data = file.boundary_data(&ps, beta)?;
    Ok((Arc::new(ps), data))
}

fn emit_solution(g: &Global, what: Export<'_>) -> anyhow::Result<()> {
    match &g.out {
        Some(path) => export_solution(what, path, format(g))?,
        None => write_text(None, &render_solution(what, format(g)))?,
    }
    Ok(())
}

fn summarize(label: &str, report: &SolveReport) {
    let mut line = format!(
        "{label}: {} sweeps, change {:.3e}, residual {:.3e}, {:.3} s",
        report.sweeps_used, report.final_change, report.final_residual, report.wall_time
    );
    if let Some(gap) = report.bracket_gap {
        let _ = write!(line, ", bracket gap {gap:.3e}");
    }
    eprintln!("{line}");
}

type BoundaryFn = Box<dyn Fn(&[f64]) -> f64>;

fn parse_boundary(spec: &str, dim: usize) -> anyhow::Result<BoundaryFn> {
    let (kind, args) = spec
        .split_once(':')
        .ok_or_else(|| anyhow!(Error::Usage(format!("boundary spec {spec:?} needs a kind prefix"))))?;
    let nums = args
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| Error::Usage(format!("bad number in boundary spec {spec:?}")))?;
    match (kind, nums.as_slice()) {
        ("const", [c]) => {
            let c = *c;
            Ok(Box::new(move |_| c))
        }
        ("linear", [c, slope @ ..]) if slope.len() == dim => {
            let (c, slope) = (*c, slope.to_vec());
            Ok(Box::new(move |x| c + x.iter().zip(&slope).map(|(a, b)| a * b).sum::<f64>()))
        }
        _ => Err(Error::Usage(format!(
            "boundary spec {spec:?}: expected const:C or linear:C followed by {dim} slopes"
        ))
        .into()),
    }
}

fn grid(
    g: &Global,
    counts: &[usize],
    lower: Option<&[f64]>,
    upper: Option<&[f64]>,
    boundary: Option<&str>,
) -> anyhow::Result<ExitCode> {
    let alpha = g.alpha.unwrap_or(0.5);
    let mut spec = GridSpec::unit(counts, alpha);
    if let Some(lo) = lower {
        spec.lower = lo.to_vec();
    }
    if let Some(hi) = upper {
        spec.upper = hi.to_vec();
    }
    let ps = build_grid(&spec)?;
    let data = match boundary {
        Some(b) => {
            let f = parse_boundary(b, ps.dim())?;
            let beta = g.beta.unwrap_or(alpha / 2.0);
            Some(BoundaryData::from_fn(&ps, beta, f)?)
        }
        None => None,
    };
    let file = PointSetFile::from_point_set(&ps, data.as_ref());
    match &g.out {
        Some(path) => file.write(path)?,
        None => println!("{}", serde_json::to_string_pretty(&file)?),
    }
    eprintln!(
        "grid: {} points ({} boundary), diameter {:.6}",
        ps.len(),
        ps.boundary().len(),
        ps.diameter()
    );
    Ok(ExitCode::SUCCESS)
}

fn solve(g: &Global, input: &Path, source: &str, start: StartArg) -> anyhow::Result<ExitCode> {
    let (ps, data) = load_problem(g, input)?;
    let f = MonotoneSource::parse(source)?;
    let start = match start {
        StartArg::Lower => Start::LowerEnvelope,
        StartArg::Upper => Start::UpperEnvelope,
        StartArg::Both => Start::Both,
    };
    let (u, report) = solve_dirichlet(&ps, &data, &f, &solver_config(g, start))?;
    summarize("solve", &report);
    emit_solution(
        g,
        Export::Dirichlet {
            u: &u,
            source: &f,
            report: &report,
        },
    )?;
    Ok(ExitCode::SUCCESS)
}

fn obstacle(
    g: &Global,
    input: &Path,
    source: &str,
    cfg: &ObstacleConfig,
    trace: Option<&Path>,
) -> anyhow::Result<ExitCode> {
    let (ps, data) = load_problem(g, input)?;
    let f = MonotoneSource::parse(source)?;
    let res = solve_obstacle(&ps, &data, &f, cfg)?;
    summarize("solve-obstacle", &res.report);
    eprintln!(
        "solve-obstacle: {} continuation steps, {} coincident points",
        res.eps_trace.len(),
        res.coincidence.len()
    );
    if let Some(path) = trace {
        write_trace_csv(&res.eps_trace, path)?;
    }
    emit_solution(g, Export::Obstacle(&res))?;
    Ok(ExitCode::SUCCESS)
}

fn homogeneous(g: &Global, input: &Path) -> anyhow::Result<ExitCode> {
    let (ps, data) = load_problem(g, input)?;
    let u = solve_homogeneous_closed_form(&ps, &data);
    let zero = MonotoneSource::zero();
    let report = SolveReport {
        sweeps_used: 0,
        final_change: 0.0,
        final_residual: fracinf::residual_norm(&u, &zero, ps.interior())?,
        bracket_gap: None,
        wall_time: 0.0,
        lambda_bound: data.sup_norm(),
    };
    emit_solution(
        g,
        Export::Dirichlet {
            u: &u,
            source: &zero,
            report: &report,
        },
    )?;
    Ok(ExitCode::SUCCESS)
}

fn barrier_table(g: &Global, alphas: &[f64], betas: &[f64]) -> anyhow::Result<ExitCode> {
    let mut rows = Vec::new();
    for &a in alphas {
        for &b in betas.iter().filter(|&&b| b < a) {
            rows.push((a, b, r_star(a, b)?));
        }
    }
    let text = match g.format {
        FormatArg::Json => {
            let json: Vec<_> = rows
                .iter()
                .map(|(a, b, c)| serde_json::json!({ "alpha": a, "beta": b, "constants": c }))
                .collect();
            serde_json::to_string_pretty(&json)? + "\n"
        }
        FormatArg::Csv => {
            let mut s = String::from("alpha,beta,r0,r_star,psi_ratio,p_residual\n");
            for (a, b, c) in &rows {
                let _ = writeln!(
                    s,
                    "{a},{b},{:.16e},{:.16e},{:.16e},{:.16e}",
                    c.r0, c.r_star, c.psi_ratio, c.p_residual
                );
            }
            s
        }
    };
    write_text(g.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

fn holder(g: &Global, input: &Path, source: &str, cells: usize) -> anyhow::Result<ExitCode> {
    let is_json = input.extension().is_some_and(|e| e == "json");
    let u = if is_json {
        let record = SolutionRecord::read_json(input)?;
        let u = record.field()?;
        match g.alpha {
            Some(a) => fracinf::ScalarField::new(Arc::new(u.point_set().with_alpha(a)?), record.u)?,
            None => u,
        }
    } else {
        let Some(alpha) = g.alpha else {
            bail!(Error::Usage("CSV solutions do not store alpha; pass --alpha".into()));
        };
        SolutionTable::read_csv(input)?.field(alpha)?
    };
    let ps = u.point_set().clone();
    let beta = g.beta.unwrap_or(ps.alpha() / 2.0);
    let data = BoundaryData::new(&ps, u.boundary_trace(), beta)?;
    let f = MonotoneSource::parse(source)?;
    let report = holder_report(&u, &data, &f, cells)?;
    let text = serde_json::to_string_pretty(&report)? + "\n";
    write_text(g.out.as_deref(), &text)?;
    eprintln!(
        "holder: seminorm {:.6e}, bound {:.6e}, {}",
        report.global_seminorm,
        report.bound,
        if report.satisfied { "satisfied" } else { "VIOLATED" }
    );
    Ok(if report.satisfied {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_INVARIANT)
    })
}

fn verify(g: &Global, seed: u64, trials: usize) -> anyhow::Result<ExitCode> {
    let report = run_invariant_suite(seed, trials)?;
    for fam in &report.families {
        let status = if fam.failed > 0 {
            "FAIL"
        } else if fam.passed == 0 {
            "skipped"
        } else {
            "pass"
        };
        println!(
            "{:<24} {status:<8} passed {:>6}  failed {:>4}  skipped {:>4}  worst margin {:.3e}",
            fam.family.name(),
            fam.passed,
            fam.failed,
            fam.skipped,
            fam.worst_margin
        );
    }
    if report.passed() {
        if let Some(path) = &g.out {
            std::fs::write(path, serde_json::to_string_pretty(&report)? + "\n")
                .with_context(|| format!("writing {}", path.display()))?;
        }
        return Ok(ExitCode::SUCCESS);
    }
    let replay = serde_json::to_string_pretty(&report.failures)? + "\n";
    match &g.out {
        Some(path) => std::fs::write(path, &replay).with_context(|| format!("writing {}", path.display()))?,
        None => eprint!("{replay}"),
    }
    Ok(ExitCode::from(EXIT_INVARIANT))
}
