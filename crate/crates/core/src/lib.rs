//! Solvers for the Hölder infinity Laplacian `L[u] = f(u)` on finite point
//! sets.
//!
//! `L[u](x) = max_{y≠x} (u(y) − u(x))/|y − x|^α + min_{y≠x} (u(y) − u(x))/|y − x|^α`
//! with `y` ranging over the whole point set. The crate covers the Dirichlet
//! problem (monotone sweeps between barrier envelopes), the obstacle problem
//! with `u ≥ 0`, Hölder-seminorm diagnostics and a randomized invariant
//! suite for the operator.

pub mod analysis;
pub mod barriers;
pub mod error;
pub mod export;
pub mod geometry;
pub mod obstacle;
pub mod operator;
pub mod solver;

pub use analysis::{
    check_comparison, holder_bound, holder_report, holder_seminorm, run_invariant_suite,
    run_invariant_suite_with, Comparison, Family, HolderReport, SuiteConfig, SuitePoints,
    SuiteReport,
};
pub use barriers::{
    envelope_constant, psi, psi_upper_bound, r_star, sub_envelope, super_envelope,
    BarrierConstants, BarrierSpec,
};
pub use error::{Error, PartialSolve, Result};
pub use export::{export_solution, Export, Format, SolutionRecord, SolutionTable};
pub use geometry::{alpha_distance, build_grid, BoundaryData, GridSpec, PointSet, PointSetFile};
pub use obstacle::{
    coincidence_set, f_epsilon, solve_obstacle, Approximation, EpsStep, ObstacleConfig,
    ObstacleResult,
};
pub use operator::{l_full, l_minus, l_plus, residual, residual_norm, MonotoneSource, ScalarField};
pub use solver::{
    local_update, monotone_bracket, solve_dirichlet, solve_homogeneous_closed_form, sweep, Scheme,
    SolveReport, Solver, SolverConfig, Start,
};
