//! Subcommand logic, kept free of process I/O so it can be tested directly.

use std::path::Path;

use pantograph::fracops::{Grid, SampledFunction};
use pantograph::hypothesis::certify;
use pantograph::mnc::{
    condition_m_diagnostic, contraction_diagnostic, default_epsilons, factor_curves, FunctionFamily,
};
use pantograph::problem::SamplingPlan;
use pantograph::selftest;
use pantograph::solver::{solve, HybridOperator};

use crate::problem_file::ProblemFile;
use crate::report;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    /// Unreadable or malformed input, or an expression failed to evaluate.
    Input = 1,
    /// `check` found a violated hypothesis or no feasible radius.
    Certification = 2,
    /// `solve` hit `max_iter`; the last iterate is still written.
    NotConverged = 3,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// Command-line values that take precedence over the problem file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub grid_points: Option<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub seed: Option<u64>,
}

pub struct Outcome {
    pub exit: Exit,
    /// Main document, for stdout.
    pub stdout: String,
    /// Solution table when `solve` produced one.
    pub table: Option<String>,
}

impl Outcome {
    fn text(exit: Exit, stdout: String) -> Self {
        Outcome {
            exit,
            stdout,
            table: None,
        }
    }
}

/// Reads a problem file and applies overrides. Errors are rendered messages.
pub fn load(path: &Path, overrides: &Overrides) -> Result<ProblemFile, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut pf = ProblemFile::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    if let Some(n) = overrides.grid_points {
        pf.settings.grid_points = n;
    }
    if let Some(tol) = overrides.tol {
        pf.settings.tol = tol;
    }
    if let Some(m) = overrides.max_iter {
        pf.settings.max_iter = m;
    }
    if let Some(seed) = overrides.seed {
        pf.seed = seed;
    }
    pf.settings.check().map_err(|e| e.to_string())?;
    Ok(pf)
}

pub fn check(pf: &ProblemFile) -> Result<Outcome, String> {
    let report = certify(&pf.spec, &SamplingPlan::default(), pf.seed).map_err(|e| e.to_string())?;
    let exit = if report.certified() {
        Exit::Success
    } else {
        Exit::Certification
    };
    Ok(Outcome::text(
        exit,
        report::hypothesis_document(&report, pf.seed),
    ))
}

pub fn solve_problem(pf: &ProblemFile) -> Result<Outcome, String> {
    let res = solve(&pf.spec, &pf.settings).map_err(|e| e.to_string())?;
    let exit = if res.converged() {
        Exit::Success
    } else {
        Exit::NotConverged
    };
    Ok(Outcome {
        exit,
        stdout: report::solve_summary(&res),
        table: Some(report::solution_table(&res.x)),
    })
}

/// Most iterates kept in the diagnosed family, counting x₀ ≡ 0.
pub const DIAGNOSE_ITERATES: usize = 8;

/// Runs up to [`DIAGNOSE_ITERATES`] Picard steps and tabulates modulus
/// curves over the family of iterates.
pub fn diagnose(pf: &ProblemFile) -> Result<Outcome, String> {
    let grid = Grid::new(pf.settings.grid_points).map_err(|e| e.to_string())?;
    let op = HybridOperator::new(&pf.spec, grid).map_err(|e| e.to_string())?;
    let start = SampledFunction::zeros(grid);
    let mut members = vec![start.clone()];
    for next in op
        .iterates(start, pf.settings.damping)
        .take(pf.settings.max_iter.min(DIAGNOSE_ITERATES))
    {
        members.push(next.map_err(|e| e.to_string())?);
    }
    let n_members = members.len();
    let family = FunctionFamily::new(members).map_err(|e| e.to_string())?;
    let eps = default_epsilons(grid);
    let curves = factor_curves(&family, &pf.spec, &eps).map_err(|e| e.to_string())?;
    let contraction = contraction_diagnostic(&family, &pf.spec, &eps).map_err(|e| e.to_string())?;
    let fx = family
        .try_map(|x| op.nonlinear_factor(x))
        .map_err(|e| e.to_string())?;
    let gx = family
        .try_map(|x| op.integral_factor(x))
        .map_err(|e| e.to_string())?;
    let table = condition_m_diagnostic(&fx, &gx, &eps).map_err(|e| e.to_string())?;
    Ok(Outcome::text(
        Exit::Success,
        report::diagnose_document(n_members, &curves, &contraction, &table),
    ))
}

pub fn selftest() -> Outcome {
    let checks = selftest::run();
    let mut out = String::new();
    for c in &checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        out.push_str(&format!("{verdict} {}: {}\n", c.name, c.detail));
    }
    let exit = if checks.iter().all(|c| c.passed) {
        Exit::Success
    } else {
        Exit::Certification
    };
    Outcome::text(exit, out)
}
