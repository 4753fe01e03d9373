//! Convergence studies: continuation over the degree, max-norm errors against
//! an analytic truth or a reference solution, and the report files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use spectral_ball::solver::{reference_error, truth_error};
use spectral_ball::{continue_in_degree, polynomial_count, EvaluationGrid, SpectralSolution};

use crate::config::{ConfigError, MapConfig, ProblemConfig, StudyPlan};
use crate::persistence::write_solution;
use crate::problem::{build_problem, BuiltProblem};

#[derive(Clone, Debug, PartialEq)]
pub struct StudyRow {
    pub n: usize,
    pub count: usize,
    pub newton_iters: usize,
    pub residual_inf: f64,
    pub max_error: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct StudyReport {
    pub name: String,
    pub plan: StudyPlan,
    /// How errors were measured.
    pub error_source: String,
    pub rows: Vec<StudyRow>,
    /// Every computed solution, reference included.
    pub solutions: Vec<SpectralSolution>,
    /// Solver failure that cut the run short.
    pub failure: Option<String>,
    pub map_descriptor: String,
}

impl StudyReport {
    pub fn solution(&self, n: usize) -> Option<&SpectralSolution> {
        self.solutions.iter().find(|s| s.degree() == n)
    }

    pub fn errors(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.max_error).collect()
    }
}

pub fn run_study(cfg: &ProblemConfig) -> Result<StudyReport, ConfigError> {
    let plan = cfg.plan()?;
    let built = build_problem(cfg)?;
    Ok(run_built(cfg.name(), &built, plan))
}

pub fn run_built(name: String, built: &BuiltProblem, plan: StudyPlan) -> StudyReport {
    let (solutions, failure) = match continue_in_degree(&built.problem, &plan.solve) {
        Ok(s) => (s, None),
        Err(e) => {
            let msg = e.to_string();
            (e.completed, Some(msg))
        }
    };
    let grid = EvaluationGrid::standard(built.dim);
    let reported: Vec<&SpectralSolution> = solutions
        .iter()
        .filter(|s| (plan.report_from..=plan.report_to).contains(&s.degree()))
        .collect();
    let reference = plan
        .reference
        .and_then(|r| solutions.iter().find(|s| s.degree() == r));
    let (errors, error_source): (Vec<Option<f64>>, String) = if built.truth.is_some() {
        let errs = reported
            .iter()
            .map(|s| Some(truth_error(s, |site| built.truth_at(site).unwrap(), &grid)))
            .collect();
        (errs, "analytic solution".into())
    } else if let Some(r) = reference {
        let owned: Vec<SpectralSolution> = reported.iter().map(|s| (*s).clone()).collect();
        let errs = reference_error(&owned, r, &grid)
            .map(|v| v.into_iter().map(Some).collect())
            .unwrap_or_else(|_| vec![None; owned.len()]);
        (errs, format!("reference solution n = {}", r.degree()))
    } else {
        (vec![None; reported.len()], "none".into())
    };
    let rows = reported
        .iter()
        .zip(errors)
        .map(|(s, max_error)| StudyRow {
            n: s.degree(),
            count: polynomial_count(built.dim, s.degree()),
            newton_iters: s.diagnostics.iterations,
            residual_inf: s.diagnostics.final_residual,
            max_error,
        })
        .collect();
    StudyReport {
        name,
        plan,
        error_source,
        rows,
        map_descriptor: built.problem.map.descriptor(),
        solutions,
        failure,
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|e| format!("{e:.6e}"))
        .unwrap_or_else(|| "nan".into())
}

pub const CSV_HEADER: &str = "n,N_n,newton_iters,residual_inf,max_error";

pub fn format_csv(report: &StudyReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{:.6e},{}",
            r.n,
            r.count,
            r.newton_iters,
            r.residual_inf,
            fmt_opt(r.max_error)
        );
    }
    out
}

pub fn format_table(report: &StudyReport) -> String {
    let s = &report.plan.solve;
    let mut out = String::new();
    let _ = writeln!(out, "problem: {}", report.name);
    let _ = writeln!(out, "map: {}", report.map_descriptor);
    let _ = writeln!(
        out,
        "solver: newton_tol = {:e} (relative), max_newton = {}, damping = {}, max_halvings = {}, extra_quadrature = {}",
        s.newton_tol, s.max_newton, s.damping, s.max_halvings, s.extra_quadrature
    );
    let _ = writeln!(
        out,
        "continuation: n = {}..{}, initial guess {:?}",
        s.n_start, s.n_end, s.initial_guess
    );
    let _ = writeln!(
        out,
        "errors: max over the standard grid, against {}",
        report.error_source
    );
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:>4}  {:>6}  {:>6}  {:>13}  {:>13}",
        "n", "N_n", "iters", "residual_inf", "max_error"
    );
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{:>4}  {:>6}  {:>6}  {:>13.6e}  {:>13}",
            r.n,
            r.count,
            r.newton_iters,
            r.residual_inf,
            fmt_opt(r.max_error)
        );
    }
    if let Some(f) = &report.failure {
        let _ = writeln!(out);
        let _ = writeln!(out, "FAILED: {f}");
    }
    out
}

/// `n log10(error)` lines for plotting.
pub fn format_plot(report: &StudyReport) -> String {
    let mut out = String::from("# n log10(max_error)\n");
    for r in &report.rows {
        if let Some(e) = r.max_error.filter(|e| *e > 0.0) {
            let _ = writeln!(out, "{} {:.6}", r.n, e.log10());
        }
    }
    out
}

/// Writes the table, CSV, plot data and the highest reported solution.
pub fn write_outputs(
    report: &StudyReport,
    cfg: &ProblemConfig,
    base: &Path,
) -> std::io::Result<Vec<PathBuf>> {
    let dir = base.join(cfg.output.dir.clone().unwrap_or_else(|| PathBuf::from(".")));
    std::fs::create_dir_all(&dir)?;
    let stem = cfg
        .output
        .stem
        .clone()
        .unwrap_or_else(|| report.name.clone());
    let mut written = Vec::new();
    let mut put = |ext: &str, text: String| -> std::io::Result<()> {
        let p = dir.join(format!("{stem}.{ext}"));
        std::fs::write(&p, text)?;
        written.push(p);
        Ok(())
    };
    put("txt", format_table(report))?;
    put("csv", format_csv(report))?;
    if cfg.output.plot.unwrap_or(true) {
        put("dat", format_plot(report))?;
    }
    if cfg.output.solution.unwrap_or(true) {
        if let Some(sol) = report.rows.last().and_then(|r| report.solution(r.n)) {
            let map = cfg.map.clone().unwrap_or(MapConfig::Identity);
            put(
                "sol",
                write_solution(sol, &map).map_err(std::io::Error::other)?,
            )?;
        }
    }
    Ok(written)
}
