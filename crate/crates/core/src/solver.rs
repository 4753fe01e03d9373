//! Damped Newton iteration on the Galerkin system, continuation in the degree,
//! and max-norm error measurement on fixed grids.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DVector;
use thiserror::Error;

use crate::assembly::{
    lift_dirichlet, lift_neumann, BoundaryCondition, GalerkinSystem, Problem, SolutionOffset,
};
use crate::basis::{BasisKind, BasisSet, Expansion};
use crate::geometry::DomainMap;
use crate::{Error, Site};

#[derive(Clone, Debug, PartialEq)]
pub enum InitialGuess {
    Zeros,
    /// Every coefficient equal to the given value.
    Constant(f64),
    /// Explicit coefficients; zero-padded or truncated to the basis size.
    Coefficients(Vec<f64>),
}

impl InitialGuess {
    pub fn coefficients(&self, len: usize) -> Vec<f64> {
        match self {
            InitialGuess::Zeros => vec![0.0; len],
            InitialGuess::Constant(c) => vec![*c; len],
            InitialGuess::Coefficients(v) => {
                let mut out = v.clone();
                out.resize(len, 0.0);
                out
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveConfig {
    pub n_start: usize,
    pub n_end: usize,
    /// Threshold on the residual max-norm, relative to
    /// `max(1, |K|_inf |alpha|_inf + |load|_inf)`.
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Step reduction factor of the backtracking line search.
    pub damping: f64,
    pub max_halvings: usize,
    /// Guess for the first degree; later degrees continue from the previous one.
    pub initial_guess: InitialGuess,
    /// Quadrature orders added on top of the default coupling to the degree.
    pub extra_quadrature: usize,
    /// Degree of the auxiliary solve for nonzero Neumann data (default `n_end`).
    pub neumann_lift_degree: Option<usize>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            n_start: 1,
            n_end: 10,
            newton_tol: 1e-12,
            max_newton: 50,
            damping: 0.5,
            max_halvings: 20,
            initial_guess: InitialGuess::Zeros,
            extra_quadrature: 0,
            neumann_lift_degree: None,
        }
    }
}

impl SolveConfig {
    pub fn degrees(n_start: usize, n_end: usize) -> Self {
        Self {
            n_start,
            n_end,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.n_start < 1 || self.n_end < self.n_start {
            return Err(Error::InvalidParameter(format!(
                "degree range {}..={} must satisfy 1 <= n_start <= n_end",
                self.n_start, self.n_end
            )));
        }
        if !(self.newton_tol > 0.0)
            || !(self.damping > 0.0 && self.damping < 1.0)
            || self.max_newton == 0
        {
            return Err(Error::InvalidParameter(
                "newton_tol must be positive, damping in (0, 1) and max_newton at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Per-solve Newton record.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NewtonDiagnostics {
    pub iterations: usize,
    /// Residual max-norms, starting with the initial guess.
    pub residual_history: Vec<f64>,
    /// Euclidean residual norms (the line-search merit), starting with the guess.
    pub merit_history: Vec<f64>,
    /// Accepted step lengths.
    pub step_lengths: Vec<f64>,
    pub final_residual: f64,
}

/// Coefficients over a basis on the ball plus known offsets, `u = sum alpha_l psi_l + offsets`.
#[derive(Clone, Debug)]
pub struct SpectralSolution {
    pub expansion: Expansion,
    pub offsets: Vec<SolutionOffset>,
    pub map: DomainMap,
    pub problem_descriptor: String,
    pub diagnostics: NewtonDiagnostics,
}

impl SpectralSolution {
    pub fn degree(&self) -> usize {
        self.expansion.basis.degree()
    }

    pub fn dim(&self) -> usize {
        self.expansion.basis.dim()
    }

    pub fn kind(&self) -> BasisKind {
        self.expansion.basis.kind()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.expansion.coefficients
    }

    /// `u~(x)` at a ball point.
    pub fn eval_ball(&self, x: &[f64]) -> f64 {
        let mut v = self.expansion.eval(x);
        if !self.offsets.is_empty() {
            let site = self.map.site(x);
            v += self.offsets.iter().map(|o| o.eval(&site)).sum::<f64>();
        }
        v
    }

    /// `u(s)` at a physical point, when the map has a closed-form inverse.
    pub fn eval_physical(&self, s: &[f64]) -> Option<f64> {
        self.map.inverse(s).map(|x| self.eval_ball(&x))
    }

    /// Coefficients zero-padded to the basis of degree `n >= self.degree()`.
    pub fn padded_coefficients(&self, n: usize) -> Vec<f64> {
        let mut c = self.expansion.coefficients.clone();
        c.resize(crate::polynomial_count(self.dim(), n), 0.0);
        c
    }
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("Newton did not converge at degree {degree} after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        degree: usize,
        iterations: usize,
        residual: f64,
        best: Box<SpectralSolution>,
    },
    #[error("singular Newton matrix at degree {degree}, iteration {iteration}")]
    SingularNewtonMatrix { degree: usize, iteration: usize },
    #[error("degree {degree}: {source}")]
    Assembly {
        degree: usize,
        #[source]
        source: Error,
    },
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn matrix_inf_norm(m: &nalgebra::DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Residual and the convergence threshold at `alpha`. The threshold is a
/// normwise backward-error bound, `tol * max(1, |K|_inf |alpha|_inf + |b|_inf)`.
fn evaluate(
    system: &GalerkinSystem,
    k_norm: f64,
    alpha: &DVector<f64>,
    tol: f64,
) -> Result<(DVector<f64>, f64), Error> {
    let load = system.load(alpha.as_slice())?;
    let scale = (k_norm * inf_norm(alpha) + inf_norm(&load)).max(1.0);
    Ok((system.stiffness() * alpha - load, tol * scale))
}

/// Solves `stiffness * alpha = load(alpha)` from `guess`.
///
/// Each step solves `(stiffness - load_jacobian(alpha)) delta = -residual(alpha)`
/// and backtracks on the Euclidean residual norm. Converged when
/// `|residual|_inf <= newton_tol * max(1, |K|_inf |alpha|_inf + |load|_inf)`.
pub fn newton_solve(
    system: &GalerkinSystem,
    guess: &[f64],
    config: &SolveConfig,
) -> Result<SpectralSolution, SolverError> {
    newton_iterate(system, guess, config, 0)
}

/// Newton with at least `min_steps` steps, even if the guess already passes.
fn newton_iterate(
    system: &GalerkinSystem,
    guess: &[f64],
    config: &SolveConfig,
    min_steps: usize,
) -> Result<SpectralSolution, SolverError> {
    let degree = system.degree();
    let wrap = |source| SolverError::Assembly { degree, source };
    if guess.len() != system.len() {
        return Err(wrap(Error::LengthMismatch {
            expected: system.len(),
            got: guess.len(),
        }));
    }
    let mut alpha = DVector::from_column_slice(guess);
    let k_norm = matrix_inf_norm(system.stiffness());
    let (mut residual, mut threshold) =
        evaluate(system, k_norm, &alpha, config.newton_tol).map_err(wrap)?;
    let mut diag = NewtonDiagnostics {
        residual_history: vec![inf_norm(&residual)],
        merit_history: vec![residual.norm()],
        ..Default::default()
    };
    let finish = |alpha: DVector<f64>, mut diag: NewtonDiagnostics| {
        diag.final_residual = *diag.residual_history.last().unwrap();
        SpectralSolution {
            expansion: Expansion {
                basis: system.basis().clone(),
                coefficients: alpha.as_slice().to_vec(),
            },
            offsets: system.problem().offsets.clone(),
            map: system.problem().map.clone(),
            problem_descriptor: system.problem().descriptor.clone(),
            diagnostics: diag,
        }
    };

    while diag.iterations < min_steps || inf_norm(&residual) > threshold {
        if diag.iterations >= config.max_newton {
            let residual = inf_norm(&residual);
            return Err(SolverError::NonConvergence {
                degree,
                iterations: diag.iterations,
                residual,
                best: Box::new(finish(alpha, diag)),
            });
        }
        diag.iterations += 1;
        let jac = system.stiffness() - system.load_jacobian(alpha.as_slice()).map_err(wrap)?;
        let delta = jac
            .lu()
            .solve(&(-&residual))
            .filter(|d| d.iter().all(|v| v.is_finite()))
            .ok_or(SolverError::SingularNewtonMatrix {
                degree,
                iteration: diag.iterations,
            })?;

        let merit = residual.norm();
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=config.max_halvings {
            let trial = &alpha + step * &delta;
            match evaluate(system, k_norm, &trial, config.newton_tol) {
                Ok((r, t)) if r.norm() <= (1.0 - 1e-4 * step) * merit || inf_norm(&r) <= t => {
                    accepted = Some((trial, r, t));
                    break;
                }
                // a non-finite trial value counts as a failed step
                Ok(_) | Err(Error::NonFinite { .. }) => step *= config.damping,
                Err(e) => return Err(wrap(e)),
            }
        }
        match accepted {
            Some((a, r, t)) => {
                alpha = a;
                residual = r;
                threshold = t;
                diag.step_lengths.push(step);
                diag.residual_history.push(inf_norm(&residual));
                diag.merit_history.push(residual.norm());
            }
            None => {
                let residual = inf_norm(&residual);
                return Err(SolverError::NonConvergence {
                    degree,
                    iterations: diag.iterations,
                    residual,
                    best: Box::new(finish(alpha, diag)),
                });
            }
        }
    }
    Ok(finish(alpha, diag))
}

/// Failure inside a continuation run; solutions for the earlier degrees are kept.
#[derive(Debug, Error)]
#[error("continuation failed at degree {degree}: {error}")]
pub struct ContinuationFailure {
    pub degree: usize,
    #[source]
    pub error: SolverError,
    pub completed: Vec<SpectralSolution>,
}

/// Lifts nonhomogeneous boundary data: Dirichlet through the supplied
/// extension, Neumann through an auxiliary solve of degree `neumann_degree`.
pub fn homogenize(problem: &Problem, neumann_degree: usize) -> Result<Problem, Error> {
    match problem.bc {
        BoundaryCondition::Dirichlet(_) => lift_dirichlet(problem),
        BoundaryCondition::Neumann(_) => Ok(lift_neumann(problem, neumann_degree)?.problem),
        _ => Ok(problem.clone()),
    }
}

/// Solves for `n = n_start..=n_end`, seeding each degree with the previous
/// solution padded by zeros.
pub fn continue_in_degree(
    problem: &Problem,
    config: &SolveConfig,
) -> Result<Vec<SpectralSolution>, ContinuationFailure> {
    let fail = |degree, error, completed| ContinuationFailure {
        degree,
        error,
        completed,
    };
    if let Err(e) = config.validate() {
        return Err(fail(
            config.n_start,
            SolverError::Assembly {
                degree: config.n_start,
                source: e,
            },
            vec![],
        ));
    }
    let problem =
        homogenize(problem, config.neumann_lift_degree.unwrap_or(config.n_end)).map_err(|e| {
            fail(
                config.n_start,
                SolverError::Assembly {
                    degree: config.n_start,
                    source: e,
                },
                vec![],
            )
        })?;
    let mut out: Vec<SpectralSolution> = Vec::new();
    for n in config.n_start..=config.n_end {
        let system = match GalerkinSystem::for_degree(problem.clone(), n, config.extra_quadrature) {
            Ok(s) => s,
            Err(e) => {
                return Err(fail(
                    n,
                    SolverError::Assembly {
                        degree: n,
                        source: e,
                    },
                    out,
                ))
            }
        };
        let guess = match out.last() {
            Some(prev) => prev.padded_coefficients(n),
            None => config.initial_guess.coefficients(system.len()),
        };
        // A padded guess can pass the normwise test with the new top-degree
        // block still zero, so every degree takes at least one step.
        match newton_iterate(&system, &guess, config, 1) {
            Ok(sol) => out.push(sol),
            Err(e) => return Err(fail(n, e, out)),
        }
    }
    Ok(out)
}

/// Evaluation points on the closed ball: a polar (2D) or spherical (3D)
/// tensor grid including the origin and the boundary.
#[derive(Clone, Debug)]
pub struct EvaluationGrid {
    dim: usize,
    points: Vec<f64>,
}

impl EvaluationGrid {
    /// 51 radii x 101 angles on the disk, 21 radii x 41 azimuths x 21 polar
    /// angles on the ball.
    pub fn standard(dim: usize) -> Self {
        match dim {
            2 => Self::tensor(2, 51, 101, 0),
            _ => Self::tensor(3, 21, 41, 21),
        }
    }

    /// Smaller grid with `radii` radii and proportional angular resolution.
    pub fn polar(dim: usize, radii: usize) -> Self {
        match dim {
            2 => Self::tensor(2, radii, 2 * radii + 1, 0),
            _ => Self::tensor(3, radii, 2 * radii + 1, radii),
        }
    }

    /// Radii `i/(nr-1)`, azimuths `2 pi j / na`, polar angles `pi k/(np-1)`.
    fn tensor(dim: usize, nr: usize, na: usize, np: usize) -> Self {
        let mut points = Vec::new();
        for i in 0..nr {
            let r = i as f64 / (nr - 1) as f64;
            for j in 0..na {
                let (st, ct) = (2.0 * PI * j as f64 / na as f64).sin_cos();
                if dim == 2 {
                    points.extend_from_slice(&[r * ct, r * st]);
                } else {
                    for k in 0..np {
                        let (sp, cp) = (PI * k as f64 / (np - 1) as f64).sin_cos();
                        points.extend_from_slice(&[r * sp * ct, r * sp * st, r * cp]);
                    }
                }
            }
        }
        Self { dim, points }
    }

    pub fn from_points(dim: usize, points: Vec<f64>) -> Self {
        assert_eq!(points.len() % dim, 0);
        Self { dim, points }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }
}

fn tabulate(solution: &SpectralSolution, grid: &EvaluationGrid) -> Vec<f64> {
    grid.points().map(|x| solution.eval_ball(x)).collect()
}

/// `max |u_n - u_ref|` over the grid for every solution.
pub fn reference_error(
    solutions: &[SpectralSolution],
    reference: &SpectralSolution,
    grid: &EvaluationGrid,
) -> Result<Vec<f64>, Error> {
    let reference_values = tabulate(reference, grid);
    solutions
        .iter()
        .map(|s| {
            if s.dim() != reference.dim()
                || s.map.descriptor() != reference.map.descriptor()
                || s.problem_descriptor != reference.problem_descriptor
            {
                return Err(Error::Mismatch(format!(
                    "solution ({}, {}) vs reference ({}, {})",
                    s.map.descriptor(),
                    s.problem_descriptor,
                    reference.map.descriptor(),
                    reference.problem_descriptor
                )));
            }
            if s.degree() > reference.degree() {
                return Err(Error::Mismatch(format!(
                    "degree {} exceeds reference degree {}",
                    s.degree(),
                    reference.degree()
                )));
            }
            Ok(tabulate(s, grid)
                .iter()
                .zip(&reference_values)
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
        })
        .collect()
}

/// `max |u_n - u|` over the grid against a known solution given on sites.
pub fn truth_error<F: Fn(&Site) -> f64>(
    solution: &SpectralSolution,
    truth: F,
    grid: &EvaluationGrid,
) -> f64 {
    grid.points()
        .map(|x| (solution.eval_ball(x) - truth(&solution.map.site(x))).abs())
        .fold(0.0, f64::max)
}

/// Reconstructs a solution from stored coefficients (used when reading files).
pub fn solution_from_coefficients(
    map: DomainMap,
    kind: BasisKind,
    degree: usize,
    coefficients: Vec<f64>,
    offsets: Vec<SolutionOffset>,
    problem_descriptor: String,
) -> Result<SpectralSolution, Error> {
    let basis = Arc::new(BasisSet::with_kind(map.dim(), degree, kind)?);
    Ok(SpectralSolution {
        expansion: Expansion::new(basis, coefficients)?,
        offsets,
        map,
        problem_descriptor,
        diagnostics: NewtonDiagnostics::default(),
    })
}
