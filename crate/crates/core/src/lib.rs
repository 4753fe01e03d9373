//! Spectral Galerkin solver for nonlinear elliptic boundary-value problems
//!
//! ```text
//!   -div(A(s) grad u) + gamma(s) u = f(s, u)    in Omega
//! ```
//!
//! on smooth domains `Omega = Phi(B^d)`, `d = 2, 3`. The problem is pulled back
//! to the unit ball, expanded in orthonormal polynomials (ridge polynomials on
//! the disk, Dunkl-Xu products on the ball), integrated with product Gauss rules
//! and solved by damped Newton iteration with continuation in the degree.
//!
//! Module map:
//!
//! - [`quadrature`]: 1D Gauss rules, the disk and ball product rules.
//! - [`basis`]: orthonormal bases on `B^2`/`B^3` and the bubble space.
//! - [`geometry`]: domain maps and pulled-back coefficients.
//! - [`assembly`]: problems, Galerkin systems, boundary-data lifts.
//! - [`solver`]: Newton iteration, degree continuation, error measurement.

pub mod assembly;
pub mod basis;
pub mod geometry;
pub mod quadrature;
pub mod solver;

mod error;

pub use error::{Error, Result};

pub use assembly::{
    BoundaryCondition, DirichletData, GalerkinSystem, NeumannData, Nonlinearity, Problem,
    ProblemBuilder, SolutionOffset,
};
pub use basis::{BasisKind, BasisLabel, BasisSet, Expansion, MultiIndexOrder};
pub use geometry::{DomainMap, Mapping, PulledBackCoefficients};
pub use quadrature::QuadratureRule;
pub use solver::{
    continue_in_degree, newton_solve, EvaluationGrid, InitialGuess, NewtonDiagnostics, SolveConfig,
    SpectralSolution,
};

use std::sync::Arc;

use nalgebra::DMatrix;

/// A point of the reference ball together with its image in the physical domain.
///
/// Coefficient fields and nonlinearities receive both so that data given in
/// physical coordinates (`s`) and data living on the ball (`x`) can share one
/// signature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Site {
    pub dim: usize,
    pub ball: [f64; 3],
    pub phys: [f64; 3],
}

impl Site {
    pub fn new(ball: &[f64], phys: &[f64]) -> Self {
        debug_assert_eq!(ball.len(), phys.len());
        let mut b = [0.0; 3];
        let mut p = [0.0; 3];
        b[..ball.len()].copy_from_slice(ball);
        p[..phys.len()].copy_from_slice(phys);
        Self {
            dim: ball.len(),
            ball: b,
            phys: p,
        }
    }

    /// Ball coordinates `x`.
    pub fn x(&self) -> &[f64] {
        &self.ball[..self.dim]
    }

    /// Physical coordinates `s = Phi(x)`.
    pub fn s(&self) -> &[f64] {
        &self.phys[..self.dim]
    }
}

/// Scalar coefficient field, e.g. `gamma`.
pub type ScalarField = Arc<dyn Fn(&Site) -> f64 + Send + Sync>;

/// Symmetric `d x d` diffusion matrix field `A`.
pub type MatrixField = Arc<dyn Fn(&Site) -> DMatrix<f64> + Send + Sync>;

/// Wraps a closure as a [`ScalarField`].
pub fn scalar_field<F>(f: F) -> ScalarField
where
    F: Fn(&Site) -> f64 + Send + Sync + 'static,
{
    Arc::new(f)
}

/// Constant scalar field.
pub fn constant_field(c: f64) -> ScalarField {
    Arc::new(move |_| c)
}

/// Dimension of the polynomial space of total degree `<= n` in `d` variables.
pub fn polynomial_count(dim: usize, n: usize) -> usize {
    match dim {
        2 => (n + 1) * (n + 2) / 2,
        3 => (n + 1) * (n + 2) * (n + 3) / 6,
        _ => panic!("unsupported dimension {dim}"),
    }
}

/// Volume of the unit ball.
pub fn ball_volume(dim: usize) -> f64 {
    match dim {
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        _ => panic!("unsupported dimension {dim}"),
    }
}
