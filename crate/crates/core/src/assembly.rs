//! Problem description and assembly of the nonlinear Galerkin system.
//!
//! For coefficients `alpha` over a basis `{psi_l}` on the ball the system is
//!
//! ```text
//! sum_k alpha_k Q[ det J a~_ij d_j psi_k d_i psi_l + gamma~ psi_k psi_l ]
//!     = Q[ f~(x, sum_k alpha_k psi_k) psi_l ]
//! ```
//!
//! with `Q` the quadrature rule. Dirichlet problems use the bubble basis,
//! Neumann problems the plain basis; both reduce to the same integrals.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::basis::{BasisKind, BasisSet, Expansion};
use crate::geometry::{pull_back, DomainMap, PulledBackCoefficients};
use crate::quadrature::{self, QuadratureRule, SphereRule};
use crate::{constant_field, Error, MatrixField, Result, ScalarField, Site};

type ScalarFn2 = Arc<dyn Fn(&Site, f64) -> f64 + Send + Sync>;

/// Right-hand side `f(s, z)` together with `df/dz`.
#[derive(Clone)]
pub struct Nonlinearity {
    value: ScalarFn2,
    dz: ScalarFn2,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Nonlinearity")
    }
}

impl Nonlinearity {
    pub fn new<F, G>(value: F, dz: G) -> Self
    where
        F: Fn(&Site, f64) -> f64 + Send + Sync + 'static,
        G: Fn(&Site, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            value: Arc::new(value),
            dz: Arc::new(dz),
        }
    }

    /// `f(s, z) = source(s)`.
    pub fn source(source: ScalarField) -> Self {
        Self::new(move |s, _| source(s), |_, _| 0.0)
    }

    pub fn zero() -> Self {
        Self::new(|_, _| 0.0, |_, _| 0.0)
    }

    pub fn value(&self, site: &Site, z: f64) -> f64 {
        (self.value)(site, z)
    }

    pub fn dz(&self, site: &Site, z: f64) -> f64 {
        (self.dz)(site, z)
    }

    /// Compares `df/dz` with central differences (`h = 1e-6 max(1, |z|)`).
    /// Returns the worst relative deviation.
    pub fn derivative_deviation(&self, samples: &[(Site, f64)]) -> f64 {
        samples
            .iter()
            .map(|(site, z)| {
                let h = 1e-6 * z.abs().max(1.0);
                let fd = (self.value(site, z + h) - self.value(site, z - h)) / (2.0 * h);
                let an = self.dz(site, *z);
                (fd - an).abs() / an.abs().max(1.0)
            })
            .fold(0.0, f64::max)
    }
}

/// Nonhomogeneous Dirichlet data `u = g` with an extension `G` of `g` into
/// `Omega` and the function `L G`.
#[derive(Clone)]
pub struct DirichletData {
    pub g: ScalarField,
    pub extension: ScalarField,
    pub l_extension: Option<ScalarField>,
    /// Persistable description of `G`, e.g. its expression text.
    pub descriptor: String,
}

/// Nonzero Neumann data `du/dn = g` on the physical boundary.
#[derive(Clone)]
pub struct NeumannData {
    pub g: ScalarField,
    pub descriptor: String,
}

#[derive(Clone)]
pub enum BoundaryCondition {
    DirichletZero,
    Dirichlet(DirichletData),
    NeumannZero,
    Neumann(NeumannData),
}

impl BoundaryCondition {
    pub fn name(&self) -> &'static str {
        match self {
            BoundaryCondition::DirichletZero => "dirichlet_zero",
            BoundaryCondition::Dirichlet(_) => "dirichlet",
            BoundaryCondition::NeumannZero => "neumann_zero",
            BoundaryCondition::Neumann(_) => "neumann",
        }
    }

    pub fn is_dirichlet(&self) -> bool {
        matches!(
            self,
            BoundaryCondition::DirichletZero | BoundaryCondition::Dirichlet(_)
        )
    }

    pub fn is_homogeneous(&self) -> bool {
        matches!(
            self,
            BoundaryCondition::DirichletZero | BoundaryCondition::NeumannZero
        )
    }
}

impl fmt::Debug for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A known function added to the computed solution: `u = u_n + offset`.
#[derive(Clone)]
pub enum SolutionOffset {
    /// Analytic field, typically a Dirichlet extension `G`.
    Field {
        descriptor: String,
        field: ScalarField,
    },
    /// Spectral expansion on the ball, typically a Neumann lift `v*`.
    Spectral(Expansion),
}

impl SolutionOffset {
    pub fn eval(&self, site: &Site) -> f64 {
        match self {
            SolutionOffset::Field { field, .. } => field(site),
            SolutionOffset::Spectral(e) => e.eval(site.x()),
        }
    }
}

impl fmt::Debug for SolutionOffset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolutionOffset::Field { descriptor, .. } => write!(f, "Field({descriptor})"),
            SolutionOffset::Spectral(e) => write!(f, "Spectral(n={})", e.basis.degree()),
        }
    }
}

/// `-div(A grad u) + gamma u = f(s, u)` on `Phi(B^d)` with a boundary condition.
#[derive(Clone)]
pub struct Problem {
    pub map: DomainMap,
    /// `A`; `None` is the identity.
    pub diffusion: Option<MatrixField>,
    pub gamma: ScalarField,
    pub f: Nonlinearity,
    pub bc: BoundaryCondition,
    pub offsets: Vec<SolutionOffset>,
    pub descriptor: String,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("map", &self.map)
            .field("bc", &self.bc)
            .field("descriptor", &self.descriptor)
            .finish()
    }
}

impl Problem {
    pub fn builder(map: DomainMap) -> ProblemBuilder {
        ProblemBuilder::new(map)
    }

    pub fn dim(&self) -> usize {
        self.map.dim()
    }

    /// Bubble basis for Dirichlet conditions, plain basis for Neumann.
    pub fn basis_kind(&self) -> BasisKind {
        if self.bc.is_dirichlet() {
            BasisKind::Bubble
        } else {
            BasisKind::Plain
        }
    }

    pub fn pulled_back(&self) -> PulledBackCoefficients {
        pull_back(
            &self.map,
            self.diffusion.clone(),
            self.gamma.clone(),
            self.f.clone(),
        )
    }

    /// Sum of the recorded offsets at a site.
    pub fn offset(&self, site: &Site) -> f64 {
        self.offsets.iter().map(|o| o.eval(site)).sum()
    }
}

/// Builder for [`Problem`]; defaults are `A = I`, `gamma = 0`, `f = 0`,
/// zero Dirichlet data.
pub struct ProblemBuilder {
    map: DomainMap,
    diffusion: Option<MatrixField>,
    gamma: ScalarField,
    f: Nonlinearity,
    bc: BoundaryCondition,
    descriptor: String,
}

impl ProblemBuilder {
    pub fn new(map: DomainMap) -> Self {
        Self {
            map,
            diffusion: None,
            gamma: constant_field(0.0),
            f: Nonlinearity::zero(),
            bc: BoundaryCondition::DirichletZero,
            descriptor: String::new(),
        }
    }

    pub fn diffusion(mut self, a: MatrixField) -> Self {
        self.diffusion = Some(a);
        self
    }

    pub fn gamma(mut self, gamma: ScalarField) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn nonlinearity(mut self, f: Nonlinearity) -> Self {
        self.f = f;
        self
    }

    pub fn boundary(mut self, bc: BoundaryCondition) -> Self {
        self.bc = bc;
        self
    }

    pub fn descriptor(mut self, d: impl Into<String>) -> Self {
        self.descriptor = d.into();
        self
    }

    /// Validates orientation of the map and, for Neumann conditions, `min gamma > 0`
    /// on a polar sample grid.
    pub fn build(self) -> Result<Problem> {
        self.map.check_orientation(12)?;
        if !self.bc.is_dirichlet() {
            let grid = crate::solver::EvaluationGrid::polar(self.map.dim(), 12);
            let min = grid
                .points()
                .map(|x| (self.gamma)(&self.map.site(x)))
                .fold(f64::INFINITY, f64::min);
            if !(min > 0.0) {
                return Err(Error::NonPositiveGamma(min));
            }
        }
        Ok(Problem {
            map: self.map,
            diffusion: self.diffusion,
            gamma: self.gamma,
            f: self.f,
            bc: self.bc,
            offsets: Vec::new(),
            descriptor: self.descriptor,
        })
    }
}

/// Per-node data tabulated once per (problem, basis, rule).
struct NodeTable {
    sites: Vec<Site>,
    /// quadrature weight times `det J`
    wdet: Vec<f64>,
    /// quadrature weight times `det J a~_ij`, one vector per `(i, j)`
    wa: Vec<Vec<f64>>,
    /// quadrature weight times `gamma~`
    wgamma: Vec<f64>,
    values: DMatrix<f64>,
    grads: Vec<DMatrix<f64>>,
}

impl NodeTable {
    fn new(problem: &Problem, basis: &BasisSet, rule: &QuadratureRule) -> Result<Self> {
        let d = basis.dim();
        if problem.dim() != d || rule.dim() != d {
            return Err(Error::Mismatch(format!(
                "problem dim {}, basis dim {}, rule dim {}",
                problem.dim(),
                d,
                rule.dim()
            )));
        }
        let p = rule.len();
        let n = basis.len();
        let coeffs = problem.pulled_back();
        let mut sites = Vec::with_capacity(p);
        let mut wdet = Vec::with_capacity(p);
        let mut wa = vec![Vec::with_capacity(p); d * d];
        let mut wgamma = Vec::with_capacity(p);
        let mut values = DMatrix::zeros(p, n);
        let mut grads = vec![DMatrix::zeros(p, n); d];
        let mut v = vec![0.0; n];
        let mut g = vec![0.0; n * d];
        for (row, (x, &w)) in rule.nodes().zip(rule.weights()).enumerate() {
            let data = coeffs.at(x)?;
            if !data.gamma_tilde.is_finite() || data.a_tilde.iter().any(|a| !a.is_finite()) {
                return Err(Error::NonFinite {
                    what: "coefficient",
                    point: x.to_vec(),
                });
            }
            for i in 0..d {
                for j in 0..d {
                    wa[i * d + j].push(w * data.det_j * data.a_tilde[(i, j)]);
                }
            }
            wdet.push(w * data.det_j);
            wgamma.push(w * data.gamma_tilde);
            sites.push(data.site);
            basis.eval_into(x, &mut v, &mut g);
            for l in 0..n {
                values[(row, l)] = v[l];
                for i in 0..d {
                    grads[i][(row, l)] = g[l * d + i];
                }
            }
        }
        Ok(Self {
            sites,
            wdet,
            wa,
            wgamma,
            values,
            grads,
        })
    }

    fn stiffness(&self) -> DMatrix<f64> {
        let d = self.grads.len();
        let mut k = weighted_gram(&self.values, &self.wgamma, &self.values);
        for i in 0..d {
            let mut w = DMatrix::zeros(self.values.nrows(), self.values.ncols());
            for j in 0..d {
                scale_rows_add(&mut w, &self.grads[j], &self.wa[i * d + j]);
            }
            k += self.grads[i].tr_mul(&w);
        }
        symmetrize(&mut k);
        k
    }

    fn expansion_values(&self, alpha: &[f64]) -> Result<DVector<f64>> {
        if alpha.len() != self.values.ncols() {
            return Err(Error::LengthMismatch {
                expected: self.values.ncols(),
                got: alpha.len(),
            });
        }
        Ok(&self.values * DVector::from_column_slice(alpha))
    }

    fn load(&self, f: &Nonlinearity, alpha: &[f64]) -> Result<DVector<f64>> {
        let u = self.expansion_values(alpha)?;
        let mut fw = DVector::zeros(u.len());
        for (p, site) in self.sites.iter().enumerate() {
            let v = f.value(site, u[p]);
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    what: "nonlinearity",
                    point: site.x().to_vec(),
                });
            }
            fw[p] = self.wdet[p] * v;
        }
        Ok(self.values.tr_mul(&fw))
    }

    fn load_jacobian(&self, f: &Nonlinearity, alpha: &[f64]) -> Result<DMatrix<f64>> {
        let u = self.expansion_values(alpha)?;
        let mut dw = Vec::with_capacity(u.len());
        for (p, site) in self.sites.iter().enumerate() {
            let v = f.dz(site, u[p]);
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    what: "nonlinearity derivative",
                    point: site.x().to_vec(),
                });
            }
            dw.push(self.wdet[p] * v);
        }
        let mut j = weighted_gram(&self.values, &dw, &self.values);
        symmetrize(&mut j);
        Ok(j)
    }

    /// `Q[det J psi_l]`.
    fn moments(&self) -> DVector<f64> {
        self.values.tr_mul(&DVector::from_column_slice(&self.wdet))
    }
}

fn scale_rows_add(acc: &mut DMatrix<f64>, m: &DMatrix<f64>, w: &[f64]) {
    for (mut acc_col, m_col) in acc.column_iter_mut().zip(m.column_iter()) {
        for ((a, b), s) in acc_col.iter_mut().zip(m_col.iter()).zip(w) {
            *a += s * b;
        }
    }
}

/// `L^T diag(w) R`.
fn weighted_gram(l: &DMatrix<f64>, w: &[f64], r: &DMatrix<f64>) -> DMatrix<f64> {
    let mut wr = DMatrix::zeros(r.nrows(), r.ncols());
    scale_rows_add(&mut wr, r, w);
    l.tr_mul(&wr)
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

fn require_homogeneous(problem: &Problem) -> Result<()> {
    if problem.bc.is_homogeneous() {
        Ok(())
    } else {
        Err(Error::BoundaryCondition(
            "nonhomogeneous data must be lifted before assembly",
        ))
    }
}

/// Stiffness matrix (linear left-hand side).
pub fn assemble_linear(
    problem: &Problem,
    basis: &BasisSet,
    rule: &QuadratureRule,
) -> Result<DMatrix<f64>> {
    Ok(NodeTable::new(problem, basis, rule)?.stiffness())
}

/// Load vector `Q[f~(x, u_n(x)) psi_l]` for coefficients `alpha`.
pub fn assemble_load(
    problem: &Problem,
    basis: &BasisSet,
    rule: &QuadratureRule,
    alpha: &[f64],
) -> Result<DVector<f64>> {
    NodeTable::new(problem, basis, rule)?.load(&problem.f, alpha)
}

/// Jacobian of the load vector, `Q[df~/dz(x, u_n(x)) psi_k psi_l]`.
pub fn assemble_load_jacobian(
    problem: &Problem,
    basis: &BasisSet,
    rule: &QuadratureRule,
    alpha: &[f64],
) -> Result<DMatrix<f64>> {
    NodeTable::new(problem, basis, rule)?.load_jacobian(&problem.f, alpha)
}

/// The nonlinear system `stiffness * alpha - load(alpha) = 0` for one degree.
pub struct GalerkinSystem {
    problem: Problem,
    basis: Arc<BasisSet>,
    rule: Arc<QuadratureRule>,
    table: NodeTable,
    stiffness: DMatrix<f64>,
}

impl GalerkinSystem {
    pub fn new(problem: Problem, basis: Arc<BasisSet>, rule: Arc<QuadratureRule>) -> Result<Self> {
        require_homogeneous(&problem)?;
        let table = NodeTable::new(&problem, &basis, &rule)?;
        let stiffness = table.stiffness();
        Ok(Self {
            problem,
            basis,
            rule,
            table,
            stiffness,
        })
    }

    /// System for degree `n` with the basis kind implied by the boundary
    /// condition and the default quadrature plus `extra_quadrature` orders.
    pub fn for_degree(problem: Problem, n: usize, extra_quadrature: usize) -> Result<Self> {
        let basis = Arc::new(BasisSet::with_kind(problem.dim(), n, problem.basis_kind())?);
        let rule = Arc::new(quadrature::default_rule_with_extra(
            problem.dim(),
            n,
            extra_quadrature,
        )?);
        Self::new(problem, basis, rule)
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn basis(&self) -> &Arc<BasisSet> {
        &self.basis
    }

    pub fn rule(&self) -> &Arc<QuadratureRule> {
        &self.rule
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    pub fn load(&self, alpha: &[f64]) -> Result<DVector<f64>> {
        self.table.load(&self.problem.f, alpha)
    }

    pub fn load_jacobian(&self, alpha: &[f64]) -> Result<DMatrix<f64>> {
        self.table.load_jacobian(&self.problem.f, alpha)
    }

    /// `stiffness * alpha - load(alpha)`.
    pub fn residual(&self, alpha: &[f64]) -> Result<DVector<f64>> {
        let b = self.load(alpha)?;
        Ok(&self.stiffness * DVector::from_column_slice(alpha) - b)
    }

    /// `Q[det J psi_k psi_l]`, the mass matrix of the physical domain.
    pub fn mass_matrix(&self) -> DMatrix<f64> {
        let mut m = weighted_gram(&self.table.values, &self.table.wdet, &self.table.values);
        symmetrize(&mut m);
        m
    }
}

/// Replaces `u = g` by the homogeneous problem for `v = u - G`:
/// `L v = f(s, v + G) - L G`, recording `G` as a solution offset.
pub fn lift_dirichlet(problem: &Problem) -> Result<Problem> {
    let data = match &problem.bc {
        BoundaryCondition::Dirichlet(d) => d.clone(),
        BoundaryCondition::DirichletZero => return Ok(problem.clone()),
        _ => {
            return Err(Error::BoundaryCondition(
                "lift_dirichlet needs Dirichlet data",
            ))
        }
    };
    let lg = data
        .l_extension
        .clone()
        .ok_or(Error::MissingExtensionDerivatives)?;
    let sphere = boundary_rule(problem.dim(), 0)?;
    for x in sphere.points() {
        let site = problem.map.site(x);
        let (gv, ev) = ((data.g)(&site), (data.extension)(&site));
        if (gv - ev).abs() > 1e-10 * gv.abs().max(1.0) {
            return Err(Error::InconsistentData(format!(
                "extension G = {ev} differs from g = {gv} at boundary point {x:?}"
            )));
        }
    }
    let f = problem.f.clone();
    let (g1, g2) = (data.extension.clone(), data.extension.clone());
    let f2 = f.clone();
    let lifted_f = Nonlinearity::new(
        move |s, z| f.value(s, z + g1(s)) - lg(s),
        move |s, z| f2.dz(s, z + g2(s)),
    );
    let mut out = problem.clone();
    out.f = lifted_f;
    out.bc = BoundaryCondition::DirichletZero;
    out.offsets.push(SolutionOffset::Field {
        descriptor: data.descriptor,
        field: data.extension,
    });
    Ok(out)
}

/// Result of lifting nonzero Neumann data.
#[derive(Clone, Debug)]
pub struct NeumannLift {
    /// Problem for `w = u - v*` with zero Neumann data.
    pub problem: Problem,
    /// `c0 = -(1/Vol) int g`.
    pub c0: f64,
    /// Zero-mean solution `v*` of `-div(A grad v) = c0`, `dv/dn = g`.
    pub auxiliary: Expansion,
}

fn boundary_rule(dim: usize, n: usize) -> Result<SphereRule> {
    match dim {
        2 => Ok(SphereRule::circle((4 * n + 16).max(64))),
        3 => SphereRule::sphere((n + 4).max(16)),
        d => Err(Error::Dimension(d)),
    }
}

/// Replaces `du/dn = g` by a zero-Neumann problem for `w = u - v*`:
/// `-div(A grad w) + gamma w = f(s, w + v*) - gamma v* - c0`, where `v*` is the
/// degree-`n` spectral solution of the auxiliary linear Neumann problem.
pub fn lift_neumann(problem: &Problem, n: usize) -> Result<NeumannLift> {
    let dim = problem.dim();
    let data = match &problem.bc {
        BoundaryCondition::Neumann(d) => d.clone(),
        BoundaryCondition::NeumannZero => {
            let basis = Arc::new(BasisSet::plain(dim, n)?);
            return Ok(NeumannLift {
                problem: problem.clone(),
                c0: 0.0,
                auxiliary: Expansion::zero(basis),
            });
        }
        _ => return Err(Error::BoundaryCondition("lift_neumann needs Neumann data")),
    };

    let basis = Arc::new(BasisSet::plain(dim, n)?);
    let rule = quadrature::default_rule(dim, n)?;
    let aux_problem = Problem {
        gamma: constant_field(0.0),
        f: Nonlinearity::zero(),
        bc: BoundaryCondition::NeumannZero,
        offsets: Vec::new(),
        ..problem.clone()
    };
    let table = NodeTable::new(&aux_problem, &basis, &rule)?;
    let moments = table.moments();
    let volume: f64 = table.wdet.iter().sum();

    let sphere = boundary_rule(dim, n)?;
    let nb = basis.len();
    let mut boundary = DVector::<f64>::zeros(nb);
    let mut g_integral = 0.0;
    let mut all_zero = true;
    for (x, w) in sphere.points().zip(&sphere.weights) {
        let (ds, _) = problem.map.surface_element(x)?;
        let gv = (data.g)(&problem.map.site(x));
        if !gv.is_finite() {
            return Err(Error::NonFinite {
                what: "Neumann data",
                point: x.to_vec(),
            });
        }
        all_zero &= gv == 0.0;
        let wg = w * ds * gv;
        g_integral += wg;
        for (b, v) in boundary.iter_mut().zip(basis.values(x)) {
            *b += wg * v;
        }
    }
    if all_zero {
        let mut out = problem.clone();
        out.bc = BoundaryCondition::NeumannZero;
        return Ok(NeumannLift {
            problem: out,
            c0: 0.0,
            auxiliary: Expansion::zero(basis),
        });
    }
    let c0 = -g_integral / volume;
    let residue = c0 * volume + g_integral;
    if residue.abs() > 1e-10 * g_integral.abs().max(1.0) {
        return Err(Error::InconsistentData(format!(
            "compatibility residue {residue:e} for c0 = {c0}"
        )));
    }

    // bordered system [K m; m^T 0] [v; lambda] = [c0 m + b; 0] fixes the mean of v
    let k = table.stiffness();
    let mut big = DMatrix::zeros(nb + 1, nb + 1);
    big.view_mut((0, 0), (nb, nb)).copy_from(&k);
    let mut rhs = DVector::zeros(nb + 1);
    for l in 0..nb {
        big[(l, nb)] = moments[l];
        big[(nb, l)] = moments[l];
        rhs[l] = c0 * moments[l] + boundary[l];
    }
    let sol = big.lu().solve(&rhs).ok_or(Error::SingularMatrix)?;
    let auxiliary = Expansion::new(basis, sol.rows(0, nb).iter().copied().collect())?;

    let f = problem.f.clone();
    let f2 = f.clone();
    let gamma = problem.gamma.clone();
    let (v1, v2) = (auxiliary.clone(), auxiliary.clone());
    let lifted = Nonlinearity::new(
        move |s, z| {
            let v = v1.eval(s.x());
            f.value(s, z + v) - gamma(s) * v - c0
        },
        move |s, z| f2.dz(s, z + v2.eval(s.x())),
    );
    let mut out = problem.clone();
    out.f = lifted;
    out.bc = BoundaryCondition::NeumannZero;
    out.offsets
        .push(SolutionOffset::Spectral(auxiliary.clone()));
    Ok(NeumannLift {
        problem: out,
        c0,
        auxiliary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar_field;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn disk_problem(bc: BoundaryCondition, gamma: f64, f: Nonlinearity) -> Problem {
        Problem::builder(DomainMap::identity(2).unwrap())
            .gamma(constant_field(gamma))
            .nonlinearity(f)
            .boundary(bc)
            .build()
            .unwrap()
    }

    #[test]
    fn dirichlet_constant_bubble_stiffness() {
        let p = disk_problem(BoundaryCondition::DirichletZero, 0.0, Nonlinearity::zero());
        let basis = BasisSet::bubble(2, 0).unwrap();
        let k = assemble_linear(&p, &basis, &quadrature::default_rule(2, 0).unwrap()).unwrap();
        assert_relative_eq!(k[(0, 0)], 2.0, max_relative = 1e-14);
    }

    #[test]
    fn neumann_constant_mass() {
        let p = disk_problem(BoundaryCondition::NeumannZero, 1.0, Nonlinearity::zero());
        let basis = BasisSet::plain(2, 0).unwrap();
        let k = assemble_linear(&p, &basis, &quadrature::default_rule(2, 0).unwrap()).unwrap();
        assert_relative_eq!(k[(0, 0)], 1.0, max_relative = 1e-14);
    }

    #[test]
    fn stiffness_symmetric_and_positive_definite() {
        let map = DomainMap::quadratic_2d(0.95).unwrap();
        let p = Problem::builder(map)
            .gamma(scalar_field(|s| 1.0 + 0.5 * (s.s()[0] * s.s()[1]).sin()))
            .build()
            .unwrap();
        let sys = GalerkinSystem::for_degree(p, 6, 0).unwrap();
        let k = sys.stiffness();
        let asym = (k - k.transpose()).amax();
        assert!(asym <= 1e-12 * k.amax());
        assert!(k.clone().cholesky().is_some());
    }

    #[test]
    fn load_examples() {
        let p = disk_problem(BoundaryCondition::DirichletZero, 0.0, Nonlinearity::zero());
        let sys = GalerkinSystem::for_degree(p, 3, 0).unwrap();
        assert!(sys
            .load(&vec![0.3; sys.len()])
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));

        let p = disk_problem(
            BoundaryCondition::DirichletZero,
            0.0,
            Nonlinearity::source(constant_field(1.0)),
        );
        let sys = GalerkinSystem::for_degree(p, 0, 0).unwrap();
        assert_relative_eq!(
            sys.load(&[0.0]).unwrap()[0],
            PI.sqrt() / 2.0,
            max_relative = 1e-14
        );
        assert!(sys.load(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn linear_load_is_mass_action() {
        let f = Nonlinearity::new(|_, z| z, |_, _| 1.0);
        let map = DomainMap::quadratic_2d(0.5).unwrap();
        let p = Problem::builder(map.clone())
            .nonlinearity(f)
            .build()
            .unwrap();
        let sys = GalerkinSystem::for_degree(p.clone(), 4, 0).unwrap();
        let mut e0 = vec![0.0; sys.len()];
        e0[0] = 1.0;
        let b = sys.load(&e0).unwrap();
        // gamma = 1, A = 0 path of the linear assembly gives the mass matrix
        let mass_problem = Problem {
            diffusion: Some(Arc::new(|_: &Site| DMatrix::zeros(2, 2))),
            gamma: constant_field(1.0),
            ..p
        };
        let m = assemble_linear(&mass_problem, sys.basis(), sys.rule()).unwrap();
        for l in 0..sys.len() {
            assert!((b[l] - m[(l, 0)]).abs() < 1e-14);
        }
        let jac = sys.load_jacobian(&vec![0.7; sys.len()]).unwrap();
        assert!((jac - &m).amax() < 1e-14);
    }

    #[test]
    fn quadratic_load_jacobian_vanishes_at_zero() {
        let f = Nonlinearity::new(|_, z| z * z, |_, z| 2.0 * z);
        let p = disk_problem(BoundaryCondition::DirichletZero, 0.0, f);
        let sys = GalerkinSystem::for_degree(p, 3, 0).unwrap();
        assert_eq!(
            sys.load_jacobian(&vec![0.0; sys.len()]).unwrap().amax(),
            0.0
        );
    }

    #[test]
    fn load_jacobian_matches_differences() {
        let f = Nonlinearity::new(
            |s, z| (s.s()[0] * s.s()[1]).cos() / (1.0 + z * z),
            |s, z| -2.0 * z * (s.s()[0] * s.s()[1]).cos() / (1.0 + z * z).powi(2),
        );
        for map in [
            DomainMap::quadratic_2d(0.95).unwrap(),
            DomainMap::quadratic_3d(0.5, 0.5).unwrap(),
        ] {
            let p = Problem::builder(map)
                .nonlinearity(f.clone())
                .build()
                .unwrap();
            let sys = GalerkinSystem::for_degree(p, 3, 0).unwrap();
            let alpha: Vec<f64> = (0..sys.len())
                .map(|i| 0.3 * ((i as f64) * 0.7).sin())
                .collect();
            let jac = sys.load_jacobian(&alpha).unwrap();
            let eps = 1e-5;
            for k in 0..sys.len() {
                let mut ap = alpha.clone();
                let mut am = alpha.clone();
                ap[k] += eps;
                am[k] -= eps;
                let fd = (sys.load(&ap).unwrap() - sys.load(&am).unwrap()) / (2.0 * eps);
                for l in 0..sys.len() {
                    assert!(
                        (fd[l] - jac[(l, k)]).abs() <= 1e-5 * jac.amax().max(1e-3),
                        "{l},{k}"
                    );
                }
            }
        }
    }

    #[test]
    fn permuting_basis_permutes_stiffness() {
        let map = DomainMap::quadratic_2d(0.95).unwrap();
        let p = Problem::builder(map)
            .gamma(constant_field(2.0))
            .build()
            .unwrap();
        let basis = BasisSet::bubble(2, 4).unwrap();
        let perm: Vec<usize> = {
            let n = basis.len();
            (0..n).map(|i| (i * 7 + 3) % n).collect()
        };
        let rule = quadrature::default_rule(2, 4).unwrap();
        let k = assemble_linear(&p, &basis, &rule).unwrap();
        let kp = assemble_linear(&p, &basis.permuted(&perm).unwrap(), &rule).unwrap();
        for i in 0..perm.len() {
            for j in 0..perm.len() {
                assert!((kp[(i, j)] - k[(perm[i], perm[j])]).abs() < 1e-12 * k.amax());
            }
        }
    }

    #[test]
    fn nonhomogeneous_problems_need_lifting() {
        let data = DirichletData {
            g: constant_field(1.0),
            extension: constant_field(1.0),
            l_extension: None,
            descriptor: "1".into(),
        };
        let p = disk_problem(
            BoundaryCondition::Dirichlet(data),
            0.0,
            Nonlinearity::zero(),
        );
        assert!(GalerkinSystem::for_degree(p.clone(), 2, 0).is_err());
        assert!(matches!(
            lift_dirichlet(&p),
            Err(Error::MissingExtensionDerivatives)
        ));
    }

    #[test]
    fn constant_dirichlet_lift() {
        // g = G = 1, L = -Laplace + gamma: right side becomes f(s, v + 1) - gamma
        let gamma = 3.0;
        let data = DirichletData {
            g: constant_field(1.0),
            extension: constant_field(1.0),
            l_extension: Some(constant_field(gamma)),
            descriptor: "1".into(),
        };
        let f = Nonlinearity::new(|_, z| z * z, |_, z| 2.0 * z);
        let p = disk_problem(BoundaryCondition::Dirichlet(data), gamma, f);
        let lifted = lift_dirichlet(&p).unwrap();
        assert!(matches!(lifted.bc, BoundaryCondition::DirichletZero));
        let site = Site::new(&[0.1, 0.2], &[0.1, 0.2]);
        assert_relative_eq!(lifted.f.value(&site, 0.5), 1.5 * 1.5 - gamma);
        assert_relative_eq!(lifted.f.dz(&site, 0.5), 3.0);
        assert_eq!(lifted.offset(&site), 1.0);

        let bad = DirichletData {
            g: constant_field(1.0),
            extension: constant_field(2.0),
            l_extension: Some(constant_field(0.0)),
            descriptor: "2".into(),
        };
        let p = disk_problem(BoundaryCondition::Dirichlet(bad), 0.0, Nonlinearity::zero());
        assert!(matches!(
            lift_dirichlet(&p),
            Err(Error::InconsistentData(_))
        ));
    }

    #[test]
    fn neumann_lift_zero_data_is_identity() {
        let data = NeumannData {
            g: constant_field(0.0),
            descriptor: "0".into(),
        };
        let p = disk_problem(BoundaryCondition::Neumann(data), 1.0, Nonlinearity::zero());
        let lift = lift_neumann(&p, 4).unwrap();
        assert_eq!(lift.c0, 0.0);
        assert!(lift.auxiliary.coefficients.iter().all(|&c| c == 0.0));
        assert!(lift.problem.offsets.is_empty());
    }

    #[test]
    fn neumann_lift_disk_constant_flux() {
        let data = NeumannData {
            g: constant_field(1.0),
            descriptor: "1".into(),
        };
        let p = disk_problem(BoundaryCondition::Neumann(data), 1.0, Nonlinearity::zero());
        let lift = lift_neumann(&p, 6).unwrap();
        assert_relative_eq!(lift.c0, -2.0, max_relative = 1e-12);
        // v* = (r^2 - 1/2)/2 solves -Lap v = -2, dv/dn = 1 with zero mean
        for x in [[0.0, 0.0], [0.3, -0.4], [0.6, 0.8]] {
            let r2 = x[0] * x[0] + x[1] * x[1];
            assert!((lift.auxiliary.eval(&x) - 0.5 * (r2 - 0.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn neumann_requires_positive_gamma() {
        let r = Problem::builder(DomainMap::identity(2).unwrap())
            .boundary(BoundaryCondition::NeumannZero)
            .build();
        assert!(matches!(r, Err(Error::NonPositiveGamma(_))));
    }

    #[test]
    fn derivative_consistency_check() {
        let good = Nonlinearity::new(|_, z| 100.0 * z * (1.0 - z), |_, z| 100.0 - 200.0 * z);
        let bad = Nonlinearity::new(|_, z| z * z, |_, _| 1.0);
        let sites: Vec<(Site, f64)> = (0..10)
            .map(|i| (Site::new(&[0.1, 0.0], &[0.1, 0.0]), i as f64 * 0.3 - 1.0))
            .collect();
        assert!(good.derivative_deviation(&sites) < 1e-6);
        assert!(bad.derivative_deviation(&sites) > 1e-3);
    }
}
