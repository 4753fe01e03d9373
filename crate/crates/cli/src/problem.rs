//! Turns a [`ProblemConfig`] into a solver [`Problem`].
//!
//! The differential operator is applied symbolically: physical derivatives
//! of an expression `E(s, x)` are `dE/ds_i + sum_j (J^{-1})_{ji} dE/dx_j`
//! with `J^{-1}` built from the symbolic Jacobian of the map, so manufactured
//! solutions and Dirichlet extensions may be written in either coordinate set.

use std::sync::Arc;

use nalgebra::DMatrix;
use spectral_ball::assembly::{DirichletData, NeumannData};
use spectral_ball::{
    BoundaryCondition, DomainMap, Mapping, Nonlinearity, Problem, ScalarField, Site,
};

use crate::config::{BoundaryKind, ConfigError, MapConfig, ProblemConfig};
use crate::expr::{add, div, mul, neg, parse_with, sub, Env, Expr, Var};

/// A problem together with the symbolic data the study needs.
#[derive(Clone, Debug)]
pub struct BuiltProblem {
    pub problem: Problem,
    pub dim: usize,
    /// Exact solution of a manufactured problem.
    pub truth: Option<Arc<Expr>>,
    /// `df/du` vanishes identically.
    pub linear: bool,
}

impl BuiltProblem {
    pub fn truth_at(&self, site: &Site) -> Option<f64> {
        self.truth.as_ref().map(|t| t.eval(&env_of(site, 0.0)))
    }
}

/// Variables available to data expressions of a `dim`-dimensional problem.
pub fn allowed_vars(dim: usize, with_u: bool) -> Vec<Var> {
    let mut v: Vec<Var> = (0..dim)
        .map(Var::physical)
        .chain((0..dim).map(Var::ball))
        .collect();
    if with_u {
        v.push(Var::U);
    }
    v
}

pub fn env_of(site: &Site, u: f64) -> Env {
    let (s, x) = (site.phys, site.ball);
    [s[0], s[1], s[2], x[0], x[1], x[2], u]
}

fn parse_field(text: &str, allowed: &[Var], field: &str) -> Result<Expr, ConfigError> {
    parse_with(text, allowed).map_err(|source| ConfigError::Expression {
        field: field.to_string(),
        source,
    })
}

fn field_of(e: Expr) -> ScalarField {
    Arc::new(move |site: &Site| e.eval(&env_of(site, 0.0)))
}

/// Components of `Phi` as expressions in the ball coordinates.
pub fn map_components(map: &MapConfig, dim: usize) -> Result<Vec<Expr>, ConfigError> {
    let texts: Vec<String> = match map {
        MapConfig::Identity => ["x", "y", "z"][..dim]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        MapConfig::Quadratic { a } => vec![format!("x - y + {a:e}*x^2"), "x + y".into()],
        MapConfig::Quadratic3d { a, b } => vec![
            format!("x - y + {a:e}*x^2"),
            "x + y".into(),
            format!("2*z + {b:e}*z^2"),
        ],
        MapConfig::Ellipse { a, b } => vec![format!("{a:e}*x"), format!("{b:e}*y")],
        MapConfig::Expression { components } => components.clone(),
    };
    if texts.len() != dim {
        return Err(ConfigError::Invalid {
            section: "map",
            message: format!("{} components for dimension {dim}", texts.len()),
        });
    }
    let ball: Vec<Var> = (0..dim).map(Var::ball).collect();
    texts
        .iter()
        .enumerate()
        .map(|(i, t)| parse_field(t, &ball, &format!("map.components[{i}]")))
        .collect()
}

/// A map given by component expressions, differentiated symbolically.
#[derive(Debug)]
pub struct ExpressionMap {
    components: Vec<Expr>,
    jacobian: Vec<Vec<Expr>>,
}

impl ExpressionMap {
    pub fn new(components: Vec<Expr>) -> Self {
        let dim = components.len();
        let jacobian = components
            .iter()
            .map(|c| (0..dim).map(|j| c.differentiate(Var::ball(j))).collect())
            .collect();
        Self {
            components,
            jacobian,
        }
    }

    fn env(x: &[f64]) -> Env {
        let mut e = [0.0; 7];
        for (i, v) in x.iter().enumerate() {
            e[Var::ball(i).index()] = *v;
        }
        e
    }
}

impl Mapping for ExpressionMap {
    fn dim(&self) -> usize {
        self.components.len()
    }

    fn phi(&self, x: &[f64]) -> Vec<f64> {
        let env = Self::env(x);
        self.components.iter().map(|c| c.eval(&env)).collect()
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let env = Self::env(x);
        let d = self.dim();
        DMatrix::from_fn(d, d, |r, c| self.jacobian[r][c].eval(&env))
    }

    fn descriptor(&self) -> String {
        let parts: Vec<String> = self.components.iter().map(|c| c.to_string()).collect();
        format!("expression [{}]", parts.join("; "))
    }
}

pub fn domain_map(map: &MapConfig, dim: usize) -> Result<DomainMap, ConfigError> {
    let invalid = |e: spectral_ball::Error| ConfigError::Invalid {
        section: "map",
        message: e.to_string(),
    };
    match map {
        MapConfig::Identity => DomainMap::identity(dim),
        MapConfig::Quadratic { a } => DomainMap::quadratic_2d(*a),
        MapConfig::Quadratic3d { a, b } => DomainMap::quadratic_3d(*a, *b),
        MapConfig::Ellipse { a, b } => DomainMap::ellipse(*a, *b),
        MapConfig::Expression { .. } => {
            DomainMap::new(Arc::new(ExpressionMap::new(map_components(map, dim)?)))
        }
    }
    .map_err(invalid)
}

/// Symbolic `L E = -div(A grad E) + gamma E` on the physical domain.
pub struct Operator {
    dim: usize,
    /// `jinv[r][c] = (J^{-1})_{rc}` as expressions in the ball coordinates.
    jinv: Vec<Vec<Expr>>,
    diffusion: Option<Vec<Vec<Expr>>>,
    gamma: Expr,
}

fn det_and_adjugate(j: &[Vec<Expr>]) -> (Expr, Vec<Vec<Expr>>) {
    let e = |r: usize, c: usize| j[r][c].clone();
    if j.len() == 2 {
        let det = sub(mul(e(0, 0), e(1, 1)), mul(e(0, 1), e(1, 0)));
        let adj = vec![vec![e(1, 1), neg(e(0, 1))], vec![neg(e(1, 0)), e(0, 0)]];
        return (det, adj);
    }
    // adj[r][c] = cofactor of (c, r)
    let cof = |r: usize, c: usize| {
        let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
        let (c1, c2) = ((c + 1) % 3, (c + 2) % 3);
        sub(mul(e(r1, c1), e(r2, c2)), mul(e(r1, c2), e(r2, c1)))
    };
    let adj: Vec<Vec<Expr>> = (0..3)
        .map(|r| (0..3).map(|c| cof(c, r)).collect())
        .collect();
    let det = add(
        add(mul(e(0, 0), cof(0, 0)), mul(e(0, 1), cof(0, 1))),
        mul(e(0, 2), cof(0, 2)),
    );
    (det, adj)
}

impl Operator {
    pub fn new(components: &[Expr], diffusion: Option<Vec<Vec<Expr>>>, gamma: Expr) -> Self {
        let dim = components.len();
        let jac: Vec<Vec<Expr>> = components
            .iter()
            .map(|c| (0..dim).map(|k| c.differentiate(Var::ball(k))).collect())
            .collect();
        let (det, adj) = det_and_adjugate(&jac);
        let jinv = adj
            .into_iter()
            .map(|row| row.into_iter().map(|a| div(a, det.clone())).collect())
            .collect();
        Self {
            dim,
            jinv,
            diffusion,
            gamma,
        }
    }

    /// `d E / d s_i` with `x = Psi(s)` accounted for.
    pub fn d_phys(&self, e: &Expr, i: usize) -> Expr {
        (0..self.dim).fold(e.differentiate(Var::physical(i)), |acc, j| {
            add(
                acc,
                mul(self.jinv[j][i].clone(), e.differentiate(Var::ball(j))),
            )
        })
    }

    pub fn apply(&self, e: &Expr) -> Expr {
        let grad: Vec<Expr> = (0..self.dim).map(|j| self.d_phys(e, j)).collect();
        let flux: Vec<Expr> = match &self.diffusion {
            None => grad,
            Some(a) => (0..self.dim)
                .map(|i| {
                    (0..self.dim).fold(Expr::Num(0.0), |acc, j| {
                        add(acc, mul(a[i][j].clone(), grad[j].clone()))
                    })
                })
                .collect(),
        };
        let div_flux =
            (0..self.dim).fold(Expr::Num(0.0), |acc, i| add(acc, self.d_phys(&flux[i], i)));
        add(neg(div_flux), mul(self.gamma.clone(), e.clone()))
    }
}

pub fn build_problem(cfg: &ProblemConfig) -> Result<BuiltProblem, ConfigError> {
    let dim = cfg.dimension()?;
    let data_vars = allowed_vars(dim, false);
    let f_vars = allowed_vars(dim, true);
    let map_cfg = cfg.map.clone().unwrap_or(MapConfig::Identity);
    let components = map_components(&map_cfg, dim)?;
    let map = domain_map(&map_cfg, dim)?;

    let gamma = parse_field(&cfg.operator.gamma, &data_vars, "operator.gamma")?;
    let diffusion = match &cfg.operator.diffusion {
        None => None,
        Some(rows) => {
            if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                return Err(ConfigError::Invalid {
                    section: "operator",
                    message: format!("diffusion must be a {dim}x{dim} matrix"),
                });
            }
            let mut m = Vec::new();
            for (i, row) in rows.iter().enumerate() {
                let mut out = Vec::new();
                for (j, t) in row.iter().enumerate() {
                    out.push(parse_field(
                        t,
                        &data_vars,
                        &format!("operator.diffusion[{i}][{j}]"),
                    )?);
                }
                m.push(out);
            }
            Some(m)
        }
    };
    let op = Operator::new(&components, diffusion.clone(), gamma.clone());

    let nl = cfg.nonlinearity.clone().ok_or(ConfigError::Invalid {
        section: "nonlinearity",
        message: "missing [nonlinearity] section".into(),
    })?;
    let f0 = parse_field(&nl.f, &f_vars, "nonlinearity.f")?;
    let df0 = match &nl.df_du {
        Some(t) => parse_field(t, &f_vars, "nonlinearity.df_du")?,
        None => f0.differentiate(Var::U),
    };
    let truth = match &cfg.manufactured {
        Some(m) => Some(parse_field(
            &m.solution,
            &data_vars,
            "manufactured.solution",
        )?),
        None => None,
    };
    // f(s, u) - f(s, u*) + L u*
    let f = match &truth {
        Some(t) => add(sub(f0.clone(), f0.substitute(Var::U, t)), op.apply(t)),
        None => f0,
    };
    let linear = matches!(df0, Expr::Num(v) if v == 0.0);
    let (fv, dv) = (f, df0);
    let nonlinearity = Nonlinearity::new(
        move |site, z| fv.eval(&env_of(site, z)),
        move |site, z| dv.eval(&env_of(site, z)),
    );

    let g = match &cfg.boundary.g {
        Some(t) => Some(parse_field(t, &data_vars, "boundary.g")?),
        None => None,
    };
    let bc = match (cfg.boundary.kind, g) {
        (BoundaryKind::Dirichlet, None) => {
            if cfg.boundary.extension.is_some() {
                return Err(ConfigError::Invalid {
                    section: "boundary",
                    message: "extension given without boundary data g".into(),
                });
            }
            BoundaryCondition::DirichletZero
        }
        (BoundaryKind::Dirichlet, Some(g)) => {
            let ext = match &cfg.boundary.extension {
                Some(t) => parse_field(t, &data_vars, "boundary.extension")?,
                None => g.clone(),
            };
            let l_ext = op.apply(&ext);
            BoundaryCondition::Dirichlet(DirichletData {
                g: field_of(g),
                descriptor: ext.to_string(),
                extension: field_of(ext),
                l_extension: Some(field_of(l_ext)),
            })
        }
        (BoundaryKind::Neumann, None) => BoundaryCondition::NeumannZero,
        (BoundaryKind::Neumann, Some(g)) => BoundaryCondition::Neumann(NeumannData {
            descriptor: g.to_string(),
            g: field_of(g),
        }),
    };

    let mut builder = Problem::builder(map)
        .gamma(field_of(gamma))
        .nonlinearity(nonlinearity)
        .boundary(bc)
        .descriptor(cfg.name());
    if let Some(a) = diffusion {
        builder = builder.diffusion(Arc::new(move |site: &Site| {
            let env = env_of(site, 0.0);
            DMatrix::from_fn(dim, dim, |i, j| a[i][j].eval(&env))
        }));
    }
    let problem = builder.build().map_err(|e| ConfigError::Invalid {
        section: "problem",
        message: e.to_string(),
    })?;
    Ok(BuiltProblem {
        problem,
        dim,
        truth: truth.map(Arc::new),
        linear,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;
    use approx::assert_relative_eq;

    fn env_at(map: &DomainMap, x: &[f64]) -> Env {
        env_of(&map.site(x), 0.0)
    }

    #[test]
    fn laplacian_in_physical_coordinates() {
        let comps = map_components(&MapConfig::Identity, 2).unwrap();
        let op = Operator::new(&comps, None, Expr::Num(0.0));
        let e = parse_expression("s^2*t + sin(s)").unwrap();
        let lap = op.apply(&e);
        let map = DomainMap::identity(2).unwrap();
        let env = env_at(&map, &[0.3, -0.4]);
        // -(2t - sin s)
        assert_relative_eq!(
            lap.eval(&env),
            -(2.0 * -0.4 - 0.3f64.sin()),
            epsilon = 1e-14
        );
    }

    /// `u(x)` composed with `Psi` has the same Laplacian whether written in
    /// ball or physical coordinates.
    #[test]
    fn ball_and_physical_forms_agree() {
        let a = 0.95;
        let cfg = MapConfig::Quadratic { a };
        let comps = map_components(&cfg, 2).unwrap();
        let map = domain_map(&cfg, 2).unwrap();
        let op = Operator::new(&comps, None, parse_expression("1 + s").unwrap());
        // x(s, t) from the closed-form inverse of the quadratic map
        let xs = "((s + t)/(1 + sqrt(1 + 0.95*(s + t))))";
        let phys = parse_expression(&format!("exp({xs})*cos(t - {xs})")).unwrap();
        let ball = parse_expression("exp(x)*cos(y)").unwrap();
        for x in [[0.1, 0.2], [-0.5, 0.3], [0.7, -0.6]] {
            let env = env_at(&map, &x);
            let (p, b) = (op.apply(&phys).eval(&env), op.apply(&ball).eval(&env));
            assert_relative_eq!(p, b, max_relative = 1e-10);
        }
    }

    #[test]
    fn operator_matches_finite_differences_in_3d() {
        let cfg = MapConfig::Quadratic3d { a: 0.5, b: 0.5 };
        let comps = map_components(&cfg, 3).unwrap();
        let map = domain_map(&cfg, 3).unwrap();
        let op = Operator::new(&comps, None, Expr::Num(0.0));
        let ball = parse_expression("x*y + z^3 + exp(x*z)").unwrap();
        let lap = op.apply(&ball);
        let u_phys = |s: &[f64]| {
            let x = map.inverse(s).unwrap();
            x[0] * x[1] + x[2].powi(3) + (x[0] * x[2]).exp()
        };
        let x0 = [0.2, -0.3, 0.4];
        let s0 = map.phi(&x0);
        let h = 1e-4;
        let mut fd = 0.0;
        for i in 0..3 {
            let (mut p, mut m) = (s0.clone(), s0.clone());
            p[i] += h;
            m[i] -= h;
            fd += (u_phys(&p) - 2.0 * u_phys(&s0) + u_phys(&m)) / (h * h);
        }
        assert_relative_eq!(lap.eval(&env_at(&map, &x0)), -fd, max_relative = 1e-6);
    }

    #[test]
    fn expression_map_matches_builtin() {
        let builtin = domain_map(&MapConfig::Quadratic { a: 0.5 }, 2).unwrap();
        let expr = domain_map(
            &MapConfig::Expression {
                components: vec!["x - y + 0.5*x^2".into(), "x + y".into()],
            },
            2,
        )
        .unwrap();
        for x in [[0.1, 0.2], [-0.9, 0.1]] {
            assert_eq!(builtin.phi(&x), expr.phi(&x));
            assert_eq!(builtin.jacobian(&x), expr.jacobian(&x));
        }
        assert!(!expr.has_inverse());
    }

    #[test]
    fn rejects_wrong_variables() {
        let bad = ProblemConfig::from_toml("[nonlinearity]\nf = \"u + z\"").unwrap();
        assert!(build_problem(&bad).is_err());
        let bad = ProblemConfig::from_toml("[operator]\ngamma = \"u\"\n[nonlinearity]\nf = \"u\"")
            .unwrap();
        assert!(build_problem(&bad).is_err());
        let bad = ProblemConfig::from_toml(
            "[map]\nkind = \"expression\"\ncomponents = [\"s\", \"y\"]\n[nonlinearity]\nf = \"0\"",
        )
        .unwrap();
        assert!(build_problem(&bad).is_err());
    }

    #[test]
    fn linearity_detection() {
        let lin = ProblemConfig::from_toml("[nonlinearity]\nf = \"cos(s) + 0*u\"").unwrap();
        assert!(build_problem(&lin).unwrap().linear);
        let non = ProblemConfig::from_toml("[nonlinearity]\nf = \"u^2\"").unwrap();
        assert!(!build_problem(&non).unwrap().linear);
    }
}
