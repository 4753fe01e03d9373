//! Problem configuration files (TOML).
//!
//! A file either names a catalog entry (`builtin = "paper-planar-cos"`) and
//! optionally overrides its `[solve]` and `[output]` sections, or defines a
//! problem in full:
//!
//! ```toml
//! name = "my-problem"
//! dimension = 2
//!
//! [map]                  # identity | quadratic | quadratic3d | ellipse | expression
//! kind = "quadratic"
//! a = 0.95
//!
//! [operator]
//! gamma = "0"            # expression in s, t, v, x, y, z
//! # diffusion = [["1", "0"], ["0", "1"]]
//!
//! [nonlinearity]
//! f = "cos(pi*s*t)/(1+u^2)"
//! # df_du = "..."       # derived symbolically when omitted
//!
//! [boundary]             # dirichlet | neumann
//! kind = "dirichlet"
//! # g = "..."            # boundary data, zero when omitted
//! # extension = "..."    # Dirichlet extension of g into the domain, defaults to g
//!
//! # [manufactured]       # exact solution: f gains f(u*) - L u* corrections
//! # solution = "(1-x^2-y^2)*exp(x)"
//!
//! [solve]
//! n_start = 5
//! n_end = 20
//! continuation_start = 1 # first degree solved, defaults to n_start
//! reference = 25         # degree of the reference solution for errors
//!
//! [output]
//! dir = "out"
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use spectral_ball::{InitialGuess, SolveConfig};
use thiserror::Error;

use crate::catalog;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("unknown built-in problem `{0}` (known: {known})", known = catalog::names().join(", "))]
    UnknownBuiltin(String),
    #[error("{section}: {message}")]
    Invalid {
        section: &'static str,
        message: String,
    },
    #[error("{field}: {source}")]
    Expression {
        field: String,
        #[source]
        source: crate::expr::ExprError,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub builtin: Option<String>,
    pub name: Option<String>,
    pub dimension: Option<usize>,
    pub map: Option<MapConfig>,
    #[serde(default)]
    pub operator: OperatorConfig,
    pub nonlinearity: Option<NonlinearityConfig>,
    #[serde(default)]
    pub boundary: BoundaryConfig,
    pub manufactured: Option<ManufacturedConfig>,
    #[serde(default)]
    pub solve: SolveSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MapConfig {
    Identity,
    Quadratic {
        a: f64,
    },
    Quadratic3d {
        a: f64,
        b: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
    },
    /// Components of `Phi` as expressions in the ball coordinates.
    Expression {
        components: Vec<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    #[serde(default = "zero_text")]
    pub gamma: String,
    pub diffusion: Option<Vec<Vec<String>>>,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        Self {
            gamma: zero_text(),
            diffusion: None,
        }
    }
}

fn zero_text() -> String {
    "0".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityConfig {
    pub f: String,
    pub df_du: Option<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    #[default]
    Dirichlet,
    Neumann,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    #[serde(default)]
    pub kind: BoundaryKind,
    pub g: Option<String>,
    pub extension: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManufacturedConfig {
    pub solution: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GuessConfig {
    Constant(f64),
    Coefficients(Vec<f64>),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    pub n_start: Option<usize>,
    pub n_end: Option<usize>,
    pub continuation_start: Option<usize>,
    pub reference: Option<usize>,
    pub newton_tol: Option<f64>,
    pub max_newton: Option<usize>,
    pub damping: Option<f64>,
    pub max_halvings: Option<usize>,
    pub initial_guess: Option<GuessConfig>,
    pub extra_quadrature: Option<usize>,
    pub neumann_lift_degree: Option<usize>,
}

impl SolveSection {
    /// Fields set here win over `base`.
    fn overlay(self, base: SolveSection) -> SolveSection {
        SolveSection {
            n_start: self.n_start.or(base.n_start),
            n_end: self.n_end.or(base.n_end),
            continuation_start: self.continuation_start.or(base.continuation_start),
            reference: self.reference.or(base.reference),
            newton_tol: self.newton_tol.or(base.newton_tol),
            max_newton: self.max_newton.or(base.max_newton),
            damping: self.damping.or(base.damping),
            max_halvings: self.max_halvings.or(base.max_halvings),
            initial_guess: self.initial_guess.or(base.initial_guess),
            extra_quadrature: self.extra_quadrature.or(base.extra_quadrature),
            neumann_lift_degree: self.neumann_lift_degree.or(base.neumann_lift_degree),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Output directory, relative to the working directory.
    pub dir: Option<PathBuf>,
    /// File stem, defaults to the problem name.
    pub stem: Option<String>,
    /// Write the `(n, log10 error)` data file.
    pub plot: Option<bool>,
    /// Write the highest-degree solution file.
    pub solution: Option<bool>,
}

impl OutputSection {
    fn overlay(self, base: OutputSection) -> OutputSection {
        OutputSection {
            dir: self.dir.or(base.dir),
            stem: self.stem.or(base.stem),
            plot: self.plot.or(base.plot),
            solution: self.solution.or(base.solution),
        }
    }
}

/// Degree schedule of a study.
#[derive(Clone, Debug, PartialEq)]
pub struct StudyPlan {
    pub solve: SolveConfig,
    /// Degrees reported in the table.
    pub report_from: usize,
    pub report_to: usize,
    pub reference: Option<usize>,
}

impl ProblemConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ProblemConfig = toml::from_str(text)?;
        cfg.resolve()
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Expands a `builtin` reference into the full catalog entry.
    fn resolve(self) -> Result<Self, ConfigError> {
        let Some(name) = self.builtin.clone() else {
            return Ok(self);
        };
        let only_overrides = self.dimension.is_none()
            && self.map.is_none()
            && self.operator == OperatorConfig::default()
            && self.nonlinearity.is_none()
            && self.boundary == BoundaryConfig::default()
            && self.manufactured.is_none();
        if !only_overrides {
            return Err(ConfigError::Invalid {
                section: "builtin",
                message: "a built-in problem may only override [solve], [output] and name".into(),
            });
        }
        let base = catalog::get(&name)?;
        Ok(ProblemConfig {
            builtin: Some(name),
            name: self.name.or(base.name),
            solve: self.solve.overlay(base.solve),
            output: self.output.overlay(base.output),
            ..base
        })
    }

    pub fn name(&self) -> String {
        self.name
            .clone()
            .or_else(|| self.builtin.clone())
            .unwrap_or_else(|| "problem".into())
    }

    pub fn dimension(&self) -> Result<usize, ConfigError> {
        let from_map = match &self.map {
            Some(MapConfig::Quadratic3d { .. }) => Some(3),
            Some(MapConfig::Quadratic { .. }) | Some(MapConfig::Ellipse { .. }) => Some(2),
            Some(MapConfig::Expression { components }) => Some(components.len()),
            _ => None,
        };
        let d = match (self.dimension, from_map) {
            (Some(d), Some(m)) if d != m => {
                return Err(ConfigError::Invalid {
                    section: "map",
                    message: format!("map has dimension {m} but dimension = {d}"),
                })
            }
            (Some(d), _) | (None, Some(d)) => d,
            (None, None) => 2,
        };
        if d != 2 && d != 3 {
            return Err(ConfigError::Invalid {
                section: "dimension",
                message: format!("dimension must be 2 or 3, got {d}"),
            });
        }
        Ok(d)
    }

    pub fn plan(&self) -> Result<StudyPlan, ConfigError> {
        let s = &self.solve;
        let defaults = SolveConfig::default();
        let report_from = s.n_start.unwrap_or(1);
        let report_to = s.n_end.unwrap_or(defaults.n_end.max(report_from));
        let start = s.continuation_start.unwrap_or(report_from);
        let invalid = |message: String| ConfigError::Invalid {
            section: "solve",
            message,
        };
        if start < 1 || start > report_from || report_from > report_to {
            return Err(invalid(format!(
                "need 1 <= continuation_start ({start}) <= n_start ({report_from}) <= n_end ({report_to})"
            )));
        }
        if let Some(r) = s.reference {
            if r <= report_to {
                return Err(invalid(format!(
                    "reference degree {r} must exceed n_end {report_to}"
                )));
            }
        }
        let solve = SolveConfig {
            n_start: start,
            n_end: s.reference.unwrap_or(report_to),
            newton_tol: s.newton_tol.unwrap_or(defaults.newton_tol),
            max_newton: s.max_newton.unwrap_or(defaults.max_newton),
            damping: s.damping.unwrap_or(defaults.damping),
            max_halvings: s.max_halvings.unwrap_or(defaults.max_halvings),
            initial_guess: match &s.initial_guess {
                None => InitialGuess::Zeros,
                Some(GuessConfig::Constant(c)) => InitialGuess::Constant(*c),
                Some(GuessConfig::Coefficients(v)) => InitialGuess::Coefficients(v.clone()),
            },
            extra_quadrature: s.extra_quadrature.unwrap_or(0),
            neumann_lift_degree: s.neumann_lift_degree,
        };
        solve.validate().map_err(|e| invalid(e.to_string()))?;
        Ok(StudyPlan {
            solve,
            report_from,
            report_to,
            reference: s.reference,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_definition_parses() {
        let cfg = ProblemConfig::from_toml(
            r#"
            name = "demo"
            [map]
            kind = "quadratic"
            a = 0.5
            [nonlinearity]
            f = "u"
            [solve]
            n_start = 2
            n_end = 6
            reference = 9
            initial_guess = 1.5
            "#,
        )
        .unwrap();
        assert_eq!(cfg.map, Some(MapConfig::Quadratic { a: 0.5 }));
        assert_eq!(cfg.dimension().unwrap(), 2);
        let plan = cfg.plan().unwrap();
        assert_eq!((plan.solve.n_start, plan.solve.n_end), (2, 9));
        assert_eq!((plan.report_from, plan.report_to), (2, 6));
        assert_eq!(plan.solve.initial_guess, InitialGuess::Constant(1.5));
    }

    #[test]
    fn builtin_overrides_solve_section() {
        let cfg = ProblemConfig::from_toml(
            r#"
            builtin = "paper-planar-cos"
            [solve]
            n_end = 8
            reference = 10
            "#,
        )
        .unwrap();
        assert_eq!(cfg.map, Some(MapConfig::Quadratic { a: 0.95 }));
        let plan = cfg.plan().unwrap();
        assert_eq!(plan.report_to, 8);
        assert_eq!(plan.reference, Some(10));
        assert_eq!(plan.report_from, 5);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ProblemConfig::from_toml("builtin = \"nope\"").is_err());
        assert!(ProblemConfig::from_toml("colour = 3").is_err());
        assert!(
            ProblemConfig::from_toml("builtin = \"paper-3d\"\n[map]\nkind = \"identity\"").is_err()
        );
        let cfg = ProblemConfig::from_toml("[solve]\nn_start = 4\nn_end = 3").unwrap();
        assert!(cfg.plan().is_err());
        let cfg = ProblemConfig::from_toml("[solve]\nn_end = 5\nreference = 5").unwrap();
        assert!(cfg.plan().is_err());
        let cfg =
            ProblemConfig::from_toml("dimension = 3\n[map]\nkind = \"ellipse\"\na = 1\nb = 2")
                .unwrap();
        assert!(cfg.dimension().is_err());
    }
}
