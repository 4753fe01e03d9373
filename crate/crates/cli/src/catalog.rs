//! Built-in problems, stored as configuration text.

use crate::config::{ConfigError, ProblemConfig};

const ENTRIES: &[(&str, &str)] = &[
    (
        "paper-planar-cos",
        r#"
        name = "paper-planar-cos"
        [map]
        kind = "quadratic"
        a = 0.95
        [nonlinearity]
        f = "cos(pi*s*t)/(1+u^2)"
        [solve]
        continuation_start = 1
        n_start = 5
        n_end = 20
        reference = 25
        "#,
    ),
    (
        "paper-fisher-disk",
        r#"
        name = "paper-fisher-disk"
        [map]
        kind = "identity"
        [nonlinearity]
        f = "100*u*(1-u)"
        [solve]
        n_start = 1
        n_end = 25
        reference = 30
        initial_guess = 10.0
        "#,
    ),
    (
        "paper-neumann-ellipse",
        r#"
        name = "paper-neumann-ellipse"
        [map]
        kind = "ellipse"
        a = 2.0
        b = 1.0
        [operator]
        gamma = "1"
        [nonlinearity]
        f = "-exp(u)"
        [boundary]
        kind = "neumann"
        [manufactured]
        solution = "(1-(s/2)^2-t^2)^2*cos(2*s+t^2)"
        [solve]
        n_start = 1
        n_end = 18
        "#,
    ),
    (
        "paper-3d",
        r#"
        name = "paper-3d"
        [map]
        kind = "quadratic3d"
        a = 0.5
        b = 0.5
        [nonlinearity]
        f = "cos(6*x+y+z)/(1+u^2)"
        [solve]
        n_start = 1
        n_end = 8
        reference = 10
        "#,
    ),
    (
        "manufactured-disk",
        r#"
        name = "manufactured-disk"
        [map]
        kind = "identity"
        [nonlinearity]
        f = "0"
        [manufactured]
        solution = "(1-x^2-y^2)*cos(x+y)"
        [solve]
        n_start = 1
        n_end = 15
        "#,
    ),
    (
        "manufactured-quadratic",
        r#"
        name = "manufactured-quadratic"
        [map]
        kind = "quadratic"
        a = 0.95
        [nonlinearity]
        f = "0"
        [manufactured]
        solution = "(1-x^2-y^2)*exp(x)"
        [solve]
        n_start = 1
        n_end = 12
        extra_quadrature = 30
        "#,
    ),
];

pub fn names() -> Vec<&'static str> {
    ENTRIES.iter().map(|(n, _)| *n).collect()
}

pub fn get(name: &str) -> Result<ProblemConfig, ConfigError> {
    let text = ENTRIES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| ConfigError::UnknownBuiltin(name.to_string()))?;
    Ok(toml::from_str(text)?)
}
