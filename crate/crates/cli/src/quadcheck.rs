//! Monomial exactness report for the disk and ball rules.

use std::f64::consts::PI;
use std::fmt::Write as _;

use spectral_ball::quadrature::{ball_rule, disk_rule};
use spectral_ball::QuadratureRule;

/// `Gamma(k / 2)` for a positive integer `k`.
fn gamma_half(k: usize) -> f64 {
    match k {
        1 => PI.sqrt(),
        2 => 1.0,
        _ => (k as f64 / 2.0 - 1.0) * gamma_half(k - 2),
    }
}

/// `int_{B^d} x^e` from `prod Gamma((e_i + 1)/2) / Gamma((|e| + d)/2 + 1)`.
pub fn monomial_integral(exps: &[usize]) -> f64 {
    if exps.iter().any(|e| e % 2 == 1) {
        return 0.0;
    }
    let top: f64 = exps.iter().map(|&e| gamma_half(e + 1)).product();
    let total: usize = exps.iter().sum::<usize>() + exps.len();
    top / gamma_half(total + 2)
}

/// All exponent vectors of total degree `deg` in `dim` variables.
pub fn exponents(dim: usize, deg: usize) -> Vec<Vec<usize>> {
    if dim == 1 {
        return vec![vec![deg]];
    }
    (0..=deg)
        .flat_map(|first| {
            exponents(dim - 1, deg - first)
                .into_iter()
                .map(move |mut rest| {
                    rest.insert(0, first);
                    rest
                })
        })
        .collect()
}

/// Worst error over monomials of one total degree. Even monomials are
/// measured relative to their integral; odd ones (integral zero) relative to
/// the integral of the matching even power of `|x|`.
pub fn degree_error(rule: &QuadratureRule, deg: usize) -> f64 {
    exponents(rule.dim(), deg)
        .iter()
        .map(|e| {
            let q = rule.integrate(|x| x.iter().zip(e).map(|(v, &k)| v.powi(k as i32)).product());
            let exact = monomial_integral(e);
            let scale = if exact != 0.0 {
                exact.abs()
            } else {
                let even: Vec<usize> = e.iter().map(|k| k + k % 2).collect();
                monomial_integral(&even)
            };
            (q - exact).abs() / scale
        })
        .fold(0.0, f64::max)
}

pub fn rule_for(dim: usize, q: usize) -> Result<QuadratureRule, String> {
    match dim {
        2 => disk_rule(q),
        3 => ball_rule(q),
        d => return Err(format!("dimension must be 2 or 3, got {d}")),
    }
    .map_err(|e| e.to_string())
}

/// Text report for `quadcheck <d> <q>`; returns the report and whether every
/// degree up to the claimed exactness is within `tol`.
pub fn report(dim: usize, q: usize, tol: f64) -> Result<(String, bool), String> {
    let rule = rule_for(dim, q)?;
    let claimed = rule.exactness();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "rule: {}D, q = {q}, {} nodes, claimed exactness {claimed}",
        dim,
        rule.len()
    );
    let _ = writeln!(out, "{:>6}  {:>12}  status", "degree", "max_rel_err");
    let mut ok = true;
    for deg in 0..=claimed + 2 {
        let err = degree_error(&rule, deg);
        let status = if deg > claimed {
            "beyond claim"
        } else if err <= tol {
            "exact"
        } else {
            ok = false;
            "FAIL"
        };
        let _ = writeln!(out, "{deg:>6}  {err:>12.3e}  {status}");
    }
    let _ = writeln!(out, "{}", if ok { "PASS" } else { "FAIL" });
    Ok((out, ok))
}
