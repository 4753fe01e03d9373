//! Gauss rules on intervals and product rules on the unit disk and unit ball.
//!
//! One-dimensional nodes and weights come from the Golub-Welsch eigenvalue
//! problem for the Jacobi matrix of the weight's orthogonal polynomials. The
//! disk rule is Gauss-Legendre in `r` with the trapezoidal rule in the azimuth;
//! the ball rule adds a Gauss-Legendre rule in `cos(phi)` and takes the radial
//! nodes from the Gauss rule for the weight `(1 + t)^2` on `[-1, 1]`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::{Error, Result};

/// Nodes and positive weights on the closed unit ball `B^d`.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    dim: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    exactness: usize,
}

impl QuadratureRule {
    /// Builds a rule from flat node storage (`dim` coordinates per node).
    pub fn new(dim: usize, nodes: Vec<f64>, weights: Vec<f64>, exactness: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Dimension(dim));
        }
        if nodes.len() != dim * weights.len() {
            return Err(Error::LengthMismatch {
                expected: dim * weights.len(),
                got: nodes.len(),
            });
        }
        Ok(Self {
            dim,
            nodes,
            weights,
            exactness,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Highest total degree integrated exactly.
    pub fn exactness(&self) -> usize {
        self.exactness
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[f64]> {
        self.nodes.chunks_exact(self.dim)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Sums `w_i g(x_i)` in node order.
    pub fn integrate<F: FnMut(&[f64]) -> f64>(&self, mut g: F) -> f64 {
        self.nodes().zip(&self.weights).map(|(x, w)| w * g(x)).sum()
    }
}

/// Three-term recurrence of the monic Jacobi polynomials for the weight
/// `(1 - t)^alpha (1 + t)^beta`: diagonal `a_0..a_{n-1}`, off-diagonal
/// `b_1..b_{n-1}` and the total mass `mu_0`.
fn jacobi_recurrence(n: usize, alpha: f64, beta: f64) -> (Vec<f64>, Vec<f64>, f64) {
    let ab = alpha + beta;
    let diag = (0..n)
        .map(|i| {
            if i == 0 {
                (beta - alpha) / (ab + 2.0)
            } else {
                let k = i as f64;
                (beta * beta - alpha * alpha) / ((2.0 * k + ab) * (2.0 * k + ab + 2.0))
            }
        })
        .collect();
    let off = (1..n)
        .map(|i| {
            let k = i as f64;
            let s = 2.0 * k + ab;
            let num = 4.0 * k * (k + alpha) * (k + beta) * (k + ab);
            let den = s * s * (s + 1.0) * (s - 1.0);
            (num / den).sqrt()
        })
        .collect();
    let mu0 = 2f64.powf(ab + 1.0) * gamma_small(alpha + 1.0) * gamma_small(beta + 1.0)
        / gamma_small(ab + 2.0);
    (diag, off, mu0)
}

/// Gamma function for the non-negative integer arguments used here.
fn gamma_small(x: f64) -> f64 {
    debug_assert!(x >= 1.0 && x.fract() == 0.0);
    (1..x as usize).map(|k| k as f64).product()
}

/// Golub-Welsch: nodes are the eigenvalues of the Jacobi matrix, weights are
/// `mu_0` times the squared first eigenvector components. Nodes ascending.
fn golub_welsch(diag: &[f64], off: &[f64], mu0: f64) -> (Vec<f64>, Vec<f64>) {
    let n = diag.len();
    let mut jm = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        jm[(i, i)] = diag[i];
        if i + 1 < n {
            jm[(i, i + 1)] = off[i];
            jm[(i + 1, i)] = off[i];
        }
    }
    let eig = SymmetricEigen::new(jm);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Gauss-Legendre rule with `count` nodes mapped to `[a, b]`.
///
/// Exact for polynomials of degree `<= 2 count - 1`.
pub fn gauss_legendre(count: usize, a: f64, b: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if count == 0 {
        return Err(Error::InvalidParameter(
            "Gauss rule needs at least one node".into(),
        ));
    }
    let (diag, off, mu0) = jacobi_recurrence(count, 0.0, 0.0);
    let (t, w) = golub_welsch(&diag, &off, mu0);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    // symmetric rule: enforce exact antisymmetry of the nodes
    let nodes = (0..count)
        .map(|i| {
            let ti = 0.5 * (t[i] - t[count - 1 - i]);
            mid + half * ti
        })
        .collect();
    let weights = (0..count)
        .map(|i| half * 0.5 * (w[i] + w[count - 1 - i]))
        .collect();
    Ok((nodes, weights))
}

/// Gauss rule on `[-1, 1]` for the weight `(1 + t)^2` with `count` nodes.
///
/// Returns `(zeta, nu')`; exact for `int (1+t)^2 p(t) dt` with `deg p <= 2 count - 1`.
/// The weights sum to `8/3`.
pub fn gauss_weighted_1plus_t_sq(count: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if count == 0 {
        return Err(Error::InvalidParameter(
            "Gauss rule needs at least one node".into(),
        ));
    }
    let (diag, off, mu0) = jacobi_recurrence(count, 0.0, 2.0);
    Ok(golub_welsch(&diag, &off, mu0))
}

/// Radial rule for `int_0^1 r^2 v(r) dr`: nodes `(zeta_k + 1)/2`, weights `nu'_k / 8`.
pub fn radial_r2_rule(count: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let (z, w) = gauss_weighted_1plus_t_sq(count)?;
    Ok((
        z.iter().map(|t| 0.5 * (t + 1.0)).collect(),
        w.iter().map(|w| w / 8.0).collect(),
    ))
}

/// Product rule on the unit disk, exact on polynomials of total degree `<= 2q`.
///
/// `q + 1` Gauss-Legendre radii on `[0, 1]` times `2q + 1` equispaced angles
/// `2 pi m / (2q + 1)`, `m = 0..=2q`; the polar Jacobian `r` is folded into the
/// weights. Nodes are ordered radius-major.
pub fn disk_rule(q: usize) -> Result<QuadratureRule> {
    let (r, w) = gauss_legendre(q + 1, 0.0, 1.0)?;
    let na = 2 * q + 1;
    let dtheta = 2.0 * PI / na as f64;
    let mut nodes = Vec::with_capacity(2 * r.len() * na);
    let mut weights = Vec::with_capacity(r.len() * na);
    for (rl, wl) in r.iter().zip(&w) {
        for m in 0..na {
            let theta = dtheta * m as f64;
            nodes.push(rl * theta.cos());
            nodes.push(rl * theta.sin());
            weights.push(wl * dtheta * rl);
        }
    }
    QuadratureRule::new(2, nodes, weights, 2 * q)
}

/// Spherical product rule on the unit ball, exact on polynomials of total
/// degree `<= 2q - 1`.
///
/// `2q` azimuths `theta_i = pi i / q` (`i = 1..=2q`), `q` Gauss-Legendre nodes in
/// `cos(phi)` and `q` radial nodes from the `(1+t)^2` rule; weight
/// `(pi/q) omega_j nu_k`. Loop order is azimuth, polar, radial.
pub fn ball_rule(q: usize) -> Result<QuadratureRule> {
    if q == 0 {
        return Err(Error::InvalidParameter("ball rule needs q >= 1".into()));
    }
    let (xi, omega) = gauss_legendre(q, -1.0, 1.0)?;
    let (r, nu) = radial_r2_rule(q)?;
    let dtheta = PI / q as f64;
    let mut nodes = Vec::with_capacity(3 * 2 * q * q * q);
    let mut weights = Vec::with_capacity(2 * q * q * q);
    for i in 1..=2 * q {
        let theta = dtheta * i as f64;
        let (st, ct) = theta.sin_cos();
        for (cphi, wj) in xi.iter().zip(&omega) {
            let sphi = (1.0 - cphi * cphi).max(0.0).sqrt();
            for (rk, wk) in r.iter().zip(&nu) {
                nodes.push(rk * sphi * ct);
                nodes.push(rk * sphi * st);
                nodes.push(rk * cphi);
                weights.push(dtheta * wj * wk);
            }
        }
    }
    QuadratureRule::new(3, nodes, weights, 2 * q - 1)
}

/// Default rule for Galerkin degree `n`: disk `q = n + 2` (exact to `2n + 4`),
/// ball `q = n + 3` (exact to `2n + 5`).
pub fn default_rule(dim: usize, n: usize) -> Result<QuadratureRule> {
    default_rule_with_extra(dim, n, 0)
}

/// As [`default_rule`] with `extra` additional orders of over-resolution.
pub fn default_rule_with_extra(dim: usize, n: usize, extra: usize) -> Result<QuadratureRule> {
    match dim {
        2 => disk_rule(n + 2 + extra),
        3 => ball_rule(n + 3 + extra),
        d => Err(Error::Dimension(d)),
    }
}

/// Smallest rule of the family for `dim` whose exactness is at least `degree`.
pub fn rule_with_exactness(dim: usize, degree: usize) -> Result<QuadratureRule> {
    match dim {
        2 => disk_rule(degree.div_ceil(2)),
        3 => ball_rule((degree + 2) / 2),
        d => Err(Error::Dimension(d)),
    }
}

/// Quadrature on the unit sphere `S^{d-1}`: nodes are unit vectors (which are
/// also the outward normals) and weights integrate surface measure.
#[derive(Clone, Debug)]
pub struct SphereRule {
    pub dim: usize,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    /// Trapezoidal rule with `m` equispaced points on the unit circle.
    pub fn circle(m: usize) -> Self {
        let h = 2.0 * PI / m as f64;
        let mut points = Vec::with_capacity(2 * m);
        for i in 0..m {
            let t = h * i as f64;
            points.push(t.cos());
            points.push(t.sin());
        }
        Self {
            dim: 2,
            points,
            weights: vec![h; m],
        }
    }

    /// `2q` azimuths times `q` Gauss-Legendre nodes in `cos(phi)`.
    pub fn sphere(q: usize) -> Result<Self> {
        let (xi, omega) = gauss_legendre(q, -1.0, 1.0)?;
        let h = PI / q as f64;
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for i in 1..=2 * q {
            let (st, ct) = (h * i as f64).sin_cos();
            for (c, w) in xi.iter().zip(&omega) {
                let s = (1.0 - c * c).max(0.0).sqrt();
                points.extend_from_slice(&[s * ct, s * st, *c]);
                weights.push(h * w);
            }
        }
        Ok(Self {
            dim: 3,
            points,
            weights,
        })
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Gamma at positive half-integers, by recursion from Gamma(1/2) and Gamma(1).
    fn gamma_half(x2: usize) -> f64 {
        // argument is x2 / 2
        match x2 {
            1 => PI.sqrt(),
            2 => 1.0,
            _ => (x2 as f64 / 2.0 - 1.0) * gamma_half(x2 - 2),
        }
    }

    /// Closed-form `int_{B^d} x^a` via the Beta-function identity.
    pub(crate) fn monomial_integral(exps: &[usize]) -> f64 {
        if exps.iter().any(|e| e % 2 == 1) {
            return 0.0;
        }
        let d = exps.len();
        let total: usize = exps.iter().sum();
        let num: f64 = exps.iter().map(|&e| gamma_half(e + 1)).product();
        let sum2: usize = exps.iter().map(|&e| e + 1).sum();
        2.0 * num / gamma_half(sum2) / (total + d) as f64
    }

    fn monomial(x: &[f64], exps: &[usize]) -> f64 {
        x.iter().zip(exps).map(|(v, &e)| v.powi(e as i32)).product()
    }

    #[test]
    fn monomial_oracle_sanity() {
        assert_relative_eq!(monomial_integral(&[0, 0]), PI, max_relative = 1e-15);
        assert_relative_eq!(monomial_integral(&[2, 0]), PI / 4.0, max_relative = 1e-15);
        assert_relative_eq!(
            monomial_integral(&[0, 0, 0]),
            4.0 * PI / 3.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            monomial_integral(&[0, 0, 2]),
            4.0 * PI / 15.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn one_point_legendre_is_midpoint() {
        let (x, w) = gauss_legendre(1, 0.0, 1.0).unwrap();
        assert_relative_eq!(x[0], 0.5, epsilon = 1e-15);
        assert_relative_eq!(w[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn two_point_legendre() {
        let (x, w) = gauss_legendre(2, -1.0, 1.0).unwrap();
        let r = 1.0 / 3f64.sqrt();
        assert_relative_eq!(x[0], -r, epsilon = 1e-15);
        assert_relative_eq!(x[1], r, epsilon = 1e-15);
        assert_relative_eq!(w[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(w[1], 1.0, epsilon = 1e-15);
        let (x, w) = gauss_legendre(2, 0.0, 1.0).unwrap();
        let cube: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(3)).sum();
        assert!((cube - 0.25).abs() <= 1e-15);
    }

    #[test]
    fn legendre_exactness_and_interior() {
        for n in 1..=20 {
            let (x, w) = gauss_legendre(n, -2.0, 3.0).unwrap();
            assert!(x.iter().all(|&t| t > -2.0 && t < 3.0));
            assert!(w.iter().all(|&w| w > 0.0));
            for p in 0..=(2 * n - 1) {
                let exact = (3f64.powi(p as i32 + 1) - (-2f64).powi(p as i32 + 1)) / (p + 1) as f64;
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
                assert_relative_eq!(got, exact, epsilon = 1e-12, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn empty_rule_rejected() {
        assert!(gauss_legendre(0, 0.0, 1.0).is_err());
        assert!(gauss_weighted_1plus_t_sq(0).is_err());
        assert!(ball_rule(0).is_err());
    }

    #[test]
    fn weighted_rule_one_node() {
        let (z, w) = gauss_weighted_1plus_t_sq(1).unwrap();
        assert_relative_eq!(z[0], 0.5, epsilon = 1e-15);
        assert_relative_eq!(w[0], 8.0 / 3.0, epsilon = 1e-14);
        let (r, nu) = radial_r2_rule(1).unwrap();
        assert_relative_eq!(nu[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(r[0], 0.75, epsilon = 1e-15);
    }

    #[test]
    fn weighted_rule_moments() {
        // int_{-1}^{1} (1+t)^2 t^3 dt = 4/5
        let (z, w) = gauss_weighted_1plus_t_sq(2).unwrap();
        let got: f64 = z.iter().zip(&w).map(|(t, w)| w * t.powi(3)).sum();
        assert_relative_eq!(got, 0.8, epsilon = 1e-14);
        for q in 1..=10 {
            let (z, w) = gauss_weighted_1plus_t_sq(q).unwrap();
            assert!(w.iter().all(|&w| w > 0.0));
            assert_relative_eq!(w.iter().sum::<f64>(), 8.0 / 3.0, max_relative = 1e-14);
            // int_0^1 r^2 r^p dr = 1/(p+3)
            let (r, nu) = radial_r2_rule(q).unwrap();
            for p in 0..2 * q {
                let got: f64 = r.iter().zip(&nu).map(|(r, w)| w * r.powi(p as i32)).sum();
                assert_relative_eq!(got, 1.0 / (p + 3) as f64, max_relative = 1e-13);
            }
            assert!(z.iter().all(|&t| t > -1.0 && t < 1.0));
        }
    }

    #[test]
    fn disk_rule_q0() {
        let rule = disk_rule(0).unwrap();
        assert_eq!(rule.len(), 1);
        assert_relative_eq!(rule.node(0)[0], 0.5, epsilon = 1e-15);
        assert_relative_eq!(rule.weights()[0], PI, epsilon = 1e-15);
    }

    #[test]
    fn disk_rule_second_moment() {
        for q in 1..=6 {
            let rule = disk_rule(q).unwrap();
            assert_eq!(rule.len(), (q + 1) * (2 * q + 1));
            let got = rule.integrate(|x| x[0] * x[0]);
            assert!((got - PI / 4.0).abs() < 1e-14, "q={q}");
        }
    }

    #[test]
    fn disk_rule_exactness_boundary() {
        // degree 2q is exact, x^{2q+2} is beyond the declared exactness
        let q = 3;
        let rule = disk_rule(q).unwrap();
        let exact = monomial_integral(&[2 * q, 0]);
        assert_relative_eq!(
            rule.integrate(|x| x[0].powi(2 * q as i32)),
            exact,
            max_relative = 1e-13
        );
        let beyond = monomial_integral(&[2 * q + 2, 0]);
        let got = rule.integrate(|x| x[0].powi(2 * q as i32 + 2));
        assert!((got - beyond).abs() > 1e-10);
    }

    #[test]
    fn ball_rule_moments() {
        let rule = ball_rule(2).unwrap();
        assert_eq!(rule.len(), 16);
        assert_relative_eq!(
            rule.weights().iter().sum::<f64>(),
            4.0 * PI / 3.0,
            max_relative = 1e-13
        );
        for q in 2..=6 {
            let rule = ball_rule(q).unwrap();
            assert!((rule.integrate(|x| x[2] * x[2]) - 4.0 * PI / 15.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rules_cover_closed_ball_with_positive_weights() {
        for q in 1..=6 {
            for rule in [disk_rule(q).unwrap(), ball_rule(q).unwrap()] {
                assert!(rule.weights().iter().all(|&w| w > 0.0));
                assert!(rule
                    .nodes()
                    .all(|x| x.iter().map(|v| v * v).sum::<f64>() <= 1.0 + 1e-15));
                let vol = crate::ball_volume(rule.dim());
                assert_relative_eq!(
                    rule.weights().iter().sum::<f64>(),
                    vol,
                    max_relative = 1e-13
                );
            }
        }
    }

    #[test]
    fn monomial_exactness_sweep() {
        for q in 1..=6 {
            let rule = disk_rule(q).unwrap();
            for a in 0..=2 * q {
                for b in 0..=(2 * q - a) {
                    let got = rule.integrate(|x| monomial(x, &[a, b]));
                    let exact = monomial_integral(&[a, b]);
                    assert!(
                        (got - exact).abs() <= 1e-12 * exact.abs().max(1e-2),
                        "disk q={q} {a},{b}"
                    );
                }
            }
            let rule = ball_rule(q).unwrap();
            let e = 2 * q - 1;
            for a in 0..=e {
                for b in 0..=(e - a) {
                    for c in 0..=(e - a - b) {
                        let got = rule.integrate(|x| monomial(x, &[a, b, c]));
                        let exact = monomial_integral(&[a, b, c]);
                        assert!(
                            (got - exact).abs() <= 1e-12 * exact.abs().max(1e-2),
                            "ball q={q}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn smooth_integrand_converges_geometrically() {
        let g = |x: &[f64]| (x[0] + x[1]).exp();
        let diffs: Vec<f64> = (2..=10)
            .map(|q| {
                (disk_rule(q).unwrap().integrate(g) - disk_rule(q + 4).unwrap().integrate(g)).abs()
            })
            .collect();
        for w in diffs.windows(2) {
            // stop once both sit on the rounding floor
            if w[0] < 1e-13 {
                break;
            }
            assert!(w[1] < 0.5 * w[0], "{diffs:?}");
        }
    }

    #[test]
    fn sphere_rules_measure() {
        let c = SphereRule::circle(64);
        assert_relative_eq!(
            c.weights.iter().sum::<f64>(),
            2.0 * PI,
            max_relative = 1e-14
        );
        let s = SphereRule::sphere(8).unwrap();
        assert_relative_eq!(
            s.weights.iter().sum::<f64>(),
            4.0 * PI,
            max_relative = 1e-13
        );
        let z2: f64 = s
            .points()
            .zip(&s.weights)
            .map(|(p, w)| w * p[2] * p[2])
            .sum();
        assert_relative_eq!(z2, 4.0 * PI / 3.0, max_relative = 1e-13);
    }
}
