//! Oracles for the acceptance suite. Nothing here calls into the solver
//! crates: rules are built by Newton iteration on the Legendre recurrence and
//! monomial integrals come from the Gamma function.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(count: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; count];
    let mut weights = vec![0.0; count];
    let n = count as f64;
    for i in 0..count.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre(count, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(count, x);
        let w = 2.0 / ((1.0 - x * x) * d * d);
        nodes[i] = -x;
        nodes[count - 1 - i] = x;
        weights[i] = w;
        weights[count - 1 - i] = w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    (p1, n * (x * p1 - p0) / (x * x - 1.0))
}

/// Points and weights of a rule on the unit ball.
#[derive(Clone, Debug)]
pub struct TensorRule {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl TensorRule {
    /// Polar rule on the disk: Gauss-Legendre in `r` (weight `r` folded in)
    /// and the trapezoid rule in the angle. Exact for polynomials of degree
    /// `< min(2 * radial, angular)`.
    pub fn disk(radial: usize, angular: usize) -> Self {
        let (t, w) = gauss_legendre(radial);
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (ti, wi) in t.iter().zip(&w) {
            let r = 0.5 * (ti + 1.0);
            for k in 0..angular {
                let th = 2.0 * PI * k as f64 / angular as f64;
                points.push(vec![r * th.cos(), r * th.sin()]);
                weights.push(0.5 * wi * r * 2.0 * PI / angular as f64);
            }
        }
        Self { points, weights }
    }

    /// Spherical rule on the ball: Gauss-Legendre in `r` and `cos(theta)`,
    /// trapezoid in the azimuth.
    pub fn ball(radial: usize, polar: usize, azimuthal: usize) -> Self {
        let (t, w) = gauss_legendre(radial);
        let (c, wc) = gauss_legendre(polar);
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (ti, wi) in t.iter().zip(&w) {
            let r = 0.5 * (ti + 1.0);
            for (ci, wci) in c.iter().zip(&wc) {
                let si = (1.0 - ci * ci).sqrt();
                for k in 0..azimuthal {
                    let ph = 2.0 * PI * k as f64 / azimuthal as f64;
                    points.push(vec![r * si * ph.cos(), r * si * ph.sin(), r * ci]);
                    weights.push(0.5 * wi * r * r * wci * 2.0 * PI / azimuthal as f64);
                }
            }
        }
        Self { points, weights }
    }

    pub fn integrate<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p))
            .sum()
    }
}

fn gamma_half(k: usize) -> f64 {
    match k {
        1 => PI.sqrt(),
        2 => 1.0,
        _ => (k as f64 / 2.0 - 1.0) * gamma_half(k - 2),
    }
}

/// `int_{B^d} prod x_i^{e_i} dx` as a ratio of Gamma values.
pub fn monomial_integral(exps: &[usize]) -> f64 {
    if exps.iter().any(|e| e % 2 == 1) {
        return 0.0;
    }
    let top: f64 = exps.iter().map(|&e| gamma_half(e + 1)).product();
    let total: usize = exps.iter().sum::<usize>() + exps.len();
    top / gamma_half(total + 2)
}

/// `int_{B^d} prod |x_i|^{e_i} dx`, the scale for monomials that integrate
/// to zero.
pub fn abs_monomial_integral(exps: &[usize]) -> f64 {
    let top: f64 = exps.iter().map(|&e| gamma_half(e + 1)).product();
    let total: usize = exps.iter().sum::<usize>() + exps.len();
    top / gamma_half(total + 2)
}

/// Least-squares slope of `log10(values)` against `n`.
pub fn log_slope(n: &[usize], values: &[f64]) -> f64 {
    let (x, y) = log_points(n, values);
    let (mx, my) = (mean(&x), mean(&y));
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Coefficient of determination of the log-linear fit.
pub fn log_fit_r2(n: &[usize], values: &[f64]) -> f64 {
    let (x, y) = log_points(n, values);
    let (mx, my) = (mean(&x), mean(&y));
    let slope = log_slope(n, values);
    let ss_res: f64 = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - my - slope * (a - mx)).powi(2))
        .sum();
    let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    1.0 - ss_res / ss_tot
}

fn log_points(n: &[usize], values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (
        n.iter().map(|&k| k as f64).collect(),
        values.iter().map(|v| v.log10()).collect(),
    )
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Number of `k` with `values[k + 1] >= values[k]`.
pub fn increases(values: &[f64]) -> usize {
    values.windows(2).filter(|w| w[1] >= w[0]).count()
}
