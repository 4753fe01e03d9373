//! Univariate recurrences: Chebyshev polynomials of the second kind and
//! Gegenbauer polynomials, including the homogenized Gegenbauer form used by
//! the ball basis.

/// `U_n(t)` and `U_n'(t)` by the three-term recurrences
/// `U_{n+1} = 2t U_n - U_{n-1}` and `U'_{n+1} = 2 U_n + 2t U'_n - U'_{n-1}`.
pub fn chebyshev_u(n: usize, t: f64) -> (f64, f64) {
    let (mut u0, mut d0) = (1.0, 0.0);
    if n == 0 {
        return (u0, d0);
    }
    let (mut u1, mut d1) = (2.0 * t, 2.0);
    for _ in 1..n {
        let u2 = 2.0 * t * u1 - u0;
        let d2 = 2.0 * u1 + 2.0 * t * d1 - d0;
        (u0, d0, u1, d1) = (u1, d1, u2, d2);
    }
    (u1, d1)
}

/// Gegenbauer polynomial `C_i^lambda(t)` from
/// `i C_i = 2(i + lambda - 1) t C_{i-1} - (i + 2 lambda - 2) C_{i-2}`.
pub fn gegenbauer(i: usize, lambda: f64, t: f64) -> f64 {
    homogeneous_gegenbauer(i, lambda, t, 1.0).0
}

/// `(C_i^lambda(t), d/dt C_i^lambda(t))`, the derivative from
/// `d/dt C_i^lambda = 2 lambda C_{i-1}^{lambda+1}`.
pub fn gegenbauer_with_derivative(i: usize, lambda: f64, t: f64) -> (f64, f64) {
    let value = gegenbauer(i, lambda, t);
    let deriv = if i == 0 {
        0.0
    } else {
        2.0 * lambda * gegenbauer(i - 1, lambda + 1.0, t)
    };
    (value, deriv)
}

/// Homogenized Gegenbauer polynomial `G_i(a, w) = w^{i/2} C_i^lambda(a / sqrt(w))`.
///
/// `C_i^lambda` has the parity of `i`, so `G_i` is a polynomial in `a` and `w`
/// and stays finite at `w = 0`. Returns `(G, dG/da, dG/dw)` from
/// `i G_i = 2(i + lambda - 1) a G_{i-1} - (i + 2 lambda - 2) w G_{i-2}`.
pub fn homogeneous_gegenbauer(i: usize, lambda: f64, a: f64, w: f64) -> (f64, f64, f64) {
    // (value, d/da, d/dw) for degrees i-2 and i-1
    let mut prev = (1.0, 0.0, 0.0);
    if i == 0 {
        return prev;
    }
    let mut cur = (2.0 * lambda * a, 2.0 * lambda, 0.0);
    for deg in 2..=i {
        let k = deg as f64;
        let c1 = 2.0 * (k + lambda - 1.0) / k;
        let c2 = (k + 2.0 * lambda - 2.0) / k;
        let next = (
            c1 * a * cur.0 - c2 * w * prev.0,
            c1 * (cur.0 + a * cur.1) - c2 * w * prev.1,
            c1 * a * cur.2 - c2 * (prev.0 + w * prev.2),
        );
        prev = cur;
        cur = next;
    }
    cur
}
