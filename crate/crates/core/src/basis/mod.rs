//! Orthonormal polynomial bases on the unit disk and the unit ball.
//!
//! On `B^2` the degree-`m` block is spanned by the ridge polynomials
//! `U_m(x cos(k h) + y sin(k h)) / sqrt(pi)`, `h = pi / (m + 1)`, `k = 0..=m`.
//! On `B^3` the block is spanned by the Dunkl-Xu product polynomials
//!
//! ```text
//! C_{m-j-k}^{j+k+3/2}(x) (1-x^2)^{j/2} C_j^{k+1}(y / sqrt(1-x^2))
//!     (1-x^2-y^2)^{k/2} C_k^{1/2}(z / sqrt(1-x^2-y^2))
//! ```
//!
//! evaluated through homogenized Gegenbauer polynomials so that neither the
//! values nor the gradients involve square roots.
//!
//! A bubble basis multiplies every function by `b(x) = 1 - |x|^2`, which gives
//! the `H^1_0` space used for Dirichlet problems.

pub mod poly;

pub use poly::{chebyshev_u, gegenbauer, gegenbauer_with_derivative, homogeneous_gegenbauer};

use std::f64::consts::PI;
use std::sync::Arc;

use crate::quadrature;
use crate::{polynomial_count, Error, Result};

/// Label of one basis function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BasisLabel {
    /// Ridge polynomial `phi_{m,k}` on the disk.
    Ridge { m: usize, k: usize },
    /// Dunkl-Xu polynomial `phi_{m,j,k}` on the ball.
    Ball { m: usize, j: usize, k: usize },
}

impl BasisLabel {
    pub fn degree(&self) -> usize {
        match *self {
            BasisLabel::Ridge { m, .. } | BasisLabel::Ball { m, .. } => m,
        }
    }
}

/// Ordered labels of an orthonormal basis of polynomials of degree `<= n`.
///
/// The canonical order runs through the degree blocks `m = 0..=n`; inside a
/// block `k = 0..=m` on the disk and `(j, k)` lexicographically with
/// `j + k <= m` on the ball. The order for `n - 1` is a prefix of the order
/// for `n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiIndexOrder {
    dim: usize,
    degree: usize,
    entries: Vec<BasisLabel>,
}

impl MultiIndexOrder {
    pub fn new(dim: usize, degree: usize) -> Result<Self> {
        let mut entries = Vec::with_capacity(match dim {
            2 | 3 => polynomial_count(dim, degree),
            d => return Err(Error::Dimension(d)),
        });
        for m in 0..=degree {
            if dim == 2 {
                entries.extend((0..=m).map(|k| BasisLabel::Ridge { m, k }));
            } else {
                for j in 0..=m {
                    entries.extend((0..=m - j).map(|k| BasisLabel::Ball { m, j, k }));
                }
            }
        }
        Ok(Self {
            dim,
            degree,
            entries,
        })
    }

    /// Same labels rearranged: entry `i` of the result is entry `perm[i]` of `self`.
    ///
    /// Permuted orders are not nested; continuation requires canonical orders.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.entries.len()];
        if perm.len() != self.entries.len() {
            return Err(Error::LengthMismatch {
                expected: self.entries.len(),
                got: perm.len(),
            });
        }
        for &p in perm {
            if p >= seen.len() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidParameter(format!(
                    "not a permutation: {perm:?}"
                )));
            }
        }
        Ok(Self {
            dim: self.dim,
            degree: self.degree,
            entries: perm.iter().map(|&p| self.entries[p]).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[BasisLabel] {
        &self.entries
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BasisKind {
    Plain,
    Bubble,
}

impl BasisKind {
    pub fn name(&self) -> &'static str {
        match self {
            BasisKind::Plain => "plain",
            BasisKind::Bubble => "bubble",
        }
    }
}

/// An orthonormal basis of `Pi_n^d`, optionally multiplied by the bubble `1 - |x|^2`.
#[derive(Clone, Debug)]
pub struct BasisSet {
    order: MultiIndexOrder,
    kind: BasisKind,
    /// `1 / h` for every entry, in order.
    scale: Vec<f64>,
}

impl BasisSet {
    /// Builds a plain basis over `order`. On the ball the normalization constants
    /// are computed here, per degree block, as quadrature norms of the
    /// unnormalized products with a rule exact to degree `2m`.
    pub fn new(order: MultiIndexOrder) -> Result<Self> {
        let scale = match order.dim {
            2 => vec![1.0 / PI.sqrt(); order.len()],
            3 => ball_normalization(order.entries())?,
            d => return Err(Error::Dimension(d)),
        };
        Ok(Self {
            order,
            kind: BasisKind::Plain,
            scale,
        })
    }

    pub fn plain(dim: usize, degree: usize) -> Result<Self> {
        Self::new(MultiIndexOrder::new(dim, degree)?)
    }

    pub fn bubble(dim: usize, degree: usize) -> Result<Self> {
        Self::plain(dim, degree)?.bubble_wrap()
    }

    pub fn with_kind(dim: usize, degree: usize, kind: BasisKind) -> Result<Self> {
        let plain = Self::plain(dim, degree)?;
        match kind {
            BasisKind::Plain => Ok(plain),
            BasisKind::Bubble => plain.bubble_wrap(),
        }
    }

    /// Multiplies every function by `1 - |x|^2`.
    pub fn bubble_wrap(self) -> Result<Self> {
        if self.kind != BasisKind::Plain {
            return Err(Error::InvalidParameter(
                "basis is already bubble-wrapped".into(),
            ));
        }
        Ok(Self {
            kind: BasisKind::Bubble,
            ..self
        })
    }

    /// Same functions in a different order (see [`MultiIndexOrder::permuted`]).
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let order = self.order.permuted(perm)?;
        Ok(Self {
            order,
            kind: self.kind,
            scale: perm.iter().map(|&p| self.scale[p]).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.order.dim
    }

    pub fn degree(&self) -> usize {
        self.order.degree
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn order(&self) -> &MultiIndexOrder {
        &self.order
    }

    /// Writes all values and gradients at `x`.
    ///
    /// `grads` is row-major `len() x dim()`: the gradient of function `l`
    /// occupies `grads[l*dim..(l+1)*dim]`.
    pub fn eval_into(&self, x: &[f64], values: &mut [f64], grads: &mut [f64]) {
        let d = self.dim();
        debug_assert_eq!(x.len(), d);
        debug_assert_eq!(values.len(), self.len());
        debug_assert_eq!(grads.len(), self.len() * d);
        for (l, label) in self.order.entries.iter().enumerate() {
            let g = &mut grads[l * d..(l + 1) * d];
            let v = match *label {
                BasisLabel::Ridge { m, k } => ridge_raw(m, k, x, g),
                BasisLabel::Ball { m, j, k } => ball_raw(m, j, k, x, g),
            };
            let c = self.scale[l];
            values[l] = c * v;
            g.iter_mut().for_each(|gi| *gi *= c);
        }
        if self.kind == BasisKind::Bubble {
            let b = 1.0 - x.iter().map(|v| v * v).sum::<f64>();
            for l in 0..self.len() {
                let phi = values[l];
                for (i, xi) in x.iter().enumerate() {
                    let gi = &mut grads[l * d + i];
                    *gi = b * *gi - 2.0 * xi * phi;
                }
                values[l] = b * phi;
            }
        }
    }

    /// Values and gradients at `x` (gradients row-major, see [`Self::eval_into`]).
    pub fn eval(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut v = vec![0.0; self.len()];
        let mut g = vec![0.0; self.len() * self.dim()];
        self.eval_into(x, &mut v, &mut g);
        (v, g)
    }

    pub fn values(&self, x: &[f64]) -> Vec<f64> {
        self.eval(x).0
    }
}

/// Unnormalized ridge polynomial `U_m(x cos(kh) + y sin(kh))`, `h = pi/(m+1)`.
fn ridge_raw(m: usize, k: usize, x: &[f64], grad: &mut [f64]) -> f64 {
    let angle = k as f64 * PI / (m + 1) as f64;
    let (s, c) = angle.sin_cos();
    let (u, du) = chebyshev_u(m, x[0] * c + x[1] * s);
    grad[0] = du * c;
    grad[1] = du * s;
    u
}

/// Unnormalized Dunkl-Xu product in polynomial (square-root free) form.
fn ball_raw(m: usize, j: usize, k: usize, p: &[f64], grad: &mut [f64]) -> f64 {
    let (x, y, z) = (p[0], p[1], p[2]);
    let w1 = 1.0 - x * x;
    let w2 = w1 - y * y;
    let (a, da) = gegenbauer_with_derivative(m - j - k, (j + k) as f64 + 1.5, x);
    let (b, b_y, b_w) = homogeneous_gegenbauer(j, k as f64 + 1.0, y, w1);
    let (c, c_z, c_w) = homogeneous_gegenbauer(k, 0.5, z, w2);
    let b_x = -2.0 * x * b_w;
    let c_x = -2.0 * x * c_w;
    let c_y = -2.0 * y * c_w;
    grad[0] = da * b * c + a * b_x * c + a * b * c_x;
    grad[1] = a * (b_y * c + b * c_y);
    grad[2] = a * b * c_z;
    a * b * c
}

fn ball_normalization(entries: &[BasisLabel]) -> Result<Vec<f64>> {
    let max_degree = entries.iter().map(BasisLabel::degree).max().unwrap_or(0);
    let rules = (0..=max_degree)
        .map(|m| quadrature::rule_with_exactness(3, 2 * m))
        .collect::<Result<Vec<_>>>()?;
    let mut g = [0.0; 3];
    entries
        .iter()
        .map(|label| match *label {
            BasisLabel::Ball { m, j, k } => {
                let norm2 = rules[m].integrate(|x| {
                    let v = ball_raw(m, j, k, x, &mut g);
                    v * v
                });
                Ok(1.0 / norm2.sqrt())
            }
            BasisLabel::Ridge { .. } => Err(Error::InvalidParameter(
                "ridge label in a ball basis".into(),
            )),
        })
        .collect()
}

/// A function `sum_l alpha_l psi_l` over a basis.
#[derive(Clone, Debug)]
pub struct Expansion {
    pub basis: Arc<BasisSet>,
    pub coefficients: Vec<f64>,
}

impl Expansion {
    pub fn new(basis: Arc<BasisSet>, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != basis.len() {
            return Err(Error::LengthMismatch {
                expected: basis.len(),
                got: coefficients.len(),
            });
        }
        Ok(Self {
            basis,
            coefficients,
        })
    }

    pub fn zero(basis: Arc<BasisSet>) -> Self {
        let n = basis.len();
        Self {
            basis,
            coefficients: vec![0.0; n],
        }
    }

    /// Value at a ball point.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let v = self.basis.values(x);
        dot(&v, &self.coefficients)
    }

    /// Value and gradient at a ball point.
    pub fn eval_with_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let d = self.basis.dim();
        let (v, g) = self.basis.eval(x);
        let mut grad = vec![0.0; d];
        for (l, a) in self.coefficients.iter().enumerate() {
            for i in 0..d {
                grad[i] += a * g[l * d + i];
            }
        }
        (dot(&v, &self.coefficients), grad)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_ball_point(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
        loop {
            let p: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            if p.iter().map(|v| v * v).sum::<f64>() < 0.95 {
                return p;
            }
        }
    }

    fn gram_deviation(basis: &BasisSet, rule: &quadrature::QuadratureRule) -> f64 {
        let n = basis.len();
        let mut gram = vec![0.0; n * n];
        for (x, w) in rule.nodes().zip(rule.weights()) {
            let v = basis.values(x);
            for a in 0..n {
                for b in 0..n {
                    gram[a * n + b] += w * v[a] * v[b];
                }
            }
        }
        let mut dev: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let id = if a == b { 1.0 } else { 0.0 };
                dev = dev.max((gram[a * n + b] - id).abs());
            }
        }
        dev
    }

    fn fd_check(basis: &BasisSet, x: &[f64], tol: f64) {
        let d = basis.dim();
        let h = 1e-5;
        let (_, g) = basis.eval(x);
        for i in 0..d {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            let (vp, vm) = (basis.values(&xp), basis.values(&xm));
            for l in 0..basis.len() {
                let fd = (vp[l] - vm[l]) / (2.0 * h);
                let an = g[l * d + i];
                assert!(
                    (fd - an).abs() <= tol * an.abs().max(1.0),
                    "l={l} i={i} fd={fd} analytic={an}"
                );
            }
        }
    }

    #[test]
    fn order_lengths_and_layout() {
        for n in 0..8 {
            assert_eq!(
                MultiIndexOrder::new(2, n).unwrap().len(),
                (n + 1) * (n + 2) / 2
            );
            assert_eq!(
                MultiIndexOrder::new(3, n).unwrap().len(),
                (n + 1) * (n + 2) * (n + 3) / 6
            );
        }
        let o = MultiIndexOrder::new(2, 2).unwrap();
        assert_eq!(o.entries()[3], BasisLabel::Ridge { m: 2, k: 0 });
        let o = MultiIndexOrder::new(3, 1).unwrap();
        assert_eq!(
            o.entries(),
            &[
                BasisLabel::Ball { m: 0, j: 0, k: 0 },
                BasisLabel::Ball { m: 1, j: 0, k: 0 },
                BasisLabel::Ball { m: 1, j: 0, k: 1 },
                BasisLabel::Ball { m: 1, j: 1, k: 0 },
            ]
        );
        assert!(MultiIndexOrder::new(4, 1).is_err());
    }

    #[test]
    fn orders_are_nested() {
        for d in [2, 3] {
            for n in 1..7 {
                let big = MultiIndexOrder::new(d, n).unwrap();
                let small = MultiIndexOrder::new(d, n - 1).unwrap();
                assert_eq!(&big.entries()[..small.len()], small.entries());
            }
        }
    }

    #[test]
    fn ridge_constant() {
        let b = BasisSet::plain(2, 0).unwrap();
        let (v, g) = b.eval(&[0.2, -0.1]);
        assert_relative_eq!(v[0], 1.0 / PI.sqrt(), epsilon = 1e-15);
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn ridge_degree_one_at_origin() {
        let b = BasisSet::plain(2, 1).unwrap();
        let (v, g) = b.eval(&[0.0, 0.0]);
        assert_eq!(v[1], 0.0);
        assert_relative_eq!(g[2], 2.0 / PI.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(g[3], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn ridge_orthonormal() {
        for n in 0..=8 {
            let b = BasisSet::plain(2, n).unwrap();
            let rule = quadrature::rule_with_exactness(2, 2 * n).unwrap();
            assert!(gram_deviation(&b, &rule) < 1e-10, "n={n}");
        }
        let b = BasisSet::plain(2, 6).unwrap();
        assert!(gram_deviation(&b, &quadrature::disk_rule(6).unwrap()) < 1e-12);
    }

    #[test]
    fn ball_constant() {
        let b = BasisSet::plain(3, 0).unwrap();
        let v = b.values(&[0.1, -0.5, 0.3]);
        assert_relative_eq!(v[0], 1.0 / (4.0 * PI / 3.0).sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn ball_orthonormal() {
        for n in 0..=5 {
            let b = BasisSet::plain(3, n).unwrap();
            let rule = quadrature::rule_with_exactness(3, 2 * n).unwrap();
            assert!(gram_deviation(&b, &rule) < 1e-10, "n={n}");
        }
        let b = BasisSet::plain(3, 3).unwrap();
        assert!(gram_deviation(&b, &quadrature::ball_rule(5).unwrap()) < 1e-10);
    }

    #[test]
    fn ball_gradient_matches_differences() {
        let b = BasisSet::plain(3, 4).unwrap();
        fd_check(&b, &[0.1, 0.2, -0.3], 1e-7);
    }

    #[test]
    fn ball_evaluates_on_singular_lines() {
        let b = BasisSet::plain(3, 5).unwrap();
        for p in [
            [1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.6, 0.8, 0.0],
            [0.0, 0.0, 1.0],
        ] {
            let (v, g) = b.eval(&p);
            assert!(v.iter().chain(&g).all(|t| t.is_finite()));
        }
        // continuity across the removable singularity at x = 1
        let (v1, _) = b.eval(&[1.0, 0.0, 0.0]);
        let (v2, _) = b.eval(&[1.0 - 1e-9, 1e-9, 0.0]);
        for (a, c) in v1.iter().zip(&v2) {
            assert!((a - c).abs() < 1e-6 * a.abs().max(1.0));
        }
    }

    #[test]
    fn bubble_examples() {
        let b = BasisSet::bubble(2, 3).unwrap();
        assert_relative_eq!(b.values(&[0.0, 0.0])[0], 1.0 / PI.sqrt(), epsilon = 1e-15);
        fd_check(&b, &[0.3, 0.4], 1e-7);
        let b3 = BasisSet::bubble(3, 3).unwrap();
        fd_check(&b3, &[0.3, -0.2, 0.4], 1e-7);
        assert!(BasisSet::bubble(2, 1).unwrap().bubble_wrap().is_err());
    }

    #[test]
    fn bubble_vanishes_on_sphere() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in [2, 3] {
            let b = BasisSet::bubble(d, 6).unwrap();
            for _ in 0..100 {
                let mut p: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                let r = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                p.iter_mut().for_each(|v| *v /= r);
                assert!(b.values(&p).iter().all(|v| v.abs() <= 1e-14), "{p:?}");
            }
        }
    }

    #[test]
    fn gradients_match_differences_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let bases = [
            BasisSet::plain(2, 8).unwrap(),
            BasisSet::bubble(2, 8).unwrap(),
            BasisSet::plain(3, 5).unwrap(),
            BasisSet::bubble(3, 5).unwrap(),
        ];
        for b in &bases {
            for _ in 0..50 {
                let p = random_ball_point(&mut rng, b.dim());
                fd_check(b, &p, 1e-6);
            }
        }
    }

    #[test]
    fn restriction_to_lines_has_bounded_degree() {
        // values along a line through the origin are reproduced by the
        // interpolating polynomial of degree n through n+1 samples
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (d, n) in [(2, 6), (3, 4)] {
            let b = BasisSet::plain(d, n).unwrap();
            let dir: Vec<f64> = {
                let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                let r = v.iter().map(|t| t * t).sum::<f64>().sqrt();
                v.iter().map(|t| t / r).collect()
            };
            let ts: Vec<f64> = (0..=n + 1)
                .map(|i| -0.9 + 1.8 * i as f64 / (n + 1) as f64)
                .collect();
            let samples: Vec<Vec<f64>> = ts
                .iter()
                .map(|t| b.values(&dir.iter().map(|c| c * t).collect::<Vec<_>>()))
                .collect();
            let target = ts[n + 1];
            for l in 0..b.len() {
                // Lagrange interpolation through the first n+1 samples
                let mut interp = 0.0;
                for i in 0..=n {
                    let mut li = 1.0;
                    for k in 0..=n {
                        if k != i {
                            li *= (target - ts[k]) / (ts[i] - ts[k]);
                        }
                    }
                    interp += li * samples[i][l];
                }
                let v = samples[n + 1][l];
                assert!((interp - v).abs() < 1e-9 * v.abs().max(1.0), "d={d} l={l}");
            }
        }
    }

    #[test]
    fn permuted_basis_reorders_values() {
        let b = BasisSet::plain(3, 2).unwrap();
        let perm: Vec<usize> = (0..b.len()).rev().collect();
        let p = b.permuted(&perm).unwrap();
        let x = [0.2, 0.1, -0.4];
        let (v, vp) = (b.values(&x), p.values(&x));
        for (i, &src) in perm.iter().enumerate() {
            assert_eq!(vp[i], v[src]);
        }
        assert!(b.permuted(&[0, 0, 1]).is_err());
    }

    proptest! {
        #[test]
        fn nested_values_are_identical(
            n in 1usize..8, d in 2usize..4,
            a in -0.7f64..0.7, c in -0.7f64..0.7, e in -0.5f64..0.5,
        ) {
            let x: Vec<f64> = [a, c, e][..d].to_vec();
            for kind in [BasisKind::Plain, BasisKind::Bubble] {
                let big = BasisSet::with_kind(d, n, kind).unwrap();
                let small = BasisSet::with_kind(d, n - 1, kind).unwrap();
                let (vb, gb) = big.eval(&x);
                let (vs, gs) = small.eval(&x);
                prop_assert_eq!(&vb[..vs.len()], &vs[..]);
                prop_assert_eq!(&gb[..gs.len()], &gs[..]);
            }
        }
    }
}
