//! Domain maps `Phi: B^d -> Omega` and the pullback of problem coefficients.
//!
//! With `s = Phi(x)` and `J = D Phi`, the problem `-div(A grad u) + gamma u = f`
//! on `Omega` becomes
//!
//! ```text
//! -div_x(det J * A~ grad_x u~) + gamma~ u~ = f~(x, u~)
//! A~ = J^-1 A(Phi(x)) J^-T,  gamma~ = det J gamma(Phi(x)),  f~ = det J f(Phi(x), u~)
//! ```
//!
//! All assembly happens in ball coordinates; inverse maps are only used to
//! evaluate solutions at physical points.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::assembly::Nonlinearity;
use crate::{Error, MatrixField, Result, ScalarField, Site};

/// An orientation-preserving diffeomorphism from the closed unit ball.
pub trait Mapping: Send + Sync {
    fn dim(&self) -> usize;

    fn phi(&self, x: &[f64]) -> Vec<f64>;

    /// `J[i][j] = d Phi_i / d x_j`.
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64>;

    /// `Psi(s) = Phi^{-1}(s)` when a closed form exists.
    fn inverse(&self, _s: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// Stable text identifying the map and its parameters.
    fn descriptor(&self) -> String;
}

/// Shared handle to a [`Mapping`].
#[derive(Clone)]
pub struct DomainMap {
    inner: Arc<dyn Mapping>,
}

impl fmt::Debug for DomainMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DomainMap({})", self.inner.descriptor())
    }
}

impl DomainMap {
    pub fn new(mapping: Arc<dyn Mapping>) -> Result<Self> {
        match mapping.dim() {
            2 | 3 => Ok(Self { inner: mapping }),
            d => Err(Error::Dimension(d)),
        }
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(Arc::new(Identity { dim }))
    }

    /// `s = x - y + a x^2`, `t = x + y`, `0 < a < 1`.
    pub fn quadratic_2d(a: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "quadratic map needs 0 < a < 1, got {a}"
            )));
        }
        Self::new(Arc::new(Quadratic { a, b: None }))
    }

    /// `s = x - y + a x^2`, `t = x + y`, `v = 2z + b z^2`, `0 < a, b < 1`.
    pub fn quadratic_3d(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0 && b > 0.0 && b < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "quadratic map needs 0 < a, b < 1, got ({a}, {b})"
            )));
        }
        Self::new(Arc::new(Quadratic { a, b: Some(b) }))
    }

    /// `Phi(x, y) = (a x, b y)`.
    pub fn ellipse(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ellipse needs positive axes, got ({a}, {b})"
            )));
        }
        Self::new(Arc::new(Ellipse { a, b }))
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn phi(&self, x: &[f64]) -> Vec<f64> {
        self.inner.phi(x)
    }

    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        self.inner.jacobian(x)
    }

    pub fn det_jacobian(&self, x: &[f64]) -> f64 {
        self.inner.jacobian(x).determinant()
    }

    pub fn inverse(&self, s: &[f64]) -> Option<Vec<f64>> {
        self.inner.inverse(s)
    }

    pub fn has_inverse(&self) -> bool {
        let zero = vec![0.0; self.dim()];
        self.inner.inverse(&self.inner.phi(&zero)).is_some()
    }

    pub fn descriptor(&self) -> String {
        self.inner.descriptor()
    }

    pub fn site(&self, x: &[f64]) -> Site {
        Site::new(x, &self.phi(x))
    }

    /// `J(x)^{-1}`, failing unless `det J(x) > 0`.
    pub fn inverse_jacobian(&self, x: &[f64]) -> Result<(DMatrix<f64>, f64)> {
        let j = self.jacobian(x);
        let det = j.determinant();
        if !(det > 0.0) || !det.is_finite() {
            return Err(Error::SingularJacobian {
                point: x.to_vec(),
                det,
            });
        }
        let inv = j.try_inverse().ok_or_else(|| Error::SingularJacobian {
            point: x.to_vec(),
            det,
        })?;
        Ok((inv, det))
    }

    /// Checks `det J > 0` on a polar (spherical) grid of the closed ball with
    /// `resolution` radii.
    pub fn check_orientation(&self, resolution: usize) -> Result<()> {
        let grid = crate::solver::EvaluationGrid::polar(self.dim(), resolution.max(2));
        for x in grid.points() {
            self.inverse_jacobian(x)?;
        }
        Ok(())
    }

    /// Surface element and physical unit outward normal at a point `x` of the
    /// unit sphere: `dsigma_s = det J |J^-T x| dsigma_x`.
    pub fn surface_element(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (inv, det) = self.inverse_jacobian(x)?;
        let n = inv.transpose() * nalgebra::DVector::from_column_slice(x);
        let len = n.norm();
        Ok((det * len, n.iter().map(|v| v / len).collect()))
    }
}

#[derive(Debug)]
struct Identity {
    dim: usize,
}

impl Mapping for Identity {
    fn dim(&self) -> usize {
        self.dim
    }
    fn phi(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
    fn jacobian(&self, _x: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(self.dim, self.dim)
    }
    fn inverse(&self, s: &[f64]) -> Option<Vec<f64>> {
        Some(s.to_vec())
    }
    fn descriptor(&self) -> String {
        format!("identity {}", self.dim)
    }
}

#[derive(Debug)]
struct Quadratic {
    a: f64,
    b: Option<f64>,
}

impl Mapping for Quadratic {
    fn dim(&self) -> usize {
        if self.b.is_some() {
            3
        } else {
            2
        }
    }

    fn phi(&self, x: &[f64]) -> Vec<f64> {
        let mut s = vec![x[0] - x[1] + self.a * x[0] * x[0], x[0] + x[1]];
        if let Some(b) = self.b {
            s.push(2.0 * x[2] + b * x[2] * x[2]);
        }
        s
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.dim();
        let mut j = DMatrix::zeros(d, d);
        j[(0, 0)] = 1.0 + 2.0 * self.a * x[0];
        j[(0, 1)] = -1.0;
        j[(1, 0)] = 1.0;
        j[(1, 1)] = 1.0;
        if let Some(b) = self.b {
            j[(2, 2)] = 2.0 + 2.0 * b * x[2];
        }
        j
    }

    fn inverse(&self, s: &[f64]) -> Option<Vec<f64>> {
        // x = (-1 + sqrt(1 + a(s+t))) / a, rationalized
        let w = s[0] + s[1];
        let root = 1.0 + self.a * w;
        if root < 0.0 {
            return None;
        }
        let x = w / (1.0 + root.sqrt());
        let mut out = vec![x, s[1] - x];
        if let Some(b) = self.b {
            let r = 1.0 + b * s[2];
            if r < 0.0 {
                return None;
            }
            out.push(s[2] / (1.0 + r.sqrt()));
        }
        Some(out)
    }

    fn descriptor(&self) -> String {
        match self.b {
            None => format!("quadratic2d {:?}", self.a),
            Some(b) => format!("quadratic3d {:?} {:?}", self.a, b),
        }
    }
}

#[derive(Debug)]
struct Ellipse {
    a: f64,
    b: f64,
}

impl Mapping for Ellipse {
    fn dim(&self) -> usize {
        2
    }
    fn phi(&self, x: &[f64]) -> Vec<f64> {
        vec![self.a * x[0], self.b * x[1]]
    }
    fn jacobian(&self, _x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![self.a, self.b]))
    }
    fn inverse(&self, s: &[f64]) -> Option<Vec<f64>> {
        Some(vec![s[0] / self.a, s[1] / self.b])
    }
    fn descriptor(&self) -> String {
        format!("ellipse {:?} {:?}", self.a, self.b)
    }
}

/// Coefficients of the pulled-back problem on the ball.
#[derive(Clone)]
pub struct PulledBackCoefficients {
    map: DomainMap,
    diffusion: Option<MatrixField>,
    gamma: ScalarField,
    f: Nonlinearity,
}

/// Geometric data at one ball point.
#[derive(Clone, Debug)]
pub struct PointData {
    pub site: Site,
    pub det_j: f64,
    /// `A~(x) = J^-1 A J^-T`, symmetric.
    pub a_tilde: DMatrix<f64>,
    /// `det J * gamma(Phi(x))`.
    pub gamma_tilde: f64,
}

/// Pulls `A` (identity when `None`), `gamma` and `f` back to the ball through `map`.
pub fn pull_back(
    map: &DomainMap,
    diffusion: Option<MatrixField>,
    gamma: ScalarField,
    f: Nonlinearity,
) -> PulledBackCoefficients {
    PulledBackCoefficients {
        map: map.clone(),
        diffusion,
        gamma,
        f,
    }
}

impl PulledBackCoefficients {
    pub fn map(&self) -> &DomainMap {
        &self.map
    }

    pub fn at(&self, x: &[f64]) -> Result<PointData> {
        let (jinv, det_j) = self.map.inverse_jacobian(x)?;
        let site = self.map.site(x);
        let mut a_tilde = match &self.diffusion {
            Some(a) => &jinv * a(&site) * jinv.transpose(),
            None => &jinv * jinv.transpose(),
        };
        let d = a_tilde.nrows();
        for i in 0..d {
            for j in 0..i {
                let m = 0.5 * (a_tilde[(i, j)] + a_tilde[(j, i)]);
                a_tilde[(i, j)] = m;
                a_tilde[(j, i)] = m;
            }
        }
        let gamma_tilde = det_j * (self.gamma)(&site);
        Ok(PointData {
            site,
            det_j,
            a_tilde,
            gamma_tilde,
        })
    }

    pub fn det_j(&self, x: &[f64]) -> Result<f64> {
        Ok(self.map.inverse_jacobian(x)?.1)
    }

    pub fn a_tilde(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.at(x)?.a_tilde)
    }

    pub fn gamma_tilde(&self, x: &[f64]) -> Result<f64> {
        Ok(self.at(x)?.gamma_tilde)
    }

    /// `det J(x) f(Phi(x), z)`.
    pub fn f_tilde(&self, x: &[f64], z: f64) -> Result<f64> {
        let det = self.det_j(x)?;
        Ok(det * self.f.value(&self.map.site(x), z))
    }

    /// `det J(x) df/dz(Phi(x), z)`.
    pub fn df_tilde_dz(&self, x: &[f64], z: f64) -> Result<f64> {
        let det = self.det_j(x)?;
        Ok(det * self.f.dz(&self.map.site(x), z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{constant_field, Site};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(d: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        while out.len() < count {
            let p: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            if p.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
                out.push(p);
            }
        }
        out
    }

    fn zero_f() -> Nonlinearity {
        Nonlinearity::new(|_: &Site, _| 0.0, |_: &Site, _| 0.0)
    }

    #[test]
    fn quadratic_2d_examples() {
        let m = DomainMap::quadratic_2d(0.95).unwrap();
        assert_eq!(m.phi(&[0.0, 0.0]), vec![0.0, 0.0]);
        assert_relative_eq!(m.det_jacobian(&[0.0, 0.0]), 2.0, epsilon = 1e-15);
        let m5 = DomainMap::quadratic_2d(0.5).unwrap();
        assert_eq!(m5.phi(&[1.0, 0.0]), vec![1.5, 1.0]);
        for x in random_points(2, 100, 1) {
            let back = m.inverse(&m.phi(&x)).unwrap();
            assert!((back[0] - x[0]).abs() < 1e-13 && (back[1] - x[1]).abs() < 1e-13);
        }
        assert!(DomainMap::quadratic_2d(1.0).is_err());
        assert!(DomainMap::quadratic_2d(0.0).is_err());
    }

    #[test]
    fn quadratic_3d_examples() {
        let m = DomainMap::quadratic_3d(0.5, 0.5).unwrap();
        assert_eq!(m.phi(&[0.0, 0.0, 0.0]), vec![0.0, 0.0, 0.0]);
        assert_relative_eq!(m.det_jacobian(&[0.0, 0.0, 0.0]), 4.0, epsilon = 1e-15);
        assert_relative_eq!(m.phi(&[0.0, 0.0, 1.0])[2], 2.5);
        for x in random_points(3, 1000, 2) {
            let det = m.det_jacobian(&x);
            let expected = (2.0 + x[0]) * (2.0 + x[2]);
            assert!(det > 0.0);
            assert_relative_eq!(det, expected, max_relative = 1e-14);
        }
        for x in random_points(3, 100, 3) {
            let back = m.inverse(&m.phi(&x)).unwrap();
            for i in 0..3 {
                assert!((back[i] - x[i]).abs() < 1e-12);
            }
        }
        assert!(DomainMap::quadratic_3d(0.5, 1.5).is_err());
    }

    #[test]
    fn ellipse_examples() {
        let m = DomainMap::ellipse(2.0, 1.0).unwrap();
        assert_eq!(m.phi(&[0.5, 0.5]), vec![1.0, 0.5]);
        assert_eq!(m.det_jacobian(&[0.3, -0.2]), 2.0);
        let pb = pull_back(&m, None, constant_field(1.0), zero_f());
        let a = pb.a_tilde(&[0.1, 0.2]).unwrap();
        assert_relative_eq!(a[(0, 0)], 0.25);
        assert_relative_eq!(a[(1, 1)], 1.0);
        assert_eq!(a[(0, 1)], 0.0);
        assert_relative_eq!(pb.gamma_tilde(&[0.4, 0.4]).unwrap(), 2.0);
        assert!(DomainMap::ellipse(0.0, 1.0).is_err());
    }

    #[test]
    fn identity_pullback_is_identity() {
        let m = DomainMap::identity(2).unwrap();
        let f = Nonlinearity::new(|s: &Site, z| s.s()[0] + z * z, |_: &Site, z| 2.0 * z);
        let pb = pull_back(&m, None, constant_field(0.0), f.clone());
        for x in random_points(2, 20, 4) {
            let d = pb.at(&x).unwrap();
            assert_eq!(d.a_tilde, DMatrix::identity(2, 2));
            assert_eq!(d.gamma_tilde, 0.0);
            assert_eq!(
                pb.f_tilde(&x, 0.7).unwrap(),
                f.value(&Site::new(&x, &x), 0.7)
            );
        }
    }

    #[test]
    fn pullback_preserves_spd() {
        let m = DomainMap::quadratic_2d(0.95).unwrap();
        let pb = pull_back(&m, None, constant_field(0.0), zero_f());
        let mut pts = vec![vec![0.3, 0.1]];
        pts.extend(random_points(2, 200, 5));
        for x in pts {
            let a = pb.a_tilde(&x).unwrap();
            assert!((a[(0, 1)] - a[(1, 0)]).abs() <= 1e-13);
            let eig = a.symmetric_eigenvalues();
            assert!(eig.iter().all(|&e| e > 0.0), "{x:?}");
        }
        let m3 = DomainMap::quadratic_3d(0.5, 0.5).unwrap();
        let spd: MatrixField = Arc::new(|s: &Site| {
            let mut a = DMatrix::identity(3, 3);
            a[(0, 1)] = 0.2 * s.s()[2].cos();
            a[(1, 0)] = a[(0, 1)];
            a
        });
        let pb3 = pull_back(&m3, Some(spd), constant_field(1.0), zero_f());
        for x in random_points(3, 100, 6) {
            let a = pb3.a_tilde(&x).unwrap();
            assert!((&a - a.transpose()).amax() <= 1e-13);
            assert!(a.symmetric_eigenvalues().iter().all(|&e| e > 0.0));
        }
    }

    #[test]
    fn singular_jacobian_reported_with_point() {
        struct Fold;
        impl Mapping for Fold {
            fn dim(&self) -> usize {
                2
            }
            fn phi(&self, x: &[f64]) -> Vec<f64> {
                vec![x[0] * x[0], x[1]]
            }
            fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
                DMatrix::from_row_slice(2, 2, &[2.0 * x[0], 0.0, 0.0, 1.0])
            }
            fn descriptor(&self) -> String {
                "fold".into()
            }
        }
        let m = DomainMap::new(Arc::new(Fold)).unwrap();
        let pb = pull_back(&m, None, constant_field(0.0), zero_f());
        match pb.at(&[0.0, 0.5]) {
            Err(Error::SingularJacobian { point, .. }) => assert_eq!(point, vec![0.0, 0.5]),
            other => panic!("unexpected {other:?}"),
        }
        assert!(m.check_orientation(10).is_err());
        assert!(DomainMap::quadratic_2d(0.95)
            .unwrap()
            .check_orientation(20)
            .is_ok());
    }

    #[test]
    fn composition_with_polynomial_map() {
        // v(s,t) = s^2 t - 3t + 1 composed with the quadratic map is the
        // polynomial obtained by direct substitution
        let a = 0.7;
        let m = DomainMap::quadratic_2d(a).unwrap();
        let v = |s: &[f64]| s[0] * s[0] * s[1] - 3.0 * s[1] + 1.0;
        for x in random_points(2, 50, 8) {
            let (x0, y0) = (x[0], x[1]);
            let s = x0 - y0 + a * x0 * x0;
            let t = x0 + y0;
            let direct = s * s * t - 3.0 * t + 1.0;
            assert!((v(&m.phi(&x)) - direct).abs() < 1e-13);
        }
    }

    #[test]
    fn surface_element_of_ellipse() {
        let m = DomainMap::ellipse(2.0, 1.0).unwrap();
        // x = (cos t, sin t): |d Phi/dt| = sqrt(4 sin^2 + cos^2)
        let t: f64 = 0.4;
        let (ds, n) = m.surface_element(&[t.cos(), t.sin()]).unwrap();
        assert_relative_eq!(
            ds,
            (4.0 * t.sin().powi(2) + t.cos().powi(2)).sqrt(),
            max_relative = 1e-14
        );
        // normal to (s/2)^2 + t^2 = 1 is proportional to (s/4, t)
        let s = m.phi(&[t.cos(), t.sin()]);
        let g = [s[0] / 4.0, s[1]];
        let gl = (g[0] * g[0] + g[1] * g[1]).sqrt();
        assert_relative_eq!(n[0], g[0] / gl, max_relative = 1e-14);
        assert_relative_eq!(n[1], g[1] / gl, max_relative = 1e-14);
    }
}
