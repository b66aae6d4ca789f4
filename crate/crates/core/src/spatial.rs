//! Uniform 1-D mesh on `(0, L)` with homogeneous Dirichlet data, finite-volume
//! stiffness assembly for `-(a u_x)_x`, and the discrete norms used by the checks.
//!
//! Nodes are `x_i = i h`, `i = 0..=Nx`; unknowns live on the interior nodes
//! `1..Nx`. Cell `c` is `[x_{c-1}, x_c]` and carries one coefficient value,
//! sampled at its midpoint.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::kernels::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh1D {
    length: f64,
    cells: usize,
}

impl Mesh1D {
    pub fn new(length: f64, cells: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(invalid("length", format!("must be positive, got {length}")));
        }
        if cells < 2 {
            return Err(invalid("cells", "need at least one interior node"));
        }
        Ok(Self { length, cells })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn h(&self) -> f64 {
        self.length / self.cells as f64
    }

    pub fn interior(&self) -> usize {
        self.cells - 1
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.cells {
            self.length
        } else {
            i as f64 * self.h()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.cells).map(|i| self.node(i)).collect()
    }

    /// Midpoint of cell `c`, one-based.
    pub fn midpoint(&self, c: usize) -> f64 {
        (c as f64 - 0.5) * self.h()
    }

    /// Continuum Poincaré constant `L / pi`.
    pub fn poincare_constant(&self) -> f64 {
        self.length / PI
    }

    /// Smallest eigenvalue of the unit-coefficient Dirichlet stiffness.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = self.h();
        let s = (PI * h / (2.0 * self.length)).sin();
        4.0 * s * s / (h * h)
    }

    /// Node vector with the boundary entries set to zero.
    pub fn with_boundary(&self, interior: &[f64]) -> Vec<f64> {
        let mut full = Vec::with_capacity(self.cells + 1);
        full.push(0.0);
        full.extend_from_slice(interior);
        full.push(0.0);
        full
    }
}

type CoeffFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum CoeffSource {
    Constant(f64),
    /// `values[k]` on `[breaks[k-1], breaks[k])`, with implicit `0` and `L` at the ends.
    Piecewise { breaks: Vec<f64>, values: Vec<f64> },
    Function(CoeffFn),
}

/// Bounded measurable `a(t, x)`, represented cellwise at cell midpoints.
#[derive(Clone)]
pub struct CoefficientField {
    source: CoeffSource,
    nu: f64,
    a_max: f64,
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.source {
            CoeffSource::Constant(c) => format!("Constant({c})"),
            CoeffSource::Piecewise { breaks, values } => format!("Piecewise({breaks:?}, {values:?})"),
            CoeffSource::Function(_) => "Function".to_string(),
        };
        f.debug_struct("CoefficientField")
            .field("source", &kind)
            .field("nu", &self.nu)
            .field("a_max", &self.a_max)
            .finish()
    }
}

impl CoefficientField {
    fn with_bounds(source: CoeffSource, nu: f64, a_max: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(invalid("nu", format!("must be positive, got {nu}")));
        }
        if !(a_max >= nu && a_max.is_finite()) {
            return Err(invalid("a_max", format!("must be finite and at least nu, got {a_max}")));
        }
        Ok(Self { source, nu, a_max })
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::with_bounds(CoeffSource::Constant(value), value, value)
    }

    /// Piecewise-constant in `x`; `values.len() == breaks.len() + 1`.
    pub fn piecewise(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breaks.len() + 1 {
            return Err(invalid("values", "need one more value than breakpoints"));
        }
        if breaks.windows(2).any(|p| p[1] <= p[0]) {
            return Err(invalid("breaks", "must be strictly increasing"));
        }
        let nu = values.iter().copied().fold(f64::INFINITY, f64::min);
        let a_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::with_bounds(CoeffSource::Piecewise { breaks, values }, nu, a_max)
    }

    /// Arbitrary `a(t, x)` with declared bounds, checked on every sample.
    pub fn from_fn<F>(f: F, nu: f64, a_max: f64) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self::with_bounds(CoeffSource::Function(Arc::new(f)), nu, a_max)
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn a_max(&self) -> f64 {
        self.a_max
    }

    pub fn value(&self, t: f64, x: f64) -> f64 {
        match &self.source {
            CoeffSource::Constant(c) => *c,
            CoeffSource::Piecewise { breaks, values } => {
                let k = breaks.iter().take_while(|b| x >= **b).count();
                values[k]
            }
            CoeffSource::Function(f) => f(t, x),
        }
    }

    /// Cell values at time `t`, validated against `[nu, a_max]`.
    pub fn sample(&self, mesh: &Mesh1D, t: f64) -> Result<Vec<f64>> {
        (1..=mesh.cells())
            .map(|c| {
                let a = self.value(t, mesh.midpoint(c));
                if !(a >= self.nu && a <= self.a_max) {
                    return Err(Error::CoefficientBound {
                        t,
                        cell: c,
                        value: a,
                        lower: self.nu,
                        upper: self.a_max,
                    });
                }
                Ok(a)
            })
            .collect()
    }
}

/// Tridiagonal matrix stored by diagonals; `lower[0]` and `upper[n-1]` are unused.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn mul(&self, v: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * v[i];
                if i > 0 {
                    s += self.lower[i] * v[i - 1];
                }
                if i + 1 < n {
                    s += self.upper[i] * v[i + 1];
                }
                s
            })
            .collect()
    }

    /// `self + c I`
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            lower: self.lower.clone(),
            diag: self.diag.iter().map(|d| d + c).collect(),
            upper: self.upper.clone(),
        }
    }

    /// Thomas algorithm; errors on a vanishing pivot.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        if rhs.len() != n {
            return Err(Error::GridMismatch {
                expected: n,
                found: rhs.len(),
            });
        }
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut pivot = self.diag[0];
        for i in 0..n {
            if i > 0 {
                pivot = self.diag[i] - self.lower[i] * c[i - 1];
            }
            if !(pivot.abs() > f64::MIN_POSITIVE) || !pivot.is_finite() {
                return Err(Error::Singular { row: i, pivot });
            }
            c[i] = if i + 1 < n { self.upper[i] / pivot } else { 0.0 };
            d[i] = if i > 0 {
                (rhs[i] - self.lower[i] * d[i - 1]) / pivot
            } else {
                rhs[0] / pivot
            };
        }
        for i in (0..n.saturating_sub(1)).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Ok(d)
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        (1..self.len())
            .map(|i| (self.lower[i] - self.upper[i - 1]).abs())
            .fold(0.0, f64::max)
    }

    /// Nonpositive off-diagonals and nonnegative row sums (to rounding).
    pub fn is_m_matrix(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| {
            let lo = if i > 0 { self.lower[i] } else { 0.0 };
            let up = if i + 1 < n { self.upper[i] } else { 0.0 };
            lo <= 0.0 && up <= 0.0 && self.diag[i] + lo + up >= -1e-12 * self.diag[i].abs()
        })
    }
}

/// Stiffness for `-(a u_x)_x` on the interior nodes at a fixed time.
#[derive(Debug, Clone, PartialEq)]
pub struct StiffnessMatrix {
    pub time: f64,
    pub matrix: Tridiagonal,
}

/// Finite-volume stiffness from per-cell coefficients `a[c-1]`, `c = 1..=Nx`.
pub fn stiffness_from_cells(mesh: &Mesh1D, a: &[f64]) -> Result<Tridiagonal> {
    if a.len() != mesh.cells() {
        return Err(Error::GridMismatch {
            expected: mesh.cells(),
            found: a.len(),
        });
    }
    let h2 = mesh.h() * mesh.h();
    let n = mesh.interior();
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for r in 0..n {
        // row r is node i = r + 1, between cells i and i + 1
        let left = a[r];
        let right = a[r + 1];
        diag[r] = (left + right) / h2;
        if r > 0 {
            lower[r] = -left / h2;
        }
        if r + 1 < n {
            upper[r] = -right / h2;
        }
    }
    Ok(Tridiagonal { lower, diag, upper })
}

pub fn assemble(mesh: &Mesh1D, coeff: &CoefficientField, t: f64) -> Result<StiffnessMatrix> {
    let a = coeff.sample(mesh, t)?;
    Ok(StiffnessMatrix {
        time: t,
        matrix: stiffness_from_cells(mesh, &a)?,
    })
}

/// Unit-coefficient Dirichlet stiffness `(2, -1, -1) / h^2`.
pub fn laplacian(mesh: &Mesh1D) -> Tridiagonal {
    stiffness_from_cells(mesh, &vec![1.0; mesh.cells()]).expect("cell count matches mesh")
}

/// Discrete `H^{-1}` norm `sqrt(h w^T K1^{-1} w)` of an interior vector.
pub fn hminus1_norm(mesh: &Mesh1D, w: &[f64]) -> Result<f64> {
    let z = laplacian(mesh).solve(w)?;
    let q: f64 = w.iter().zip(&z).map(|(a, b)| a * b).sum();
    Ok((mesh.h() * q.max(0.0)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct Norms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    pub grad_l2: f64,
}

/// Norms of a full node vector `u[0..=Nx]`: trapezoidal `L1`/`L2`, forward-difference gradient.
pub fn norms(mesh: &Mesh1D, u: &[f64]) -> Result<Norms> {
    if u.len() != mesh.cells() + 1 {
        return Err(Error::GridMismatch {
            expected: mesh.cells() + 1,
            found: u.len(),
        });
    }
    let h = mesh.h();
    let last = u.len() - 1;
    let weight = |i: usize| if i == 0 || i == last { 0.5 * h } else { h };
    let l1 = u.iter().enumerate().map(|(i, x)| weight(i) * x.abs()).sum();
    let l2sq: f64 = u.iter().enumerate().map(|(i, x)| weight(i) * x * x).sum();
    let linf = u.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let gsq: f64 = u.windows(2).map(|p| (p[1] - p[0]).powi(2)).sum::<f64>() / h;
    Ok(Norms {
        l1,
        l2: l2sq.sqrt(),
        linf,
        grad_l2: gsq.sqrt(),
    })
}

/// Space-time norms over `(0, T) x Omega`; time sums use `tau` over `n = 1..=N`,
/// the sup runs over all nodes including `n = 0`.
pub fn space_time_norms(mesh: &Mesh1D, grid: &TimeGrid, u: &[Vec<f64>]) -> Result<Norms> {
    if u.len() != grid.steps() + 1 {
        return Err(Error::GridMismatch {
            expected: grid.steps() + 1,
            found: u.len(),
        });
    }
    let tau = grid.tau();
    let mut out = Norms::default();
    let (mut l2sq, mut gsq) = (0.0, 0.0);
    for (n, row) in u.iter().enumerate() {
        let s = norms(mesh, row)?;
        out.linf = out.linf.max(s.linf);
        if n > 0 {
            out.l1 += tau * s.l1;
            l2sq += tau * s.l2 * s.l2;
            gsq += tau * s.grad_l2 * s.grad_l2;
        }
    }
    out.l2 = l2sq.sqrt();
    out.grad_l2 = gsq.sqrt();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sine(mesh: &Mesh1D) -> Vec<f64> {
        mesh.nodes()
            .iter()
            .map(|x| (PI * x / mesh.length()).sin())
            .collect()
    }

    #[test]
    fn mesh_validation() {
        assert!(Mesh1D::new(1.0, 1).is_err());
        assert!(Mesh1D::new(-1.0, 4).is_err());
        let m = Mesh1D::new(2.0, 8).unwrap();
        assert_eq!(m.h(), 0.25);
        assert_eq!(m.node(8), 2.0);
        assert_eq!(m.interior(), 7);
    }

    #[test]
    fn unit_coefficient_is_standard_laplacian() {
        let m = Mesh1D::new(1.0, 5).unwrap();
        let k = assemble(&m, &CoefficientField::constant(1.0).unwrap(), 0.0).unwrap();
        let h2 = m.h() * m.h();
        assert!(k.matrix.diag.iter().all(|d| (d * h2 - 2.0).abs() < 1e-13));
        assert!(k.matrix.upper[..3].iter().all(|d| (d * h2 + 1.0).abs() < 1e-13));
        assert!(k.matrix.lower[1..].iter().all(|d| (d * h2 + 1.0).abs() < 1e-13));
    }

    #[test]
    fn sine_is_discrete_eigenvector() {
        let m = Mesh1D::new(3.0, 40).unwrap();
        let u = sine(&m);
        let ku = laplacian(&m).mul(&u[1..40]);
        let lam = m.min_eigenvalue();
        for (a, b) in ku.iter().zip(&u[1..40]) {
            assert_relative_eq!(*a, lam * b, epsilon = 1e-10);
        }
    }

    #[test]
    fn coefficient_bounds_are_enforced() {
        let m = Mesh1D::new(1.0, 4).unwrap();
        let bad = CoefficientField::from_fn(|t, _| 1.0 + t, 0.5, 1.5).unwrap();
        assert!(assemble(&m, &bad, 0.0).is_ok());
        match assemble(&m, &bad, 1.0) {
            Err(Error::CoefficientBound { t, cell, .. }) => {
                assert_eq!(t, 1.0);
                assert_eq!(cell, 1);
            }
            other => panic!("expected a bound violation, got {other:?}"),
        }
        assert!(CoefficientField::from_fn(|_, _| 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn piecewise_coefficient_gives_symmetric_m_matrix() {
        let m = Mesh1D::new(1.0, 64).unwrap();
        let a = CoefficientField::piecewise(vec![0.5], vec![0.1, 1.0]).unwrap();
        let k = assemble(&m, &a, 0.0).unwrap().matrix;
        assert_eq!(k.asymmetry(), 0.0);
        assert!(k.is_m_matrix());
        // inverse power iteration for the smallest eigenvalue
        let mut v = vec![1.0; m.interior()];
        let mut lam = 0.0;
        for _ in 0..200 {
            let w = k.solve(&v).unwrap();
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            lam = v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / (norm * norm);
            v = w.iter().map(|x| x / norm).collect();
        }
        assert!(lam >= 0.1 * m.min_eigenvalue());
    }

    #[test]
    fn thomas_detects_singular_matrix() {
        let t = Tridiagonal {
            lower: vec![0.0, 1.0],
            diag: vec![1.0, 1.0],
            upper: vec![1.0, 0.0],
        };
        assert!(matches!(t.solve(&[1.0, 1.0]), Err(Error::Singular { row: 1, .. })));
    }

    #[test]
    fn hminus1_of_eigenvector() {
        let m = Mesh1D::new(1.0, 32).unwrap();
        assert_eq!(hminus1_norm(&m, &vec![0.0; 31]).unwrap(), 0.0);
        let u = sine(&m);
        let l2 = norms(&m, &u).unwrap().l2;
        let hm = hminus1_norm(&m, &u[1..32]).unwrap();
        assert_relative_eq!(hm, l2 / m.min_eigenvalue().sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn sine_norms_converge() {
        for (nx, tol) in [(64, 1e-12), (256, 1e-12)] {
            let m = Mesh1D::new(2.0, nx).unwrap();
            let n = norms(&m, &sine(&m)).unwrap();
            // the trapezoid rule is exact for sin^2 over a full period
            assert_relative_eq!(n.l2 * n.l2, 1.0, max_relative = tol);
            assert_relative_eq!(n.linf, 1.0, max_relative = 1e-3);
        }
        let mut prev = f64::INFINITY;
        for nx in [16, 64, 256] {
            let m = Mesh1D::new(2.0, nx).unwrap();
            let g = norms(&m, &sine(&m)).unwrap().grad_l2;
            let err = (g - PI / 2.0).abs();
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-4);
    }

    #[test]
    fn constant_l1() {
        let m = Mesh1D::new(1.5, 30).unwrap();
        let n = norms(&m, &vec![-2.0; 31]).unwrap();
        assert!((n.l1 - 3.0).abs() <= m.h() * 2.0);
    }
}
