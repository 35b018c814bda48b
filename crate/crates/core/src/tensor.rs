//! Small dense tensors: generic 3×3 matrices, Nye packing of symmetric tensors,
//! fixed-size element containers and spectral functions of symmetric matrices.
//!
//! Nye ordering is `(11, 22, 33, 12, 13, 23)`. Strain-like vectors store the
//! engineering shears `2E_12, 2E_13, 2E_23`; stress-like vectors store the
//! tensor components unchanged.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{SMatrix, SVector};

use crate::autodiff::Scalar;
use crate::error::FemError;

pub type Mat6 = SMatrix<f64, 6, 6>;
pub type Vec6 = SVector<f64, 6>;
pub type ElemVec = SVector<f64, 24>;
pub type ElemMat = SMatrix<f64, 24, 24>;
pub type EnhVec = SVector<f64, 6>;
pub type EnhMat = SMatrix<f64, 6, 6>;
/// Six rows by 24 columns, the shape of a strain-displacement operator.
pub type BMat = SMatrix<f64, 6, 24>;

/// Index pairs of the Nye slots.
pub const NYE_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

/// Relative singularity floor used by [`Mat3::try_inv`].
pub const SINGULARITY_FLOOR: f64 = 1e-14;

/// Row-major 3×3 matrix over any [`Scalar`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3<T> {
    pub m: [[T; 3]; 3],
}

impl<T: Scalar> Mat3<T> {
    pub fn from_rows(m: [[T; 3]; 3]) -> Self {
        Mat3 { m }
    }

    pub fn from_fn(f: impl Fn(usize, usize) -> T) -> Self {
        Mat3 { m: std::array::from_fn(|i| std::array::from_fn(|j| f(i, j))) }
    }

    pub fn zeros() -> Self {
        Mat3 { m: [[T::zero(); 3]; 3] }
    }

    pub fn identity() -> Self {
        Self::from_fn(|i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn diag(d: [T; 3]) -> Self {
        Self::from_fn(|i, j| if i == j { d[i] } else { T::zero() })
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(|i, j| self.m[j][i])
    }

    pub fn trace(&self) -> T {
        self.m[0][0] + self.m[1][1] + self.m[2][2]
    }

    /// Cofactor expansion along the first row.
    pub fn det(&self) -> T {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    fn adjugate(&self) -> Self {
        let m = &self.m;
        Mat3 {
            m: [
                [
                    m[1][1] * m[2][2] - m[1][2] * m[2][1],
                    m[0][2] * m[2][1] - m[0][1] * m[2][2],
                    m[0][1] * m[1][2] - m[0][2] * m[1][1],
                ],
                [
                    m[1][2] * m[2][0] - m[1][0] * m[2][2],
                    m[0][0] * m[2][2] - m[0][2] * m[2][0],
                    m[0][2] * m[1][0] - m[0][0] * m[1][2],
                ],
                [
                    m[1][0] * m[2][1] - m[1][1] * m[2][0],
                    m[0][1] * m[2][0] - m[0][0] * m[2][1],
                    m[0][0] * m[1][1] - m[0][1] * m[1][0],
                ],
            ],
        }
    }

    /// Inverse by adjugate, without a singularity check.
    pub fn inv(&self) -> Self {
        let r = self.det().recip();
        self.adjugate().scale(r)
    }

    /// Inverse with a relative singularity floor `1e-14 · max|m_ij|³`.
    pub fn try_inv(&self) -> Result<Self, FemError> {
        let det = self.det();
        let maxe = self.max_abs();
        let floor = SINGULARITY_FLOOR * maxe * maxe * maxe;
        if !(det.value().abs() > floor) {
            return Err(FemError::SingularMatrix { det: det.value(), floor });
        }
        Ok(self.adjugate().scale(det.recip()))
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().flatten().map(|x| x.value().abs()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: T) -> Self {
        Self::from_fn(|i, j| self.m[i][j] * s)
    }

    pub fn scale_f64(&self, s: f64) -> Self {
        Self::from_fn(|i, j| self.m[i][j] * s)
    }

    /// Deviatoric part `m − tr(m)/3 · I`.
    pub fn dev(&self) -> Self {
        let t = self.trace() / 3.0;
        Self::from_fn(|i, j| if i == j { self.m[i][j] - t } else { self.m[i][j] })
    }

    /// Symmetric part.
    pub fn sym(&self) -> Self {
        Self::from_fn(|i, j| (self.m[i][j] + self.m[j][i]) * 0.5)
    }

    /// `A : B = Σ A_ij B_ij`.
    pub fn ddot(&self, o: &Self) -> T {
        let mut s = T::zero();
        for i in 0..3 {
            for j in 0..3 {
                s += self.m[i][j] * o.m[i][j];
            }
        }
        s
    }

    pub fn norm_sq(&self) -> T {
        self.ddot(self)
    }

    /// Real parts.
    pub fn values(&self) -> Mat3<f64> {
        Mat3::from_fn(|i, j| self.m[i][j].value())
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Mat3<U> {
        Mat3::from_fn(|i, j| f(self.m[i][j]))
    }

    /// Largest `|m_ij − m_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut a: f64 = 0.0;
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            a = a.max((self.m[i][j] - self.m[j][i]).value().abs());
        }
        a
    }

    /// Stress-like Nye vector.
    pub fn to_stress_nye(&self) -> [T; 6] {
        NYE_PAIRS.map(|(i, j)| self.m[i][j])
    }

    /// Strain-like Nye vector (doubled shears).
    pub fn to_strain_nye(&self) -> [T; 6] {
        let mut v = self.to_stress_nye();
        for x in v.iter_mut().skip(3) {
            *x = *x * 2.0;
        }
        v
    }

    pub fn from_stress_nye(v: &[T; 6]) -> Self {
        let mut m = Self::zeros();
        for (k, &(i, j)) in NYE_PAIRS.iter().enumerate() {
            m.m[i][j] = v[k];
            m.m[j][i] = v[k];
        }
        m
    }

    pub fn from_strain_nye(v: &[T; 6]) -> Self {
        let mut m = Self::zeros();
        for (k, &(i, j)) in NYE_PAIRS.iter().enumerate() {
            let x = if k < 3 { v[k] } else { v[k] * 0.5 };
            m.m[i][j] = x;
            m.m[j][i] = x;
        }
        m
    }
}

impl<T: Scalar> Add for Mat3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::from_fn(|i, j| self.m[i][j] + o.m[i][j])
    }
}

impl<T: Scalar> Sub for Mat3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::from_fn(|i, j| self.m[i][j] - o.m[i][j])
    }
}

impl<T: Scalar> Neg for Mat3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::from_fn(|i, j| -self.m[i][j])
    }
}

impl<T: Scalar> Mul for Mat3<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::from_fn(|i, j| self.m[i][0] * o.m[0][j] + self.m[i][1] * o.m[1][j] + self.m[i][2] * o.m[2][j])
    }
}

impl<T: Scalar> Mul<[T; 3]> for Mat3<T> {
    type Output = [T; 3];
    fn mul(self, v: [T; 3]) -> [T; 3] {
        std::array::from_fn(|i| self.m[i][0] * v[0] + self.m[i][1] * v[1] + self.m[i][2] * v[2])
    }
}

pub fn det3(m: &Mat3<f64>) -> f64 {
    m.det()
}

pub fn inv3(m: &Mat3<f64>) -> Result<Mat3<f64>, FemError> {
    m.try_inv()
}

pub fn trace(m: &Mat3<f64>) -> f64 {
    m.trace()
}

pub fn dev(m: &Mat3<f64>) -> Mat3<f64> {
    m.dev()
}

// ---------------------------------------------------------------------------
// Spectral functions (plain reals)

/// Tolerance for accepting a matrix as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Eigen-decomposition of a symmetric 3×3 matrix.
///
/// Eigenvalues come from the trigonometric solution of the characteristic
/// polynomial and are sorted descending. Eigenvector `k` is column `k` of the
/// returned matrix. Pairs closer than `1e-8` times the spectral radius are
/// treated as repeated and receive an orthonormal basis of their common space.
pub fn spectral_sym(m: &Mat3<f64>) -> Result<([f64; 3], Mat3<f64>), FemError> {
    let asym = m.asymmetry();
    if asym > SYMMETRY_TOL * m.max_abs().max(1.0) {
        return Err(FemError::NotSymmetric { asym });
    }
    let a = m.sym();
    let scale = a.max_abs();
    if scale == 0.0 {
        return Ok(([0.0; 3], Mat3::identity()));
    }
    let b = a.scale_f64(1.0 / scale);
    let q = b.trace() / 3.0;
    let bd = b.dev();
    let p2 = bd.norm_sq() / 6.0;
    let lam_scaled = if p2 <= 1e-32 {
        [q, q, q]
    } else {
        let p = p2.sqrt();
        let r = (bd.scale_f64(1.0 / p).det() / 2.0).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        let l1 = q + 2.0 * p * phi.cos();
        let l3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
        [l1, 3.0 * q - l1 - l3, l3]
    };
    let lam = lam_scaled.map(|x| x * scale);
    let radius = lam.iter().fold(0.0_f64, |r, x| r.max(x.abs()));
    let gap = 1e-8 * radius;
    let same01 = (lam[0] - lam[1]).abs() < gap;
    let same12 = (lam[1] - lam[2]).abs() < gap;

    let vectors = if same01 && same12 {
        [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    } else if same01 {
        let v2 = null_vector(&a, lam[2]);
        let (v0, v1) = complement_basis(v2);
        [v0, v1, v2]
    } else if same12 {
        let v0 = null_vector(&a, lam[0]);
        let (v1, v2) = complement_basis(v0);
        [v0, v1, v2]
    } else {
        let v0 = null_vector(&a, lam[0]);
        let mut v2 = null_vector(&a, lam[2]);
        // Re-orthogonalize against v0 before closing the triad.
        let d = dot(v0, v2);
        v2 = normalize([v2[0] - d * v0[0], v2[1] - d * v0[1], v2[2] - d * v0[2]]);
        let v1 = cross(v2, v0);
        [v0, v1, v2]
    };
    let v = Mat3::from_fn(|i, k| vectors[k][i]);
    Ok((lam, v))
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn normalize(a: [f64; 3]) -> [f64; 3] {
    let n = dot(a, a).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

/// Unit vector spanning the null space of `a − λI` (assumed one-dimensional).
fn null_vector(a: &Mat3<f64>, lam: f64) -> [f64; 3] {
    let s = *a - Mat3::identity().scale_f64(lam);
    let r = s.m;
    let cands = [cross(r[0], r[1]), cross(r[0], r[2]), cross(r[1], r[2])];
    let best = cands
        .iter()
        .copied()
        .max_by(|x, y| dot(*x, *x).total_cmp(&dot(*y, *y)))
        .unwrap();
    normalize(best)
}

/// Two unit vectors completing `v` to a right-handed orthonormal triad.
fn complement_basis(v: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let helper = if v[0].abs() < 0.6 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let a = normalize(cross(helper, v));
    let b = cross(v, a);
    (a, b)
}

/// `V diag(f(λ)) Vᵀ`.
fn spectral_map(m: &Mat3<f64>, f: impl Fn(f64) -> f64) -> Result<Mat3<f64>, FemError> {
    let (lam, v) = spectral_sym(m)?;
    let fl = lam.map(f);
    Ok(Mat3::from_fn(|i, j| (0..3).map(|k| v.m[i][k] * fl[k] * v.m[j][k]).sum()))
}

pub fn exp_sym(m: &Mat3<f64>) -> Result<Mat3<f64>, FemError> {
    spectral_map(m, f64::exp)
}

pub fn sqrt_sym(m: &Mat3<f64>) -> Result<Mat3<f64>, FemError> {
    let (lam, _) = spectral_sym(m)?;
    if lam[2] <= 0.0 {
        return Err(FemError::NotPositiveDefinite);
    }
    spectral_map(m, f64::sqrt)
}

pub fn inv_sqrt_sym(m: &Mat3<f64>) -> Result<Mat3<f64>, FemError> {
    let (lam, _) = spectral_sym(m)?;
    if lam[2] <= 0.0 {
        return Err(FemError::NotPositiveDefinite);
    }
    spectral_map(m, |x| 1.0 / x.sqrt())
}

// ---------------------------------------------------------------------------
// Matrix functions over any scalar (used where tangents must flow through)

/// Matrix exponential by scaling and squaring of a degree-14 Taylor polynomial.
pub fn expm<T: Scalar>(a: &Mat3<T>) -> Mat3<T> {
    let norm = a.values().norm_sq().sqrt();
    let mut s = 0;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        s += 1;
    }
    let x = a.scale_f64(scale);
    let mut term = Mat3::identity();
    let mut sum = Mat3::identity();
    for k in 1..=14 {
        term = (term * x).scale_f64(1.0 / k as f64);
        sum = sum + term;
    }
    for _ in 0..s {
        sum = sum * sum;
    }
    sum
}

/// Principal square root of a symmetric positive definite matrix by the
/// Denman–Beavers iteration.
pub fn sqrtm<T: Scalar>(a: &Mat3<T>) -> Result<Mat3<T>, FemError> {
    if a.det().value() <= 0.0 || a.trace().value() <= 0.0 {
        return Err(FemError::NotPositiveDefinite);
    }
    let mut y = *a;
    let mut z = Mat3::identity();
    let mut settled = 0;
    for _ in 0..60 {
        let yi = y.try_inv().map_err(|_| FemError::NotPositiveDefinite)?;
        let zi = z.try_inv().map_err(|_| FemError::NotPositiveDefinite)?;
        let yn = (y + zi).scale_f64(0.5);
        let zn = (z + yi).scale_f64(0.5);
        let change = (yn.values() - y.values()).max_abs() / yn.max_abs();
        y = yn;
        z = zn;
        if change < 1e-15 {
            // Two extra sweeps let the tangent parts settle as well.
            settled += 1;
            if settled > 2 {
                return Ok(y.sym());
            }
        }
    }
    Err(FemError::NoConvergence("matrix square root".into()))
}

/// Generic 6-vector helpers.
pub fn nye_dot<T: Scalar>(a: &[T; 6], b: &[T; 6]) -> T {
    let mut s = T::zero();
    for k in 0..6 {
        s += a[k] * b[k];
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_determinants() {
        assert_eq!(det3(&Mat3::identity()), 1.0);
        assert_eq!(det3(&Mat3::diag([2.0, 3.0, 4.0])), 24.0);
    }

    #[test]
    fn trivial_inverses() {
        assert_eq!(inv3(&Mat3::identity()).unwrap(), Mat3::identity());
        assert_eq!(inv3(&Mat3::diag([2.0, 2.0, 2.0])).unwrap(), Mat3::diag([0.5, 0.5, 0.5]));
        assert!(matches!(
            inv3(&Mat3::from_rows([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 1.0, 1.0]])),
            Err(FemError::SingularMatrix { .. })
        ));
    }

    #[test]
    fn deviator_examples() {
        let d = dev(&Mat3::identity());
        assert!(d.max_abs() < 1e-16);
        assert_eq!(dev(&Mat3::diag([3.0, 0.0, 0.0])), Mat3::diag([2.0, -1.0, -1.0]));
    }

    #[test]
    fn spectral_trivial() {
        let (l, _) = spectral_sym(&Mat3::identity()).unwrap();
        assert_eq!(l, [1.0, 1.0, 1.0]);
        let (l, v) = spectral_sym(&Mat3::diag([4.0, 1.0, 0.0])).unwrap();
        for (a, b) in l.iter().zip([4.0, 1.0, 0.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        for i in 0..3 {
            for k in 0..3 {
                assert!(v.m[i][k].abs() < 1e-12 || (v.m[i][k].abs() - 1.0).abs() < 1e-12);
            }
        }
        assert!(matches!(
            spectral_sym(&Mat3::from_rows([[1.0, 0.1, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])),
            Err(FemError::NotSymmetric { .. })
        ));
    }

    #[test]
    fn sqrt_and_exp_trivial() {
        assert_eq!(exp_sym(&Mat3::zeros()).unwrap(), Mat3::identity());
        let r = sqrt_sym(&Mat3::diag([4.0, 9.0, 16.0])).unwrap();
        assert!((r - Mat3::diag([2.0, 3.0, 4.0])).max_abs() < 1e-14);
        assert_eq!(sqrt_sym(&Mat3::diag([1.0, -1.0, 2.0])), Err(FemError::NotPositiveDefinite));
    }

    #[test]
    fn nye_conventions() {
        let m = Mat3::from_rows([[1.0, 4.0, 5.0], [4.0, 2.0, 6.0], [5.0, 6.0, 3.0]]);
        assert_eq!(m.to_stress_nye(), [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(m.to_strain_nye(), [1.0, 2.0, 3.0, 8.0, 10.0, 12.0]);
        assert_eq!(Mat3::from_strain_nye(&m.to_strain_nye()), m);
        assert_eq!(Mat3::from_stress_nye(&m.to_stress_nye()), m);
    }
}
