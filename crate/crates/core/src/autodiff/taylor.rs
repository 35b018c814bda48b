use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use super::{Dual, Scalar};

/// Index of each monomial in the truncated basis `{1, ξ, η, ζ, ξη, ξζ, ηζ}`.
pub mod basis {
    pub const ONE: usize = 0;
    pub const XI: usize = 1;
    pub const ETA: usize = 2;
    pub const ZETA: usize = 3;
    pub const XI_ETA: usize = 4;
    pub const XI_ZETA: usize = 5;
    pub const ETA_ZETA: usize = 6;

    /// Linear monomials in coordinate order.
    pub const LINEAR: [usize; 3] = [XI, ETA, ZETA];
    /// Bilinear monomials and the coordinate pair each one couples.
    pub const BILINEAR: [(usize, usize, usize); 3] = [(XI_ETA, 0, 1), (XI_ZETA, 0, 2), (ETA_ZETA, 1, 2)];

    /// Bilinear slot for the coordinate pair `(i, j)`, `i != j`.
    pub fn bilinear_index(i: usize, j: usize) -> usize {
        match (i.min(j), i.max(j)) {
            (0, 1) => XI_ETA,
            (0, 2) => XI_ZETA,
            (1, 2) => ETA_ZETA,
            _ => panic!("no bilinear monomial for ({i}, {j})"),
        }
    }
}

/// Polynomial in the natural coordinates truncated to `{1, ξ, η, ζ, ξη, ξζ, ηζ}`.
///
/// The truncation is a quotient by the monomial ideal `(ξ², η², ζ², ξηζ)`, so
/// products and analytic functions reproduce the value, the first partials and
/// the mixed second partials at the origin exactly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Taylor<T> {
    pub c: [T; 7],
}

/// Taylor polynomial whose coefficients carry 24 tangents (one per element DOF).
pub type DualTaylor = Taylor<Dual<f64, 24>>;

impl<T: Scalar> Taylor<T> {
    pub fn constant(v: T) -> Self {
        let mut c = [T::zero(); 7];
        c[0] = v;
        Taylor { c }
    }

    pub fn from_coeffs(c: [T; 7]) -> Self {
        Taylor { c }
    }

    /// The coordinate `ξ_i` itself (`i` = 0, 1, 2).
    pub fn coordinate(i: usize) -> Self {
        let mut c = [T::zero(); 7];
        c[basis::LINEAR[i]] = T::one();
        Taylor { c }
    }

    /// Evaluates the truncated polynomial at a point.
    pub fn eval(&self, xi: [f64; 3]) -> T {
        let c = &self.c;
        c[0] + c[1] * xi[0]
            + c[2] * xi[1]
            + c[3] * xi[2]
            + c[4] * (xi[0] * xi[1])
            + c[5] * (xi[0] * xi[2])
            + c[6] * (xi[1] * xi[2])
    }

    /// Drops the bilinear coefficients.
    pub fn linear_part(&self) -> Self {
        let mut c = self.c;
        for k in 4..7 {
            c[k] = T::zero();
        }
        Taylor { c }
    }

    /// Multiplies by a real-coefficient polynomial.
    pub fn mul_real(&self, o: &Taylor<f64>) -> Self {
        let a = &self.c;
        let b = &o.c;
        Taylor {
            c: [
                a[0] * b[0],
                a[0] * b[1] + a[1] * b[0],
                a[0] * b[2] + a[2] * b[0],
                a[0] * b[3] + a[3] * b[0],
                a[0] * b[4] + a[4] * b[0] + a[1] * b[2] + a[2] * b[1],
                a[0] * b[5] + a[5] * b[0] + a[1] * b[3] + a[3] * b[1],
                a[0] * b[6] + a[6] * b[0] + a[2] * b[3] + a[3] * b[2],
            ],
        }
    }

    /// `f(a0 + δ) = f + f' δ + f'' δ² / 2`, truncated.
    #[inline]
    fn analytic(self, f: T, df: T, ddf: T) -> Self {
        let a = &self.c;
        Taylor {
            c: [
                f,
                df * a[1],
                df * a[2],
                df * a[3],
                df * a[4] + ddf * a[1] * a[2],
                df * a[5] + ddf * a[1] * a[3],
                df * a[6] + ddf * a[2] * a[3],
            ],
        }
    }

    fn map(self, g: impl Fn(T) -> T) -> Self {
        Taylor { c: self.c.map(g) }
    }
}

impl Taylor<f64> {
    /// Lifts real coefficients into another scalar type.
    pub fn lift<T: Scalar>(&self) -> Taylor<T> {
        Taylor { c: self.c.map(T::from_f64) }
    }
}

/// Returns the seven coefficients `(c0, cξ, cη, cζ, cξη, cξζ, cηζ)`.
pub fn extract_bilinear_coeffs<T: Scalar>(t: &Taylor<T>) -> [T; 7] {
    t.c
}

impl<T: Scalar> Add for Taylor<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        let mut c = self.c;
        for i in 0..7 {
            c[i] += o.c[i];
        }
        Taylor { c }
    }
}

impl<T: Scalar> Sub for Taylor<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        let mut c = self.c;
        for i in 0..7 {
            c[i] -= o.c[i];
        }
        Taylor { c }
    }
}

impl<T: Scalar> Mul for Taylor<T> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        let a = &self.c;
        let b = &o.c;
        Taylor {
            c: [
                a[0] * b[0],
                a[0] * b[1] + a[1] * b[0],
                a[0] * b[2] + a[2] * b[0],
                a[0] * b[3] + a[3] * b[0],
                a[0] * b[4] + a[4] * b[0] + a[1] * b[2] + a[2] * b[1],
                a[0] * b[5] + a[5] * b[0] + a[1] * b[3] + a[3] * b[1],
                a[0] * b[6] + a[6] * b[0] + a[2] * b[3] + a[3] * b[2],
            ],
        }
    }
}

impl<T: Scalar> Div for Taylor<T> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl<T: Scalar> Neg for Taylor<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.map(|x| -x)
    }
}

impl<T: Scalar> Add<f64> for Taylor<T> {
    type Output = Self;
    fn add(mut self, o: f64) -> Self {
        self.c[0] = self.c[0] + o;
        self
    }
}

impl<T: Scalar> Sub<f64> for Taylor<T> {
    type Output = Self;
    fn sub(mut self, o: f64) -> Self {
        self.c[0] = self.c[0] - o;
        self
    }
}

impl<T: Scalar> Mul<f64> for Taylor<T> {
    type Output = Self;
    fn mul(self, o: f64) -> Self {
        self.map(|x| x * o)
    }
}

impl<T: Scalar> Div<f64> for Taylor<T> {
    type Output = Self;
    fn div(self, o: f64) -> Self {
        self.map(|x| x / o)
    }
}

impl<T: Scalar> AddAssign for Taylor<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Scalar> SubAssign for Taylor<T> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Scalar> MulAssign for Taylor<T> {
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

impl<T: Scalar> Scalar for Taylor<T> {
    fn from_f64(x: f64) -> Self {
        Self::constant(T::from_f64(x))
    }

    fn value(&self) -> f64 {
        self.c[0].value()
    }

    fn sqrt(self) -> Self {
        let s = self.c[0].sqrt();
        let ds = (s * 2.0).recip();
        let dds = -(ds * ds * ds) * 2.0;
        self.analytic(s, ds, dds)
    }

    fn ln(self) -> Self {
        let r = self.c[0].recip();
        self.analytic(self.c[0].ln(), r, -(r * r))
    }

    fn exp(self) -> Self {
        let e = self.c[0].exp();
        self.analytic(e, e, e)
    }

    fn powf(self, p: f64) -> Self {
        let a0 = self.c[0];
        let f = a0.powf(p);
        let df = a0.powf(p - 1.0) * p;
        let ddf = a0.powf(p - 2.0) * (p * (p - 1.0));
        self.analytic(f, df, ddf)
    }

    /// Three-term Neumann series `1/a0 · (1 − u + u²)` with `u = δ/a0`.
    fn recip(self) -> Self {
        let r = self.c[0].recip();
        let r2 = r * r;
        self.analytic(r, -r2, r2 * r * 2.0)
    }
}
