use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use super::Scalar;

/// Forward-mode dual number with `N` tangent directions over an inner scalar `T`.
///
/// Nesting (`Dual<Dual<f64, M>, N>`) gives mixed second derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T, const N: usize> {
    pub v: T,
    pub d: [T; N],
}

impl<T: Scalar, const N: usize> Dual<T, N> {
    pub fn constant(v: T) -> Self {
        Dual { v, d: [T::zero(); N] }
    }

    /// A variable seeded along direction `k`.
    pub fn variable(v: T, k: usize) -> Self {
        assert!(k < N, "seed direction {k} out of range for {N} tangents");
        let mut d = [T::zero(); N];
        d[k] = T::one();
        Dual { v, d }
    }

    /// Seeds a whole vector of independent variables, direction `offset + i` for entry `i`.
    pub fn seed<const M: usize>(values: [T; M], offset: usize) -> [Self; M] {
        std::array::from_fn(|i| Self::variable(values[i], offset + i))
    }

    #[inline]
    fn chain(self, f: T, df: T) -> Self {
        let mut d = self.d;
        for x in d.iter_mut() {
            *x = *x * df;
        }
        Dual { v: f, d }
    }
}

impl<T: Scalar, const N: usize> Add for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        let mut d = self.d;
        for i in 0..N {
            d[i] += o.d[i];
        }
        Dual { v: self.v + o.v, d }
    }
}

impl<T: Scalar, const N: usize> Sub for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        let mut d = self.d;
        for i in 0..N {
            d[i] -= o.d[i];
        }
        Dual { v: self.v - o.v, d }
    }
}

impl<T: Scalar, const N: usize> Mul for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        let mut d = self.d;
        for i in 0..N {
            d[i] = self.d[i] * o.v + self.v * o.d[i];
        }
        Dual { v: self.v * o.v, d }
    }
}

impl<T: Scalar, const N: usize> Div for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let inv = o.v.recip();
        let r = self.v / o.v;
        let mut d = self.d;
        for i in 0..N {
            d[i] = (self.d[i] - r * o.d[i]) * inv;
        }
        Dual { v: r, d }
    }
}

impl<T: Scalar, const N: usize> Neg for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        let mut d = self.d;
        for x in d.iter_mut() {
            *x = -*x;
        }
        Dual { v: -self.v, d }
    }
}

impl<T: Scalar, const N: usize> Add<f64> for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn add(self, o: f64) -> Self {
        Dual { v: self.v + o, d: self.d }
    }
}

impl<T: Scalar, const N: usize> Sub<f64> for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn sub(self, o: f64) -> Self {
        Dual { v: self.v - o, d: self.d }
    }
}

impl<T: Scalar, const N: usize> Mul<f64> for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn mul(self, o: f64) -> Self {
        let mut d = self.d;
        for x in d.iter_mut() {
            *x = *x * o;
        }
        Dual { v: self.v * o, d }
    }
}

impl<T: Scalar, const N: usize> Div<f64> for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn div(self, o: f64) -> Self {
        let mut d = self.d;
        for x in d.iter_mut() {
            *x = *x / o;
        }
        Dual { v: self.v / o, d }
    }
}

impl<T: Scalar, const N: usize> AddAssign for Dual<T, N> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Scalar, const N: usize> SubAssign for Dual<T, N> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Scalar, const N: usize> MulAssign for Dual<T, N> {
    #[inline]
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

impl<T: Scalar, const N: usize> Scalar for Dual<T, N> {
    fn from_f64(x: f64) -> Self {
        Self::constant(T::from_f64(x))
    }

    fn value(&self) -> f64 {
        self.v.value()
    }

    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, (s * 2.0).recip())
    }

    fn ln(self) -> Self {
        self.chain(self.v.ln(), self.v.recip())
    }

    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }

    fn powf(self, p: f64) -> Self {
        let f = self.v.powf(p);
        let df = self.v.powf(p - 1.0) * p;
        self.chain(f, df)
    }

    fn recip(self) -> Self {
        let r = self.v.recip();
        self.chain(r, -(r * r))
    }
}
