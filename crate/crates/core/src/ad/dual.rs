use std::ops::{Add, Div, Mul, Neg, Sub};

use super::Scalar;

/// First-order forward-mode number with `N` tangent directions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<const N: usize> {
    pub v: f64,
    pub d: [f64; N],
}

impl<const N: usize> Dual<N> {
    pub fn constant(v: f64) -> Self {
        Dual { v, d: [0.0; N] }
    }

    /// Independent variable number `i` with value `v`.
    pub fn variable(v: f64, i: usize) -> Self {
        let mut d = [0.0; N];
        d[i] = 1.0;
        Dual { v, d }
    }
}

impl<const N: usize> From<f64> for Dual<N> {
    fn from(v: f64) -> Self {
        Dual::constant(v)
    }
}

impl<const N: usize> Add for Dual<N> {
    type Output = Self;
    #[inline]
    fn add(mut self, rhs: Self) -> Self {
        self.v += rhs.v;
        for (a, b) in self.d.iter_mut().zip(rhs.d.iter()) {
            *a += b;
        }
        self
    }
}

impl<const N: usize> Sub for Dual<N> {
    type Output = Self;
    #[inline]
    fn sub(mut self, rhs: Self) -> Self {
        self.v -= rhs.v;
        for (a, b) in self.d.iter_mut().zip(rhs.d.iter()) {
            *a -= b;
        }
        self
    }
}

impl<const N: usize> Mul for Dual<N> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let mut d = [0.0; N];
        for i in 0..N {
            d[i] = self.d[i] * rhs.v + self.v * rhs.d[i];
        }
        Dual { v: self.v * rhs.v, d }
    }
}

impl<const N: usize> Div for Dual<N> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let inv = 1.0 / rhs.v;
        let v = self.v * inv;
        let mut d = [0.0; N];
        for i in 0..N {
            d[i] = (self.d[i] - v * rhs.d[i]) * inv;
        }
        Dual { v, d }
    }
}

impl<const N: usize> Neg for Dual<N> {
    type Output = Self;
    #[inline]
    fn neg(mut self) -> Self {
        self.v = -self.v;
        for a in self.d.iter_mut() {
            *a = -*a;
        }
        self
    }
}

impl<const N: usize> Add<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn add(mut self, rhs: f64) -> Self {
        self.v += rhs;
        self
    }
}

impl<const N: usize> Mul<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn mul(mut self, rhs: f64) -> Self {
        self.v *= rhs;
        for a in self.d.iter_mut() {
            *a *= rhs;
        }
        self
    }
}

impl<const N: usize> Scalar for Dual<N> {
    #[inline]
    fn value(&self) -> f64 {
        self.v
    }

    #[inline]
    fn order(&self) -> usize {
        1
    }

    #[inline]
    fn compose(&self, series: &[f64]) -> Self {
        let mut d = self.d;
        for a in d.iter_mut() {
            *a *= series[1];
        }
        Dual { v: series[0], d }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_quotient_rules() {
        let x = Dual::<2>::variable(3.0, 0);
        let y = Dual::<2>::variable(2.0, 1);
        let p = x * y;
        assert_eq!(p.v, 6.0);
        assert_eq!(p.d, [2.0, 3.0]);
        let q = x / y;
        assert_eq!(q.v, 1.5);
        assert!((q.d[0] - 0.5).abs() < 1e-15);
        assert!((q.d[1] + 0.75).abs() < 1e-15);
    }

    #[test]
    fn elementary_functions() {
        let x = Dual::<1>::variable(0.7, 0);
        assert!((x.exp().d[0] - 0.7f64.exp()).abs() < 1e-14);
        assert!((x.ln().d[0] - 1.0 / 0.7).abs() < 1e-14);
        assert!((x.sqrt().d[0] - 0.5 / 0.7f64.sqrt()).abs() < 1e-14);
        assert!((x.powi(3).d[0] - 3.0 * 0.49).abs() < 1e-14);
        assert!((x.recip().d[0] + 1.0 / 0.49).abs() < 1e-13);
    }
}
