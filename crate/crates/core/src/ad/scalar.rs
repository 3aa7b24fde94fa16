use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Number-like type carrying a value and, optionally, truncated derivative
/// information. Implemented by `f64`, [`Dual`](super::Dual) and
/// [`Taylor`](super::Taylor).
///
/// Elementary functions are expressed through [`Scalar::compose`], which
/// receives the Taylor coefficients `f^(k)(x0) / k!` of the outer function
/// at the value `x0` of `self`.
pub trait Scalar:
    Clone
    + Debug
    + From<f64>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Mul<f64, Output = Self>
{
    /// Zeroth-order (point) value.
    fn value(&self) -> f64;

    /// Highest derivative order carried by this number.
    fn order(&self) -> usize;

    /// Applies a scalar function given its scaled derivatives at `self.value()`.
    /// `series[k]` must hold `f^(k)(x0) / k!` for `k = 0..=self.order()`.
    fn compose(&self, series: &[f64]) -> Self;

    fn exp(&self) -> Self {
        let e = self.value().exp();
        let series: Vec<f64> = factorials(self.order()).iter().map(|f| e / f).collect();
        self.compose(&series)
    }

    fn ln(&self) -> Self {
        let x0 = self.value();
        let mut series = vec![x0.ln()];
        for k in 1..=self.order() {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            series.push(sign / (k as f64 * x0.powi(k as i32)));
        }
        self.compose(&series)
    }

    fn powf(&self, p: f64) -> Self {
        let x0 = self.value();
        let mut series = Vec::with_capacity(self.order() + 1);
        let mut binom = 1.0;
        for k in 0..=self.order() {
            series.push(binom * x0.powf(p - k as f64));
            binom *= (p - k as f64) / (k as f64 + 1.0);
        }
        self.compose(&series)
    }

    fn sqrt(&self) -> Self {
        self.powf(0.5)
    }

    fn recip(&self) -> Self {
        let x0 = self.value();
        let series: Vec<f64> = (0..=self.order())
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign / x0.powi(k as i32 + 1)
            })
            .collect();
        self.compose(&series)
    }

    /// Integer power by repeated multiplication.
    fn powi(&self, n: i32) -> Self {
        if n < 0 {
            return self.recip().powi(-n);
        }
        let mut acc = Self::from(1.0);
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }

    /// `|x|^q` for `q >= 1`. Even integer exponents are exact polynomials;
    /// otherwise, at `x0 = 0` the jet is returned as zero, which is exact for
    /// derivative orders below `q`.
    fn abs_pow(&self, q: f64) -> Self {
        if q.fract() == 0.0 && (q as i64) % 2 == 0 {
            return self.powi(q as i32);
        }
        let x0 = self.value();
        if x0 == 0.0 {
            return self.clone() * 0.0;
        }
        let s = x0.signum();
        (self.clone() * s).powf(q)
    }
}

pub(crate) fn factorials(order: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(order + 1);
    let mut f = 1.0;
    for k in 0..=order {
        if k > 0 {
            f *= k as f64;
        }
        out.push(f);
    }
    out
}

impl Scalar for f64 {
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn order(&self) -> usize {
        0
    }
    #[inline]
    fn compose(&self, series: &[f64]) -> Self {
        series[0]
    }
    #[inline]
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    #[inline]
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    #[inline]
    fn powf(&self, p: f64) -> Self {
        f64::powf(*self, p)
    }
    #[inline]
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    #[inline]
    fn recip(&self) -> Self {
        1.0 / *self
    }
    #[inline]
    fn powi(&self, n: i32) -> Self {
        f64::powi(*self, n)
    }
    #[inline]
    fn abs_pow(&self, q: f64) -> Self {
        if q == 2.0 {
            self * self
        } else {
            self.abs().powf(q)
        }
    }
}
