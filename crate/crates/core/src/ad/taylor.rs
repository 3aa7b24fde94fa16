//! Multivariate truncated Taylor polynomials.
//!
//! A [`TaylorSpace`] fixes the number of variables, the total degree and
//! optional per-variable degree caps; it owns the monomial enumeration and
//! the sparse multiplication table. [`Taylor`] numbers reference a space
//! through an `Arc` and store one coefficient per monomial, so that
//! `f(x0 + h) = sum_alpha c_alpha h^alpha` up to the truncation degree.
//! The mixed partial `d^alpha f(x0)` equals `alpha! * c_alpha`.

use std::collections::HashMap;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use super::Scalar;

#[derive(Debug)]
pub struct TaylorSpace {
    nvars: usize,
    degree: usize,
    monomials: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    /// `(a, b, out)` triples: coefficient `a` times coefficient `b` lands in `out`.
    table: Vec<(u32, u32, u32)>,
}

impl TaylorSpace {
    pub fn new(nvars: usize, degree: usize) -> Arc<Self> {
        Self::with_caps(nvars, degree, &vec![degree; nvars])
    }

    /// Space whose variable `i` appears with exponent at most `caps[i]`.
    pub fn with_caps(nvars: usize, degree: usize, caps: &[usize]) -> Arc<Self> {
        assert_eq!(caps.len(), nvars);
        let mut monomials = Vec::new();
        let mut current = vec![0u8; nvars];
        enumerate(&mut current, 0, degree, caps, &mut monomials);
        monomials.sort_by(|a, b| {
            let da: u32 = a.iter().map(|&e| e as u32).sum();
            let db: u32 = b.iter().map(|&e| e as u32).sum();
            da.cmp(&db).then_with(|| b.cmp(a))
        });
        let index: HashMap<Vec<u8>, usize> = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        let mut table = Vec::new();
        let mut sum = vec![0u8; nvars];
        for (i, a) in monomials.iter().enumerate() {
            for (j, b) in monomials.iter().enumerate() {
                for k in 0..nvars {
                    sum[k] = a[k] + b[k];
                }
                if let Some(&out) = index.get(&sum) {
                    table.push((i as u32, j as u32, out as u32));
                }
            }
        }
        Arc::new(TaylorSpace {
            nvars,
            degree,
            monomials,
            index,
            table,
        })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomials(&self) -> &[Vec<u8>] {
        &self.monomials
    }

    pub fn index_of(&self, exponents: &[u8]) -> Option<usize> {
        self.index.get(exponents).copied()
    }
}

fn enumerate(current: &mut Vec<u8>, var: usize, left: usize, caps: &[usize], out: &mut Vec<Vec<u8>>) {
    if var == current.len() {
        out.push(current.clone());
        return;
    }
    for e in 0..=left.min(caps[var]) {
        current[var] = e as u8;
        enumerate(current, var + 1, left - e, caps, out);
    }
    current[var] = 0;
}

/// Truncated multivariate Taylor number. A number without a space is a plain
/// constant and combines with any space.
#[derive(Clone, Debug)]
pub struct Taylor {
    space: Option<Arc<TaylorSpace>>,
    c: Vec<f64>,
}

impl Taylor {
    pub fn constant(v: f64) -> Self {
        Taylor {
            space: None,
            c: vec![v],
        }
    }

    /// Constant embedded in `space`.
    pub fn constant_in(space: &Arc<TaylorSpace>, v: f64) -> Self {
        let mut c = vec![0.0; space.len()];
        c[0] = v;
        Taylor {
            space: Some(space.clone()),
            c,
        }
    }

    /// Independent variable `i` expanded at `v`.
    pub fn variable(space: &Arc<TaylorSpace>, i: usize, v: f64) -> Self {
        let mut t = Self::constant_in(space, v);
        let mut e = vec![0u8; space.nvars];
        e[i] = 1;
        if let Some(idx) = space.index_of(&e) {
            t.c[idx] = 1.0;
        }
        t
    }

    /// Polynomial from explicit `(exponents, coefficient)` pairs; monomials
    /// outside the space are dropped.
    pub fn from_terms(space: &Arc<TaylorSpace>, terms: &[(Vec<u8>, f64)]) -> Self {
        let mut t = Self::constant_in(space, 0.0);
        for (e, v) in terms {
            if let Some(idx) = space.index_of(e) {
                t.c[idx] += v;
            }
        }
        t
    }

    pub fn space(&self) -> Option<&Arc<TaylorSpace>> {
        self.space.as_ref()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.c
    }

    /// Taylor coefficient of the monomial `h^exponents` (zero if absent).
    pub fn coeff(&self, exponents: &[u8]) -> f64 {
        match &self.space {
            None => {
                if exponents.iter().all(|&e| e == 0) {
                    self.c[0]
                } else {
                    0.0
                }
            }
            Some(s) => s.index_of(exponents).map(|i| self.c[i]).unwrap_or(0.0),
        }
    }

    /// Mixed partial derivative `d^exponents f` at the expansion point.
    pub fn derivative(&self, exponents: &[u8]) -> f64 {
        let scale: f64 = exponents
            .iter()
            .map(|&e| (1..=e as u64).product::<u64>() as f64)
            .product();
        self.coeff(exponents) * scale
    }

    fn promote(&self, space: &Arc<TaylorSpace>) -> Self {
        match &self.space {
            Some(_) => self.clone(),
            None => Self::constant_in(space, self.c[0]),
        }
    }

    fn binary_space(&self, other: &Self) -> Option<Arc<TaylorSpace>> {
        match (&self.space, &other.space) {
            (Some(a), Some(b)) => {
                debug_assert!(Arc::ptr_eq(a, b), "Taylor numbers from different spaces");
                Some(a.clone())
            }
            (Some(a), None) | (None, Some(a)) => Some(a.clone()),
            (None, None) => None,
        }
    }
}

impl From<f64> for Taylor {
    fn from(v: f64) -> Self {
        Taylor::constant(v)
    }
}

impl Add for Taylor {
    type Output = Taylor;
    fn add(self, rhs: Taylor) -> Taylor {
        match self.binary_space(&rhs) {
            None => Taylor::constant(self.c[0] + rhs.c[0]),
            Some(s) => {
                let mut a = self.promote(&s);
                let b = rhs.promote(&s);
                for (x, y) in a.c.iter_mut().zip(b.c.iter()) {
                    *x += y;
                }
                a
            }
        }
    }
}

impl Sub for Taylor {
    type Output = Taylor;
    fn sub(self, rhs: Taylor) -> Taylor {
        self + (-rhs)
    }
}

impl Neg for Taylor {
    type Output = Taylor;
    fn neg(mut self) -> Taylor {
        for x in self.c.iter_mut() {
            *x = -*x;
        }
        self
    }
}

impl Mul for Taylor {
    type Output = Taylor;
    fn mul(self, rhs: Taylor) -> Taylor {
        if self.space.is_none() {
            return rhs * self.c[0];
        }
        if rhs.space.is_none() {
            return self * rhs.c[0];
        }
        let space = self.space.clone().unwrap();
        let mut out = vec![0.0; space.len()];
        for &(i, j, k) in &space.table {
            let a = self.c[i as usize];
            if a != 0.0 {
                out[k as usize] += a * rhs.c[j as usize];
            }
        }
        Taylor {
            space: Some(space),
            c: out,
        }
    }
}

impl Div for Taylor {
    type Output = Taylor;
    fn div(self, rhs: Taylor) -> Taylor {
        self * rhs.recip()
    }
}

impl Add<f64> for Taylor {
    type Output = Taylor;
    fn add(mut self, rhs: f64) -> Taylor {
        self.c[0] += rhs;
        self
    }
}

impl Mul<f64> for Taylor {
    type Output = Taylor;
    fn mul(mut self, rhs: f64) -> Taylor {
        for x in self.c.iter_mut() {
            *x *= rhs;
        }
        self
    }
}

impl Scalar for Taylor {
    fn value(&self) -> f64 {
        self.c[0]
    }

    fn order(&self) -> usize {
        self.space.as_ref().map(|s| s.degree).unwrap_or(0)
    }

    fn compose(&self, series: &[f64]) -> Self {
        let order = self.order();
        if order == 0 {
            return Taylor {
                space: self.space.clone(),
                c: {
                    let mut c = vec![0.0; self.c.len()];
                    c[0] = series[0];
                    c
                },
            };
        }
        // Horner evaluation in the nilpotent part.
        let mut nil = self.clone();
        nil.c[0] = 0.0;
        let mut acc = Taylor::constant_in(self.space.as_ref().unwrap(), series[order]);
        for k in (0..order).rev() {
            acc = acc * nil.clone() + series[k];
        }
        acc
    }
}
