use serde::{Deserialize, Serialize};

use super::matrix::{sym_eigen, M3};
use crate::ad::{Mat3, Scalar};
use crate::error::Result;

/// `B(phi) = exp(phi M_B)` for a symmetric `M_B`, evaluated spectrally:
/// `B = Q diag(exp(phi lambda)) Q^T` and `B' = M_B B`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "M3", into = "M3")]
pub struct PrestrainMap {
    m_b: M3,
    lambda: [f64; 3],
    /// Outer products `q_k q_k^T` of the eigenvectors.
    proj: [M3; 3],
}

impl PrestrainMap {
    pub fn new(m_b: M3) -> Result<Self> {
        let (q, lambda) = sym_eigen(&m_b)?;
        let mut proj = [[[0.0; 3]; 3]; 3];
        for (k, p) in proj.iter_mut().enumerate() {
            for i in 0..3 {
                for j in 0..3 {
                    p[i][j] = q[(i, k)] * q[(j, k)];
                }
            }
        }
        Ok(PrestrainMap { m_b, lambda, proj })
    }

    pub fn isotropic(m: f64) -> Self {
        Self::new([[m, 0.0, 0.0], [0.0, m, 0.0], [0.0, 0.0, m]]).expect("diagonal is symmetric")
    }

    pub fn m_b(&self) -> &M3 {
        &self.m_b
    }

    /// Frobenius norm of `M_B = B'(0)`.
    pub fn m_b_norm(&self) -> f64 {
        self.m_b.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.m_b.iter().flatten().all(|&x| x == 0.0)
    }

    fn combine<T: Scalar>(&self, weights: &[T; 3]) -> Mat3<T> {
        Mat3::from_fn(|i, j| {
            let mut acc = T::from(0.0);
            for k in 0..3 {
                let p = self.proj[k][i][j];
                if p != 0.0 {
                    acc = acc + weights[k].clone() * p;
                }
            }
            acc
        })
    }

    pub fn b<T: Scalar>(&self, phi: &T) -> Mat3<T> {
        let e = self.lambda.map(|l| (phi.clone() * l).exp());
        self.combine(&e)
    }

    pub fn b_prime<T: Scalar>(&self, phi: &T) -> Mat3<T> {
        let e = self.lambda.map(|l| (phi.clone() * l).exp() * l);
        self.combine(&e)
    }

    /// `B(phi)` and `B'(phi)` together.
    pub fn b_and_prime<T: Scalar>(&self, phi: &T) -> (Mat3<T>, Mat3<T>) {
        let e = self.lambda.map(|l| (phi.clone() * l).exp());
        let ep = [0, 1, 2].map(|k| e[k].clone() * self.lambda[k]);
        (self.combine(&e), self.combine(&ep))
    }
}

impl TryFrom<M3> for PrestrainMap {
    type Error = crate::error::Error;
    fn try_from(m: M3) -> Result<Self> {
        Self::new(m)
    }
}

impl From<PrestrainMap> for M3 {
    fn from(p: PrestrainMap) -> M3 {
        p.m_b
    }
}

impl Default for PrestrainMap {
    fn default() -> Self {
        Self::isotropic(0.1)
    }
}
