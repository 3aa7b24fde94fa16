//! Matrix square roots and polar factors, for plain numbers and for jets.

use nalgebra::{Matrix3, SymmetricEigen};

use crate::ad::{Mat3, Scalar};
use crate::error::{Error, Result};

pub type M3 = [[f64; 3]; 3];

pub(crate) fn to_na(m: &M3) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| m[i][j])
}

pub(crate) fn from_na(m: &Matrix3<f64>) -> M3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = m[(i, j)];
        }
    }
    out
}

/// Symmetric eigendecomposition `S = Q diag(lambda) Q^T`, with a symmetry
/// check relative to the size of `S`.
pub(crate) fn sym_eigen(s: &M3) -> Result<(Matrix3<f64>, [f64; 3])> {
    let m = to_na(s);
    let scale = m.norm().max(1.0);
    if (m - m.transpose()).norm() > 1e-12 * scale {
        return Err(Error::InvalidArgument("matrix is not symmetric".into()));
    }
    let eig = SymmetricEigen::new(0.5 * (m + m.transpose()));
    let l = eig.eigenvalues;
    Ok((eig.eigenvectors, [l[0], l[1], l[2]]))
}

/// Unique symmetric positive definite square root.
pub fn sqrt_spd(s: &M3) -> Result<M3> {
    let (q, l) = sym_eigen(s)?;
    let lmax = l.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let lmin = l.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if lmin <= 1e-14 * lmax.max(f64::MIN_POSITIVE) {
        return Err(Error::NotSpd { min_eigenvalue: lmin });
    }
    let d = Matrix3::from_diagonal(&nalgebra::Vector3::new(l[0].sqrt(), l[1].sqrt(), l[2].sqrt()));
    let x = q * d * q.transpose();
    Ok(from_na(&(0.5 * (x + x.transpose()))))
}

/// Square root of a symmetric positive definite jet matrix. The value is
/// taken from [`sqrt_spd`]; higher orders solve `X0 N + N X0 = T - N^2` by
/// fixed-point iteration, one order per sweep, with the Sylvester operator
/// inverted in the eigenbasis of `X0`.
pub fn sqrt_spd_jet<T: Scalar>(s: &Mat3<T>) -> Result<Mat3<T>> {
    let s0 = s.values();
    let (q, l) = sym_eigen(&s0)?;
    let lmax = l.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let lmin = l.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if lmin <= 1e-14 * lmax.max(f64::MIN_POSITIVE) {
        return Err(Error::NotSpd { min_eigenvalue: lmin });
    }
    let mu = [l[0].sqrt(), l[1].sqrt(), l[2].sqrt()];
    let x0 = {
        let d = Matrix3::from_diagonal(&nalgebra::Vector3::new(mu[0], mu[1], mu[2]));
        from_na(&(q * d * q.transpose()))
    };
    let order = s.at(0, 0).order();
    if order == 0 {
        return Ok(Mat3::from_f64(&x0));
    }
    // K[a][b][c][d]: coefficient of M_cd in L^{-1}(M)_ab
    let mut k = [[[[0.0; 3]; 3]; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                for d in 0..3 {
                    let mut acc = 0.0;
                    for i in 0..3 {
                        for j in 0..3 {
                            acc += q[(a, i)] * q[(b, j)] * q[(c, i)] * q[(d, j)] / (mu[i] + mu[j]);
                        }
                    }
                    k[a][b][c][d] = acc;
                }
            }
        }
    }
    let t = Mat3::from_fn(|i, j| s.at(i, j).clone() + (-s0[i][j]));
    let mut n = Mat3::from_fn(|_, _| T::from(0.0));
    for _ in 0..order {
        let r = t.sub(&n.matmul(&n));
        n = Mat3::from_fn(|a, b| {
            let mut acc = T::from(0.0);
            for c in 0..3 {
                for d in 0..3 {
                    let coef = k[a][b][c][d];
                    if coef != 0.0 {
                        acc = acc + r.at(c, d).clone() * coef;
                    }
                }
            }
            acc
        });
    }
    Ok(Mat3::from_fn(|i, j| n.at(i, j).clone() + x0[i][j]))
}

/// Rotation factor `R` of the polar decomposition `G = R U`, by the Newton
/// iteration `X <- (X + X^{-T}) / 2`, Frobenius-scaled while far from
/// converged. Requires `det G > 0`.
pub fn polar_rotation<T: Scalar>(g: &Mat3<T>) -> Mat3<T> {
    let order = g.at(0, 0).order();
    let mut x = g.clone();
    let mut extra = if order > 0 { order + 2 } else { 0 };
    for _ in 0..100 {
        let xv = x.values();
        let it = x.inverse_transpose();
        let iv = it.values();
        let mut diff = 0.0;
        let mut nx = 0.0;
        let mut ni = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                diff += (xv[i][j] - iv[i][j]).powi(2);
                nx += xv[i][j] * xv[i][j];
                ni += iv[i][j] * iv[i][j];
            }
        }
        let diff = 0.5 * diff.sqrt();
        let gamma = if diff > 1e-2 { (ni / nx).sqrt().sqrt() } else { 1.0 };
        x = x.scale(0.5 * gamma).add(&it.scale(0.5 / gamma));
        if diff <= 1e-15 {
            if extra == 0 {
                break;
            }
            extra -= 1;
        }
    }
    x
}
