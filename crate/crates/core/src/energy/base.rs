use serde::{Deserialize, Serialize};

use super::matrix::{polar_rotation, sqrt_spd_jet, M3};
use crate::ad::{Mat3, Scalar};
use crate::error::{Error, Result};

/// Homogeneous elastic energy `W0(F)`.
///
/// * `W01`: `|sqrt(F^T F) - I|^2 + |ln det F|^q`
/// * `W02`: `|sqrt(F^T F) - I|^2 + |1/det F - 1|^q`
/// * `CaseStudy`: `|F^T F - I|^2`
///
/// The first two are out of domain for `det F <= 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum BaseDensity {
    W01 { q: f64 },
    W02 { q: f64 },
    CaseStudy,
}

impl Default for BaseDensity {
    fn default() -> Self {
        BaseDensity::W01 { q: 2.0 }
    }
}

impl BaseDensity {
    /// Exponents below 2 make the volumetric term non-smooth at `det F = 1`
    /// and are rejected.
    pub fn validate(&self) -> Result<()> {
        match *self {
            BaseDensity::W01 { q } | BaseDensity::W02 { q } if !(q >= 2.0 && q.is_finite()) => Err(
                Error::InvalidArgument(format!("exponent q must be finite and >= 2, got {q}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BaseDensity::W01 { .. } => "W01",
            BaseDensity::W02 { .. } => "W02",
            BaseDensity::CaseStudy => "CaseStudy",
        }
    }

    fn check_domain<T: Scalar>(&self, det: &T) -> Result<()> {
        match self {
            BaseDensity::CaseStudy => Ok(()),
            _ if det.value() > 0.0 && det.value().is_finite() => Ok(()),
            _ => Err(Error::OutOfDomain { det: det.value() }),
        }
    }

    /// `W0(G)` through the matrix square root of `G^T G` (jet-capable).
    pub fn energy<T: Scalar>(&self, g: &Mat3<T>) -> Result<T> {
        match *self {
            BaseDensity::CaseStudy => {
                let e = g.transpose().matmul(g).sub(&Mat3::identity());
                Ok(e.norm2())
            }
            BaseDensity::W01 { q } | BaseDensity::W02 { q } => {
                let det = g.det();
                self.check_domain(&det)?;
                let u = sqrt_spd_jet(&g.transpose().matmul(g))?;
                let shear = u.sub(&Mat3::identity()).norm2();
                let vol = match self {
                    BaseDensity::W01 { .. } => det.ln(),
                    _ => det.recip() + (-1.0),
                };
                Ok(shear + vol.abs_pow(q))
            }
        }
    }

    /// `(W0(G), dW0/dG)` in closed form, using the polar rotation of `G`
    /// for the shear part: `|U - I|^2 = |G - R|^2` with gradient `2 (G - R)`.
    pub fn response<T: Scalar>(&self, g: &Mat3<T>) -> Result<(T, Mat3<T>)> {
        match *self {
            BaseDensity::CaseStudy => {
                let e = g.transpose().matmul(g).sub(&Mat3::identity());
                let w = e.norm2();
                let p = g.matmul(&e).scale(4.0);
                Ok((w, p))
            }
            BaseDensity::W01 { q } | BaseDensity::W02 { q } => {
                let det = g.det();
                self.check_domain(&det)?;
                let r = polar_rotation(g);
                let d = g.sub(&r);
                let shear = d.norm2();
                let cof = g.cofactor();
                let inv_det = det.recip();
                // d(det)/dG = cof
                let (vol, dvol_ddet) = match self {
                    BaseDensity::W01 { .. } => {
                        let l = det.ln();
                        let v = l.abs_pow(q);
                        let dv = abs_pow_derivative(&l, q) * inv_det.clone();
                        (v, dv)
                    }
                    _ => {
                        let m = inv_det.clone() + (-1.0);
                        let v = m.abs_pow(q);
                        let dv = -(abs_pow_derivative(&m, q) * inv_det.clone() * inv_det.clone());
                        (v, dv)
                    }
                };
                let p = d.scale(2.0).add(&cof.scale_by(&dvol_ddet));
                Ok((shear + vol, p))
            }
        }
    }

    /// `W0(F)` for plain numbers.
    pub fn eval(&self, f: &M3) -> Result<f64> {
        Ok(self.response(&Mat3::<f64>(*f))?.0)
    }

    /// Whether the exponent is an even integer, so that the volumetric term
    /// is a polynomial in `ln det` (or `1/det - 1`).
    pub fn is_smooth(&self) -> bool {
        match *self {
            BaseDensity::W01 { q } | BaseDensity::W02 { q } => q.fract() == 0.0 && (q as i64) % 2 == 0,
            BaseDensity::CaseStudy => true,
        }
    }
}

/// `d/dx |x|^q = q x |x|^(q-2)` for `q >= 2`.
fn abs_pow_derivative<T: Scalar>(x: &T, q: f64) -> T {
    if q == 2.0 {
        return x.clone() * 2.0;
    }
    x.clone() * x.abs_pow(q - 2.0) * q
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn response_gradient_matches_difference_quotient() {
        let f = [[1.05, 0.02, -0.03], [0.01, 0.97, 0.04], [0.02, -0.01, 1.1]];
        for base in [
            BaseDensity::W01 { q: 2.0 },
            BaseDensity::W02 { q: 3.0 },
            BaseDensity::CaseStudy,
        ] {
            let (_, p) = base.response(&Mat3::<f64>(f)).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    let h = 1e-6;
                    let mut fp = f;
                    let mut fm = f;
                    fp[i][j] += h;
                    fm[i][j] -= h;
                    let fd = (base.eval(&fp).unwrap() - base.eval(&fm).unwrap()) / (2.0 * h);
                    assert!((fd - p.0[i][j]).abs() < 1e-8, "{base:?} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn square_root_and_polar_routes_agree() {
        let f = Mat3::<f64>([[1.2, 0.3, -0.1], [-0.2, 0.9, 0.25], [0.1, 0.05, 1.3]]);
        for base in [BaseDensity::W01 { q: 2.0 }, BaseDensity::W02 { q: 2.0 }] {
            let a = base.energy(&f).unwrap();
            let b = base.response(&f).unwrap().0;
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_small_exponent() {
        assert!(BaseDensity::W01 { q: 1.5 }.validate().is_err());
        assert!(BaseDensity::W02 { q: 2.5 }.validate().is_ok());
    }
}
