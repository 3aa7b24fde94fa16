use serde::{Deserialize, Serialize};

use super::matrix::M3;
use super::{BaseDensity, PrestrainMap};
use crate::ad::{Dual, Mat3, Scalar};
use crate::error::Result;

/// Where the prestrain enters the base density.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Composition {
    /// `W0(B(phi) F)`
    Left,
    /// `W0(F B(phi))`
    #[default]
    Right,
    /// `W0(F)`
    None,
}

/// Inhomogeneous density `W(phi, F) = W0(F B(phi)) + phi^2 / 2` (or the
/// left-composed / prestrain-free variants).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityModel {
    pub base: BaseDensity,
    pub prestrain: PrestrainMap,
    pub composition: Composition,
    pub quadratic_term: bool,
}

/// Value and first derivatives of the density at one point.
#[derive(Clone, Debug)]
pub struct Response<T> {
    pub w: T,
    pub d_phi: T,
    pub d_f: Mat3<T>,
}

impl Default for DensityModel {
    fn default() -> Self {
        DensityModel {
            base: BaseDensity::default(),
            prestrain: PrestrainMap::default(),
            composition: Composition::Right,
            quadratic_term: true,
        }
    }
}

impl DensityModel {
    pub fn w1(base: BaseDensity, prestrain: PrestrainMap) -> Self {
        DensityModel {
            base,
            prestrain,
            composition: Composition::Right,
            quadratic_term: true,
        }
    }

    pub fn w2(base: BaseDensity, prestrain: PrestrainMap) -> Self {
        DensityModel {
            base,
            prestrain,
            composition: Composition::Left,
            quadratic_term: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()
    }

    fn composed<T: Scalar>(&self, phi: &T, f: &Mat3<T>) -> (Mat3<T>, Option<(Mat3<T>, Mat3<T>)>) {
        match self.composition {
            Composition::None => (f.clone(), None),
            Composition::Right => {
                let (b, bp) = self.prestrain.b_and_prime(phi);
                (f.matmul(&b), Some((b, bp)))
            }
            Composition::Left => {
                let (b, bp) = self.prestrain.b_and_prime(phi);
                (b.matmul(f), Some((b, bp)))
            }
        }
    }

    /// Density value through the matrix-square-root route. Generic over
    /// [`Scalar`], so jets give all mixed partials.
    pub fn energy<T: Scalar>(&self, phi: &T, f: &Mat3<T>) -> Result<T> {
        let (g, _) = self.composed(phi, f);
        let mut w = self.base.energy(&g)?;
        if self.quadratic_term {
            w = w + phi.clone() * phi.clone() * 0.5;
        }
        Ok(w)
    }

    /// Value and first derivatives in closed form (chain rule through the
    /// polar route of the base density).
    pub fn response<T: Scalar>(&self, phi: &T, f: &Mat3<T>) -> Result<Response<T>> {
        let (g, bb) = self.composed(phi, f);
        let (w0, p) = self.base.response(&g)?;
        let (mut w, mut d_phi, d_f) = match (self.composition, bb) {
            (Composition::Right, Some((b, bp))) => {
                let d_phi = p.dot(&f.matmul(&bp));
                (w0, d_phi, p.matmul(&b))
            }
            (Composition::Left, Some((b, bp))) => {
                let d_phi = p.dot(&bp.matmul(f));
                (w0, d_phi, b.matmul(&p))
            }
            _ => (w0, T::from(0.0), p),
        };
        if self.quadratic_term {
            w = w + phi.clone() * phi.clone() * 0.5;
            d_phi = d_phi + phi.clone();
        }
        Ok(Response { w, d_phi, d_f })
    }

    /// `W(phi, F)`; `OutOfDomain` carries the determinant of the composed
    /// argument of the base density.
    pub fn eval(&self, phi: f64, f: &M3) -> Result<f64> {
        Ok(self.response(&phi, &Mat3::<f64>(*f))?.w)
    }

    /// Hessian over the coordinates `(phi, F_11, F_12, ..., F_33)`.
    pub fn hessian(&self, phi: f64, f: &M3) -> Result<[[f64; 10]; 10]> {
        let p = Dual::<10>::variable(phi, 0);
        let fm = Mat3::from_fn(|i, j| Dual::<10>::variable(f[i][j], 1 + 3 * i + j));
        let r = self.response(&p, &fm)?;
        let mut h = [[0.0; 10]; 10];
        h[0] = r.d_phi.d;
        for i in 0..3 {
            for j in 0..3 {
                h[1 + 3 * i + j] = r.d_f.0[i][j].d;
            }
        }
        Ok(h)
    }

    /// Elastic tangent `d^2 W / dF dF` as a 9x9 matrix at fixed `phi`.
    pub fn elastic_tangent(&self, phi: f64, f: &M3) -> Result<[[f64; 9]; 9]> {
        let p = Dual::<9>::constant(phi);
        let fm = Mat3::from_fn(|i, j| Dual::<9>::variable(f[i][j], 3 * i + j));
        let r = self.response(&p, &fm)?;
        let mut c = [[0.0; 9]; 9];
        for i in 0..3 {
            for j in 0..3 {
                c[3 * i + j] = r.d_f.0[i][j].d;
            }
        }
        Ok(c)
    }

    /// Determinant of the argument passed to the base density.
    pub fn composed_det(&self, phi: f64, f: &M3) -> f64 {
        self.composed(&phi, &Mat3::<f64>(*f)).0.det()
    }
}

/// `W(phi, F)` for a model; see [`DensityModel::eval`].
pub fn eval_density(model: &DensityModel, phi: f64, f: &M3) -> Result<f64> {
    model.eval(phi, f)
}
