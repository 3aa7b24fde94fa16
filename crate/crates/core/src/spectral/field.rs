use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{Grid, Space};
use crate::error::{Error, Result};

/// Real-valued band-limited periodic field with `C` components, stored as
/// normalized half-spectrum coefficients (component-major).
#[derive(Clone)]
pub struct Field<const C: usize> {
    space: Arc<Space>,
    coeffs: Vec<Complex64>,
}

pub type ScalarField = Field<1>;
pub type VectorField = Field<3>;
/// Row-major 3x3 matrix field; component `3 i + j` is entry `(i, j)`.
pub type MatrixField = Field<9>;

impl<const C: usize> std::fmt::Debug for Field<C> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Field")
            .field("components", &C)
            .field("grid", self.space.grid())
            .finish()
    }
}

impl<const C: usize> Field<C> {
    pub fn zeros(space: &Arc<Space>) -> Self {
        Field {
            space: space.clone(),
            coeffs: vec![Complex64::new(0.0, 0.0); C * space.len()],
        }
    }

    pub fn from_coefficients(space: &Arc<Space>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != C * space.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                C * space.len(),
                coeffs.len()
            )));
        }
        Ok(Field {
            space: space.clone(),
            coeffs,
        })
    }

    /// Transforms physical component arrays (no dealiasing).
    pub fn from_physical(space: &Arc<Space>, comps: &[Vec<f64>]) -> Self {
        assert_eq!(comps.len(), C);
        let mut coeffs = Vec::with_capacity(C * space.len());
        for c in comps {
            coeffs.extend(space.forward(c));
        }
        Field {
            space: space.clone(),
            coeffs,
        }
    }

    /// Transforms physical component arrays and applies the dealias mask.
    pub fn from_physical_dealiased(space: &Arc<Space>, comps: &[Vec<f64>]) -> Self {
        assert_eq!(comps.len(), C);
        let mut coeffs = Vec::with_capacity(C * space.len());
        for c in comps {
            coeffs.extend(space.forward_dealiased(c));
        }
        Field {
            space: space.clone(),
            coeffs,
        }
    }

    /// Samples `f` at the grid nodes.
    pub fn from_fn(space: &Arc<Space>, f: impl Fn([f64; 3]) -> [f64; C]) -> Self {
        let g = space.grid();
        let n = g.n();
        let mut comps = vec![vec![0.0; g.physical_len()]; C];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let v = f(g.node(i, j, k));
                    let p = (i * n + j) * n + k;
                    for c in 0..C {
                        comps[c][p] = v[c];
                    }
                }
            }
        }
        Self::from_physical(space, &comps)
    }

    /// Random field whose modes are Gaussian inside `1 <= max-index <= band`,
    /// and zero elsewhere (mean-free, real, within the dealias band).
    pub fn random_band<R: Rng>(space: &Arc<Space>, band: usize, rng: &mut R) -> Self {
        let band = band.min(space.grid().cutoff());
        let mut f = Self::zeros(space);
        for c in 0..C {
            let coeffs = f.component_mut(c);
            for (idx, v) in coeffs.iter_mut().enumerate() {
                let b = space.band(idx);
                if b >= 1 && b <= band {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    *v = Complex64::new(re, im);
                }
            }
        }
        f.symmetrize();
        f
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn grid(&self) -> &Grid {
        self.space.grid()
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        let m = self.space.len();
        &self.coeffs[c * m..(c + 1) * m]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        let m = self.space.len();
        &mut self.coeffs[c * m..(c + 1) * m]
    }

    pub fn scalar(&self, c: usize) -> ScalarField {
        ScalarField {
            space: self.space.clone(),
            coeffs: self.component(c).to_vec(),
        }
    }

    pub fn set_scalar(&mut self, c: usize, s: &ScalarField) {
        self.component_mut(c).copy_from_slice(&s.coeffs);
    }

    pub fn same_grid<const D: usize>(&self, other: &Field<D>) -> bool {
        Arc::ptr_eq(&self.space, &other.space) || self.grid() == other.grid()
    }

    pub fn check_grid<const D: usize>(&self, other: &Field<D>) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Physical samples of every component.
    pub fn to_physical(&self) -> Vec<Vec<f64>> {
        (0..C).map(|c| self.space.inverse(self.component(c))).collect()
    }

    /// Spatial mean of every component (the zero mode).
    pub fn mean(&self) -> [f64; C] {
        let mut out = [0.0; C];
        for (c, o) in out.iter_mut().enumerate() {
            *o = self.component(c)[0].re;
        }
        out
    }

    pub fn set_mean(&mut self, mean: [f64; C]) {
        for (c, &m) in mean.iter().enumerate() {
            self.component_mut(c)[0] = Complex64::new(m, 0.0);
        }
    }

    /// Zeroes every mode outside the dealias band.
    pub fn dealias(&mut self) {
        for c in 0..C {
            let space = self.space.clone();
            space.dealias(self.component_mut(c));
        }
    }

    /// Enforces Hermitian symmetry on the self-conjugate planes `k2 = 0` and
    /// `k2 = n/2` by averaging each pair.
    pub fn symmetrize(&mut self) {
        let n = self.space.n();
        let nz = self.space.grid().nz();
        for c in 0..C {
            let space = self.space.clone();
            let data = self.component_mut(c);
            for i2 in [0, nz - 1] {
                for i0 in 0..n {
                    for i1 in 0..n {
                        let a = space.index(i0, i1, i2);
                        let b = space.index((n - i0) % n, (n - i1) % n, i2);
                        if b < a {
                            continue;
                        }
                        let avg = 0.5 * (data[a] + data[b].conj());
                        data[a] = avg;
                        data[b] = avg.conj();
                    }
                }
            }
        }
    }

    /// Largest violation of Hermitian symmetry on the self-conjugate planes.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.space.n();
        let nz = self.space.grid().nz();
        let mut worst: f64 = 0.0;
        for c in 0..C {
            let data = self.component(c);
            for i2 in [0, nz - 1] {
                for i0 in 0..n {
                    for i1 in 0..n {
                        let a = self.space.index(i0, i1, i2);
                        let b = self.space.index((n - i0) % n, (n - i1) % n, i2);
                        worst = worst.max((data[a] - data[b].conj()).norm());
                    }
                }
            }
        }
        worst
    }

    /// Maximum over modes outside the dealias band of `|c_k|`.
    pub fn out_of_band_max(&self) -> f64 {
        let m = self.space.len();
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.space.retained(i % m))
            .map(|(_, c)| c.norm())
            .fold(0.0, f64::max)
    }

    pub fn scale(&mut self, s: f64) {
        for c in self.coeffs.iter_mut() {
            *c *= s;
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    /// `self += a * x`.
    pub fn axpy(&mut self, a: f64, x: &Self) {
        debug_assert!(self.same_grid(x));
        for (y, xv) in self.coeffs.iter_mut().zip(x.coeffs.iter()) {
            *y += xv * a;
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// `sum_k w(k) |c_k|^2` over the full spectrum and all components, with
    /// `w` a function of the half-spectrum index.
    pub fn weighted_sum(&self, w: impl Fn(usize) -> f64) -> f64 {
        let m = self.space.len();
        let mut acc = 0.0;
        for c in 0..C {
            let data = &self.coeffs[c * m..(c + 1) * m];
            for (idx, v) in data.iter().enumerate() {
                let a = v.norm_sqr();
                if a != 0.0 {
                    acc += self.space.multiplicity(idx) * w(idx) * a;
                }
            }
        }
        acc
    }

    /// `L^2` inner product over the box, summed over components.
    pub fn inner(&self, other: &Self) -> f64 {
        debug_assert!(self.same_grid(other));
        let m = self.space.len();
        let mut acc = 0.0;
        for (i, (a, b)) in self.coeffs.iter().zip(other.coeffs.iter()).enumerate() {
            acc += self.space.multiplicity(i % m) * (a.conj() * b).re;
        }
        acc * self.grid().volume()
    }

    pub fn norm_l2(&self) -> f64 {
        (self.weighted_sum(|_| 1.0) * self.grid().volume()).sqrt()
    }

    /// Root-mean-square of the coefficients, i.e. of the physical field.
    pub fn rms(&self) -> f64 {
        self.weighted_sum(|_| 1.0).sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }
}

impl MatrixField {
    pub fn entry(&self, i: usize, j: usize) -> &[Complex64] {
        self.component(3 * i + j)
    }
}
