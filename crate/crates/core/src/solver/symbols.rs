use std::sync::Arc;

use nalgebra::{Matrix3, SymmetricEigen};
use num_complex::Complex64;

use crate::energy::{derivatives, DensityModel};
use crate::error::{Error, Result};
use crate::spectral::{MatrixField, ScalarField, Space, VectorField};

const IDENTITY: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Constant-coefficient linearization at `(0, I)`: elasticity tensor `C`,
/// coupling `G = d_phi d_F W`, diffusion coefficient `a = d_phi^2 W`, and
/// per-mode acoustic matrices `A(k)_il = C_ijlm k_j k_m`.
pub struct LinearizedSymbols {
    pub c: [[f64; 9]; 9],
    pub g: [[f64; 3]; 3],
    pub a: f64,
    space: Arc<Space>,
    acoustic_inv: Vec<[[f64; 3]; 3]>,
    gk: Vec<[f64; 3]>,
    schur: Vec<f64>,
    min_eigen_ratio: f64,
}

/// `A(k)` for a 9x9 elasticity matrix indexed by `3 i + j`.
pub fn acoustic(c: &[[f64; 9]; 9], k: [f64; 3]) -> [[f64; 3]; 3] {
    let mut a = [[0.0; 3]; 3];
    for i in 0..3 {
        for l in 0..3 {
            let mut acc = 0.0;
            for j in 0..3 {
                for m in 0..3 {
                    acc += c[3 * i + j][3 * l + m] * k[j] * k[m];
                }
            }
            a[i][l] = acc;
        }
    }
    a
}

pub(crate) fn sym_eigenvalues(a: &[[f64; 3]; 3]) -> [f64; 3] {
    let m = Matrix3::from_fn(|i, j| 0.5 * (a[i][j] + a[j][i]));
    let e = SymmetricEigen::new(m).eigenvalues;
    let mut v = [e[0], e[1], e[2]];
    v.sort_by(|x, y| x.partial_cmp(y).unwrap());
    v
}

fn inverse3(a: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let m = Matrix3::from_fn(|i, j| a[i][j]);
    let inv = m.try_inverse().expect("acoustic matrix is singular");
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = inv[(i, j)];
        }
    }
    out
}

/// Assembles the linearized symbols from the derivative stack at `(0, I)`
/// and checks that every retained `A(k)` is positive definite.
pub fn assemble_symbols(model: &DensityModel, space: &Arc<Space>) -> Result<LinearizedSymbols> {
    let stack = derivatives(model, 0.0, &IDENTITY, 2)?;
    let mut c = [[0.0; 9]; 9];
    let mut g = [[0.0; 3]; 3];
    for p in 0..9 {
        for q in 0..9 {
            c[p][q] = stack.d2(1 + p, 1 + q);
        }
        g[p / 3][p % 3] = stack.d2(0, 1 + p);
    }
    let a = stack.d2(0, 0);
    let m = space.len();
    let mut acoustic_inv = vec![[[0.0; 3]; 3]; m];
    let mut gk = vec![[0.0; 3]; m];
    let mut schur = vec![0.0; m];
    let mut min_ratio = f64::INFINITY;
    for idx in 0..m {
        let k = space.kd(idx);
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == 0.0 || !space.retained(idx) {
            continue;
        }
        let am = acoustic(&c, k);
        let ev = sym_eigenvalues(&am);
        if !(ev[0] > 0.0) {
            return Err(Error::NotElliptic { k, eigenvalue: ev[0] });
        }
        min_ratio = min_ratio.min(ev[0] / k2);
        let inv = inverse3(&am);
        let mut v = [0.0; 3];
        for i in 0..3 {
            v[i] = (0..3).map(|j| g[i][j] * k[j]).sum();
        }
        let mut s = 0.0;
        for i in 0..3 {
            for l in 0..3 {
                s += v[i] * inv[i][l] * v[l];
            }
        }
        acoustic_inv[idx] = inv;
        gk[idx] = v;
        schur[idx] = s;
    }
    Ok(LinearizedSymbols {
        c,
        g,
        a,
        space: space.clone(),
        acoustic_inv,
        gk,
        schur,
        min_eigen_ratio: min_ratio,
    })
}

impl LinearizedSymbols {
    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    /// Inverse acoustic matrix of mode `idx` (zero for the mean and for
    /// modes outside the dealias band).
    pub fn acoustic_inv(&self, idx: usize) -> &[[f64; 3]; 3] {
        &self.acoustic_inv[idx]
    }

    pub fn acoustic(&self, idx: usize) -> [[f64; 3]; 3] {
        acoustic(&self.c, self.space.kd(idx))
    }

    /// `(G k)_i = G_ij k_j`.
    pub fn gk(&self, idx: usize) -> [f64; 3] {
        self.gk[idx]
    }

    /// `(G k)^T A(k)^{-1} (G k)`.
    pub fn schur(&self, idx: usize) -> f64 {
        self.schur[idx]
    }

    /// Smallest `lambda_min(A(k)) / |k|^2` over retained modes.
    pub fn min_eigen_ratio(&self) -> f64 {
        self.min_eigen_ratio
    }

    /// `A(k)^{-1} r` per mode.
    pub fn apply_inverse(&self, r: &VectorField) -> VectorField {
        let mut out = VectorField::zeros(&self.space);
        let m = self.space.len();
        let src = r.coefficients();
        let dst = out.coefficients_mut();
        for idx in 0..m {
            let inv = &self.acoustic_inv[idx];
            for i in 0..3 {
                let mut acc = Complex64::new(0.0, 0.0);
                for l in 0..3 {
                    acc += src[l * m + idx] * inv[i][l];
                }
                dst[i * m + idx] = acc;
            }
        }
        out
    }

    /// Per-mode solve of `div(C : grad w + G phi) = div A_rhs` with the mean
    /// of `w` pinned to zero:
    /// `w_k = A(k)^{-1} (i (G k) phi_k - i A_rhs_k k)`.
    pub fn solve_linear_elliptic(&self, a_rhs: &MatrixField, phi: &ScalarField) -> VectorField {
        let m = self.space.len();
        let mut out = VectorField::zeros(&self.space);
        let ph = phi.component(0);
        let ar = a_rhs.coefficients();
        let dst = out.coefficients_mut();
        for idx in 0..m {
            let k = self.space.kd(idx);
            let gk = self.gk[idx];
            let inv = &self.acoustic_inv[idx];
            let mut rhs = [Complex64::new(0.0, 0.0); 3];
            for i in 0..3 {
                let mut ak = Complex64::new(0.0, 0.0);
                for j in 0..3 {
                    ak += ar[(3 * i + j) * m + idx] * k[j];
                }
                rhs[i] = Complex64::new(0.0, 1.0) * (ph[idx] * gk[i] - ak);
            }
            for i in 0..3 {
                dst[i * m + idx] = (0..3).map(|l| rhs[l] * inv[i][l]).sum();
            }
        }
        out
    }

    /// `div(C : grad w + G phi)` spectrally.
    pub fn apply_linear(&self, w: &VectorField, phi: &ScalarField) -> VectorField {
        let m = self.space.len();
        let mut out = VectorField::zeros(&self.space);
        let ph = phi.component(0);
        let src = w.coefficients();
        let dst = out.coefficients_mut();
        for idx in 0..m {
            let a = self.acoustic(idx);
            let gk = self.gk_any(idx);
            for i in 0..3 {
                let mut acc = Complex64::new(0.0, 1.0) * ph[idx] * gk[i];
                for l in 0..3 {
                    acc -= src[l * m + idx] * a[i][l];
                }
                dst[i * m + idx] = acc;
            }
        }
        out
    }

    fn gk_any(&self, idx: usize) -> [f64; 3] {
        let k = self.space.kd(idx);
        let mut v = [0.0; 3];
        for i in 0..3 {
            v[i] = (0..3).map(|j| self.g[i][j] * k[j]).sum();
        }
        v
    }
}

/// Largest squared wave speed `max_khat lambda_max(A(khat))` of the tangent
/// `C` over a fixed set of unit directions.
pub fn max_wave_speed2(c: &[[f64; 9]; 9]) -> f64 {
    let mut best: f64 = 0.0;
    for k in directions() {
        let a = acoustic(c, k);
        best = best.max(sym_eigenvalues(&a)[2]);
    }
    best
}

/// Fibonacci-sphere directions plus the coordinate axes and diagonals.
fn directions() -> Vec<[f64; 3]> {
    let mut out = vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let s = 1.0 / 3f64.sqrt();
    for sx in [-1.0, 1.0] {
        for sy in [-1.0, 1.0] {
            out.push([s * sx, s * sy, s]);
        }
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    out.extend([[r, r, 0.0], [r, -r, 0.0], [r, 0.0, r], [r, 0.0, -r], [0.0, r, r], [0.0, r, -r]]);
    let n = 64;
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    for i in 0..n {
        let z = 1.0 - (i as f64 + 0.5) * 2.0 / n as f64;
        let rad = (1.0 - z * z).sqrt();
        let th = golden * i as f64;
        out.push([rad * th.cos(), rad * th.sin(), z]);
    }
    out
}
