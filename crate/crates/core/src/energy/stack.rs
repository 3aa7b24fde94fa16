use std::sync::{Arc, OnceLock};

use super::matrix::M3;
use super::DensityModel;
use crate::ad::{Mat3, Scalar, Taylor, TaylorSpace};
use crate::error::{Error, Result};

/// Number of scalar coordinates `(phi, F_11, ..., F_33)`.
pub const NCOORD: usize = 10;

fn jet_space(order: usize) -> Arc<TaylorSpace> {
    static SPACES: [OnceLock<Arc<TaylorSpace>>; 4] =
        [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];
    SPACES[order - 1]
        .get_or_init(|| TaylorSpace::new(NCOORD, order))
        .clone()
}

/// All partial derivatives of `W` up to a given order at one point, as dense
/// symmetric tensors over the coordinates `(phi, F_11, F_12, ..., F_33)`
/// (coordinate `1 + 3 i + j` is `F_ij`).
#[derive(Clone, Debug)]
pub struct DerivativeStack {
    pub phi: f64,
    pub f: M3,
    pub order: usize,
    pub value: f64,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    pub d3: Vec<f64>,
    pub d4: Vec<f64>,
}

impl DerivativeStack {
    pub fn d_phi(&self) -> f64 {
        self.d1[0]
    }

    pub fn d_f(&self) -> M3 {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = self.d1[1 + 3 * i + j];
            }
        }
        out
    }

    pub fn d2(&self, a: usize, b: usize) -> f64 {
        self.d2[a * NCOORD + b]
    }

    pub fn d3(&self, a: usize, b: usize, c: usize) -> f64 {
        self.d3[(a * NCOORD + b) * NCOORD + c]
    }

    pub fn d4(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.d4[((a * NCOORD + b) * NCOORD + c) * NCOORD + d]
    }

    /// Full contraction of the `k`-th derivative with `k` direction vectors.
    pub fn contract(&self, dirs: &[&[f64; NCOORD]]) -> f64 {
        let k = dirs.len();
        let t: &[f64] = match k {
            0 => return self.value,
            1 => &self.d1,
            2 => &self.d2,
            3 => &self.d3,
            4 => &self.d4,
            _ => panic!("derivative order {k} not stored"),
        };
        assert!(k <= self.order, "stack holds order {} only", self.order);
        let mut acc = 0.0;
        for (flat, &v) in t.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let mut rest = flat;
            let mut w = v;
            for d in (0..k).rev() {
                w *= dirs[d][rest % NCOORD];
                rest /= NCOORD;
            }
            acc += w;
        }
        acc
    }
}

/// Packs `(phi, F)` into the coordinate vector.
pub fn coords(phi: f64, f: &M3) -> [f64; NCOORD] {
    let mut x = [0.0; NCOORD];
    x[0] = phi;
    for i in 0..3 {
        for j in 0..3 {
            x[1 + 3 * i + j] = f[i][j];
        }
    }
    x
}

/// Mixed partials of `W` at `(phi, F)` to `order` (1..=4), from one
/// truncated Taylor evaluation over the ten coordinates.
pub fn derivatives(model: &DensityModel, phi: f64, f: &M3, order: usize) -> Result<DerivativeStack> {
    if !(1..=4).contains(&order) {
        return Err(Error::InvalidArgument(format!("derivative order must be 1..=4, got {order}")));
    }
    let space = jet_space(order);
    let p = Taylor::variable(&space, 0, phi);
    let fm = Mat3::from_fn(|i, j| Taylor::variable(&space, 1 + 3 * i + j, f[i][j]));
    let w = model.energy(&p, &fm)?;

    let mut exps = [0u8; NCOORD];
    let mut tensor = |k: usize| -> Vec<f64> {
        if k > order {
            return Vec::new();
        }
        let total = NCOORD.pow(k as u32);
        let mut out = vec![0.0; total];
        for (flat, o) in out.iter_mut().enumerate() {
            exps.fill(0);
            let mut rest = flat;
            for _ in 0..k {
                exps[rest % NCOORD] += 1;
                rest /= NCOORD;
            }
            *o = w.derivative(&exps);
        }
        out
    };
    let d1 = tensor(1);
    let d2 = tensor(2);
    let d3 = tensor(3);
    let d4 = tensor(4);
    Ok(DerivativeStack {
        phi,
        f: *f,
        order,
        value: w.value(),
        d1,
        d2,
        d3,
        d4,
    })
}
