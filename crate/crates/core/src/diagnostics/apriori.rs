use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use serde::Serialize;

use crate::ad::{Mat3, Taylor, TaylorSpace};
use crate::energy::{DensityModel, M3};
use crate::error::Result;
use crate::solver::Deformed;
use crate::spectral::{derivative_norm2, sobolev_norm2, Space};

const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

/// Sorted index triples with the number of their distinct permutations.
const TRIPLES: [([usize; 3], f64); 10] = [
    ([0, 0, 0], 1.0),
    ([0, 0, 1], 3.0),
    ([0, 0, 2], 3.0),
    ([0, 1, 1], 3.0),
    ([0, 1, 2], 6.0),
    ([0, 2, 2], 3.0),
    ([1, 1, 1], 1.0),
    ([1, 1, 2], 3.0),
    ([1, 2, 2], 3.0),
    ([2, 2, 2], 1.0),
];

fn triple_slot(i: usize, j: usize, k: usize) -> usize {
    let mut s = [i, j, k];
    s.sort_unstable();
    TRIPLES.iter().position(|(t, _)| *t == s).expect("indices below 3")
}

fn pair_slot(a: usize, b: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    PAIRS.iter().position(|&p| p == (a, b)).expect("indices below 3")
}

/// Physical samples of `d_{dirs} f` for one spectral component.
fn derivative_phys(space: &Space, coeffs: &[Complex64], dirs: &[usize]) -> Vec<f64> {
    let mut buf = coeffs.to_vec();
    for (idx, c) in buf.iter_mut().enumerate() {
        let k = space.kd(idx);
        let mut factor = Complex64::new(1.0, 0.0);
        for &d in dirs {
            factor *= Complex64::new(0.0, k[d]);
        }
        *c *= factor;
    }
    space.inverse(&buf)
}

/// Second-order spatial jet of `(phi, F)` at one node; `df[a][p][q]` is
/// `d_a F_pq` and `d2f[a][b]` is `d_a d_b F`.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeJet {
    pub phi: f64,
    pub dphi: [f64; 3],
    pub d2phi: [[f64; 3]; 3],
    pub f: M3,
    pub df: [M3; 3],
    pub d2f: [[M3; 3]; 3],
}

fn jet_space() -> Arc<TaylorSpace> {
    static SPACE: OnceLock<Arc<TaylorSpace>> = OnceLock::new();
    SPACE.get_or_init(|| TaylorSpace::new(3, 3)).clone()
}

fn spatial_jet(space: &Arc<TaylorSpace>, v: f64, d: [f64; 3], dd: [[f64; 3]; 3]) -> Taylor {
    let mut terms: Vec<(Vec<u8>, f64)> = Vec::with_capacity(10);
    terms.push((vec![0, 0, 0], v));
    for a in 0..3 {
        let mut e = vec![0u8; 3];
        e[a] = 1;
        terms.push((e, d[a]));
    }
    for &(a, b) in &PAIRS {
        let mut e = vec![0u8; 3];
        e[a] += 1;
        e[b] += 1;
        let c = if a == b { 0.5 } else { 1.0 };
        terms.push((e, c * dd[a][b]));
    }
    Taylor::from_terms(space, &terms)
}

/// The third spatial derivative of `dW/dphi(phi, F)` with every term that
/// contains a third derivative of `phi` or `F` removed, at one node.
pub fn correction_at(model: &DensityModel, jet: &NodeJet) -> Result<[[[f64; 3]; 3]; 3]> {
    let space = jet_space();
    let phi = spatial_jet(&space, jet.phi, jet.dphi, jet.d2phi);
    let f = Mat3::from_fn(|p, q| {
        let d = [jet.df[0][p][q], jet.df[1][p][q], jet.df[2][p][q]];
        let dd = std::array::from_fn(|a| std::array::from_fn(|b| jet.d2f[a][b][p][q]));
        spatial_jet(&space, jet.f[p][q], d, dd)
    });
    let g = model.response(&phi, &f)?.d_phi;
    let mut out = [[[0.0; 3]; 3]; 3];
    for (i, oi) in out.iter_mut().enumerate() {
        for (j, oij) in oi.iter_mut().enumerate() {
            for (k, o) in oij.iter_mut().enumerate() {
                let mut e = [0u8; 3];
                e[i] += 1;
                e[j] += 1;
                e[k] += 1;
                *o = g.derivative(&e);
            }
        }
    }
    Ok(out)
}

/// Physical samples of the correction tensor `R_ijk` on the grid.
#[derive(Clone, Debug)]
pub struct CorrectionTensor {
    space: Arc<Space>,
    values: Vec<Vec<f64>>,
}

impl CorrectionTensor {
    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    /// Nodal values of `R_ijk` (symmetric in its indices).
    pub fn get(&self, i: usize, j: usize, k: usize) -> &[f64] {
        &self.values[triple_slot(i, j, k)]
    }
}

const R_INPUTS: usize = 1 + 3 + 6 + 9 + 27 + 54;

fn jet_from_slice(x: &[f64]) -> NodeJet {
    let phi = x[0];
    let dphi = [x[1], x[2], x[3]];
    let d2phi = std::array::from_fn(|a| std::array::from_fn(|b| x[4 + pair_slot(a, b)]));
    let mat = |off: usize| -> M3 { std::array::from_fn(|p| std::array::from_fn(|q| x[off + 3 * p + q])) };
    let f = mat(10);
    let df = std::array::from_fn(|a| mat(19 + 9 * a));
    let d2f = std::array::from_fn(|a| std::array::from_fn(|b| mat(46 + 9 * pair_slot(a, b))));
    NodeJet {
        phi,
        dphi,
        d2phi,
        f,
        df,
        d2f,
    }
}

/// Evaluates `R_ijk` at every node from spectral derivatives of the state.
pub fn correction_r<S: Deformed>(state: &S, model: &DensityModel) -> Result<CorrectionTensor> {
    let space = state.species().space().clone();
    let phi = state.species().component(0);
    let w = state.displacement();
    let mut inputs: Vec<Vec<f64>> = Vec::with_capacity(R_INPUTS);
    inputs.push(space.inverse(phi));
    for a in 0..3 {
        inputs.push(derivative_phys(&space, phi, &[a]));
    }
    for &(a, b) in &PAIRS {
        inputs.push(derivative_phys(&space, phi, &[a, b]));
    }
    for p in 0..3 {
        for q in 0..3 {
            let mut v = derivative_phys(&space, w.component(p), &[q]);
            if p == q {
                v.iter_mut().for_each(|x| *x += 1.0);
            }
            inputs.push(v);
        }
    }
    for a in 0..3 {
        for p in 0..3 {
            for q in 0..3 {
                inputs.push(derivative_phys(&space, w.component(p), &[a, q]));
            }
        }
    }
    for &(a, b) in &PAIRS {
        for p in 0..3 {
            for q in 0..3 {
                inputs.push(derivative_phys(&space, w.component(p), &[a, b, q]));
            }
        }
    }
    let refs: Vec<&[f64]> = inputs.iter().map(|v| v.as_slice()).collect();
    let values = space.map_nodes(&refs, TRIPLES.len(), |x, o| {
        let r = correction_at(model, &jet_from_slice(x))?;
        for (slot, (t, _)) in TRIPLES.iter().enumerate() {
            o[slot] = r[t[0]][t[1]][t[2]];
        }
        Ok(())
    })?;
    Ok(CorrectionTensor { space, values })
}

/// Terms of the a-priori energy
/// `int |v|^2 + |grad^3 v|^2 + 2 W + sum_ijk D^2 W : (phi_ijk, grad u_ijk)^2 + 2 sum_ijk R_ijk phi_ijk`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AprioriEnergy {
    pub total: f64,
    pub kinetic: f64,
    pub elastic: f64,
    pub hessian: f64,
    pub correction: f64,
}

/// Evaluates the a-priori energy; the kinetic part vanishes without a
/// velocity.
pub fn apriori_e<S: Deformed>(state: &S, model: &DensityModel) -> Result<AprioriEnergy> {
    let space = state.species().space().clone();
    let cell = space.grid().spacing().powi(3);
    let phi = state.species().component(0);
    let w = state.displacement();
    let kinetic = state
        .velocity()
        .map(|v| derivative_norm2(v, 0, 0) + derivative_norm2(v, 3, 0))
        .unwrap_or(0.0);

    let mut inputs: Vec<Vec<f64>> = Vec::with_capacity(110);
    inputs.push(space.inverse(phi));
    for p in 0..3 {
        for q in 0..3 {
            let mut v = derivative_phys(&space, w.component(p), &[q]);
            if p == q {
                v.iter_mut().for_each(|x| *x += 1.0);
            }
            inputs.push(v);
        }
    }
    for (t, _) in &TRIPLES {
        inputs.push(derivative_phys(&space, phi, t));
    }
    for (t, _) in &TRIPLES {
        for p in 0..3 {
            for q in 0..3 {
                inputs.push(derivative_phys(&space, w.component(p), &[t[0], t[1], t[2], q]));
            }
        }
    }
    let refs: Vec<&[f64]> = inputs.iter().map(|v| v.as_slice()).collect();
    let outs = space.map_nodes(&refs, 2, |x, o| {
        let f: M3 = std::array::from_fn(|p| std::array::from_fn(|q| x[1 + 3 * p + q]));
        let h = model.hessian(x[0], &f)?;
        let w = model.eval(x[0], &f)?;
        let mut acc = 0.0;
        for (slot, (_, mult)) in TRIPLES.iter().enumerate() {
            let mut d = [0.0; 10];
            d[0] = x[10 + slot];
            d[1..].copy_from_slice(&x[20 + 9 * slot..29 + 9 * slot]);
            let mut quad = 0.0;
            for a in 0..10 {
                for b in 0..10 {
                    quad += h[a][b] * d[a] * d[b];
                }
            }
            acc += mult * quad;
        }
        o[0] = acc;
        o[1] = w;
        Ok(())
    })?;
    let hessian = outs[0].iter().sum::<f64>() * cell;
    let elastic = 2.0 * outs[1].iter().sum::<f64>() * cell;
    drop(inputs);

    let r = correction_r(state, model)?;
    let mut correction = 0.0;
    for (slot, (t, mult)) in TRIPLES.iter().enumerate() {
        let d3 = derivative_phys(&space, phi, t);
        let dot: f64 = r.values[slot].iter().zip(&d3).map(|(a, b)| a * b).sum();
        correction += mult * dot;
    }
    correction *= 2.0 * cell;
    Ok(AprioriEnergy {
        total: kinetic + elastic + hessian + correction,
        kinetic,
        elastic,
        hessian,
        correction,
    })
}

/// `|v|_{H^3}^2 + |grad w|_{H^3}^2 + |phi|_{H^3}^2`.
pub fn apriori_z<S: Deformed>(state: &S) -> f64 {
    let kinetic = state.velocity().map(|v| sobolev_norm2(v, 3)).unwrap_or(0.0);
    kinetic + derivative_norm2(state.displacement(), 1, 3) + sobolev_norm2(state.species(), 3)
}
