//! Numerical certification of the structural assumptions on the density:
//! coercivity of the Hessian at `(0, I)`, the four axioms of the base
//! density, and the sufficient criterion for coercivity of the composites.

use nalgebra::{DMatrix, SymmetricEigen, SVD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::matrix::{to_na, M3};
use super::stack::{derivatives, NCOORD};
use super::{BaseDensity, DensityModel, PrestrainMap};
use crate::error::{Error, Result};

const IDENTITY: M3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Uniformly distributed rotation from a normalized Gaussian quaternion.
pub fn random_rotation<R: Rng>(rng: &mut R) -> M3 {
    let mut q = [0.0f64; 4];
    loop {
        for x in q.iter_mut() {
            *x = rng.sample(StandardNormal);
        }
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            for x in q.iter_mut() {
                *x /= n;
            }
            break;
        }
    }
    let [w, x, y, z] = q;
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

fn matmul(a: &M3, b: &M3) -> M3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn det(m: &M3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Frobenius distance from `F` to `SO(3)` from the singular values; for
/// `det F < 0` the smallest singular value is reflected.
pub fn dist_to_so3(f: &M3) -> f64 {
    let svd = SVD::new(to_na(f), false, false);
    let mut s = [svd.singular_values[0], svd.singular_values[1], svd.singular_values[2]];
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let d2 = if det(f) >= 0.0 {
        s.iter().map(|x| (x - 1.0).powi(2)).sum::<f64>()
    } else {
        (s[0] - 1.0).powi(2) + (s[1] - 1.0).powi(2) + (s[2] + 1.0).powi(2)
    };
    d2.sqrt()
}

#[derive(Clone, Debug, Serialize)]
pub struct CoercivityReport {
    pub gamma_estimate: f64,
    pub pass: bool,
    /// Eigenvalues of the Hessian restricted to `R x Sym(3)`, ascending.
    pub restricted_eigenvalues: Vec<f64>,
    /// Largest entry of the Hessian applied to the skew directions of `F`;
    /// zero for frame-invariant models.
    pub skew_residual: f64,
}

/// Orthonormal basis of `R x Sym(3)` in coordinates.
fn sym_basis() -> Vec<[f64; NCOORD]> {
    let mut basis = Vec::new();
    let mut e = [0.0; NCOORD];
    e[0] = 1.0;
    basis.push(e);
    for a in 0..3 {
        let mut e = [0.0; NCOORD];
        e[1 + 4 * a] = 1.0;
        basis.push(e);
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        let mut e = [0.0; NCOORD];
        e[1 + 3 * a + b] = r;
        e[1 + 3 * b + a] = r;
        basis.push(e);
    }
    basis
}

fn skew_basis() -> Vec<[f64; NCOORD]> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    [(0, 1), (0, 2), (1, 2)]
        .iter()
        .map(|&(a, b)| {
            let mut e = [0.0; NCOORD];
            e[1 + 3 * a + b] = r;
            e[1 + 3 * b + a] = -r;
            e
        })
        .collect()
}

/// Smallest eigenvalue of the Hessian at `(0, I)` restricted to
/// `R x Sym(3)`.
pub fn coercivity_check(model: &DensityModel) -> Result<CoercivityReport> {
    let stack = derivatives(model, 0.0, &IDENTITY, 2)?;
    let basis = sym_basis();
    let m = DMatrix::from_fn(basis.len(), basis.len(), |i, j| stack.contract(&[&basis[i], &basis[j]]));
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut skew_residual: f64 = 0.0;
    for s in skew_basis() {
        for a in 0..NCOORD {
            let hv: f64 = (0..NCOORD).map(|b| stack.d2(a, b) * s[b]).sum();
            skew_residual = skew_residual.max(hv.abs());
        }
    }
    let gamma = ev[0];
    Ok(CoercivityReport {
        gamma_estimate: gamma,
        pass: gamma > 0.0,
        restricted_eigenvalues: ev,
        skew_residual,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AxiomResult {
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub f: M3,
    pub w0: f64,
    pub dist2: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NonDegeneracy {
    pub pass: bool,
    /// Sampled infimum of `W0 / dist^2(., SO(3))`.
    pub c_estimate: f64,
    pub witness: Option<Witness>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AxiomReport {
    pub base: BaseDensity,
    pub samples: usize,
    pub seed: u64,
    pub frame_invariance: AxiomResult,
    pub blow_up: AxiomResult,
    pub normalization: AxiomResult,
    pub non_degeneracy: NonDegeneracy,
}

impl AxiomReport {
    pub fn all_pass(&self) -> bool {
        self.frame_invariance.pass && self.blow_up.pass && self.normalization.pass && self.non_degeneracy.pass
    }
}

/// Ratios below this count as a degenerate direction.
const DEGENERACY_TOL: f64 = 1e-8;

fn near_so3<R: Rng>(rng: &mut R, spread: f64) -> M3 {
    let r = random_rotation(rng);
    let mut p = IDENTITY;
    for row in p.iter_mut() {
        for x in row.iter_mut() {
            *x += spread * rng.random_range(-1.0..1.0);
        }
    }
    matmul(&r, &p)
}

/// Samples the axioms: frame invariance under random rotations, blow-up
/// along `diag(t, 1, 1)` as `t -> 0`, `W0(I) = 0` exactly, and a sampled
/// lower bound of `W0 / dist^2(., SO(3))` with a witness when it vanishes.
pub fn axiom_check(base: &BaseDensity, samples: usize, seed: u64) -> AxiomReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut worst: f64 = 0.0;
    let mut domain_mismatch = 0usize;
    for _ in 0..samples {
        let f = near_so3(&mut rng, 0.3);
        let r = random_rotation(&mut rng);
        match (base.eval(&f), base.eval(&matmul(&r, &f))) {
            (Ok(a), Ok(b)) => worst = worst.max((a - b).abs() / (1.0 + a.abs())),
            (Err(_), Err(_)) => {}
            _ => domain_mismatch += 1,
        }
    }
    let frame_invariance = AxiomResult {
        pass: worst <= 1e-10 && domain_mismatch == 0,
        detail: format!("max relative deviation {worst:.3e}, domain mismatches {domain_mismatch}"),
    };

    let mut prev = f64::NEG_INFINITY;
    let mut increasing = true;
    let mut last = 0.0;
    let mut infinite_at_zero = false;
    for k in 0..=60 {
        let t = 2f64.powi(-k);
        match base.eval(&[[t, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]) {
            Ok(w) => {
                if k > 0 && w <= prev {
                    increasing = false;
                }
                prev = w;
                last = w;
            }
            Err(_) => {
                increasing = false;
            }
        }
    }
    if let Err(Error::OutOfDomain { .. }) = base.eval(&[[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]) {
        infinite_at_zero = true;
    }
    let threshold = 1e3;
    let blow_up = AxiomResult {
        pass: increasing && last > threshold && infinite_at_zero,
        detail: format!(
            "monotone along diag(t,1,1): {increasing}, W0 at t = 2^-60: {last:.4e}, out of domain at t = 0: {infinite_at_zero}"
        ),
    };

    let w_id = base.eval(&IDENTITY);
    let normalization = AxiomResult {
        pass: matches!(w_id, Ok(w) if w == 0.0),
        detail: format!("W0(I) = {w_id:?}"),
    };

    let reflection = [[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mut candidates = vec![reflection];
    for k in 0..samples {
        let spread = 0.5 * rng.random::<f64>();
        let f = near_so3(&mut rng, spread);
        candidates.push(if k % 2 == 0 { f } else { matmul(&f, &reflection) });
    }
    let mut c_est = f64::INFINITY;
    let mut best: Option<Witness> = None;
    for f in candidates {
        let d = dist_to_so3(&f);
        let d2 = d * d;
        if d2 < 1e-12 {
            continue;
        }
        let Ok(w) = base.eval(&f) else { continue };
        let ratio = w / d2;
        if ratio < c_est {
            c_est = ratio;
            best = Some(Witness { f, w0: w, dist2: d2 });
        }
    }
    let degenerate = c_est <= DEGENERACY_TOL;
    let non_degeneracy = NonDegeneracy {
        pass: !degenerate,
        c_estimate: c_est,
        witness: if degenerate { best } else { None },
    };

    AxiomReport {
        base: *base,
        samples,
        seed,
        frame_invariance,
        blow_up,
        normalization,
        non_degeneracy,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AppendixReport {
    pub c: f64,
    pub m_b_norm: f64,
    /// `1 - c - c |M_B|^2 / (1 - c)`.
    pub criterion_value: f64,
    pub criterion_holds: bool,
    pub samples: usize,
    pub sampled_min_margin: f64,
    pub counterexample_found: bool,
}

impl AppendixReport {
    pub fn certified(&self) -> bool {
        self.criterion_holds
    }
}

/// Closed-form criterion plus a sampled check of
/// `phi^2 + |sym F + phi M|^2 >= c (phi^2 + |sym F|^2)` on the unit sphere
/// of `R x R^{3x3}`.
pub fn appendix_inequality_check(c: f64, m_b: &PrestrainMap, samples: usize, seed: u64) -> AppendixReport {
    let m = m_b.m_b();
    let mb2 = m_b.m_b_norm().powi(2);
    let criterion_value = 1.0 - c - c * mb2 / (1.0 - c);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_margin = f64::INFINITY;
    for _ in 0..samples {
        let mut x = [0.0f64; NCOORD];
        for v in x.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in x.iter_mut() {
            *v /= n;
        }
        let phi = x[0];
        let mut sym2 = 0.0;
        let mut shifted2 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let s = 0.5 * (x[1 + 3 * i + j] + x[1 + 3 * j + i]);
                sym2 += s * s;
                shifted2 += (s + phi * m[i][j]).powi(2);
            }
        }
        let margin = phi * phi + shifted2 - c * (phi * phi + sym2);
        min_margin = min_margin.min(margin);
    }
    let criterion_holds = c > 0.0 && c < 1.0 && criterion_value > 0.0;
    AppendixReport {
        c,
        m_b_norm: mb2.sqrt(),
        criterion_value,
        criterion_holds,
        samples,
        sampled_min_margin: min_margin,
        counterexample_found: min_margin < -1e-10,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotations_are_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let r = random_rotation(&mut rng);
            assert!((det(&r) - 1.0).abs() < 1e-12);
            assert!(dist_to_so3(&r) < 1e-7);
        }
    }
}
