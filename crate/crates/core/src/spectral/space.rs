use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

use super::Grid;

/// FFT plans and per-mode tables for one [`Grid`].
///
/// Spectral arrays use the real-to-complex layout `(n, n, n/2 + 1)` with the
/// last index fastest, and hold normalized coefficients: a physical field is
/// `f(x) = sum_k c_k exp(i k.x)` over the full (Hermitian) spectrum.
pub struct Space {
    grid: Grid,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    kd: Vec<[f64; 3]>,
    kk: Vec<f64>,
    mult: Vec<f64>,
    band: Vec<u32>,
    retained: Vec<bool>,
}

impl std::fmt::Debug for Space {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Space").field("grid", &self.grid).finish()
    }
}

impl Space {
    pub fn new(grid: Grid) -> Arc<Self> {
        let n = grid.n();
        let nz = grid.nz();
        let mut rp = RealFftPlanner::<f64>::new();
        let mut cp = FftPlanner::<f64>::new();
        let k0 = grid.k0();
        let kc = grid.cutoff() as u32;
        let m = grid.spectral_len();
        let mut kd = Vec::with_capacity(m);
        let mut kk = Vec::with_capacity(m);
        let mut mult = Vec::with_capacity(m);
        let mut band = Vec::with_capacity(m);
        let mut retained = Vec::with_capacity(m);
        let half = (n / 2) as i64;
        for i0 in 0..n {
            for i1 in 0..n {
                for i2 in 0..nz {
                    let idx = [grid.signed_index(i0), grid.signed_index(i1), i2 as i64];
                    let b = idx.iter().map(|i| i.unsigned_abs() as u32).max().unwrap();
                    let mut d = [0.0; 3];
                    let mut sq = 0.0;
                    for a in 0..3 {
                        let k = k0 * idx[a] as f64;
                        sq += k * k;
                        // odd derivatives of the Nyquist mode are not real-representable
                        d[a] = if idx[a] == half { 0.0 } else { k };
                    }
                    kd.push(d);
                    kk.push(sq);
                    mult.push(if i2 == 0 || i2 == nz - 1 { 1.0 } else { 2.0 });
                    band.push(b);
                    retained.push(b <= kc);
                }
            }
        }
        Arc::new(Space {
            grid,
            r2c: rp.plan_fft_forward(n),
            c2r: rp.plan_fft_inverse(n),
            fwd: cp.plan_fft_forward(n),
            inv: cp.plan_fft_inverse(n),
            kd,
            kk,
            mult,
            band,
            retained,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn len(&self) -> usize {
        self.kd.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kd.is_empty()
    }

    /// Wavevector used for differentiation (Nyquist components zeroed).
    #[inline]
    pub fn kd(&self, idx: usize) -> [f64; 3] {
        self.kd[idx]
    }

    /// `|kappa|^2` of the true wavevector.
    #[inline]
    pub fn kk(&self, idx: usize) -> f64 {
        self.kk[idx]
    }

    /// `|k|^2` of the differentiation wavevector; the symbol of `-Laplacian`.
    #[inline]
    pub fn kd2(&self, idx: usize) -> f64 {
        let k = self.kd[idx];
        k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
    }

    /// Number of full-spectrum modes represented by half-spectrum entry `idx`.
    #[inline]
    pub fn multiplicity(&self, idx: usize) -> f64 {
        self.mult[idx]
    }

    /// Max-norm integer index of mode `idx`.
    #[inline]
    pub fn band(&self, idx: usize) -> usize {
        self.band[idx] as usize
    }

    /// Whether mode `idx` survives dealiasing.
    #[inline]
    pub fn retained(&self, idx: usize) -> bool {
        self.retained[idx]
    }

    pub fn index(&self, i0: usize, i1: usize, i2: usize) -> usize {
        let n = self.n();
        (i0 * n + i1) * self.grid.nz() + i2
    }

    /// Half-spectrum entry of the signed wavevector index, if stored directly
    /// (`k2 >= 0`).
    pub fn index_of(&self, k: [i64; 3]) -> Option<usize> {
        let n = self.n() as i64;
        if k[2] < 0 || k[2] > n / 2 || k.iter().any(|&c| c.abs() > n / 2) {
            return None;
        }
        let wrap = |c: i64| c.rem_euclid(n) as usize;
        Some(self.index(wrap(k[0]), wrap(k[1]), k[2] as usize))
    }

    /// Zeroes every coefficient outside the dealias band.
    pub fn dealias(&self, coeffs: &mut [Complex64]) {
        for (c, &keep) in coeffs.iter_mut().zip(self.retained.iter()) {
            if !keep {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Normalized forward transform of one real component (no dealiasing).
    pub fn forward(&self, real: &[f64]) -> Vec<Complex64> {
        self.forward_impl(real, None)
    }

    /// Forward transform followed by the dealias mask. Skips the transform
    /// work on columns the mask discards.
    pub fn forward_dealiased(&self, real: &[f64]) -> Vec<Complex64> {
        let mut out = self.forward_impl(real, Some(self.grid.cutoff()));
        self.dealias(&mut out);
        out
    }

    fn forward_impl(&self, real: &[f64], band: Option<usize>) -> Vec<Complex64> {
        let n = self.n();
        let nz = self.grid.nz();
        assert_eq!(real.len(), n * n * n, "physical array has the wrong length");
        let zero = Complex64::new(0.0, 0.0);
        let mut spec = vec![zero; n * n * nz];

        spec.par_chunks_mut(nz).zip(real.par_chunks(n)).for_each_init(
            || (vec![0.0; n], self.r2c.make_scratch_vec()),
            |(buf, scratch), (out, row)| {
                buf.copy_from_slice(row);
                self.r2c
                    .process_with_scratch(buf, out, scratch)
                    .expect("r2c length mismatch");
            },
        );

        let zlim = band.map(|b| b + 1).unwrap_or(nz).min(nz);
        let rows: Vec<usize> = (0..n)
            .filter(|&i| band.is_none_or(|b| self.grid.signed_index(i).unsigned_abs() as usize <= b))
            .collect();
        self.axis1(&mut spec, zlim, &*self.fwd);
        self.axis0(&mut spec, &rows, zlim, &*self.fwd);

        let scale = 1.0 / (n * n * n) as f64;
        spec.par_iter_mut().for_each(|c| *c *= scale);
        spec
    }

    /// Physical samples of one component from normalized coefficients. Only
    /// columns holding nonzero data are transformed along the first two axes.
    pub fn inverse(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let n = self.n();
        let nz = self.grid.nz();
        assert_eq!(coeffs.len(), n * n * nz, "spectral array has the wrong length");
        let mut live_rows = vec![false; n];
        let mut zlim = 0;
        for i0 in 0..n {
            for i1 in 0..n {
                let base = (i0 * n + i1) * nz;
                for i2 in 0..nz {
                    let c = coeffs[base + i2];
                    if c.re != 0.0 || c.im != 0.0 {
                        live_rows[i1] = true;
                        zlim = zlim.max(i2 + 1);
                    }
                }
            }
        }
        let rows: Vec<usize> = (0..n).filter(|&i| live_rows[i]).collect();
        let mut spec = coeffs.to_vec();
        self.axis0(&mut spec, &rows, zlim, &*self.inv);
        self.axis1(&mut spec, zlim, &*self.inv);

        let mut out = vec![0.0; n * n * n];
        out.par_chunks_mut(n).zip(spec.par_chunks(nz)).for_each_init(
            || (vec![Complex64::new(0.0, 0.0); nz], self.c2r.make_scratch_vec()),
            |(buf, scratch), (row, input)| {
                buf.copy_from_slice(input);
                buf[0].im = 0.0;
                buf[nz - 1].im = 0.0;
                self.c2r
                    .process_with_scratch(buf, row, scratch)
                    .expect("c2r length mismatch");
            },
        );
        out
    }

    /// 1D transforms along the middle axis for columns `i2 < zlim`.
    fn axis1(&self, spec: &mut [Complex64], zlim: usize, fft: &dyn Fft<f64>) {
        let n = self.n();
        let nz = self.grid.nz();
        if zlim == 0 {
            return;
        }
        spec.par_chunks_mut(n * nz).for_each_init(
            || {
                (
                    vec![Complex64::new(0.0, 0.0); n * zlim],
                    vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()],
                )
            },
            |(buf, scratch), plane| {
                for i2 in 0..zlim {
                    for i1 in 0..n {
                        buf[i2 * n + i1] = plane[i1 * nz + i2];
                    }
                }
                fft.process_with_scratch(buf, scratch);
                for i2 in 0..zlim {
                    for i1 in 0..n {
                        plane[i1 * nz + i2] = buf[i2 * n + i1];
                    }
                }
            },
        );
    }

    /// 1D transforms along the first axis for the listed middle-axis rows and
    /// columns `i2 < zlim`.
    fn axis0(&self, spec: &mut [Complex64], rows: &[usize], zlim: usize, fft: &dyn Fft<f64>) {
        let n = self.n();
        let nz = self.grid.nz();
        if zlim == 0 || rows.is_empty() {
            return;
        }
        let zero = Complex64::new(0.0, 0.0);
        let mut tmp = vec![zero; rows.len() * zlim * n];
        {
            let src: &[Complex64] = spec;
            tmp.par_chunks_mut(zlim * n).zip(rows.par_iter()).for_each_init(
                || vec![zero; fft.get_inplace_scratch_len()],
                |scratch, (chunk, &i1)| {
                    for i2 in 0..zlim {
                        for i0 in 0..n {
                            chunk[i2 * n + i0] = src[(i0 * n + i1) * nz + i2];
                        }
                    }
                    fft.process_with_scratch(chunk, scratch);
                },
            );
        }
        spec.par_chunks_mut(n * nz).enumerate().for_each(|(i0, plane)| {
            for (r, &i1) in rows.iter().enumerate() {
                for i2 in 0..zlim {
                    plane[i1 * nz + i2] = tmp[(r * zlim + i2) * n + i0];
                }
            }
        });
    }

    /// Applies `f` at every physical node. `inputs` are physical component
    /// arrays; `f` receives the node values of all inputs in order and
    /// writes `nout` outputs. Returns the output component arrays.
    pub fn map_nodes<E, F>(&self, inputs: &[&[f64]], nout: usize, f: F) -> Result<Vec<Vec<f64>>, E>
    where
        E: Send,
        F: Fn(&[f64], &mut [f64]) -> Result<(), E> + Sync,
    {
        let np = self.grid.physical_len();
        for x in inputs {
            assert_eq!(x.len(), np, "physical array has the wrong length");
        }
        let nin = inputs.len();
        let mut packed = vec![0.0; np * nout];
        let chunk = self.n() * self.n();
        packed
            .par_chunks_mut(chunk * nout)
            .enumerate()
            .try_for_each_init(
                || vec![0.0; nin],
                |vals, (c, out)| {
                    for (local, o) in out.chunks_mut(nout).enumerate() {
                        let p = c * chunk + local;
                        for (v, x) in vals.iter_mut().zip(inputs) {
                            *v = x[p];
                        }
                        f(vals, o)?;
                    }
                    Ok(())
                },
            )?;
        let mut outs = vec![vec![0.0; np]; nout];
        outs.par_iter_mut().enumerate().for_each(|(j, o)| {
            for (p, v) in o.iter_mut().enumerate() {
                *v = packed[p * nout + j];
            }
        });
        Ok(outs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(n: usize) -> Arc<Space> {
        Space::new(Grid::standard(n).unwrap())
    }

    #[test]
    fn single_mode_coefficients() {
        let s = space(8);
        let g = *s.grid();
        let n = g.n();
        let mut real = vec![0.0; n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let x = g.node(i, j, k);
                    real[(i * n + j) * n + k] = (2.0 * x[1]).cos() + 3.0 * x[2].sin();
                }
            }
        }
        let c = s.forward(&real);
        let a = s.index_of([0, 2, 0]).unwrap();
        let b = s.index_of([0, -2, 0]).unwrap();
        let z = s.index_of([0, 0, 1]).unwrap();
        assert!((c[a].re - 0.5).abs() < 1e-14);
        assert!((c[b].re - 0.5).abs() < 1e-14);
        assert!((c[z].im + 1.5).abs() < 1e-14);
        let back = s.inverse(&c);
        for (x, y) in back.iter().zip(real.iter()) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn banded_forward_matches_full_forward_on_band() {
        let s = space(16);
        let np = s.grid().physical_len();
        let real: Vec<f64> = (0..np).map(|p| ((p * 7919) % 1013) as f64 / 1013.0 - 0.5).collect();
        let full = s.forward(&real);
        let banded = s.forward_dealiased(&real);
        for idx in 0..s.len() {
            if s.retained(idx) {
                assert!((full[idx] - banded[idx]).norm() < 1e-15);
            } else {
                assert_eq!(banded[idx], Complex64::new(0.0, 0.0));
            }
        }
    }
}
