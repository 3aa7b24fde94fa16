use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use super::ops::{derivative_norm2, sobolev_norm};
use super::{Field, Space};
use crate::error::{Error, Result};

/// Binary snapshot: header `n: u64, L: f64, ncomp: u64`, then the
/// half-spectrum coefficients of each component as `(re, im)` pairs, all
/// little-endian.
impl<const C: usize> Field<C> {
    pub fn write_blob<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let g = self.grid();
        w.write_all(&(g.n() as u64).to_le_bytes())?;
        w.write_all(&g.period().to_le_bytes())?;
        w.write_all(&(C as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(16 * self.coefficients().len());
        for c in self.coefficients() {
            buf.extend_from_slice(&c.re.to_le_bytes());
            buf.extend_from_slice(&c.im.to_le_bytes());
        }
        w.write_all(&buf)
    }

    /// Reads a blob written by [`Field::write_blob`] onto `space`.
    pub fn read_blob<R: Read>(space: &Arc<Space>, mut r: R) -> Result<Self> {
        let io = |e: std::io::Error| Error::InvalidArgument(format!("blob read failed: {e}"));
        let mut word = [0u8; 8];
        r.read_exact(&mut word).map_err(io)?;
        let n = u64::from_le_bytes(word) as usize;
        r.read_exact(&mut word).map_err(io)?;
        let period = f64::from_le_bytes(word);
        r.read_exact(&mut word).map_err(io)?;
        let ncomp = u64::from_le_bytes(word) as usize;
        let g = space.grid();
        if n != g.n() || period != g.period() {
            return Err(Error::GridMismatch);
        }
        if ncomp != C {
            return Err(Error::InvalidArgument(format!(
                "blob has {ncomp} components, expected {C}"
            )));
        }
        let mut bytes = vec![0u8; 16 * C * space.len()];
        r.read_exact(&mut bytes).map_err(io)?;
        let coeffs = bytes
            .chunks_exact(16)
            .map(|b| {
                let re = f64::from_le_bytes(b[..8].try_into().unwrap());
                let im = f64::from_le_bytes(b[8..].try_into().unwrap());
                Complex64::new(re, im)
            })
            .collect();
        Field::from_coefficients(space, coeffs)
    }

    pub fn summary(&self) -> FieldSummary {
        FieldSummary {
            n: self.grid().n(),
            period: self.grid().period(),
            components: C,
            mean: self.mean().to_vec(),
            l2: sobolev_norm(self, 0),
            h1: sobolev_norm(self, 1),
            h2: sobolev_norm(self, 2),
            h3: sobolev_norm(self, 3),
            grad_l2: derivative_norm2(self, 1, 0).sqrt(),
        }
    }
}

/// Norm-only JSON description of a field.
#[derive(Clone, Debug, Serialize)]
pub struct FieldSummary {
    pub n: usize,
    pub period: f64,
    pub components: usize,
    pub mean: Vec<f64>,
    pub l2: f64,
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
    pub grad_l2: f64,
}
