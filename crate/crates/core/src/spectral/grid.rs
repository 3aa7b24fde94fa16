use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid on the torus `[0, L)^3` with `n` samples per dimension.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    period: f64,
    dealias_fraction: f64,
}

impl Grid {
    pub fn new(n: usize, period: f64, dealias_fraction: f64) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "grid size must be an even integer >= 4, got {n}"
            )));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidArgument(format!("period must be positive, got {period}")));
        }
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "dealias fraction must lie in (0, 1], got {dealias_fraction}"
            )));
        }
        let grid = Grid {
            n,
            period,
            dealias_fraction,
        };
        if grid.cutoff() < 1 {
            return Err(Error::InvalidArgument(format!(
                "dealias fraction {dealias_fraction} keeps no modes on an n = {n} grid"
            )));
        }
        Ok(grid)
    }

    /// `n = 32`, `L = 2 pi`, 2/3 rule.
    pub fn standard(n: usize) -> Result<Self> {
        Self::new(n, 2.0 * PI, 2.0 / 3.0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn dealias_fraction(&self) -> f64 {
        self.dealias_fraction
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.n as f64
    }

    /// Fundamental wavenumber `2 pi / L`.
    pub fn k0(&self) -> f64 {
        2.0 * PI / self.period
    }

    pub fn volume(&self) -> f64 {
        self.period.powi(3)
    }

    /// Largest retained integer index per dimension after dealiasing. The
    /// Nyquist index `n/2` is never retained.
    pub fn cutoff(&self) -> usize {
        let kc = (self.dealias_fraction * self.n as f64 / 2.0 + 1e-12).floor() as usize;
        kc.min(self.n / 2 - 1)
    }

    pub fn physical_len(&self) -> usize {
        self.n * self.n * self.n
    }

    /// Length of the last (half-spectrum) axis of the real-to-complex layout.
    pub fn nz(&self) -> usize {
        self.n / 2 + 1
    }

    pub fn spectral_len(&self) -> usize {
        self.n * self.n * self.nz()
    }

    /// Signed integer index of position `i` along a full axis.
    pub fn signed_index(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Physical coordinate of node `(i, j, k)`.
    pub fn node(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        let h = self.spacing();
        [i as f64 * h, j as f64 * h, k as f64 * h]
    }
}
