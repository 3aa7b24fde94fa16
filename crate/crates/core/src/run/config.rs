use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::initial::DataConfig;
use crate::energy::{BaseDensity, Composition, DensityModel, PrestrainMap, M3};
use crate::solver::{DynamicConfig, QuasiConfig, RecordOptions};
use crate::spectral::Grid;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(String),
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
    #[serde(rename = "L")]
    pub period: f64,
    pub dealias_fraction: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            n: 32,
            period: 2.0 * PI,
            dealias_fraction: 2.0 / 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    /// `W01`, `W02` or `CaseStudy`.
    pub base: String,
    pub q: f64,
    /// `right`, `left` or `none`.
    pub composition: String,
    #[serde(rename = "M_B")]
    pub m_b: M3,
    pub quadratic_term: bool,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            base: "W01".into(),
            q: 2.0,
            composition: "right".into(),
            m_b: [[0.1, 0.0, 0.0], [0.0, 0.1, 0.0], [0.0, 0.0, 0.1]],
            quadratic_term: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuasiSection {
    pub picard_tol: f64,
    pub max_iter: usize,
    /// Step of the quasi-static integrator; `scheme.dt` when absent.
    pub dt: Option<f64>,
}

impl Default for QuasiSection {
    fn default() -> Self {
        QuasiSection {
            picard_tol: 1e-10,
            max_iter: 50,
            dt: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoSection {
    pub out_dir: Option<PathBuf>,
    /// Steps between diagnostics records.
    pub stride: usize,
    /// Records between a-priori energy evaluations (0 disables them).
    pub big_stride: usize,
    pub write_fields: bool,
}

impl Default for IoSection {
    fn default() -> Self {
        IoSection {
            out_dir: None,
            stride: 10,
            big_stride: 10,
            write_fields: true,
        }
    }
}

/// Effective configuration of one run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    pub model: ModelSection,
    pub scheme: DynamicConfig,
    pub quasi: QuasiSection,
    pub data: DataConfig,
    pub io: IoSection,
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    parse_config_str(&text)
}

/// Parses and validates; every violation is reported.
pub fn parse_config_str(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    cfg.check()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// All range violations, each naming its key.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut need = |ok: bool, msg: String| {
            if !ok {
                v.push(msg);
            }
        };
        let g = &self.grid;
        need(g.n >= 4 && g.n % 2 == 0, format!("grid.n must be an even integer >= 4 (got {})", g.n));
        need(g.period > 0.0 && g.period.is_finite(), format!("grid.L must be positive (got {})", g.period));
        need(
            g.dealias_fraction > 0.0 && g.dealias_fraction <= 1.0,
            format!("grid.dealias_fraction must lie in (0, 1] (got {})", g.dealias_fraction),
        );
        let basic = g.n >= 4
            && g.n % 2 == 0
            && g.period > 0.0
            && g.period.is_finite()
            && g.dealias_fraction > 0.0
            && g.dealias_fraction <= 1.0;
        need(
            !basic || self.grid().is_ok(),
            format!(
                "grid.dealias_fraction = {} keeps no modes at grid.n = {}",
                g.dealias_fraction, g.n
            ),
        );

        let m = &self.model;
        need(
            matches!(m.base.as_str(), "W01" | "W02" | "CaseStudy"),
            format!("model.base must be one of W01, W02, CaseStudy (got {:?})", m.base),
        );
        need(
            m.q >= 2.0 && m.q.is_finite(),
            format!("model.q must be a finite exponent >= 2 (got {})", m.q),
        );
        need(
            matches!(m.composition.as_str(), "right" | "left" | "none"),
            format!("model.composition must be one of right, left, none (got {:?})", m.composition),
        );
        if let Err(e) = PrestrainMap::new(m.m_b) {
            need(false, format!("model.M_B: {e}"));
        }

        let s = &self.scheme;
        need(s.dt > 0.0 && s.dt.is_finite(), format!("scheme.dt must be positive (got {})", s.dt));
        need(s.eps >= 0.0 && s.eps.is_finite(), format!("scheme.eps must be non-negative (got {})", s.eps));
        need(
            s.cfl_safety > 0.0 && s.cfl_safety <= 1.0,
            format!("scheme.cfl_safety must lie in (0, 1] (got {})", s.cfl_safety),
        );
        need(s.t_end >= 0.0 && s.t_end.is_finite(), format!("scheme.t_end must be non-negative (got {})", s.t_end));
        need(s.growth_limit > 1.0, format!("scheme.growth_limit must exceed 1 (got {})", s.growth_limit));
        if let Some(a) = s.a_split {
            need(a >= 0.0 && a.is_finite(), format!("scheme.a_split must be non-negative (got {a})"));
        }
        if let Some(ng) = s.n_galerkin {
            need(
                ng >= 1 && ng <= g.n / 2,
                format!("scheme.n_galerkin must lie in 1..={} (got {ng})", g.n / 2),
            );
        }

        let q = &self.quasi;
        need(q.picard_tol > 0.0, format!("quasi.picard_tol must be positive (got {})", q.picard_tol));
        need(q.max_iter >= 1, "quasi.max_iter must be positive (got 0)".to_string());
        if let Some(dt) = q.dt {
            need(dt > 0.0 && dt.is_finite(), format!("quasi.dt must be positive (got {dt})"));
        }

        let d = &self.data;
        need(
            d.amplitude >= 0.0 && d.amplitude.is_finite(),
            format!("data.amplitude must be non-negative (got {})", d.amplitude),
        );
        need(d.band >= 1, "data.band must be positive (got 0)".to_string());
        need(d.phi_mean.is_finite(), format!("data.phi_mean must be finite (got {})", d.phi_mean));

        need(self.io.stride >= 1, "io.stride must be positive (got 0)".to_string());
        v
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Validation(v))
        }
    }

    /// Additional requirements of the quasi-static verb.
    pub fn check_quasi(&self) -> Result<(), ConfigError> {
        let mut v = self.violations();
        if !self.data.mean_zero_phi {
            v.push(format!(
                "data.mean_zero_phi must be true for quasistatic runs (got false with data.phi_mean = {})",
                self.data.phi_mean
            ));
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Validation(v))
        }
    }

    pub fn grid(&self) -> crate::Result<Grid> {
        Grid::new(self.grid.n, self.grid.period, self.grid.dealias_fraction)
    }

    pub fn model(&self) -> crate::Result<DensityModel> {
        let q = self.model.q;
        let base = match self.model.base.as_str() {
            "W01" => BaseDensity::W01 { q },
            "W02" => BaseDensity::W02 { q },
            "CaseStudy" => BaseDensity::CaseStudy,
            other => return Err(crate::Error::InvalidArgument(format!("unknown base density {other:?}"))),
        };
        let composition = match self.model.composition.as_str() {
            "right" => Composition::Right,
            "left" => Composition::Left,
            "none" => Composition::None,
            other => return Err(crate::Error::InvalidArgument(format!("unknown composition {other:?}"))),
        };
        let model = DensityModel {
            base,
            prestrain: PrestrainMap::new(self.model.m_b)?,
            composition,
            quadratic_term: self.model.quadratic_term,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn record_options(&self) -> RecordOptions {
        RecordOptions {
            stride: self.io.stride,
            big_stride: self.io.big_stride,
        }
    }

    pub fn quasi_config(&self) -> QuasiConfig {
        QuasiConfig {
            dt: self.quasi.dt.unwrap_or(self.scheme.dt),
            t_end: self.scheme.t_end,
            picard_tol: self.quasi.picard_tol,
            max_iter: self.quasi.max_iter,
        }
    }
}
