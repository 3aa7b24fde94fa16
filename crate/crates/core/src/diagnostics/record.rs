use std::io::{Read, Write};

use serde::Serialize;

use super::apriori::{apriori_e, apriori_z};
use crate::energy::DensityModel;
use crate::error::{Error, Result};
use crate::solver::{DynamicState, Pass, QuasiState};
use crate::spectral::derivative_norm2;

/// Column names of `diagnostics.csv`, in order.
pub const CSV_HEADER: [&str; 13] = [
    "t",
    "E0",
    "dissipation",
    "E_big",
    "Z_big",
    "E_eps",
    "xi_running",
    "mean_phi",
    "mean_v_x",
    "mean_v_y",
    "mean_v_z",
    "min_det_grad_u",
    "picard_iters",
];

/// One row of `diagnostics.csv`; absent values are written as empty cells.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub e0: f64,
    pub dissipation: f64,
    pub e_big: Option<f64>,
    pub z_big: Option<f64>,
    pub e_eps: Option<f64>,
    pub xi_running: Option<f64>,
    pub mean_phi: f64,
    pub mean_v: Option<[f64; 3]>,
    pub min_det_grad_u: f64,
    pub picard_iters: Option<usize>,
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

impl DiagnosticsRecord {
    fn cells(&self) -> [String; 13] {
        let mv = |i: usize| self.mean_v.map(|m| num(m[i])).unwrap_or_default();
        [
            num(self.t),
            num(self.e0),
            num(self.dissipation),
            opt(self.e_big),
            opt(self.z_big),
            opt(self.e_eps),
            opt(self.xi_running),
            num(self.mean_phi),
            mv(0),
            mv(1),
            mv(2),
            num(self.min_det_grad_u),
            self.picard_iters.map(|n| n.to_string()).unwrap_or_default(),
        ]
    }

    fn parse(row: &csv::StringRecord) -> Result<Self> {
        if row.len() != CSV_HEADER.len() {
            return Err(Error::InvalidArgument(format!("expected 13 columns, got {}", row.len())));
        }
        let f = |i: usize| -> Result<Option<f64>> {
            let s = row[i].trim();
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>()
                .map(Some)
                .map_err(|e| Error::InvalidArgument(format!("column {}: {e}", CSV_HEADER[i])))
        };
        let req = |i: usize| -> Result<f64> {
            f(i)?.ok_or_else(|| Error::InvalidArgument(format!("column {} is empty", CSV_HEADER[i])))
        };
        let mean_v = match (f(8)?, f(9)?, f(10)?) {
            (Some(x), Some(y), Some(z)) => Some([x, y, z]),
            _ => None,
        };
        let picard_iters = match row[12].trim() {
            "" => None,
            s => Some(
                s.parse::<usize>()
                    .map_err(|e| Error::InvalidArgument(format!("column picard_iters: {e}")))?,
            ),
        };
        Ok(DiagnosticsRecord {
            t: req(0)?,
            e0: req(1)?,
            dissipation: req(2)?,
            e_big: f(3)?,
            z_big: f(4)?,
            e_eps: f(5)?,
            xi_running: f(6)?,
            mean_phi: req(7)?,
            mean_v,
            min_det_grad_u: req(11)?,
            picard_iters,
        })
    }
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::InvalidArgument(format!("csv: {e}"))
}

/// Streaming writer of `diagnostics.csv`.
pub struct CsvSink<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> CsvSink<W> {
    pub fn new(w: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(w);
        inner.write_record(CSV_HEADER).map_err(io_err)?;
        Ok(CsvSink { inner })
    }

    pub fn write(&mut self, r: &DiagnosticsRecord) -> Result<()> {
        self.inner.write_record(r.cells()).map_err(io_err)
    }

    pub fn flush(&mut self) -> Result<()> {
        self.inner.flush().map_err(io_err)
    }
}

pub fn write_csv<W: Write>(records: &[DiagnosticsRecord], w: W) -> Result<()> {
    let mut sink = CsvSink::new(w)?;
    for r in records {
        sink.write(r)?;
    }
    sink.flush()
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<DiagnosticsRecord>> {
    let mut reader = csv::Reader::from_reader(r);
    let header = reader.headers().map_err(io_err)?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::InvalidArgument(format!("unexpected header {header:?}")));
    }
    reader
        .records()
        .map(|row| DiagnosticsRecord::parse(&row.map_err(io_err)?))
        .collect()
}

pub(crate) fn record_dynamic(
    state: &DynamicState,
    pass: &Pass,
    model: &DensityModel,
    eps: f64,
    big: bool,
) -> Result<DiagnosticsRecord> {
    let e0 = 0.5 * state.v.inner(&state.v) + pass.w_integral;
    Ok(DiagnosticsRecord {
        t: state.t,
        e0,
        dissipation: derivative_norm2(&pass.dphi, 1, 0),
        e_big: if big { Some(apriori_e(state, model)?.total) } else { None },
        z_big: Some(apriori_z(state)),
        e_eps: Some(e0 + 0.5 * eps * derivative_norm2(&state.w, 1, 0)),
        xi_running: None,
        mean_phi: state.phi.mean()[0],
        mean_v: Some(state.v.mean()),
        min_det_grad_u: pass.min_det,
        picard_iters: None,
    })
}

pub(crate) fn record_quasi(
    state: &QuasiState,
    pass: &Pass,
    model: &DensityModel,
    xi: Option<f64>,
    picard_iters: Option<usize>,
    big: bool,
) -> Result<DiagnosticsRecord> {
    Ok(DiagnosticsRecord {
        t: state.t,
        e0: pass.w_integral,
        dissipation: derivative_norm2(&pass.dphi, 1, 0),
        e_big: if big { Some(apriori_e(state, model)?.total) } else { None },
        z_big: Some(apriori_z(state)),
        e_eps: None,
        xi_running: xi,
        mean_phi: state.phi.mean()[0],
        mean_v: None,
        min_det_grad_u: pass.min_det,
        picard_iters,
    })
}
