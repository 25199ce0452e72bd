//! CSV artifacts. Every number is written with 17 significant digits in
//! scientific notation, which parses back to the identical `f64`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ringmode_core::controllability::PbhMode;
use ringmode_core::nalgebra::DMatrix;
use ringmode_core::sim::Trajectory;
use ringmode_core::spectral::ModalDecomposition;

use crate::error::{Error, Result};
use crate::montecarlo::VarianceSummary;
use crate::sweep::SweepRow;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn finish(path: &Path, w: csv::Writer<BufWriter<File>>) -> Result<()> {
    let mut inner = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    inner.flush().map_err(|e| Error::io(path, e))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn trajectory_header(n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=n).flat_map(|i| [format!("s{i}"), format!("v{i}")]));
    h.push("u".into());
    h.push("mode_x11".into());
    h.extend((1..=n).flat_map(|i| [format!("dv{i}"), format!("da{i}")]));
    h
}

/// `t, s1, v1, ..., sn, vn, u, mode_x11, dv1, da1, ..., dvn, dan`.
pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut w = writer(path)?;
    let n = traj.vehicles();
    w.write_record(trajectory_header(n)).map_err(csv_err(path))?;
    let mut row = Vec::with_capacity(4 * n + 3);
    for k in 0..traj.len() {
        row.clear();
        row.push(fmt_f64(traj.times[k]));
        row.extend(traj.states[k].as_slice().iter().copied().map(fmt_f64));
        row.push(fmt_f64(traj.controls[k]));
        row.push(fmt_f64(traj.mode_signal[k]));
        row.extend(traj.disturbances[k].as_slice().iter().copied().map(fmt_f64));
        w.write_record(&row).map_err(csv_err(path))?;
    }
    finish(path, w)
}

/// `t, var_x11, mean_x11, n_runs`.
pub fn write_variance(path: &Path, v: &VarianceSummary) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["t", "var_x11", "mean_x11", "n_runs"]).map_err(csv_err(path))?;
    for k in 0..v.times.len() {
        w.write_record([
            fmt_f64(v.times[k]),
            fmt_f64(v.variance[k]),
            fmt_f64(v.mean[k]),
            v.runs.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    finish(path, w)
}

/// Row-major dense matrix, no header.
pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut w = writer(path)?;
    for r in 0..m.nrows() {
        w.write_record(m.row(r).iter().copied().map(fmt_f64)).map_err(csv_err(path))?;
    }
    finish(path, w)
}

/// One row per modal block: `block, re_lambda1, im_lambda1, re_lambda2, im_lambda2`.
pub fn write_modal_eigenvalues(path: &Path, modes: &ModalDecomposition) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["block", "re_lambda1", "im_lambda1", "re_lambda2", "im_lambda2"])
        .map_err(csv_err(path))?;
    for (i, [l1, l2]) in modes.block_eigenvalues().iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            fmt_f64(l1.re),
            fmt_f64(l1.im),
            fmt_f64(l2.re),
            fmt_f64(l2.im),
        ])
        .map_err(csv_err(path))?;
    }
    finish(path, w)
}

/// PBH table: one row per distinct eigenvalue.
pub fn write_pbh(path: &Path, modes: &[PbhMode]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "re_lambda",
        "im_lambda",
        "multiplicity",
        "rank_deficiency",
        "min_singular_value",
        "controllable",
    ])
    .map_err(csv_err(path))?;
    for m in modes {
        w.write_record([
            fmt_f64(m.eigenvalue.re),
            fmt_f64(m.eigenvalue.im),
            m.multiplicity.to_string(),
            m.rank_deficiency.to_string(),
            fmt_f64(m.min_singular_value),
            u8::from(m.is_controllable()).to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    finish(path, w)
}

pub const SWEEP_HEADER: [&str; 10] = [
    "parameter",
    "value",
    "failed",
    "terminal_var_x11",
    "var_slope",
    "expected_slope",
    "max_excursion",
    "conservation_residual",
    "n_runs",
    "error",
];

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(SWEEP_HEADER).map_err(csv_err(path))?;
    for r in rows {
        w.write_record([
            r.parameter.to_string(),
            fmt_f64(r.value),
            u8::from(r.error.is_some()).to_string(),
            fmt_f64(r.terminal_variance),
            fmt_f64(r.slope),
            fmt_f64(r.expected_slope),
            fmt_f64(r.max_excursion),
            fmt_f64(r.conservation_residual),
            r.runs.to_string(),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(csv_err(path))?;
    }
    finish(path, w)
}

/// Numeric CSV read back for checks and downstream tools.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

pub fn read_table(path: &Path, has_header: bool) -> Result<Table> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .from_path(path)
        .map_err(csv_err(path))?;
    let header = if has_header {
        r.headers().map_err(csv_err(path))?.iter().map(str::to_string).collect()
    } else {
        Vec::new()
    };
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let line = i + 1 + usize::from(has_header);
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|e| Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("`{f}`: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(Table { header, rows })
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let t = read_table(path, false)?;
    let cols = t.rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_row_iterator(t.rows.len(), cols, t.rows.into_iter().flatten()))
}
