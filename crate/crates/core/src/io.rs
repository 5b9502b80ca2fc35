//! Machine-readable dumps. Reals are written with 17 significant digits;
//! complex numbers are `[re, im]` pairs in JSON and `re,im` columns in CSV.
//! Every dump carries a [`Provenance`]: JSON as top-level fields, CSV as a
//! leading `#` line that the readers here skip.

use std::io::{BufRead, Write};

use num_complex::Complex;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::flow::AffineSymplecticMap;
use crate::kernel::KernelClosedForm;
use crate::linalg::{CMat, Mat};
use crate::propagator::{CauchyReport, WaveFunction};
use crate::scalar::{to_f64, Real};

/// Library version and config hash stamped into each output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub version: String,
    pub config_hash: String,
}

impl Provenance {
    pub fn new(config_hash: impl Into<String>) -> Self {
        Self { version: crate::VERSION.to_string(), config_hash: config_hash.into() }
    }

    pub fn csv_line(&self) -> String {
        format!("# roughflow {} config {}\n", self.version, self.config_hash)
    }

    fn stamp(&self, mut v: Value) -> Value {
        if let Value::Object(map) = &mut v {
            map.insert("version".into(), json!(self.version));
            map.insert("config_hash".into(), json!(self.config_hash));
        }
        v
    }
}

fn c2<T: Real>(z: Complex<T>) -> Value {
    json!([to_f64(z.re), to_f64(z.im)])
}

fn real_rows<T: Real>(m: &Mat<T>) -> Vec<f64> {
    (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| to_f64(m[(i, j)]))).collect()
}

fn complex_rows<T: Real>(m: &CMat<T>) -> Value {
    Value::Array((0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| c2(m[(i, j)])).collect())).collect())
}

/// `{t, s, F (row-major), v, residuals}`.
pub fn flow_json<T: Real>(flow: &AffineSymplecticMap<T>, prov: &Provenance) -> Value {
    prov.stamp(json!({
        "t": to_f64(flow.t),
        "s": to_f64(flow.s),
        "dim": flow.dim(),
        "F": real_rows(&flow.f),
        "v": flow.v.iter().map(|x| to_f64(*x)).collect::<Vec<_>>(),
        "residuals": flow.residuals,
    }))
}

/// Closed-form kernel data `pref·exp(i(½x·Qxx x + x·Qxy y + ½y·Qyy y + lx·x + ly·y + c))`.
pub fn kernel_json<T: Real>(kf: &KernelClosedForm<T>, prov: &Provenance) -> Value {
    prov.stamp(json!({
        "dim": kf.dim(),
        "pref": c2(kf.pref),
        "Qxx": complex_rows(&kf.qxx),
        "Qxy": complex_rows(&kf.qxy),
        "Qyy": complex_rows(&kf.qyy),
        "lx": kf.lx.iter().map(|z| c2(*z)).collect::<Vec<_>>(),
        "ly": kf.ly.iter().map(|z| c2(*z)).collect::<Vec<_>>(),
        "c": c2(kf.c),
    }))
}

/// `{eps, l2dist}` entries plus the path distances and initial `H²` norm.
pub fn cauchy_json(report: &CauchyReport, prov: &Provenance) -> Value {
    prov.stamp(json!({
        "report": report.entries,
        "path_distances": report.path_distances,
        "h2norm": report.h2norm,
    }))
}

pub fn write_json<W: Write>(v: &Value, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn join<T: Real>(v: &[T]) -> String {
    v.iter().map(|x| format!("{:.16e}", to_f64(*x))).collect::<Vec<_>>().join(";")
}

/// Kernel evaluations `x,y,re,im`; in `d > 1` coordinates are `;`-joined.
pub fn probe_csv<T: Real, W: Write>(
    kf: &KernelClosedForm<T>,
    points: &[(Vec<T>, Vec<T>)],
    prov: &Provenance,
    mut out: W,
) -> Result<()> {
    out.write_all(prov.csv_line().as_bytes())?;
    writeln!(out, "x,y,re,im")?;
    for (x, y) in points {
        let k = kf.eval(x, y);
        writeln!(out, "{},{},{:.16e},{:.16e}", join(x), join(y), to_f64(k.re), to_f64(k.im))?;
    }
    Ok(())
}

/// Grid values `x,re,im` (`d = 1`) or `x,y,re,im` (`d = 2`), row-major.
pub fn write_wavefunction<T: Real, W: Write>(psi: &WaveFunction<T>, prov: &Provenance, mut out: W) -> Result<()> {
    out.write_all(prov.csv_line().as_bytes())?;
    writeln!(out, "{}", if psi.dim == 1 { "x,re,im" } else { "x,y,re,im" })?;
    for (i, z) in psi.values.iter().enumerate() {
        let coords: Vec<String> = psi.point(i).iter().map(|x| format!("{:.16e}", to_f64(*x))).collect();
        writeln!(out, "{},{:.16e},{:.16e}", coords.join(","), to_f64(z.re), to_f64(z.im))?;
    }
    Ok(())
}

/// Inverse of [`write_wavefunction`]; the grid is recovered from the coordinates.
pub fn read_wavefunction<R: BufRead>(input: R) -> Result<WaveFunction<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut header = None;
    for line in input.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if header.is_none() {
            header = Some(line.to_string());
            continue;
        }
        let row = line
            .split(',')
            .map(|c| c.trim().parse::<f64>().map_err(|e| Error::Parse(format!("data row {}: {e}", rows.len() + 1))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let dim = match header.as_deref() {
        Some("x,re,im") => 1,
        Some("x,y,re,im") => 2,
        other => return Err(Error::Parse(format!("unexpected wave function header {other:?}"))),
    };
    if rows.iter().any(|r| r.len() != dim + 2) {
        return Err(Error::Parse(format!("every row needs {} columns", dim + 2)));
    }
    let m = (rows.len() as f64).powf(1.0 / dim as f64).round() as usize;
    if m < 2 || m.pow(dim as u32) != rows.len() {
        return Err(Error::Parse(format!("{} rows do not form a square grid", rows.len())));
    }
    let lbox = -rows[0][0];
    let values = rows.iter().map(|r| Complex::new(r[dim], r[dim + 1])).collect();
    WaveFunction::new(dim, lbox, m, values)
}
