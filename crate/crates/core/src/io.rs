//! CSV ingestion with tie merging, and serialization of fits.
//!
//! Input CSV has the header `x,y,z[,w1][,w2]`; missing weights default to 1.
//! Rows are sorted by `x` and rows sharing an `x` are merged into one with
//! weighted-mean responses and summed weights.
//!
//! The JSON output is the `fit-result-v1` record ([`FitRecord`]). Numbers are
//! written in shortest round-trip form, so reading a record back reproduces
//! every value bit for bit.

use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DualState, PairFit, PairedSample, SolverConfig, SolverTag, StepRule};
use crate::ordered::Diagnostics;

pub const FIT_SCHEMA: &str = "fit-result-v1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawRecord {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w1: Option<f64>,
    pub w2: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
    PlotCsv,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "plotcsv" => Ok(OutputFormat::PlotCsv),
            other => Err(Error::Domain(format!("unknown output format `{other}` (expected json, csv or plotcsv)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Column {
    X,
    Y,
    Z,
    W1,
    W2,
}

pub fn read_sample<R: Read>(source: R, format: InputFormat) -> Result<PairedSample> {
    match format {
        InputFormat::Csv => merge_records(read_records(source)?),
    }
}

/// Parses CSV rows without sorting or merging. Line numbers in errors are
/// 1-based and count the header.
pub fn read_records<R: Read>(source: R) -> Result<Vec<RawRecord>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let header = reader.headers().map_err(|e| csv_error(e, 1))?.clone();
    if header.is_empty() {
        return Err(Error::Domain("input is empty".into()));
    }
    let mut columns = Vec::with_capacity(header.len());
    for name in header.iter() {
        let col = match name {
            "x" => Column::X,
            "y" => Column::Y,
            "z" => Column::Z,
            "w1" => Column::W1,
            "w2" => Column::W2,
            other => return Err(Error::Parse { line: 1, message: format!("unexpected column `{other}`") }),
        };
        if columns.contains(&col) {
            return Err(Error::Parse { line: 1, message: format!("duplicate column `{name}`") });
        }
        columns.push(col);
    }
    for required in [Column::X, Column::Y, Column::Z] {
        if !columns.contains(&required) {
            return Err(Error::Parse { line: 1, message: "header must contain x, y and z".into() });
        }
    }

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_error(e, 0))?;
        let line = row.position().map_or(0, |p| p.line());
        let mut rec = RawRecord { x: f64::NAN, y: f64::NAN, z: f64::NAN, w1: None, w2: None };
        for (col, field) in columns.iter().zip(row.iter()) {
            let value: f64 =
                field.parse().map_err(|_| Error::Parse { line, message: format!("`{field}` is not a number") })?;
            if !value.is_finite() {
                return Err(Error::Parse { line, message: format!("`{field}` is not finite") });
            }
            match col {
                Column::X => rec.x = value,
                Column::Y => rec.y = value,
                Column::Z => rec.z = value,
                Column::W1 | Column::W2 => {
                    if value <= 0.0 {
                        return Err(Error::Domain(format!("line {line}: weight {value} is not positive")));
                    }
                    if *col == Column::W1 {
                        rec.w1 = Some(value);
                    } else {
                        rec.w2 = Some(value);
                    }
                }
            }
        }
        records.push(rec);
    }
    if records.is_empty() {
        return Err(Error::Domain("input contains no data rows".into()));
    }
    Ok(records)
}

fn csv_error(e: csv::Error, fallback_line: u64) -> Error {
    let line = e.position().map_or(fallback_line, |p| p.line());
    Error::Parse { line, message: e.to_string() }
}

/// Sorts by `x` and merges rows with equal `x`.
pub fn merge_records(mut records: Vec<RawRecord>) -> Result<PairedSample> {
    records.sort_by(|p, q| p.x.total_cmp(&q.x));
    let (mut x, mut y, mut z, mut w1, mut w2) = (vec![], vec![], vec![], vec![], vec![]);
    let mut start = 0;
    while start < records.len() {
        let key = records[start].x;
        let end = start + records[start..].iter().take_while(|r| r.x == key).count();
        let (mut sw1, mut sy, mut sw2, mut sz) = (0.0, 0.0, 0.0, 0.0);
        for r in &records[start..end] {
            let (a, b) = (r.w1.unwrap_or(1.0), r.w2.unwrap_or(1.0));
            sw1 += a;
            sy += a * r.y;
            sw2 += b;
            sz += b * r.z;
        }
        x.push(key);
        y.push(if end - start == 1 { records[start].y } else { sy / sw1 });
        z.push(if end - start == 1 { records[start].z } else { sz / sw2 });
        w1.push(sw1);
        w2.push(sw2);
        start = end;
    }
    PairedSample::new(x, y, z, w1, w2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub feas_tol: f64,
    pub gap_tol: f64,
    /// Tolerance at which `check` re-verifies the optimality certificate.
    pub kkt_tol: f64,
    pub max_iter: usize,
    pub step_rule: StepRule,
    pub step_constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub dual_values: Vec<f64>,
    pub feasibility: Vec<f64>,
    pub primal_bounds: Vec<f64>,
    pub repair_rounds: usize,
    pub repair_fallbacks: usize,
    pub multiplier_recoveries: usize,
    pub oracle_max_diff: Option<f64>,
}

/// The `fit-result-v1` JSON record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub schema: String,
    pub solver_tag: SolverTag,
    pub converged: bool,
    pub iterations: usize,
    pub n: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub lambda: Vec<f64>,
    pub objective: f64,
    pub dual_value: f64,
    pub max_coupling_violation: f64,
    pub tolerances: Tolerances,
    pub diagnostics: DiagnosticsRecord,
}

/// Everything a fit output needs.
#[derive(Debug, Clone, Copy)]
pub struct FitOutput<'a> {
    pub sample: &'a PairedSample,
    pub config: &'a SolverConfig,
    pub kkt_tol: f64,
    pub fit: &'a PairFit,
    pub dual: &'a DualState,
    pub diagnostics: &'a Diagnostics,
}

impl FitRecord {
    pub fn new(out: FitOutput<'_>) -> Self {
        let FitOutput { sample, config, kkt_tol, fit, dual, diagnostics } = out;
        FitRecord {
            schema: FIT_SCHEMA.to_string(),
            solver_tag: fit.solver_tag,
            converged: diagnostics.converged,
            iterations: diagnostics.iterations,
            n: sample.len(),
            x: sample.x().to_vec(),
            y: sample.y().to_vec(),
            z: sample.z().to_vec(),
            w1: sample.w1().to_vec(),
            w2: sample.w2().to_vec(),
            a: fit.a.values().to_vec(),
            b: fit.b.values().to_vec(),
            lambda: dual.lambda.clone(),
            objective: fit.objective,
            dual_value: dual.dual_value,
            max_coupling_violation: fit.max_coupling_violation,
            tolerances: Tolerances {
                feas_tol: config.feas_tol,
                gap_tol: config.gap_tol,
                kkt_tol,
                max_iter: config.max_iter,
                step_rule: config.step_rule,
                step_constant: config.step_constant,
            },
            diagnostics: DiagnosticsRecord {
                dual_values: diagnostics.dual_values.clone(),
                feasibility: diagnostics.feasibility.clone(),
                primal_bounds: diagnostics.primal_bounds.clone(),
                repair_rounds: diagnostics.repair_rounds,
                repair_fallbacks: diagnostics.repair_fallbacks,
                multiplier_recoveries: diagnostics.multiplier_recoveries,
                oracle_max_diff: diagnostics.oracle_max_diff,
            },
        }
    }

    pub fn sample(&self) -> Result<PairedSample> {
        PairedSample::new(self.x.clone(), self.y.clone(), self.z.clone(), self.w1.clone(), self.w2.clone())
    }

    /// The stored pair, with the stored objective and residual rather than
    /// recomputed ones.
    pub fn fit(&self) -> PairFit {
        PairFit {
            a: crate::model::MonotoneFit::new(self.a.clone()),
            b: crate::model::MonotoneFit::new(self.b.clone()),
            objective: self.objective,
            max_coupling_violation: self.max_coupling_violation,
            solver_tag: self.solver_tag,
        }
    }
}

pub fn read_fit_record<R: Read>(source: R) -> Result<FitRecord> {
    let record: FitRecord = serde_json::from_reader(source)?;
    if record.schema != FIT_SCHEMA {
        return Err(Error::Domain(format!("unsupported schema `{}` (expected {FIT_SCHEMA})", record.schema)));
    }
    let n = record.n;
    for (name, v) in [
        ("x", &record.x),
        ("y", &record.y),
        ("z", &record.z),
        ("w1", &record.w1),
        ("w2", &record.w2),
        ("a", &record.a),
        ("b", &record.b),
        ("lambda", &record.lambda),
    ] {
        crate::error::check_len(name, n, v.len())?;
    }
    Ok(record)
}

pub fn write_fit<W: Write>(out: FitOutput<'_>, mut sink: W, format: OutputFormat) -> Result<()> {
    match format {
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut sink, &FitRecord::new(out))?;
            sink.write_all(b"\n")?;
        }
        OutputFormat::Csv => {
            let x = out.sample.x();
            writeln!(sink, "x,a,b")?;
            for ((x, a), b) in x.iter().zip(out.fit.a.values()).zip(out.fit.b.values()) {
                writeln!(sink, "{x},{a},{b}")?;
            }
        }
        OutputFormat::PlotCsv => {
            let x = out.sample.x();
            writeln!(sink, "curve,x,value")?;
            for (name, row) in [("a", &out.fit.a), ("b", &out.fit.b)] {
                for block in row.blocks() {
                    let value = row.values()[block.start];
                    writeln!(sink, "{name},{},{value}", x[block.start])?;
                    writeln!(sink, "{name},{},{value}", x[block.end - 1])?;
                }
            }
        }
    }
    sink.flush()?;
    Ok(())
}
