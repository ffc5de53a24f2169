//! File formats: matrix, visibility and magnitude JSON, trace CSV.
//!
//! Mode labels in files are 1-based. Floats are written in shortest
//! round-trip form, which is exact.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dipmodel::{DipSample, DipTrace};
use crate::error::{Error, Result};
use crate::interference::{ModePair, VisibilityMatrix};
use crate::matrix::TransitionMatrix;
use crate::reconstruct::MagnitudeGrid;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub n_inputs: usize,
    pub n_outputs: usize,
    /// Row-major `[re, im]` pairs.
    pub entries: Vec<Vec<[f64; 2]>>,
}

impl From<&TransitionMatrix> for MatrixFile {
    fn from(m: &TransitionMatrix) -> Self {
        Self {
            n_inputs: m.n_inputs(),
            n_outputs: m.n_outputs(),
            entries: m.rows().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect(),
        }
    }
}

impl TryFrom<MatrixFile> for TransitionMatrix {
    type Error = Error;
    fn try_from(f: MatrixFile) -> Result<Self> {
        if f.entries.len() != f.n_inputs {
            return Err(Error::Shape(format!(
                "n_inputs is {} but entries has {} rows",
                f.n_inputs,
                f.entries.len()
            )));
        }
        if let Some(row) = f.entries.iter().position(|r| r.len() != f.n_outputs) {
            return Err(Error::Shape(format!(
                "n_outputs is {} but row {} has {} entries",
                f.n_outputs,
                row + 1,
                f.entries[row].len()
            )));
        }
        let rows = f
            .entries
            .into_iter()
            .map(|r| r.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
            .collect();
        TransitionMatrix::from_rows(rows)
    }
}

pub fn matrix_to_json(m: &TransitionMatrix) -> String {
    to_pretty(&MatrixFile::from(m))
}

pub fn matrix_from_json(text: &str) -> Result<TransitionMatrix> {
    serde_json::from_str::<MatrixFile>(text)?.try_into()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VisibilityFile {
    pub input_pairs: Vec<ModePair>,
    pub output_pairs: Vec<ModePair>,
    /// Row-major; `null` where undefined.
    pub values: Vec<Vec<Option<f64>>>,
}

impl From<&VisibilityMatrix> for VisibilityFile {
    fn from(v: &VisibilityMatrix) -> Self {
        Self {
            input_pairs: v.input_pairs().to_vec(),
            output_pairs: v.output_pairs().to_vec(),
            values: v.values().to_vec(),
        }
    }
}

impl TryFrom<VisibilityFile> for VisibilityMatrix {
    type Error = Error;
    fn try_from(f: VisibilityFile) -> Result<Self> {
        VisibilityMatrix::new(f.input_pairs, f.output_pairs, f.values)
    }
}

pub fn visibility_to_json(v: &VisibilityMatrix) -> String {
    to_pretty(&VisibilityFile::from(v))
}

pub fn visibility_from_json(text: &str) -> Result<VisibilityMatrix> {
    serde_json::from_str::<VisibilityFile>(text)?.try_into()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MagnitudeFile {
    pub values: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncertainty: Option<Vec<Vec<f64>>>,
}

pub fn magnitudes_to_json(g: &MagnitudeGrid) -> String {
    to_pretty(&MagnitudeFile {
        values: g.rows(),
        uncertainty: g.uncertainty_rows(),
    })
}

pub fn magnitudes_from_json(text: &str) -> Result<MagnitudeGrid> {
    let f: MagnitudeFile = serde_json::from_str(text)?;
    MagnitudeGrid::new(f.values, f.uncertainty)
}

/// Pretty JSON with a trailing newline.
pub fn to_pretty<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("in-memory serialization cannot fail");
    s.push('\n');
    s
}

pub const TRACE_HEADER: [&str; 3] = ["delay_um", "coincidences", "accidentals"];

#[derive(Debug, Serialize, Deserialize)]
struct TraceRow {
    delay_um: f64,
    coincidences: f64,
    #[serde(default)]
    accidentals: Option<f64>,
}

/// Writes `delay_um,coincidences[,accidentals]`; the accidentals column is
/// present only when some sample carries one.
pub fn write_trace_csv<W: Write>(trace: &DipTrace, out: W) -> Result<()> {
    let with_acc = trace.has_accidentals();
    let mut w = csv::Writer::from_writer(out);
    if with_acc {
        w.write_record(TRACE_HEADER)?;
    } else {
        w.write_record(&TRACE_HEADER[..2])?;
    }
    for s in trace.samples() {
        let mut rec = vec![s.delay_um.to_string(), s.coincidences.to_string()];
        if with_acc {
            rec.push(s.accidentals.map(|a| a.to_string()).unwrap_or_default());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn trace_to_csv(trace: &DipTrace) -> String {
    let mut buf = Vec::new();
    write_trace_csv(trace, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is utf-8")
}

pub fn read_trace_csv<R: Read>(input: R) -> Result<DipTrace> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = r.headers()?.clone();
    let names: Vec<&str> = headers.iter().collect();
    if names != TRACE_HEADER[..2] && names != TRACE_HEADER {
        return Err(Error::Parse(format!(
            "trace header must be `delay_um,coincidences[,accidentals]`, got `{}`",
            names.join(",")
        )));
    }
    let mut samples = Vec::new();
    for (line, row) in r.deserialize::<TraceRow>().enumerate() {
        let row = row.map_err(|e| Error::Parse(format!("trace line {}: {e}", line + 2)))?;
        samples.push(DipSample {
            delay_um: row.delay_um,
            coincidences: row.coincidences,
            accidentals: row.accidentals,
        });
    }
    DipTrace::new(samples)
}
