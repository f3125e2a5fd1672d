use std::io::{Read, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::engine::{Engine, Factors, Fit, Rank};
use crate::error::{Error, Result};
use crate::experiments::{CvReport, ExperimentReport, ToySpec};
use crate::observed::ObservedMatrix;
use crate::quality::QualityReport;
use crate::selection::{SearchKind, SearchResult, SearchSpec};
use crate::trace::RunTrace;

/// Bumped whenever a field is renamed or removed.
pub const SCHEMA_VERSION: u32 = 1;

/// Top-level envelope of every report the tool writes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub schema: u32,
    pub report: Report,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Report {
    Gen(GenReport),
    Fit(Box<FitReport>),
    Select(SelectReport),
    Convergence(ConvergenceReport),
    Experiment(ExperimentReport),
    CrossValidation(CvReport),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenReport {
    pub spec: ToySpec,
    pub seed: u64,
    pub noise_var: f64,
    pub truth: Factors,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub engine: Engine,
    pub rank: Rank,
    pub seed: u64,
    pub rows: usize,
    pub cols: usize,
    pub n_observed: usize,
    pub quality: QualityReport,
    pub tau: f64,
    pub trace: RunTrace,
    pub factors: Factors,
    pub prediction: Array2<f64>,
}

impl FitReport {
    pub fn new(fit: Fit, data: &ObservedMatrix) -> Result<Self> {
        Ok(Self {
            quality: fit.quality(data)?,
            engine: fit.engine,
            rank: fit.rank,
            seed: fit.seed,
            rows: data.rows(),
            cols: data.cols(),
            n_observed: data.n_observed(),
            tau: fit.tau,
            trace: fit.trace,
            factors: fit.factors,
            prediction: fit.prediction,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectReport {
    pub search: SearchKind,
    pub spec: SearchSpec,
    pub result: SearchResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rank: Rank,
    pub timing_repeats: usize,
    pub seed: u64,
    pub traces: Vec<RunTrace>,
}

impl Document {
    pub fn new(report: Report) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            report,
        }
    }
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_report<W: Write>(mut out: W, doc: &Document) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, doc)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn read_report<R: Read>(input: R) -> Result<Document> {
    let doc: Document = serde_json::from_reader(input)?;
    if doc.schema != SCHEMA_VERSION {
        return Err(Error::Config(format!(
            "report schema {} is not supported (expected {SCHEMA_VERSION})",
            doc.schema
        )));
    }
    Ok(doc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceSeries {
    Mse,
    Elbo,
    Seconds,
}

impl TraceSeries {
    fn header(self) -> &'static str {
        match self {
            TraceSeries::Mse => "iteration,mse",
            TraceSeries::Elbo => "iteration,elbo",
            TraceSeries::Seconds => "iteration,seconds",
        }
    }
}

/// Two-column CSV of one trace series, with a header row. Returns `false`
/// and writes nothing when the trace has no such series.
pub fn write_trace_csv<W: Write>(mut out: W, trace: &RunTrace, series: TraceSeries) -> Result<bool> {
    let points = match series {
        TraceSeries::Mse => &trace.iter_mse,
        TraceSeries::Elbo => match &trace.iter_elbo {
            Some(e) => e,
            None => return Ok(false),
        },
        TraceSeries::Seconds => &trace.wall_clock,
    };
    if points.is_empty() {
        return Ok(false);
    }
    writeln!(out, "{}", series.header())?;
    for (it, v) in points {
        writeln!(out, "{it},{v:?}")?;
    }
    Ok(true)
}
