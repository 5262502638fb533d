//! File formats: JSON schemas for matrices, states, POVMs, dual sets,
//! counts, estimates, and campaign configs, plus the CSV emitters.
//!
//! Complex numbers are serialized as `[re, im]` pairs, matrices as row-major
//! entry lists. All outputs are byte-deterministic given the same inputs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TomoError};
use crate::estimators::{EstimateRecord, IterationSchedule, Method};
use crate::frame::DualSet;
use crate::montecarlo::{CampaignConfig, CampaignSummary, ExperimentRecord, Histogram};
use crate::operators::{CMatrix, Complex64, DensityMatrix, Povm};

/// `{"rows": r, "cols": c, "data": [[re, im], ...]}`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<(f64, f64)>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                data.push((z.re, z.im));
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        if self.data.len() != self.rows * self.cols {
            return Err(TomoError::InvalidConfig(format!(
                "matrix field `data` has {} entries, expected rows*cols = {}",
                self.data.len(),
                self.rows * self.cols
            )));
        }
        Ok(CMatrix::from_fn(self.rows, self.cols, |i, j| {
            let (re, im) = self.data[i * self.cols + j];
            Complex64::new(re, im)
        }))
    }
}

/// A state file: the matrix schema plus a top-level `dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateJson {
    pub dim: usize,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<(f64, f64)>,
}

impl StateJson {
    pub fn from_state(state: &DensityMatrix) -> Self {
        let m = MatrixJson::from_matrix(state.matrix());
        Self {
            dim: state.dim(),
            rows: m.rows,
            cols: m.cols,
            data: m.data,
        }
    }

    pub fn to_state(&self) -> Result<DensityMatrix> {
        if self.rows != self.dim || self.cols != self.dim {
            return Err(TomoError::InvalidConfig(format!(
                "state field `dim` is {}, but the matrix is {}x{}",
                self.dim, self.rows, self.cols
            )));
        }
        let m = MatrixJson {
            rows: self.rows,
            cols: self.cols,
            data: self.data.clone(),
        };
        DensityMatrix::new(m.to_matrix()?)
    }
}

/// `{"dim": d, "elements": [matrix, ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PovmJson {
    pub dim: usize,
    pub elements: Vec<MatrixJson>,
}

impl PovmJson {
    pub fn from_povm(povm: &Povm) -> Self {
        Self {
            dim: povm.dim(),
            elements: povm.elements().iter().map(MatrixJson::from_matrix).collect(),
        }
    }

    pub fn to_povm(&self) -> Result<Povm> {
        for (i, el) in self.elements.iter().enumerate() {
            if el.rows != self.dim || el.cols != self.dim {
                return Err(TomoError::InvalidConfig(format!(
                    "POVM field `elements[{i}]` is {}x{}, expected dim {}",
                    el.rows, el.cols, self.dim
                )));
            }
        }
        let elements = self
            .elements
            .iter()
            .map(MatrixJson::to_matrix)
            .collect::<Result<Vec<_>>>()?;
        Povm::new(elements)
    }
}

/// `{"dim": d, "n": N, "provenance": ..., "operators": [matrix, ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualSetJson {
    pub dim: usize,
    pub n: usize,
    pub provenance: String,
    pub operators: Vec<MatrixJson>,
}

impl DualSetJson {
    pub fn from_dual_set(duals: &DualSet) -> Self {
        Self {
            dim: duals.dim(),
            n: duals.n_outcomes(),
            provenance: duals.provenance().label().to_string(),
            operators: duals.operators().iter().map(MatrixJson::from_matrix).collect(),
        }
    }
}

/// `{"counts": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountsJson {
    pub counts: Vec<u64>,
}

/// Estimate output: matrix, trace, physical flag, and the iteration log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateJson {
    pub method: Method,
    pub estimate: MatrixJson,
    pub trace: f64,
    pub physical: bool,
    pub iterations_used: usize,
    pub hs_steps: Vec<f64>,
    pub clamped_probability_events: usize,
    pub uniform_fallbacks: usize,
}

impl EstimateJson {
    pub fn from_record(record: &EstimateRecord) -> Self {
        Self {
            method: record.method,
            estimate: MatrixJson::from_matrix(&record.estimate),
            trace: record.trace,
            physical: record.physical,
            iterations_used: record.iterations_used,
            hs_steps: record.hs_steps.clone(),
            clamped_probability_events: record.clamped_probability_events,
            uniform_fallbacks: record.uniform_fallbacks,
        }
    }
}

fn default_experiments() -> u64 {
    1000
}

fn default_shots() -> u64 {
    1000
}

fn all_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

/// Histogram binning block of a campaign config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HistogramBinning {
    pub bin_width: f64,
    pub start: f64,
    pub max_bins: Option<usize>,
}

impl Default for HistogramBinning {
    fn default() -> Self {
        Self {
            bin_width: 0.005,
            start: 0.0,
            max_bins: None,
        }
    }
}

/// Campaign config file. `povm` and `true_state` are paths, resolved
/// relative to the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfigFile {
    pub povm: String,
    pub true_state: String,
    #[serde(default = "default_experiments")]
    pub n_experiments: u64,
    #[serde(default = "default_shots")]
    pub n_shots: u64,
    #[serde(default = "all_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub schedule: IterationSchedule,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub histogram: HistogramBinning,
}

impl CampaignConfigFile {
    pub fn new(povm: impl Into<String>, true_state: impl Into<String>) -> Self {
        Self {
            povm: povm.into(),
            true_state: true_state.into(),
            n_experiments: default_experiments(),
            n_shots: default_shots(),
            methods: all_methods(),
            schedule: IterationSchedule::default(),
            master_seed: 0,
            histogram: HistogramBinning::default(),
        }
    }

    /// Loads the referenced POVM and state (relative to `base_dir`) and
    /// assembles a runnable campaign config.
    pub fn resolve(&self, base_dir: &Path) -> Result<CampaignConfig> {
        let povm_path = base_dir.join(&self.povm);
        let state_path = base_dir.join(&self.true_state);
        let povm = read_povm(&povm_path)?;
        let true_state = read_state(&state_path)?;
        Ok(CampaignConfig {
            povm,
            true_state,
            n_experiments: self.n_experiments,
            n_shots: self.n_shots,
            methods: self.methods.clone(),
            schedule: self.schedule.clone(),
            master_seed: self.master_seed,
            bin_width: self.histogram.bin_width,
            histogram_start: self.histogram.start,
            max_bins: self.histogram.max_bins,
        })
    }
}

fn io_error(path: &Path, source: std::io::Error) -> TomoError {
    TomoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads and parses a JSON file into `T`.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    serde_json::from_str(&text).map_err(|e| TomoError::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Writes `value` as pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| TomoError::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_error(path, e))
}

pub fn read_povm(path: &Path) -> Result<Povm> {
    read_json::<PovmJson>(path)?.to_povm()
}

pub fn write_povm(path: &Path, povm: &Povm) -> Result<()> {
    write_json(path, &PovmJson::from_povm(povm))
}

pub fn read_state(path: &Path) -> Result<DensityMatrix> {
    read_json::<StateJson>(path)?.to_state()
}

pub fn write_state(path: &Path, state: &DensityMatrix) -> Result<()> {
    write_json(path, &StateJson::from_state(state))
}

pub fn read_counts(path: &Path) -> Result<Vec<u64>> {
    Ok(read_json::<CountsJson>(path)?.counts)
}

pub fn write_counts(path: &Path, counts: &[u64]) -> Result<()> {
    write_json(
        path,
        &CountsJson {
            counts: counts.to_vec(),
        },
    )
}

pub fn write_dual_set(path: &Path, duals: &DualSet) -> Result<()> {
    write_json(path, &DualSetJson::from_dual_set(duals))
}

pub fn write_estimate(path: &Path, record: &EstimateRecord) -> Result<()> {
    write_json(path, &EstimateJson::from_record(record))
}

pub fn read_summary(path: &Path) -> Result<CampaignSummary> {
    read_json(path)
}

pub fn write_summary(path: &Path, summary: &CampaignSummary) -> Result<()> {
    write_json(path, summary)
}

pub fn read_campaign_config(path: &Path) -> Result<CampaignConfigFile> {
    read_json(path)
}

pub fn write_campaign_config(path: &Path, config: &CampaignConfigFile) -> Result<()> {
    write_json(path, config)
}

/// Per-experiment CSV: index, seed, one column per outcome count, then
/// distance/trace/physical triples per method.
pub fn experiments_csv(records: &[ExperimentRecord], methods: &[Method]) -> String {
    let n_counts = records.first().map_or(0, |r| r.counts.len());
    let mut out = String::from("index,seed");
    for i in 0..n_counts {
        out.push_str(&format!(",count_{i}"));
    }
    for m in methods {
        let key = m.key();
        out.push_str(&format!(",hs_{key},trace_{key},physical_{key}"));
    }
    out.push('\n');
    for record in records {
        out.push_str(&format!("{},{}", record.index, record.seed));
        for c in &record.counts {
            out.push_str(&format!(",{c}"));
        }
        for outcome in &record.outcomes {
            out.push_str(&format!(
                ",{},{},{}",
                outcome.hs_distance, outcome.trace, outcome.physical
            ));
        }
        out.push('\n');
    }
    out
}

pub fn write_experiments_csv(
    path: &Path,
    records: &[ExperimentRecord],
    methods: &[Method],
) -> Result<()> {
    fs::write(path, experiments_csv(records, methods)).map_err(|e| io_error(path, e))
}

/// Histogram CSV with header `bin_lo,bin_hi,count`. An open-ended overflow
/// bin prints `inf` as its upper edge.
pub fn histogram_csv(histogram: &Histogram) -> String {
    let mut out = String::from("bin_lo,bin_hi,count\n");
    for (k, &count) in histogram.counts.iter().enumerate() {
        let (lo, hi) = histogram.edges(k);
        out.push_str(&format!("{lo},{hi},{count}\n"));
    }
    out
}

pub fn write_histogram_csv(path: &Path, histogram: &Histogram) -> Result<()> {
    fs::write(path, histogram_csv(histogram)).map_err(|e| io_error(path, e))
}

/// File name for a method's histogram CSV.
pub fn histogram_file_name(method: Method) -> String {
    format!("histogram_{}.csv", method.key())
}

/// Writes summary.json, experiments.csv, and one histogram CSV per method
/// into `out_dir`, creating it if needed. Returns the paths written.
pub fn write_campaign_outputs(
    out_dir: &Path,
    summary: &CampaignSummary,
    records: &[ExperimentRecord],
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| io_error(out_dir, e))?;
    let mut written = Vec::new();

    let summary_path = out_dir.join("summary.json");
    write_summary(&summary_path, summary)?;
    written.push(summary_path);

    let experiments_path = out_dir.join("experiments.csv");
    write_experiments_csv(&experiments_path, records, &summary.config.methods)?;
    written.push(experiments_path);

    for method_summary in &summary.methods {
        let path = out_dir.join(histogram_file_name(method_summary.method));
        write_histogram_csv(&path, &method_summary.histogram)?;
        written.push(path);
    }
    Ok(written)
}
