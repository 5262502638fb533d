//! Outcome sampling, repeated-experiment campaigns, and aggregation.
//!
//! Experiments are independent units of work: each gets its own RNG stream
//! derived from (master_seed, index), so results are bit-identical no matter
//! how many threads run them. Aggregation is an ordered fold by experiment
//! index.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TomoError};
use crate::estimators::{
    estimate_bayesian, estimate_frequentist, estimate_plain, EstimateRecord, FrequencyVector,
    IterationSchedule, Method,
};
use crate::operators::{
    born_probabilities, hs_distance, DensityMatrix, Povm, ProbabilityVector,
};

/// Everything a campaign needs, with inputs already loaded.
#[derive(Debug, Clone)]
pub struct CampaignConfig {
    pub povm: Povm,
    pub true_state: DensityMatrix,
    pub n_experiments: u64,
    pub n_shots: u64,
    pub methods: Vec<Method>,
    pub schedule: IterationSchedule,
    pub master_seed: u64,
    pub bin_width: f64,
    pub histogram_start: f64,
    /// Optional bin cap; the final bin then collects everything beyond it.
    pub max_bins: Option<usize>,
}

impl CampaignConfig {
    pub fn new(povm: Povm, true_state: DensityMatrix) -> Self {
        Self {
            povm,
            true_state,
            n_experiments: 1000,
            n_shots: 1000,
            methods: Method::ALL.to_vec(),
            schedule: IterationSchedule::default(),
            master_seed: 0,
            bin_width: 0.005,
            histogram_start: 0.0,
            max_bins: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.true_state.dim() != self.povm.dim() {
            return Err(TomoError::DimensionMismatch {
                context: "campaign state vs POVM",
                expected: self.povm.dim(),
                found: self.true_state.dim(),
            });
        }
        if self.n_experiments < 1 {
            return Err(TomoError::InvalidConfig("n_experiments must be at least 1".into()));
        }
        if self.n_shots < 1 {
            return Err(TomoError::InvalidConfig("n_shots must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(TomoError::InvalidConfig("methods list is empty".into()));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(TomoError::InvalidConfig(format!(
                    "method `{}` listed twice",
                    m.key()
                )));
            }
        }
        if !(self.bin_width > 0.0) {
            return Err(TomoError::InvalidConfig("bin_width must be positive".into()));
        }
        if !self.histogram_start.is_finite() {
            return Err(TomoError::InvalidConfig("histogram start must be finite".into()));
        }
        if self.max_bins == Some(0) {
            return Err(TomoError::InvalidConfig("max_bins must be at least 1".into()));
        }
        self.schedule.validate()
    }
}

/// Per-method outcome of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutcome {
    pub method: Method,
    pub hs_distance: f64,
    pub trace: f64,
    pub physical: bool,
}

/// One simulated experiment: its seed, sampled counts, and per-method results.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub index: u64,
    pub seed: u64,
    pub counts: Vec<u64>,
    pub outcomes: Vec<MethodOutcome>,
}

/// Fixed-width histogram. When `overflow` is set the final bin is open-ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: f64,
    pub start: f64,
    pub counts: Vec<u64>,
    pub overflow: bool,
}

impl Histogram {
    /// Lower and upper edge of bin `k`; the upper edge of an overflow bin is infinite.
    pub fn edges(&self, k: usize) -> (f64, f64) {
        let lo = self.start + k as f64 * self.bin_width;
        if self.overflow && k + 1 == self.counts.len() {
            (lo, f64::INFINITY)
        } else {
            (lo, self.start + (k + 1) as f64 * self.bin_width)
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

const MAX_HISTOGRAM_BINS: usize = 1_000_000;

fn bin_index(value: f64, bin_width: f64, start: f64) -> Result<usize> {
    if !value.is_finite() {
        return Err(TomoError::InvalidConfig(format!(
            "cannot histogram non-finite value {value}"
        )));
    }
    if value < start {
        return Err(TomoError::InvalidConfig(format!(
            "value {value} lies below the histogram start {start}"
        )));
    }
    // Boundary values belong to the upper bin; the nudge keeps that true when
    // the boundary itself carries round-off.
    let idx = ((value - start) / bin_width + 1e-9).floor();
    if idx >= MAX_HISTOGRAM_BINS as f64 {
        return Err(TomoError::InvalidConfig(format!(
            "bin width {bin_width} is too small for value {value}"
        )));
    }
    Ok(idx as usize)
}

/// Histogram with fixed-width bins [start + k·w, start + (k+1)·w), extended to
/// cover the data. Empty input yields an empty histogram.
pub fn build_histogram(values: &[f64], bin_width: f64, start: f64) -> Result<Histogram> {
    if !(bin_width > 0.0) {
        return Err(TomoError::InvalidConfig("bin_width must be positive".into()));
    }
    let mut counts: Vec<u64> = Vec::new();
    for &v in values {
        let idx = bin_index(v, bin_width, start)?;
        if idx >= counts.len() {
            counts.resize(idx + 1, 0);
        }
        counts[idx] += 1;
    }
    Ok(Histogram {
        bin_width,
        start,
        counts,
        overflow: false,
    })
}

/// Histogram with exactly `max_bins` bins; the last one is an open-ended
/// overflow bin that captures the remainder.
pub fn build_histogram_capped(
    values: &[f64],
    bin_width: f64,
    start: f64,
    max_bins: usize,
) -> Result<Histogram> {
    if !(bin_width > 0.0) {
        return Err(TomoError::InvalidConfig("bin_width must be positive".into()));
    }
    if max_bins == 0 {
        return Err(TomoError::InvalidConfig("max_bins must be at least 1".into()));
    }
    let mut counts = vec![0u64; max_bins];
    for &v in values {
        let idx = bin_index(v, bin_width, start)?.min(max_bins - 1);
        counts[idx] += 1;
    }
    Ok(Histogram {
        bin_width,
        start,
        counts,
        overflow: true,
    })
}

/// Summary statistics for one method across a campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    /// Mean Hilbert-Schmidt distance to the true state.
    pub mean: f64,
    /// Population standard deviation of the per-experiment distances.
    pub std_dev: f64,
    pub histogram: Histogram,
    /// 100·(mean − mean_plain)/mean_plain; absent for the plain row or when
    /// the baseline is missing or zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_improvement_pct: Option<f64>,
    /// Same relative change for the standard deviation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_improvement_pct: Option<f64>,
}

/// Echo of the campaign parameters, written into the summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub povm: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_state: Option<String>,
    pub n_experiments: u64,
    pub n_shots: u64,
    pub methods: Vec<Method>,
    pub schedule: IterationSchedule,
    pub master_seed: u64,
    pub bin_width: f64,
    pub histogram_start: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_bins: Option<usize>,
}

/// Aggregated campaign result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub config: ConfigEcho,
    pub methods: Vec<MethodSummary>,
}

impl CampaignSummary {
    pub fn method(&self, method: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == method)
    }
}

/// Seed for one experiment's RNG stream, derived from the master seed and the
/// experiment index by a SplitMix64 mixing step. Fixed for reproducibility.
pub fn experiment_seed(master_seed: u64, index: u64) -> u64 {
    let mut z = master_seed.wrapping_add((index.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Multinomial draw of `n_shots` outcomes as independent inverse-CDF
/// categorical draws from a ChaCha8 stream seeded with `seed`. Deterministic
/// for a fixed seed.
pub fn sample_counts(probs: &ProbabilityVector, n_shots: u64, seed: u64) -> Vec<u64> {
    let n = probs.len();
    let total: f64 = probs.as_slice().iter().sum();
    let mut cdf = Vec::with_capacity(n);
    let mut acc = 0.0;
    for &p in probs.as_slice() {
        acc += p / total;
        cdf.push(acc);
    }
    let last_nonzero = probs
        .as_slice()
        .iter()
        .rposition(|&p| p > 0.0)
        .expect("probability vector sums to one");

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; n];
    for _ in 0..n_shots {
        let u: f64 = rng.random();
        let mut idx = last_nonzero;
        for (i, &c) in cdf.iter().enumerate() {
            if u < c {
                idx = i;
                break;
            }
        }
        counts[idx] += 1;
    }
    counts
}

fn run_method(
    method: Method,
    config: &CampaignConfig,
    freqs: &FrequencyVector,
    prior: &DensityMatrix,
) -> Result<EstimateRecord> {
    match method {
        Method::Plain => estimate_plain(&config.povm, freqs, prior),
        Method::Bayesian => estimate_bayesian(&config.povm, freqs, prior, &config.schedule),
        Method::Frequentist => estimate_frequentist(&config.povm, freqs, false),
    }
}

/// One experiment: sample counts once, run every requested method on them.
pub fn run_experiment(config: &CampaignConfig, index: u64) -> Result<ExperimentRecord> {
    let seed = experiment_seed(config.master_seed, index);
    let probs = born_probabilities(&config.true_state, &config.povm)?;
    let counts = sample_counts(&probs, config.n_shots, seed);
    let freqs = FrequencyVector::from_counts(counts.clone())?;
    let prior = DensityMatrix::maximally_mixed(config.povm.dim());
    let mut outcomes = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        let record = run_method(method, config, &freqs, &prior)?;
        let distance = hs_distance(&record.estimate, config.true_state.matrix())?;
        outcomes.push(MethodOutcome {
            method,
            hs_distance: distance,
            trace: record.trace,
            physical: record.physical,
        });
    }
    Ok(ExperimentRecord {
        index,
        seed,
        counts,
        outcomes,
    })
}

fn population_std_dev(values: &[f64], mean: f64) -> f64 {
    let n = values.len() as f64;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

fn relative_change_pct(value: f64, baseline: f64) -> Option<f64> {
    if baseline == 0.0 {
        None
    } else {
        Some(100.0 * (value - baseline) / baseline)
    }
}

/// Runs all experiments (in parallel) and aggregates per-method statistics.
/// Records come back ordered by experiment index regardless of execution
/// order, so a campaign is deterministic in (config, master_seed).
pub fn run_campaign(config: &CampaignConfig) -> Result<(CampaignSummary, Vec<ExperimentRecord>)> {
    config.validate()?;
    let records: Vec<ExperimentRecord> = (0..config.n_experiments)
        .into_par_iter()
        .map(|i| run_experiment(config, i))
        .collect::<Result<_>>()?;

    let mut summaries = Vec::with_capacity(config.methods.len());
    for (slot, &method) in config.methods.iter().enumerate() {
        let distances: Vec<f64> = records.iter().map(|r| r.outcomes[slot].hs_distance).collect();
        let mean = distances.iter().sum::<f64>() / distances.len() as f64;
        let std_dev = population_std_dev(&distances, mean);
        let histogram = match config.max_bins {
            Some(cap) => {
                build_histogram_capped(&distances, config.bin_width, config.histogram_start, cap)?
            }
            None => build_histogram(&distances, config.bin_width, config.histogram_start)?,
        };
        summaries.push(MethodSummary {
            method,
            mean,
            std_dev,
            histogram,
            mean_improvement_pct: None,
            sigma_improvement_pct: None,
        });
    }

    if let Some(baseline) = summaries
        .iter()
        .find(|s| s.method == Method::Plain)
        .map(|s| (s.mean, s.std_dev))
    {
        for summary in &mut summaries {
            if summary.method != Method::Plain {
                summary.mean_improvement_pct = relative_change_pct(summary.mean, baseline.0);
                summary.sigma_improvement_pct = relative_change_pct(summary.std_dev, baseline.1);
            }
        }
    }

    let summary = CampaignSummary {
        config: ConfigEcho {
            povm: None,
            true_state: None,
            n_experiments: config.n_experiments,
            n_shots: config.n_shots,
            methods: config.methods.clone(),
            schedule: config.schedule.clone(),
            master_seed: config.master_seed,
            bin_width: config.bin_width,
            histogram_start: config.histogram_start,
            max_bins: config.max_bins,
        },
        methods: summaries,
    };
    Ok((summary, records))
}
