//! The three strategies that turn outcome frequencies into a state estimate.
//!
//! - plain: one reconstruction with duals optimized for a fixed prior state
//!   (maximally mixed by default), no update;
//! - Bayesian: alternate between reconstructing the state and re-optimizing
//!   the duals for the reconstructed state's outcome probabilities;
//! - frequentist: duals whose minimum-norm weight is the observed frequency
//!   vector itself, nonlinear in the data.
//!
//! All estimates stay Hermitian. Plain and Bayesian estimates keep unit
//! trace; frequentist estimates generally do not, and are reported
//! un-normalized unless explicitly asked otherwise.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TomoError};
use crate::frame::{DualSet, FrameMap};
use crate::operators::{
    born_probabilities, born_raw, hermitian_eigenvalues, hs_distance, CMatrix, DensityMatrix,
    Povm, ProbabilityVector, EIGENVALUE_FLOOR, HERMITICITY_TOL,
};

/// Estimation method tag, also used as the key in files and on the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "plain")]
    Plain,
    #[serde(rename = "bayes")]
    Bayesian,
    #[serde(rename = "freq")]
    Frequentist,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Plain, Method::Bayesian, Method::Frequentist];

    /// Short key used in file names, CSV columns, and CLI flags.
    pub fn key(self) -> &'static str {
        match self {
            Method::Plain => "plain",
            Method::Bayesian => "bayes",
            Method::Frequentist => "freq",
        }
    }

    /// Human-readable name used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            Method::Plain => "Plain",
            Method::Bayesian => "Bayesian",
            Method::Frequentist => "Frequentist",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(Method::Plain),
            "bayes" => Ok(Method::Bayesian),
            "freq" => Ok(Method::Frequentist),
            other => Err(TomoError::InvalidConfig(format!(
                "unknown method `{other}` (expected plain, bayes, or freq)"
            ))),
        }
    }
}

/// Observed outcome counts with their total and derived frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyVector {
    counts: Vec<u64>,
    total: u64,
}

impl FrequencyVector {
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(TomoError::Empty("counts vector"));
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(TomoError::InvalidConfig(
                "counts vector sums to zero".into(),
            ));
        }
        Ok(Self { counts, total })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// ν_i = counts_i / total.
    pub fn frequencies(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| c as f64 / self.total as f64)
            .collect()
    }

    pub fn to_probabilities(&self) -> Result<ProbabilityVector> {
        ProbabilityVector::new(self.frequencies())
    }
}

/// Stopping rule for the Bayesian loop. `tolerance == 0` means fixed-count
/// mode: exactly `max_iterations` iterations run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IterationSchedule {
    pub max_iterations: usize,
    /// Stop once the Hilbert-Schmidt step between iterates is at most this.
    pub tolerance: f64,
    /// Negative intermediate probabilities are clamped up to this value.
    pub probability_floor: f64,
}

impl Default for IterationSchedule {
    fn default() -> Self {
        Self {
            max_iterations: 10,
            tolerance: 0.0,
            probability_floor: 1e-12,
        }
    }
}

impl IterationSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(TomoError::InvalidConfig(
                "max_iterations must be at least 1".into(),
            ));
        }
        if !(self.tolerance >= 0.0) {
            return Err(TomoError::InvalidConfig(
                "tolerance must be nonnegative".into(),
            ));
        }
        if !(self.probability_floor >= 0.0) {
            return Err(TomoError::InvalidConfig(
                "probability_floor must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// A state estimate with its bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRecord {
    pub method: Method,
    /// Hermitian d×d estimate; trace may deviate from 1 only for frequentist.
    pub estimate: CMatrix,
    pub trace: f64,
    /// True when every eigenvalue is above the eigenvalue floor.
    pub physical: bool,
    pub iterations_used: usize,
    /// Hilbert-Schmidt step per Bayesian iteration; empty for one-pass methods.
    pub hs_steps: Vec<f64>,
    /// Number of intermediate probabilities clamped up to the floor.
    pub clamped_probability_events: usize,
    /// Iterations whose probability vector collapsed entirely to the floor.
    pub uniform_fallbacks: usize,
}

impl EstimateRecord {
    fn from_estimate(method: Method, estimate: CMatrix) -> Self {
        let trace = estimate.trace().re;
        let physical = hermitian_eigenvalues(&estimate)
            .first()
            .is_some_and(|&min| min >= EIGENVALUE_FLOOR);
        Self {
            method,
            estimate,
            trace,
            physical,
            iterations_used: 1,
            hs_steps: Vec::new(),
            clamped_probability_events: 0,
            uniform_fallbacks: 0,
        }
    }
}

/// Linear reconstruction Σ_i ν_i D_i.
pub fn reconstruct(duals: &DualSet, freqs: &FrequencyVector) -> Result<CMatrix> {
    if freqs.len() != duals.n_outcomes() {
        return Err(TomoError::LengthMismatch {
            context: "reconstruction frequencies",
            expected: duals.n_outcomes(),
            found: freqs.len(),
        });
    }
    let d = duals.dim();
    let mut acc = CMatrix::zeros(d, d);
    for (nu, op) in freqs.frequencies().into_iter().zip(duals.operators()) {
        if nu != 0.0 {
            acc += op * crate::operators::Complex64::new(nu, 0.0);
        }
    }
    Ok(acc)
}

fn check_estimation_inputs(povm: &Povm, freqs: &FrequencyVector) -> Result<()> {
    if freqs.len() != povm.n_outcomes() {
        return Err(TomoError::LengthMismatch {
            context: "outcome counts",
            expected: povm.n_outcomes(),
            found: freqs.len(),
        });
    }
    Ok(())
}

/// One-pass reconstruction with duals optimized for the prior state.
pub fn estimate_plain(
    povm: &Povm,
    freqs: &FrequencyVector,
    prior_state: &DensityMatrix,
) -> Result<EstimateRecord> {
    check_estimation_inputs(povm, freqs)?;
    let frame = FrameMap::build(povm);
    let prior_probs = born_probabilities(prior_state, povm)?;
    let (duals, _) = frame.optimal_duals(&prior_probs)?;
    let estimate = reconstruct(&duals, freqs)?;
    Ok(EstimateRecord::from_estimate(Method::Plain, estimate))
}

/// Clamp negative entries up to the floor and renormalize. Returns the
/// weight, how many entries were clamped, and whether the whole vector
/// collapsed to the floor (uniform fallback).
fn clamp_probabilities(raw: &[f64], floor: f64) -> (Vec<f64>, usize, bool) {
    let clamped = raw.iter().filter(|&&v| v < 0.0).count();
    if raw.iter().all(|&v| v <= 0.0) {
        let n = raw.len();
        return (vec![1.0 / n as f64; n], clamped, true);
    }
    let floor = floor.max(0.0);
    let mut w: Vec<f64> = raw.iter().map(|&v| if v < 0.0 { floor } else { v }).collect();
    let sum: f64 = w.iter().sum();
    for v in &mut w {
        *v /= sum;
    }
    (w, clamped, false)
}

/// Iterative estimation: re-derive the outcome probabilities from the current
/// iterate, rebuild the minimum-norm duals for them, reconstruct, and repeat
/// until the Hilbert-Schmidt step falls within tolerance or the iteration
/// budget runs out.
pub fn estimate_bayesian(
    povm: &Povm,
    freqs: &FrequencyVector,
    prior_state: &DensityMatrix,
    schedule: &IterationSchedule,
) -> Result<EstimateRecord> {
    check_estimation_inputs(povm, freqs)?;
    schedule.validate()?;
    if prior_state.dim() != povm.dim() {
        return Err(TomoError::DimensionMismatch {
            context: "bayesian prior",
            expected: povm.dim(),
            found: prior_state.dim(),
        });
    }
    let frame = FrameMap::build(povm);
    let mut current = prior_state.matrix().clone();
    let mut hs_steps = Vec::new();
    let mut clamped_events = 0;
    let mut uniform_fallbacks = 0;
    let mut iterations_used = 0;

    for _ in 0..schedule.max_iterations {
        let raw: Vec<f64> = born_raw(&current, povm)
            .into_iter()
            .map(|p| {
                debug_assert!(p.im.abs() < HERMITICITY_TOL * 1e3);
                p.re
            })
            .collect();
        let (weight, clamped, fell_back) =
            clamp_probabilities(&raw, schedule.probability_floor);
        clamped_events += clamped;
        if fell_back {
            uniform_fallbacks += 1;
        }
        let pi = ProbabilityVector::new(weight).map_err(|e| {
            TomoError::Internal(format!("clamped probabilities still invalid: {e}"))
        })?;
        let (duals, _) = frame.optimal_duals(&pi)?;
        let next = reconstruct(&duals, freqs)?;
        let step = hs_distance(&next, &current)?;
        hs_steps.push(step);
        current = next;
        iterations_used += 1;
        if schedule.tolerance > 0.0 && step <= schedule.tolerance {
            break;
        }
    }

    let mut record = EstimateRecord::from_estimate(Method::Bayesian, current);
    record.iterations_used = iterations_used;
    record.hs_steps = hs_steps;
    record.clamped_probability_events = clamped_events;
    record.uniform_fallbacks = uniform_fallbacks;
    Ok(record)
}

/// Reconstruction with duals whose minimum-norm weight is the observed
/// frequency vector. The trace constraint is lost; the estimate is reported
/// un-normalized unless `renormalize` is set (which divides by the trace
/// when it is safely away from zero).
pub fn estimate_frequentist(
    povm: &Povm,
    freqs: &FrequencyVector,
    renormalize: bool,
) -> Result<EstimateRecord> {
    check_estimation_inputs(povm, freqs)?;
    let frame = FrameMap::build(povm);
    let nu = freqs.to_probabilities()?;
    let (duals, _) = frame.frequentist_duals(&nu)?;
    let mut estimate = reconstruct(&duals, freqs)?;
    if renormalize {
        let trace = estimate.trace().re;
        if trace.abs() > 1e-6 {
            estimate /= crate::operators::Complex64::new(trace, 0.0);
        }
    }
    Ok(EstimateRecord::from_estimate(Method::Frequentist, estimate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{identity, pauli_x, Complex64};

    fn test_state() -> DensityMatrix {
        DensityMatrix::from_bloch(2.0 / 7.0, -2.0 / 3.0, 3.0 / 5.0).unwrap()
    }

    /// Counts proportional to the exact outcome probabilities of the test
    /// state: p = (3/14, 5/42, 1/18, 5/18, 4/15, 1/15) over denominator 630.
    fn exact_counts() -> FrequencyVector {
        FrequencyVector::from_counts(vec![135, 75, 35, 175, 168, 42]).unwrap()
    }

    fn max_entry(m: &CMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0f64, f64::max)
    }

    #[test]
    fn exact_counts_match_probabilities() {
        let povm = Povm::pauli_six();
        let p = born_probabilities(&test_state(), &povm).unwrap();
        for (nu, pi) in exact_counts().frequencies().iter().zip(p.as_slice()) {
            assert!((nu - pi).abs() < 1e-15);
        }
    }

    #[test]
    fn reconstruct_uniform_counts_gives_maximally_mixed() {
        let frame = FrameMap::build(&Povm::pauli_six());
        let (duals, _, _) = frame.canonical_duals();
        let freqs = FrequencyVector::from_counts(vec![7; 6]).unwrap();
        let est = reconstruct(&duals, &freqs).unwrap();
        assert!(max_entry(&(est - DensityMatrix::maximally_mixed(2).matrix())) < 1e-14);
    }

    #[test]
    fn reconstruct_exact_frequencies_recovers_state() {
        let frame = FrameMap::build(&Povm::pauli_six());
        let (duals, _, _) = frame.canonical_duals();
        let est = reconstruct(&duals, &exact_counts()).unwrap();
        assert!(max_entry(&(est - test_state().matrix())) < 1e-12);
    }

    #[test]
    fn reconstruct_single_outcome_counts() {
        let frame = FrameMap::build(&Povm::pauli_six());
        let (duals, _, _) = frame.canonical_duals();
        let freqs = FrequencyVector::from_counts(vec![1, 0, 0, 0, 0, 0]).unwrap();
        let est = reconstruct(&duals, &freqs).unwrap();
        let expected = identity(2) * Complex64::new(0.5, 0.0) + pauli_x() * Complex64::new(1.5, 0.0);
        assert!(max_entry(&(&est - expected)) < 1e-14);
        let record = EstimateRecord::from_estimate(Method::Plain, est);
        assert!((record.trace - 1.0).abs() < 1e-12);
        assert!(!record.physical);
    }

    #[test]
    fn plain_recovers_state_from_exact_frequencies() {
        let povm = Povm::pauli_six();
        let prior = DensityMatrix::maximally_mixed(2);
        let record = estimate_plain(&povm, &exact_counts(), &prior).unwrap();
        assert!(max_entry(&(&record.estimate - test_state().matrix())) < 1e-12);
        assert!((record.trace - 1.0).abs() < 1e-12);
    }

    #[test]
    fn plain_uniform_counts_gives_prior() {
        let povm = Povm::pauli_six();
        let prior = DensityMatrix::maximally_mixed(2);
        let freqs = FrequencyVector::from_counts(vec![3; 6]).unwrap();
        let record = estimate_plain(&povm, &freqs, &prior).unwrap();
        assert!(max_entry(&(&record.estimate - prior.matrix())) < 1e-14);
    }

    #[test]
    fn bayesian_fixed_point_on_exact_frequencies() {
        let povm = Povm::pauli_six();
        let prior = DensityMatrix::maximally_mixed(2);
        let schedule = IterationSchedule::default();
        let record = estimate_bayesian(&povm, &exact_counts(), &prior, &schedule).unwrap();
        assert_eq!(record.iterations_used, 10);
        assert!(max_entry(&(&record.estimate - test_state().matrix())) < 1e-10);
        // first step reaches the state, later steps are numerically zero
        assert!(record.hs_steps[0] > 0.1);
        for step in &record.hs_steps[1..] {
            assert!(*step < 1e-12);
        }
        assert_eq!(record.clamped_probability_events, 0);
        assert_eq!(record.uniform_fallbacks, 0);
    }

    #[test]
    fn bayesian_uniform_frequencies_stay_at_prior() {
        let povm = Povm::pauli_six();
        let prior = DensityMatrix::maximally_mixed(2);
        let freqs = FrequencyVector::from_counts(vec![5; 6]).unwrap();
        let record = estimate_bayesian(&povm, &freqs, &prior, &IterationSchedule::default()).unwrap();
        assert!(max_entry(&(&record.estimate - prior.matrix())) < 1e-13);
        assert!(record.hs_steps.iter().all(|s| *s < 1e-13));
    }

    #[test]
    fn bayesian_tolerance_stops_early() {
        let povm = Povm::pauli_six();
        let prior = DensityMatrix::maximally_mixed(2);
        let schedule = IterationSchedule {
            tolerance: 1e-9,
            ..IterationSchedule::default()
        };
        let record = estimate_bayesian(&povm, &exact_counts(), &prior, &schedule).unwrap();
        // step 1 moves to the state, step 2 is zero and triggers the stop
        assert_eq!(record.iterations_used, 2);
        assert_eq!(record.hs_steps.len(), 2);
    }

    #[test]
    fn bayesian_clamps_negative_intermediate_probabilities() {
        let povm = Povm::pauli_six();
        let prior = DensityMatrix::maximally_mixed(2);
        // All shots on one outcome: iterates leave the physical set and some
        // Tr[P_i ρ] go negative.
        let freqs = FrequencyVector::from_counts(vec![50, 0, 0, 0, 0, 0]).unwrap();
        let record = estimate_bayesian(&povm, &freqs, &prior, &IterationSchedule::default()).unwrap();
        assert!(record.clamped_probability_events > 0);
        assert!((record.trace - 1.0).abs() < 1e-10);
        let dev = crate::operators::hermiticity_deviation(&record.estimate);
        assert!(dev < 1e-10);
    }

    #[test]
    fn frequentist_recovers_state_from_exact_frequencies() {
        let povm = Povm::pauli_six();
        let record = estimate_frequentist(&povm, &exact_counts(), false).unwrap();
        assert!(max_entry(&(&record.estimate - test_state().matrix())) < 1e-10);
    }

    #[test]
    fn frequentist_uniform_counts_is_maximally_mixed() {
        let povm = Povm::pauli_six();
        let freqs = FrequencyVector::from_counts(vec![9; 6]).unwrap();
        let record = estimate_frequentist(&povm, &freqs, false).unwrap();
        assert!(max_entry(&(&record.estimate - DensityMatrix::maximally_mixed(2).matrix())) < 1e-13);
        assert!((record.trace - 1.0).abs() < 1e-13);

        // and equals plain on the same uniform data
        let plain = estimate_plain(&povm, &freqs, &DensityMatrix::maximally_mixed(2)).unwrap();
        assert!(max_entry(&(&record.estimate - &plain.estimate)) < 1e-12);
    }

    #[test]
    fn frequentist_renormalize_divides_by_trace() {
        let povm = Povm::pauli_six();
        let freqs = FrequencyVector::from_counts(vec![300, 150, 100, 250, 150, 50]).unwrap();
        let raw = estimate_frequentist(&povm, &freqs, false).unwrap();
        let renorm = estimate_frequentist(&povm, &freqs, true).unwrap();
        assert!((raw.trace - 1.0).abs() > 1e-9);
        assert!((renorm.trace - 1.0).abs() < 1e-12);
    }

    #[test]
    fn frequency_vector_checks() {
        assert!(FrequencyVector::from_counts(vec![]).is_err());
        assert!(FrequencyVector::from_counts(vec![0, 0]).is_err());
        let fv = FrequencyVector::from_counts(vec![1, 3]).unwrap();
        assert_eq!(fv.total(), 4);
        let s: f64 = fv.frequencies().iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn method_keys_round_trip() {
        for m in Method::ALL {
            assert_eq!(Method::parse(m.key()).unwrap(), m);
        }
        assert!(Method::parse("bogus").is_err());
    }
}
