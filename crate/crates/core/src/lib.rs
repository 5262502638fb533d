//! Quantum state reconstruction from informationally complete POVM
//! statistics.
//!
//! The crate builds the frame map of a POVM, derives reconstruction kernels
//! from generalized inverses (Moore-Penrose and weighted minimum-norm), and
//! offers three ways to process measured frequencies into a state estimate:
//! plain one-pass inversion, an iterative scheme that re-optimizes the
//! kernels for the current estimate, and a frequency-weighted inversion.
//! A Monte Carlo harness measures how fast each estimate converges to the
//! true state in Hilbert-Schmidt distance over repeated experiments.

pub mod error;
pub mod estimators;
pub mod frame;
pub mod io;
pub mod montecarlo;
pub mod operators;

pub use error::{Result, TomoError};
pub use estimators::{
    estimate_bayesian, estimate_frequentist, estimate_plain, reconstruct, EstimateRecord,
    FrequencyVector, IterationSchedule, Method,
};
pub use frame::{moore_penrose, DualSet, FrameMap, GInverse, ProjectorM, Provenance};
pub use montecarlo::{
    build_histogram, build_histogram_capped, run_campaign, run_experiment, sample_counts,
    CampaignConfig, CampaignSummary, ExperimentRecord, Histogram, MethodOutcome, MethodSummary,
};
pub use operators::{
    bloch_from_state, born_probabilities, expectation, hs_distance, CMatrix, Complex64,
    DensityMatrix, Povm, ProbabilityVector,
};
