//! Seeded generators shared by the integration suites.

#![allow(dead_code)]

use ictomo::operators::{CMatrix, Complex64, DensityMatrix, Povm, ProbabilityVector};
use ictomo::FrequencyVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0)
    })
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix {
    let a = random_complex_matrix(rng, dim, dim);
    (&a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

/// A A† + 0.05 I, normalized to unit trace: always physical, never singular.
pub fn random_density(rng: &mut ChaCha8Rng, dim: usize) -> DensityMatrix {
    let a = random_complex_matrix(rng, dim, dim);
    let mut g = &a * a.adjoint();
    for i in 0..dim {
        g[(i, i)] += Complex64::new(0.05, 0.0);
    }
    let trace = g.trace().re;
    DensityMatrix::new(g / Complex64::new(trace, 0.0)).expect("construction keeps invariants")
}

fn hermitian_inv_sqrt(m: &CMatrix) -> CMatrix {
    let eig = m.clone().symmetric_eigen();
    let dim = m.nrows();
    let diag = CMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            Complex64::new(1.0 / eig.eigenvalues[i].sqrt(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    &eig.eigenvectors * diag * eig.eigenvectors.adjoint()
}

/// Random positive operators pushed through S^{-1/2} · S^{-1/2} so they
/// resolve the identity.
pub fn random_povm(rng: &mut ChaCha8Rng, dim: usize, n_outcomes: usize) -> Povm {
    let parts: Vec<CMatrix> = (0..n_outcomes)
        .map(|_| {
            let a = random_complex_matrix(rng, dim, dim);
            let mut g = &a * a.adjoint();
            for i in 0..dim {
                g[(i, i)] += Complex64::new(1e-6, 0.0);
            }
            g
        })
        .collect();
    let mut sum = CMatrix::zeros(dim, dim);
    for p in &parts {
        sum += p;
    }
    let w = hermitian_inv_sqrt(&sum);
    let elements = parts.into_iter().map(|g| &w * g * &w).collect();
    Povm::new(elements).expect("normalized positive operators form a POVM")
}

/// Strictly positive probabilities, entries at least ~0.05/n before
/// normalization.
pub fn random_positive_probs(rng: &mut ChaCha8Rng, n: usize) -> ProbabilityVector {
    let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 0.95 + 0.05).collect();
    let sum: f64 = raw.iter().sum();
    ProbabilityVector::new(raw.into_iter().map(|v| v / sum).collect()).unwrap()
}

/// Counts encoding the given probabilities on a 2^50 grid, so the derived
/// frequencies match them to ~1e-15.
pub fn counts_from_probabilities(probs: &ProbabilityVector) -> FrequencyVector {
    let scale = (1u64 << 50) as f64;
    let counts: Vec<u64> = probs
        .as_slice()
        .iter()
        .map(|&p| (p * scale).round() as u64)
        .collect();
    FrequencyVector::from_counts(counts).expect("nonzero totals")
}

pub fn max_entry(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0f64, f64::max)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.norm()
}
