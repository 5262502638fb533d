//! Complex-operator arithmetic, state and POVM validation, Born-rule
//! probabilities, and the Hilbert-Schmidt distance.
//!
//! All values are immutable after construction and safe to share between
//! threads. Estimated states are allowed to be non-positive; positivity is
//! tracked by a separate `physical` flag instead of being an invariant.

use nalgebra::DMatrix;

use crate::error::{PovmViolation, Result, TomoError};

pub type Complex64 = nalgebra::Complex<f64>;
pub type CMatrix = DMatrix<Complex64>;

/// Max entry deviation tolerated when checking Hermiticity of constructed values.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Tolerance on |Tr ρ - 1| for density matrices.
pub const TRACE_TOL: f64 = 1e-12;
/// Eigenvalue floor below which an operator counts as non-positive.
pub const EIGENVALUE_FLOOR: f64 = -1e-10;
/// Probabilities this far below zero are round-off and get clamped; beyond it they are errors.
pub const PROBABILITY_CLAMP_TOL: f64 = 1e-12;
/// Tolerance on |Σ p_i - 1| for probability vectors.
pub const PROBABILITY_SUM_TOL: f64 = 1e-10;
/// Max entry residual tolerated on Σ P_i = I.
pub const IDENTITY_SUM_TOL: f64 = 1e-10;

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn pauli_x() -> CMatrix {
    let o = Complex64::new(0.0, 0.0);
    let l = Complex64::new(1.0, 0.0);
    CMatrix::from_row_slice(2, 2, &[o, l, l, o])
}

pub fn pauli_y() -> CMatrix {
    let o = Complex64::new(0.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    CMatrix::from_row_slice(2, 2, &[o, -i, i, o])
}

pub fn pauli_z() -> CMatrix {
    let o = Complex64::new(0.0, 0.0);
    let l = Complex64::new(1.0, 0.0);
    CMatrix::from_row_slice(2, 2, &[l, o, o, -l])
}

/// Max over entries of |A_ij - conj(A_ji)|.
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut eig: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| a.total_cmp(b));
    eig
}

fn min_eigenvalue(m: &CMatrix) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// A d-dimensional state: Hermitian with unit trace. Positivity is not
/// required (linear estimates may dip below zero); the `physical` flag
/// records whether all eigenvalues are >= the eigenvalue floor.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    matrix: CMatrix,
    physical: bool,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(TomoError::DimensionMismatch {
                context: "density matrix (must be square)",
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let deviation = hermiticity_deviation(&matrix);
        if deviation > HERMITICITY_TOL {
            return Err(TomoError::NotHermitian { deviation });
        }
        let trace = matrix.trace();
        let trace_dev = (trace - Complex64::new(1.0, 0.0)).norm();
        if trace_dev > TRACE_TOL {
            return Err(TomoError::InvalidTrace {
                trace: trace.re,
                deviation: trace_dev,
            });
        }
        let physical = min_eigenvalue(&matrix) >= EIGENVALUE_FLOOR;
        Ok(Self {
            dim: matrix.nrows(),
            matrix,
            physical,
        })
    }

    /// The maximally mixed state I/d.
    pub fn maximally_mixed(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        let scale = Complex64::new(1.0 / dim as f64, 0.0);
        Self {
            dim,
            matrix: identity(dim) * scale,
            physical: true,
        }
    }

    /// Qubit state (I + x σ_x + y σ_y + z σ_z)/2. Bloch vectors with norm
    /// above 1 are accepted and come out flagged non-physical.
    pub fn from_bloch(x: f64, y: f64, z: f64) -> Result<Self> {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new((1.0 + z) / 2.0, 0.0),
                Complex64::new(x / 2.0, -y / 2.0),
                Complex64::new(x / 2.0, y / 2.0),
                Complex64::new((1.0 - z) / 2.0, 0.0),
            ],
        );
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn is_physical(&self) -> bool {
        self.physical
    }
}

/// An N-outcome measurement: positive operators resolving the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    dim: usize,
    elements: Vec<CMatrix>,
}

impl Povm {
    /// Validates the elements, collecting every violated condition.
    pub fn new(elements: Vec<CMatrix>) -> Result<Self> {
        if elements.is_empty() {
            return Err(TomoError::Empty("POVM element list"));
        }
        let dim = elements[0].nrows();
        let mut violations = Vec::new();
        let mut summable = true;
        for (index, el) in elements.iter().enumerate() {
            if el.nrows() != el.ncols() {
                violations.push(PovmViolation::NotSquare {
                    index,
                    rows: el.nrows(),
                    cols: el.ncols(),
                });
                summable = false;
                continue;
            }
            if el.nrows() != dim {
                violations.push(PovmViolation::WrongDimension {
                    index,
                    expected: dim,
                    found: el.nrows(),
                });
                summable = false;
                continue;
            }
            let deviation = hermiticity_deviation(el);
            if deviation > HERMITICITY_TOL {
                violations.push(PovmViolation::NotHermitian { index, deviation });
                continue;
            }
            let min_eigenvalue = min_eigenvalue(el);
            if min_eigenvalue < EIGENVALUE_FLOOR {
                violations.push(PovmViolation::NotPositive {
                    index,
                    min_eigenvalue,
                });
            }
        }
        if summable {
            let mut sum = CMatrix::zeros(dim, dim);
            for el in &elements {
                sum += el;
            }
            let residual = (sum - identity(dim))
                .iter()
                .map(|z| z.norm())
                .fold(0.0f64, f64::max);
            if residual > IDENTITY_SUM_TOL {
                violations.push(PovmViolation::IncompleteSum { residual });
            }
        }
        if !violations.is_empty() {
            return Err(TomoError::InvalidPovm(violations));
        }
        Ok(Self { dim, elements })
    }

    /// The six-outcome qubit POVM (I ± σ_i)/6, ordered (+x, -x, +y, -y, +z, -z).
    pub fn pauli_six() -> Self {
        let mut elements = Vec::with_capacity(6);
        let scale = Complex64::new(1.0 / 6.0, 0.0);
        for sigma in [pauli_x(), pauli_y(), pauli_z()] {
            elements.push((identity(2) + &sigma) * scale);
            elements.push((identity(2) - &sigma) * scale);
        }
        Self::new(elements).expect("six-outcome qubit POVM is valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_outcomes(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &CMatrix {
        &self.elements[i]
    }
}

/// Nonnegative reals summing to one. Entries within round-off below zero are
/// clamped to zero at construction; anything lower is rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    probs: Vec<f64>,
}

impl ProbabilityVector {
    pub fn new(raw: Vec<f64>) -> Result<Self> {
        if raw.is_empty() {
            return Err(TomoError::Empty("probability vector"));
        }
        for (i, &v) in raw.iter().enumerate() {
            if !v.is_finite() {
                return Err(TomoError::InvalidProbabilities {
                    reason: format!("entry {i} is not finite ({v})"),
                });
            }
            if v < -PROBABILITY_CLAMP_TOL {
                return Err(TomoError::InvalidProbabilities {
                    reason: format!("entry {i} is {v:.3e}, below -{PROBABILITY_CLAMP_TOL:.0e}"),
                });
            }
        }
        let probs: Vec<f64> = raw.into_iter().map(|v| v.max(0.0)).collect();
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROBABILITY_SUM_TOL {
            return Err(TomoError::InvalidProbabilities {
                reason: format!("entries sum to {sum}, not 1"),
            });
        }
        Ok(Self { probs })
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "need at least one outcome");
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }
}

/// Born-rule outcome probabilities p(i|ρ) = Tr[ρ P_i].
pub fn born_probabilities(state: &DensityMatrix, povm: &Povm) -> Result<ProbabilityVector> {
    if state.dim() != povm.dim() {
        return Err(TomoError::DimensionMismatch {
            context: "born_probabilities",
            expected: povm.dim(),
            found: state.dim(),
        });
    }
    let raw = born_raw(state.matrix(), povm);
    for (i, p) in raw.iter().enumerate() {
        if p.im.abs() > HERMITICITY_TOL {
            return Err(TomoError::Internal(format!(
                "Tr[ρ P_{i}] has imaginary part {:.3e}",
                p.im
            )));
        }
    }
    ProbabilityVector::new(raw.into_iter().map(|p| p.re).collect())
}

/// Tr[ρ P_i] without the probability-vector invariants; used where iterates
/// may be non-positive.
pub(crate) fn born_raw(state: &CMatrix, povm: &Povm) -> Vec<Complex64> {
    povm.elements().iter().map(|p| (state * p).trace()).collect()
}

/// Ensemble average Tr[X ρ].
pub fn expectation(state: &DensityMatrix, observable: &CMatrix) -> Result<Complex64> {
    if observable.nrows() != observable.ncols() {
        return Err(TomoError::DimensionMismatch {
            context: "expectation (observable must be square)",
            expected: observable.nrows(),
            found: observable.ncols(),
        });
    }
    if observable.nrows() != state.dim() {
        return Err(TomoError::DimensionMismatch {
            context: "expectation",
            expected: state.dim(),
            found: observable.nrows(),
        });
    }
    Ok((observable * state.matrix()).trace())
}

/// Hilbert-Schmidt distance sqrt(Tr[(a-b)²]) between Hermitian matrices.
pub fn hs_distance(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() || a.nrows() != a.ncols() {
        return Err(TomoError::DimensionMismatch {
            context: "hs_distance",
            expected: a.nrows(),
            found: b.nrows(),
        });
    }
    for m in [a, b] {
        let deviation = hermiticity_deviation(m);
        if deviation > 1e-10 {
            return Err(TomoError::NotHermitian { deviation });
        }
    }
    // For Hermitian difference D, Tr[D²] = ‖D‖_F².
    Ok((a - b).norm())
}

/// (Tr[ρσ_x], Tr[ρσ_y], Tr[ρσ_z]) of a qubit state.
pub fn bloch_from_state(state: &DensityMatrix) -> Result<[f64; 3]> {
    if state.dim() != 2 {
        return Err(TomoError::DimensionMismatch {
            context: "bloch_from_state",
            expected: 2,
            found: state.dim(),
        });
    }
    let mut out = [0.0; 3];
    for (k, sigma) in [pauli_x(), pauli_y(), pauli_z()].iter().enumerate() {
        out[k] = expectation(state, sigma)?.re;
    }
    Ok(out)
}
