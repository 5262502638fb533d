//! The frame map of a POVM and its generalized inverses.
//!
//! A POVM defines a linear map Λ from coefficient vectors to operators,
//! Λc = Σ c_i P_i, with matrix elements Λ_{mn,i} = (P_i)_{mn} in the fixed
//! row-major vectorization (m,n) → m·d + n. Any g-inverse Γ (ΛΓΛ = Λ)
//! defines reconstruction kernels D_i with (D_i)_{mn} = conj(Γ_{i,mn}), so
//! that ρ = Σ_i Tr[ρ P_i] D_i whenever the POVM is informationally complete.
//!
//! Three dual families are built here:
//! - canonical: rows of the Moore-Penrose pseudoinverse Γ_mp;
//! - weighted minimum-norm for a prior probability vector π, minimizing
//!   Σ_i |c_i|² π_i, via Γ_π = Γ_mp − [(I−M)π(I−M)]^‡ π M Γ_mp with
//!   M = Γ_mp Λ;
//! - the same construction with observed frequencies ν in place of π.

use nalgebra::DVector;

use crate::error::{Result, TomoError};
use crate::operators::{CMatrix, Complex64, Povm, ProbabilityVector};

/// Row-major vectorization: entry (m,n) lands at index m·d + n.
pub fn vectorize(m: &CMatrix) -> DVector<Complex64> {
    let d = m.nrows();
    assert_eq!(d, m.ncols(), "vectorize expects a square matrix");
    DVector::from_fn(d * d, |k, _| m[(k / d, k % d)])
}

/// Inverse of [`vectorize`]; `v` must have length `dim²`.
pub fn devectorize(v: &DVector<Complex64>, dim: usize) -> CMatrix {
    assert_eq!(v.len(), dim * dim, "vector length must be dim²");
    CMatrix::from_fn(dim, dim, |m, n| v[m * dim + n])
}

/// One-sided Jacobi SVD: m = u · diag(sigma) · v†, with sigma descending and
/// k = min(rows, cols) columns in u and v. Left columns belonging to zero
/// singular values are zero. Jacobi converges on every matrix and keeps full
/// accuracy on the rank-deficient projector products this crate feeds it.
fn jacobi_svd(m: &CMatrix) -> (CMatrix, Vec<f64>, CMatrix) {
    let (rows, cols) = (m.nrows(), m.ncols());
    if rows < cols {
        let (u, sigma, v) = jacobi_svd(&m.adjoint());
        return (v, sigma, u);
    }
    let mut w = m.clone();
    let mut v = CMatrix::identity(cols, cols);
    let eps = f64::EPSILON;
    for _sweep in 0..64 {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = Complex64::new(0.0, 0.0);
                for i in 0..rows {
                    let wp = w[(i, p)];
                    let wq = w[(i, q)];
                    app += wp.norm_sqr();
                    aqq += wq.norm_sqr();
                    apq += wp.conj() * wq;
                }
                if apq.norm_sqr() <= eps * eps * app * aqq {
                    continue;
                }
                rotated = true;
                let abs_apq = apq.norm();
                let phase = apq / abs_apq;
                let tau = (aqq - app) / (2.0 * abs_apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let cos = 1.0 / (1.0 + t * t).sqrt();
                let sin = cos * t;
                let (cs, sn) = (Complex64::new(cos, 0.0), Complex64::new(sin, 0.0));
                for i in 0..rows {
                    let wp = w[(i, p)];
                    let wq = w[(i, q)];
                    w[(i, p)] = wp * cs - wq * phase.conj() * sn;
                    w[(i, q)] = wp * phase * sn + wq * cs;
                }
                for i in 0..cols {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = vp * cs - vq * phase.conj() * sn;
                    v[(i, q)] = vp * phase * sn + vq * cs;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..cols).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));

    let mut u = CMatrix::zeros(rows, cols);
    let mut v_sorted = CMatrix::zeros(cols, cols);
    let mut sigma = Vec::with_capacity(cols);
    for (slot, &j) in order.iter().enumerate() {
        let s = norms[j];
        sigma.push(s);
        if s > 0.0 {
            let scale = Complex64::new(1.0 / s, 0.0);
            for i in 0..rows {
                u[(i, slot)] = w[(i, j)] * scale;
            }
        }
        for i in 0..cols {
            v_sorted[(i, slot)] = v[(i, j)];
        }
    }
    (u, sigma, v_sorted)
}

fn pseudo_inverse_impl(m: &CMatrix, cutoff_of: impl Fn(f64) -> f64) -> (CMatrix, usize) {
    let (u, sigma, v) = jacobi_svd(m);
    let sigma_max = sigma.first().copied().unwrap_or(0.0);
    let cutoff = cutoff_of(sigma_max);
    let k = sigma.len();
    let mut rank = 0;
    let mut sigma_pinv = CMatrix::zeros(k, k);
    for (i, &s) in sigma.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            sigma_pinv[(i, i)] = Complex64::new(1.0 / s, 0.0);
            rank += 1;
        }
    }
    (v * sigma_pinv * u.adjoint(), rank)
}

fn svd_pseudo_inverse(m: &CMatrix, rel_tol: Option<f64>) -> (CMatrix, usize) {
    let rel = rel_tol.unwrap_or(m.nrows().max(m.ncols()) as f64 * f64::EPSILON);
    pseudo_inverse_impl(m, |sigma_max| rel * sigma_max)
}

/// Moore-Penrose pseudoinverse by SVD, inverting only singular values above
/// `rel_tol` times the largest one. `None` uses max(rows, cols)·ε. A zero
/// matrix pseudoinverts to the (transposed) zero matrix.
pub fn moore_penrose(m: &CMatrix, rel_tol: Option<f64>) -> CMatrix {
    svd_pseudo_inverse(m, rel_tol).0
}

/// Which weight a dual set minimizes the coefficient norm under.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    /// Moore-Penrose rows: minimum Euclidean norm.
    Canonical,
    /// Minimum norm under a prior probability weight.
    Optimal { weight: Vec<f64> },
    /// Minimum norm under an observed frequency weight.
    Frequentist { weight: Vec<f64> },
}

impl Provenance {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Canonical => "canonical",
            Self::Optimal { .. } => "optimal",
            Self::Frequentist { .. } => "frequentist",
        }
    }
}

/// A g-inverse Γ of the frame map, with the weight (if any) under which it
/// is minimum-norm. `weight: None` marks the unweighted Moore-Penrose case.
#[derive(Debug, Clone, PartialEq)]
pub struct GInverse {
    matrix: CMatrix,
    weight: Option<Vec<f64>>,
}

impl GInverse {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn weight(&self) -> Option<&[f64]> {
        self.weight.as_deref()
    }
}

/// The projector M = Γ_mp Λ onto the orthogonal complement of ker Λ.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorM {
    matrix: CMatrix,
}

impl ProjectorM {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Tr M, which equals the rank of the frame map.
    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }
}

/// Reconstruction kernels D_i derived from a g-inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSet {
    dim: usize,
    operators: Vec<CMatrix>,
    provenance: Provenance,
}

impl DualSet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_outcomes(&self) -> usize {
        self.operators.len()
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    pub fn operator(&self, i: usize) -> &CMatrix {
        &self.operators[i]
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Expansion coefficients f_i[X] = Tr[D_i† X], without checking that X
    /// lies in the span of the POVM elements.
    pub fn coefficients(&self, x: &CMatrix) -> Result<Vec<Complex64>> {
        if x.nrows() != self.dim || x.ncols() != self.dim {
            return Err(TomoError::DimensionMismatch {
                context: "expansion coefficients",
                expected: self.dim,
                found: x.nrows(),
            });
        }
        Ok(self
            .operators
            .iter()
            .map(|d| {
                let mut f = Complex64::new(0.0, 0.0);
                for m in 0..self.dim {
                    for n in 0..self.dim {
                        f += d[(m, n)].conj() * x[(m, n)];
                    }
                }
                f
            })
            .collect())
    }

    /// Weighted statistical error Σ_i |f_i[X]|² w_i.
    pub fn statistical_error(&self, x: &CMatrix, weights: &ProbabilityVector) -> Result<f64> {
        if weights.len() != self.n_outcomes() {
            return Err(TomoError::LengthMismatch {
                context: "statistical error weights",
                expected: self.n_outcomes(),
                found: weights.len(),
            });
        }
        let coeffs = self.coefficients(x)?;
        Ok(coeffs
            .iter()
            .zip(weights.as_slice())
            .map(|(f, w)| f.norm_sqr() * w)
            .sum())
    }
}

/// The frame map Λ of a POVM (d² × N, column i = vec P_i), together with its
/// Moore-Penrose pseudoinverse and the projector M computed once at build
/// time. Immutable; safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMap {
    dim: usize,
    n_outcomes: usize,
    matrix: CMatrix,
    pinv: CMatrix,
    projector: CMatrix,
    rank: usize,
}

impl FrameMap {
    pub fn build(povm: &Povm) -> Self {
        let dim = povm.dim();
        let n = povm.n_outcomes();
        let mut matrix = CMatrix::zeros(dim * dim, n);
        for (i, p) in povm.elements().iter().enumerate() {
            matrix.set_column(i, &vectorize(p));
        }
        let (pinv, rank) = svd_pseudo_inverse(&matrix, None);
        let projector = &pinv * &matrix;
        Self {
            dim,
            n_outcomes: n,
            matrix,
            pinv,
            projector,
            rank,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_outcomes(&self) -> usize {
        self.n_outcomes
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// True when the POVM elements span the full operator space (rank d²).
    pub fn is_info_complete(&self) -> bool {
        self.rank == self.dim * self.dim
    }

    fn duals_from_rows(&self, gamma: &CMatrix, provenance: Provenance) -> DualSet {
        let operators = (0..self.n_outcomes)
            .map(|i| {
                let row = gamma.row(i).transpose().map(|z| z.conj());
                devectorize(&row, self.dim)
            })
            .collect();
        DualSet {
            dim: self.dim,
            operators,
            provenance,
        }
    }

    /// Duals of the Moore-Penrose pseudoinverse, the pseudoinverse itself,
    /// and the projector M = Γ_mp Λ.
    pub fn canonical_duals(&self) -> (DualSet, GInverse, ProjectorM) {
        let duals = self.duals_from_rows(&self.pinv, Provenance::Canonical);
        let ginv = GInverse {
            matrix: self.pinv.clone(),
            weight: None,
        };
        let projector = ProjectorM {
            matrix: self.projector.clone(),
        };
        (duals, ginv, projector)
    }

    fn weighted_ginverse(&self, w: &[f64]) -> CMatrix {
        let n = self.n_outcomes;
        let wm = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(w[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let q = CMatrix::identity(n, n) - &self.projector;
        // The cutoff for [(I−M)w(I−M)]^‡ is anchored to the weight's own
        // scale: when ker Λ is trivial the product is pure round-off and a
        // cutoff relative to its σ_max would invert noise.
        let w_max = w.iter().copied().fold(0.0f64, f64::max);
        let rel = n as f64 * f64::EPSILON;
        let core = pseudo_inverse_impl(&(&q * &wm * &q), |sigma_max| {
            rel * sigma_max.max(w_max)
        })
        .0;
        &self.pinv - core * wm * &self.projector * &self.pinv
    }

    fn weighted_duals(
        &self,
        weights: &ProbabilityVector,
        context: &'static str,
        make_provenance: fn(Vec<f64>) -> Provenance,
    ) -> Result<(DualSet, GInverse)> {
        if weights.len() != self.n_outcomes {
            return Err(TomoError::LengthMismatch {
                context,
                expected: self.n_outcomes,
                found: weights.len(),
            });
        }
        let w = weights.as_slice();
        if w.iter().all(|&v| v == 0.0) {
            return Err(TomoError::ZeroWeight);
        }
        let gamma = self.weighted_ginverse(w);
        let duals = self.duals_from_rows(&gamma, make_provenance(w.to_vec()));
        let ginv = GInverse {
            matrix: gamma,
            weight: Some(w.to_vec()),
        };
        Ok((duals, ginv))
    }

    /// Minimum-norm duals for a prior probability weight π.
    pub fn optimal_duals(&self, prior_probs: &ProbabilityVector) -> Result<(DualSet, GInverse)> {
        self.weighted_duals(prior_probs, "prior probabilities", |weight| {
            Provenance::Optimal { weight }
        })
    }

    /// Minimum-norm duals for an observed frequency weight ν. Zero entries
    /// are permitted; the pseudoinverse cutoff handles the degenerate weight.
    pub fn frequentist_duals(&self, freqs: &ProbabilityVector) -> Result<(DualSet, GInverse)> {
        self.weighted_duals(freqs, "frequencies", |weight| Provenance::Frequentist {
            weight,
        })
    }

    /// Checked expansion coefficients: f with Σ f_i P_i = X, failing when X
    /// lies outside the span of the POVM elements. The residual tolerance is
    /// 1e-10 scaled by max(1, ‖X‖).
    pub fn expansion_coefficients(&self, duals: &DualSet, x: &CMatrix) -> Result<Vec<Complex64>> {
        if duals.dim() != self.dim || duals.n_outcomes() != self.n_outcomes {
            return Err(TomoError::DimensionMismatch {
                context: "expansion coefficients (dual set)",
                expected: self.dim,
                found: duals.dim(),
            });
        }
        let coeffs = duals.coefficients(x)?;
        let f = DVector::from_vec(coeffs.clone());
        let recon = &self.matrix * f;
        let target = vectorize(x);
        let residual = (recon - target)
            .iter()
            .map(|z| z.norm())
            .fold(0.0f64, f64::max);
        let tol = 1e-10 * x.norm().max(1.0);
        if residual > tol {
            return Err(TomoError::OutsideSpan { residual });
        }
        Ok(coeffs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{
        born_probabilities, identity, pauli_x, pauli_y, pauli_z, DensityMatrix,
    };

    fn max_entry(m: &CMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0f64, f64::max)
    }

    fn basis_projector_povm() -> Povm {
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let p0 = CMatrix::from_row_slice(2, 2, &[one, zero, zero, zero]);
        let p1 = CMatrix::from_row_slice(2, 2, &[zero, zero, zero, one]);
        Povm::new(vec![p0, p1]).unwrap()
    }

    #[test]
    fn frame_map_shape_and_rank() {
        let frame = FrameMap::build(&Povm::pauli_six());
        assert_eq!(frame.matrix().nrows(), 4);
        assert_eq!(frame.matrix().ncols(), 6);
        assert_eq!(frame.rank(), 4);
        assert!(frame.is_info_complete());
    }

    #[test]
    fn single_element_frame_is_rank_one() {
        let povm = Povm::new(vec![identity(2)]).unwrap();
        let frame = FrameMap::build(&povm);
        assert_eq!(frame.rank(), 1);
        assert!(!frame.is_info_complete());
    }

    #[test]
    fn basis_projectors_are_rank_two_and_self_dual() {
        let frame = FrameMap::build(&basis_projector_povm());
        assert_eq!(frame.rank(), 2);
        assert!(!frame.is_info_complete());
        let (duals, _, _) = frame.canonical_duals();
        let povm = basis_projector_povm();
        for i in 0..2 {
            assert!(max_entry(&(duals.operator(i) - povm.element(i))) < 1e-12);
        }
    }

    #[test]
    fn moore_penrose_identity_and_diagonal() {
        let id = identity(3);
        assert!(max_entry(&(moore_penrose(&id, None) - id)) < 1e-14);

        let mut diag = CMatrix::zeros(2, 2);
        diag[(0, 0)] = Complex64::new(2.0, 0.0);
        let pinv = moore_penrose(&diag, None);
        assert!((pinv[(0, 0)].re - 0.5).abs() < 1e-14);
        assert!(pinv[(1, 1)].norm() < 1e-14);

        let zero = CMatrix::zeros(3, 2);
        let zp = moore_penrose(&zero, None);
        assert_eq!((zp.nrows(), zp.ncols()), (2, 3));
        assert!(max_entry(&zp) == 0.0);
    }

    #[test]
    fn canonical_duals_of_six_outcome_povm() {
        let frame = FrameMap::build(&Povm::pauli_six());
        let (duals, ginv, projector) = frame.canonical_duals();
        let half = Complex64::new(0.5, 0.0);
        let three_halves = Complex64::new(1.5, 0.0);
        for (k, sigma) in [pauli_x(), pauli_y(), pauli_z()].iter().enumerate() {
            let plus = identity(2) * half + sigma * three_halves;
            let minus = identity(2) * half - sigma * three_halves;
            assert!(max_entry(&(duals.operator(2 * k) - plus)) < 1e-12);
            assert!(max_entry(&(duals.operator(2 * k + 1) - minus)) < 1e-12);
        }
        assert!((projector.trace() - 4.0).abs() < 1e-8);
        let m = projector.matrix();
        assert!(max_entry(&(m * m - m)) < 1e-10);
        assert!(max_entry(&(m - &m.adjoint())) < 1e-10);
        // ΛΓΛ = Λ
        let lam = frame.matrix();
        assert!(max_entry(&(lam * ginv.matrix() * lam - lam)) < 1e-10);
    }

    #[test]
    fn uniform_weight_reduces_to_canonical() {
        let frame = FrameMap::build(&Povm::pauli_six());
        let (canonical, _, _) = frame.canonical_duals();
        let (uniform, _) = frame.optimal_duals(&ProbabilityVector::uniform(6)).unwrap();
        for i in 0..6 {
            assert!(max_entry(&(uniform.operator(i) - canonical.operator(i))) < 1e-12);
        }
    }

    #[test]
    fn optimal_duals_beat_canonical_on_prior() {
        let povm = Povm::pauli_six();
        let frame = FrameMap::build(&povm);
        let state = DensityMatrix::from_bloch(2.0 / 7.0, -2.0 / 3.0, 3.0 / 5.0).unwrap();
        let prior = born_probabilities(&state, &povm).unwrap();
        let (canonical, _, _) = frame.canonical_duals();
        let (optimal, ginv) = frame.optimal_duals(&prior).unwrap();

        let err_opt = optimal.statistical_error(&pauli_z(), &prior).unwrap();
        let err_can = canonical.statistical_error(&pauli_z(), &prior).unwrap();
        assert!(err_opt < err_can, "{err_opt} !< {err_can}");

        // weighted minimum-norm condition: πΓΛ Hermitian
        let n = 6;
        let pi = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(prior.get(i), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let pgl = pi * ginv.matrix() * frame.matrix();
        assert!(max_entry(&(&pgl - &pgl.adjoint())) < 1e-10);

        // unit trace for a weight that comes from a state
        for i in 0..6 {
            assert!((optimal.operator(i).trace() - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn frequentist_matches_optimal_for_equal_weight() {
        let povm = Povm::pauli_six();
        let frame = FrameMap::build(&povm);
        let state = DensityMatrix::from_bloch(2.0 / 7.0, -2.0 / 3.0, 3.0 / 5.0).unwrap();
        let p = born_probabilities(&state, &povm).unwrap();
        let (optimal, _) = frame.optimal_duals(&p).unwrap();
        let (frequentist, _) = frame.frequentist_duals(&p).unwrap();
        for i in 0..6 {
            assert!(max_entry(&(frequentist.operator(i) - optimal.operator(i))) < 1e-12);
        }

        let (uniform, _) = frame
            .frequentist_duals(&ProbabilityVector::uniform(6))
            .unwrap();
        let (canonical, _, _) = frame.canonical_duals();
        for i in 0..6 {
            assert!(max_entry(&(uniform.operator(i) - canonical.operator(i))) < 1e-12);
        }
    }

    #[test]
    fn degenerate_frequency_weight_still_g_inverse() {
        let frame = FrameMap::build(&Povm::pauli_six());
        let nu = ProbabilityVector::new(vec![0.5, 0.5, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let (_, ginv) = frame.frequentist_duals(&nu).unwrap();
        let lam = frame.matrix();
        assert!(max_entry(&(lam * ginv.matrix() * lam - lam)) < 1e-10);
    }

    #[test]
    fn expansion_coefficient_examples() {
        let frame = FrameMap::build(&Povm::pauli_six());
        let (duals, _, _) = frame.canonical_duals();

        let f = frame.expansion_coefficients(&duals, &identity(2)).unwrap();
        for fi in &f {
            assert!((fi - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }

        let f = frame.expansion_coefficients(&duals, &pauli_z()).unwrap();
        let expected = [0.0, 0.0, 0.0, 0.0, 3.0, -3.0];
        for (fi, e) in f.iter().zip(expected) {
            assert!((fi - Complex64::new(e, 0.0)).norm() < 1e-12);
        }

        let f = frame
            .expansion_coefficients(&duals, &CMatrix::zeros(2, 2))
            .unwrap();
        assert!(f.iter().all(|fi| fi.norm() < 1e-15));
    }

    #[test]
    fn expansion_rejects_operator_outside_span() {
        let frame = FrameMap::build(&basis_projector_povm());
        let (duals, _, _) = frame.canonical_duals();
        assert!(matches!(
            frame.expansion_coefficients(&duals, &pauli_x()),
            Err(TomoError::OutsideSpan { .. })
        ));
    }

    #[test]
    fn statistical_error_examples() {
        let frame = FrameMap::build(&Povm::pauli_six());
        let (duals, _, _) = frame.canonical_duals();
        let uniform = ProbabilityVector::uniform(6);
        let err = duals.statistical_error(&pauli_z(), &uniform).unwrap();
        assert!((err - 3.0).abs() < 1e-12);
        let err = duals.statistical_error(&identity(2), &uniform).unwrap();
        assert!((err - 1.0).abs() < 1e-12);
        let err = duals
            .statistical_error(&CMatrix::zeros(2, 2), &uniform)
            .unwrap();
        assert!(err == 0.0);
    }

    #[test]
    fn weight_length_must_match_outcomes() {
        let frame = FrameMap::build(&Povm::pauli_six());
        let err = frame
            .optimal_duals(&ProbabilityVector::uniform(3))
            .unwrap_err();
        assert!(matches!(err, TomoError::LengthMismatch { .. }));
    }
}
