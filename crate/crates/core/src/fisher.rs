//! Classical and quantum Fisher information matrices, regularized matrix
//! powers, Löwner-order checks and circuit-execution accounting.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::simulator::{inner, overlap_sq, prepare_state, state_derivative, AnsatzSpec};

/// Eigenvalues are floored here before a negative power is taken.
pub const EIGEN_FLOOR: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FisherKind {
    Classical,
    QuantumShift,
    QuantumExact,
}

impl FisherKind {
    pub fn is_quantum(self) -> bool {
        !matches!(self, FisherKind::Classical)
    }
}

/// A symmetric `k × k` information-matrix estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct FisherMatrix {
    pub kind: FisherKind,
    pub entries: DMatrix<f64>,
    /// Regularization already added to the diagonal.
    pub epsilon: f64,
    /// Circuit evaluations the estimate would cost on hardware.
    pub executions: u64,
}

impl FisherMatrix {
    pub fn new(kind: FisherKind, entries: DMatrix<f64>) -> Result<Self> {
        check_symmetric(&entries)?;
        Ok(Self {
            kind,
            entries,
            epsilon: 0.0,
            executions: 0,
        })
    }

    pub fn with_executions(mut self, executions: u64) -> Self {
        self.executions = executions;
        self
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.entries)
    }

    /// `F + eps·I`.
    pub fn regularize(&self, eps: f64) -> Result<Self> {
        regularize(self, eps)
    }

    pub fn power(&self, exponent: f64) -> Result<DMatrix<f64>> {
        matrix_power(self, exponent)
    }
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Dimension {
            context: "square matrix",
            expected: m.nrows(),
            actual: m.ncols(),
        });
    }
    let asym = (m - m.transpose()).amax();
    if asym > SYMMETRY_TOL || !asym.is_finite() {
        return Err(Error::Asymmetric { asymmetry: asym });
    }
    Ok(())
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

/// `(1/N) Σ g gᵀ` over per-step log-policy gradients.
pub fn classical_fim<'a, I>(gradients: I, k: usize) -> Result<FisherMatrix>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut acc = DMatrix::zeros(k, k);
    let mut count = 0usize;
    for g in gradients {
        check_len("log-policy gradient", k, g.len())?;
        let v = DVector::from_column_slice(g);
        acc.ger(1.0, &v, &v, 1.0);
        count += 1;
    }
    if count == 0 {
        return Err(Error::Empty("classical FIM needs at least one gradient"));
    }
    acc /= count as f64;
    symmetrize(&mut acc);
    FisherMatrix::new(FisherKind::Classical, acc)
}

/// Exhaustive-action FIM: per state `Σ_a π(a) g_a g_aᵀ`, averaged over
/// states. Each state is given as `(π(a), ∇log π(a))` pairs.
pub fn classical_fim_exhaustive<'a, S, A>(states: S, k: usize) -> Result<FisherMatrix>
where
    S: IntoIterator<Item = A>,
    A: IntoIterator<Item = (f64, &'a [f64])>,
{
    let mut acc = DMatrix::zeros(k, k);
    let mut n_states = 0usize;
    for actions in states {
        for (p, g) in actions {
            check_len("log-policy gradient", k, g.len())?;
            let v = DVector::from_column_slice(g);
            acc.ger(p, &v, &v, 1.0);
        }
        n_states += 1;
    }
    if n_states == 0 {
        return Err(Error::Empty("classical FIM needs at least one state"));
    }
    acc /= n_states as f64;
    symmetrize(&mut acc);
    FisherMatrix::new(FisherKind::Classical, acc)
}

/// QFIM of a single state from its analytic derivatives:
/// `4·Re[⟨∂_iψ|∂_jψ⟩ − ⟨∂_iψ|ψ⟩⟨ψ|∂_jψ⟩]`.
fn qfim_exact_single(ansatz: &AnsatzSpec, theta: &[f64], features: &[f64]) -> Result<DMatrix<f64>> {
    let k = ansatz.n_params();
    let psi = prepare_state(ansatz, theta, features)?;
    let derivs: Vec<Vec<Complex64>> = (0..k)
        .map(|j| state_derivative(ansatz, theta, features, j))
        .collect::<Result<_>>()?;
    let proj: Vec<Complex64> = derivs.iter().map(|d| inner(psi.amplitudes(), d)).collect();
    let mut m = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let val = 4.0 * (inner(&derivs[i], &derivs[j]) - proj[i].conj() * proj[j]).re;
            m[(i, j)] = val;
            m[(j, i)] = val;
        }
    }
    Ok(m)
}

/// Data-dependent QFIM averaged over visited feature vectors, computed from
/// analytic state derivatives.
pub fn quantum_fim_exact(
    ansatz: &AnsatzSpec,
    theta: &[f64],
    visited_features: &[Vec<f64>],
) -> Result<FisherMatrix> {
    quantum_fim_average(ansatz, theta, visited_features, FisherKind::QuantumExact, qfim_exact_single)
}

/// Four-overlap parameter-shift QFIM, averaged over visited features.
pub fn quantum_fim_shift(
    ansatz: &AnsatzSpec,
    theta: &[f64],
    visited_features: &[Vec<f64>],
) -> Result<FisherMatrix> {
    quantum_fim_average(ansatz, theta, visited_features, FisherKind::QuantumShift, qfim_shift_single)
}

fn qfim_shift_single(ansatz: &AnsatzSpec, theta: &[f64], features: &[f64]) -> Result<DMatrix<f64>> {
    let k = ansatz.n_params();
    let psi = prepare_state(ansatz, theta, features)?;
    let overlap = |i: usize, j: usize, si: f64, sj: f64| -> Result<f64> {
        let mut t = theta.to_vec();
        t[i] += si * FRAC_PI_2;
        t[j] += sj * FRAC_PI_2;
        overlap_sq(&psi, &prepare_state(ansatz, &t, features)?)
    };
    let mut m = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let val = -0.5
                * (overlap(i, j, 1.0, 1.0)? - overlap(i, j, 1.0, -1.0)? - overlap(i, j, -1.0, 1.0)?
                    + overlap(i, j, -1.0, -1.0)?);
            m[(i, j)] = val;
            m[(j, i)] = val;
        }
    }
    Ok(m)
}

type SingleStateQfim = fn(&AnsatzSpec, &[f64], &[f64]) -> Result<DMatrix<f64>>;

fn quantum_fim_average(
    ansatz: &AnsatzSpec,
    theta: &[f64],
    visited_features: &[Vec<f64>],
    kind: FisherKind,
    single: SingleStateQfim,
) -> Result<FisherMatrix> {
    if visited_features.is_empty() {
        return Err(Error::Empty("quantum FIM needs at least one visited state"));
    }
    check_len("theta", ansatz.n_params(), theta.len())?;
    let k = ansatz.n_params();
    let mut acc = DMatrix::zeros(k, k);
    // sequential sum keeps the reduction order fixed
    for f in visited_features {
        acc += single(ansatz, theta, f)?;
    }
    acc /= visited_features.len() as f64;
    let per_state = execution_count(ExecutionKind::Quantum, k, ansatz.n_qubits(), 1, 1);
    Ok(FisherMatrix::new(kind, acc)?.with_executions(per_state * visited_features.len() as u64))
}

pub fn regularize(f: &FisherMatrix, eps: f64) -> Result<FisherMatrix> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("regularization must be >= 0, got {eps}")));
    }
    let mut out = f.clone();
    for i in 0..out.dim() {
        out.entries[(i, i)] += eps;
    }
    out.epsilon += eps;
    Ok(out)
}

/// `F^exponent` through the eigendecomposition, with negative eigenvalues
/// clamped to zero. Negative exponents need the smallest eigenvalue above
/// [`EIGEN_FLOOR`] unless the matrix was regularized, in which case the floor
/// is applied instead.
pub fn matrix_power(f: &FisherMatrix, exponent: f64) -> Result<DMatrix<f64>> {
    sym_power(&f.entries, exponent, f.epsilon > 0.0)
}

pub(crate) fn sym_power(m: &DMatrix<f64>, exponent: f64, regularized: bool) -> Result<DMatrix<f64>> {
    check_symmetric(m)?;
    let k = m.nrows();
    if exponent == 0.0 {
        return Ok(DMatrix::identity(k, k));
    }
    let eig = SymmetricEigen::new(m.clone());
    let mut vals = eig.eigenvalues.map(|v| v.max(0.0));
    if exponent < 0.0 {
        let min = vals.min();
        if min <= EIGEN_FLOOR && !regularized {
            return Err(Error::Singular {
                min_eigenvalue: eig.eigenvalues.min(),
            });
        }
        vals = vals.map(|v| v.max(EIGEN_FLOOR));
    }
    let powered = DMatrix::from_diagonal(&vals.map(|v| v.powf(exponent)));
    let q = &eig.eigenvectors;
    let mut out = q * powered * q.transpose();
    symmetrize(&mut out);
    Ok(out)
}

/// `A ≤ B` in the Löwner order: `λ_min(B − A) ≥ −tol`.
pub fn loewner_leq(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> Result<bool> {
    Ok(loewner_margin(a, b)? >= -tol)
}

/// `λ_min(B − A)`.
pub fn loewner_margin(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    check_symmetric(a)?;
    check_symmetric(b)?;
    check_len("Löwner comparison", a.nrows(), b.nrows())?;
    Ok(min_eigenvalue(&(b - a)))
}

fn regularized_power(m: &DMatrix<f64>, phi: f64, eps: f64) -> Result<DMatrix<f64>> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("regularization must be >= 0, got {eps}")));
    }
    let mut r = m.clone();
    for i in 0..r.nrows() {
        r[(i, i)] += eps;
    }
    sym_power(&r, -phi, eps > 0.0)
}

/// `(F + eps·I)^(−φ) · grad`.
pub fn natural_direction(f: &FisherMatrix, grad: &[f64], phi: f64, eps: f64) -> Result<Vec<f64>> {
    check_len("gradient", f.dim(), grad.len())?;
    if !(0.0..=1.0).contains(&phi) {
        return Err(Error::InvalidArgument(format!("phi must lie in [0, 1], got {phi}")));
    }
    let p = matrix_power(&regularize(f, eps)?, -phi)?;
    Ok((p * DVector::from_column_slice(grad)).iter().copied().collect())
}

fn check_pair(fc: &DMatrix<f64>, fq: &DMatrix<f64>, v: &[f64]) -> Result<()> {
    check_len("Fisher pair", fc.nrows(), fq.nrows())?;
    check_len("vector", fc.nrows(), v.len())
}

/// `vᵀ(Fc^(−φ) − Fq^(−φ))v` with both matrices regularized by `eps`.
pub fn approximation_error_gap(
    fc: &DMatrix<f64>,
    fq: &DMatrix<f64>,
    v: &[f64],
    phi: f64,
    eps: f64,
) -> Result<f64> {
    check_pair(fc, fq, v)?;
    let diff = regularized_power(fc, phi, eps)? - regularized_power(fq, phi, eps)?;
    let v = DVector::from_column_slice(v);
    Ok(v.dot(&(diff * &v)))
}

/// `(‖Fc^(−φ) v‖, ‖Fq^(−φ) v‖)` with both matrices regularized by `eps`.
pub fn norm_comparison(
    fc: &DMatrix<f64>,
    fq: &DMatrix<f64>,
    v: &[f64],
    phi: f64,
    eps: f64,
) -> Result<(f64, f64)> {
    check_pair(fc, fq, v)?;
    let v = DVector::from_column_slice(v);
    let c = (regularized_power(fc, phi, eps)? * &v).norm();
    let q = (regularized_power(fq, phi, eps)? * &v).norm();
    Ok((c, q))
}

/// Hardware cost model of an information-matrix estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExecutionKind {
    ClassicalBorn,
    ClassicalSoftmax,
    Quantum,
}

/// Circuit executions for the upper triangle (`k(k+1)/2` entries) at one
/// visited state:
///
/// * classical Born: `3 · partition_size` settings per entry,
/// * classical Softmax: `4 · |A|` per entry,
/// * quantum (four overlaps): `4` per entry, independent of the policy.
pub fn execution_count(kind: ExecutionKind, k: usize, _n_qubits: usize, n_actions: usize, partition_size: usize) -> u64 {
    let entries = (k * (k + 1) / 2) as u64;
    match kind {
        ExecutionKind::ClassicalBorn => 3 * partition_size as u64 * entries,
        ExecutionKind::ClassicalSoftmax => 4 * n_actions as u64 * entries,
        ExecutionKind::Quantum => 4 * entries,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policies::{PolicyEvaluation, PolicySpec};
    use crate::simulator::{Axis, Gate, Partition, Slot};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn ry() -> AnsatzSpec {
        AnsatzSpec::new(1, 1, vec![Gate::rot(Axis::Y, 0, Slot::Variational(0))]).unwrap()
    }

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(v))
    }

    fn random_spd(rng: &mut ChaCha8Rng, k: usize, rank: usize) -> DMatrix<f64> {
        let a = DMatrix::from_fn(k, rank, |_, _| rng.gen_range(-1.0..1.0));
        &a * a.transpose()
    }

    #[test]
    fn classical_examples() {
        let g: Vec<Vec<f64>> = vec![vec![1.0, 0.0]];
        let f = classical_fim(g.iter().map(|v| v.as_slice()), 2).unwrap();
        assert_eq!(f.entries, diag(&[1.0, 0.0]));
        let g: Vec<Vec<f64>> = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let f = classical_fim(g.iter().map(|v| v.as_slice()), 2).unwrap();
        assert_eq!(f.entries, diag(&[0.5, 0.5]));
        assert!(classical_fim(std::iter::empty(), 2).is_err());
    }

    #[test]
    fn single_qubit_born_fim_is_one() {
        let policy = PolicySpec::born(Partition::new(vec![0], vec![0, 1]).unwrap());
        for theta in [0.3, 1.0, 2.0, -2.5] {
            let e = PolicyEvaluation::new(&policy, &ry(), &[theta], &[], 1.0).unwrap();
            let grads = e.log_gradients();
            let f = classical_fim_exhaustive(
                [grads.iter().map(|(_, p, g)| (*p, g.as_slice()))],
                1,
            )
            .unwrap();
            assert_abs_diff_eq!(f.entries[(0, 0)], 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn qfim_examples() {
        let f = quantum_fim_exact(&ry(), &[0.7], &[vec![]]).unwrap();
        assert_abs_diff_eq!(f.entries[(0, 0)], 1.0, epsilon = 1e-12);
        let f = quantum_fim_shift(&ry(), &[0.7], &[vec![]]).unwrap();
        assert_abs_diff_eq!(f.entries[(0, 0)], 1.0, epsilon = 1e-12);

        // product of RY(2θ_i)|0⟩ = cos θ_i|0⟩ + sin θ_i|1⟩
        let gates = (0..3).map(|q| Gate::rot(Axis::Y, q, Slot::Variational(q))).collect();
        let a = AnsatzSpec::new(3, 1, gates).unwrap();
        let theta = [0.2, 1.3, -0.7];
        let f = quantum_fim_exact(&a, &theta, &[vec![]]).unwrap();
        // in rotation-angle coordinates this is I; with half-angle θ_i the
        // chain rule contributes (d angle / dθ)² = 4, giving 4·I
        let half_angle = f.entries * 4.0;
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(half_angle[(i, j)], if i == j { 4.0 } else { 0.0 }, epsilon = 1e-12);
            }
        }

        let phase = AnsatzSpec::new(1, 1, vec![Gate::rot(Axis::Z, 0, Slot::Variational(0))]).unwrap();
        let f = quantum_fim_exact(&phase, &[0.4], &[vec![]]).unwrap();
        assert_abs_diff_eq!(f.entries[(0, 0)], 0.0, epsilon = 1e-15);
        assert!(quantum_fim_exact(&ry(), &[0.1], &[]).is_err());
    }

    #[test]
    fn shift_matches_exact_and_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = AnsatzSpec::reuploading(2, 2, 4).unwrap();
        let theta: Vec<f64> = (0..a.n_params()).map(|_| rng.gen_range(-PI..PI)).collect();
        let feats = vec![vec![0.1, 0.2, 0.3, 0.4], vec![-0.5, 0.7, 0.0, 1.0]];
        let ex = quantum_fim_exact(&a, &theta, &feats).unwrap();
        let sh = quantum_fim_shift(&a, &theta, &feats).unwrap();
        assert!((ex.entries - sh.entries).amax() < 1e-8);
        let k = a.n_params() as u64;
        assert_eq!(sh.executions, 2 * 4 * k * (k + 1) / 2);

        let gates = (0..3).map(|q| Gate::rot(Axis::Y, 0, Slot::Variational(q))).collect();
        let a3 = AnsatzSpec::new(1, 1, gates).unwrap();
        assert_eq!(quantum_fim_shift(&a3, &[0.0; 3], &[vec![]]).unwrap().executions, 24);
    }

    #[test]
    fn regularize_examples() {
        let f = FisherMatrix::new(FisherKind::Classical, diag(&[2.0, 3.0])).unwrap().with_executions(7);
        assert_eq!(regularize(&f, 0.0).unwrap(), f);
        let z = FisherMatrix::new(FisherKind::QuantumExact, DMatrix::zeros(3, 3)).unwrap();
        let r = regularize(&z, 0.1).unwrap();
        assert_eq!(r.entries, DMatrix::identity(3, 3) * 0.1);
        assert_eq!(r.epsilon, 0.1);
        let r = regularize(&f, 0.5).unwrap();
        assert_eq!(r.executions, 7);
        assert_abs_diff_eq!(r.min_eigenvalue(), f.min_eigenvalue() + 0.5, epsilon = 1e-12);
        assert!(regularize(&f, -1.0).is_err());
    }

    #[test]
    fn power_examples() {
        let i = FisherMatrix::new(FisherKind::Classical, DMatrix::identity(3, 3)).unwrap();
        assert!((matrix_power(&i, -0.5).unwrap() - DMatrix::identity(3, 3)).amax() < 1e-14);
        let d = FisherMatrix::new(FisherKind::Classical, diag(&[4.0, 1.0])).unwrap();
        assert!((matrix_power(&d, -0.5).unwrap() - diag(&[0.5, 1.0])).amax() < 1e-14);
        let s = FisherMatrix::new(FisherKind::Classical, diag(&[1.0, 0.0])).unwrap();
        assert!(matches!(matrix_power(&s, -1.0), Err(Error::Singular { .. })));
        assert!(matrix_power(&s.regularize(0.1).unwrap(), -1.0).is_ok());
        assert!(matrix_power(&s, 0.5).is_ok());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(FisherMatrix::new(FisherKind::Classical, asym), Err(Error::Asymmetric { .. })));
    }

    #[test]
    fn loewner_examples() {
        let i = DMatrix::<f64>::identity(3, 3);
        assert!(loewner_leq(&i, &i, 1e-9).unwrap());
        assert!(loewner_leq(&i, &(&i * 2.0), 1e-9).unwrap());
        assert!(!loewner_leq(&(&i * 2.0), &i, 1e-9).unwrap());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(loewner_leq(&asym, &asym, 1e-9).is_err());
    }

    #[test]
    fn natural_direction_examples() {
        let i = FisherMatrix::new(FisherKind::Classical, DMatrix::identity(2, 2)).unwrap();
        for phi in [0.0, 0.3, 1.0] {
            let d = natural_direction(&i, &[0.3, -2.0], phi, 0.0).unwrap();
            assert_abs_diff_eq!(d[0], 0.3, epsilon = 1e-14);
            assert_abs_diff_eq!(d[1], -2.0, epsilon = 1e-14);
        }
        let f = FisherMatrix::new(FisherKind::Classical, diag(&[4.0, 1.0])).unwrap();
        let d = natural_direction(&f, &[1.0, 1.0], 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(d[0], 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(d[1], 1.0, epsilon = 1e-14);
        let d = natural_direction(&f, &[1.0, 1.0], 0.5, 0.0).unwrap();
        assert_abs_diff_eq!(d[0], 0.5, epsilon = 1e-14);
        assert!(natural_direction(&f, &[1.0], 0.5, 0.0).is_err());
        assert!(natural_direction(&f, &[1.0, 1.0], 1.5, 0.0).is_err());
    }

    #[test]
    fn gap_and_norm_examples() {
        let i = DMatrix::<f64>::identity(2, 2);
        let four = &i * 4.0;
        assert_abs_diff_eq!(approximation_error_gap(&i, &i, &[0.3, 0.4], 1.0, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            approximation_error_gap(&i, &four, &[1.0, 0.0], 1.0, 0.0).unwrap(),
            0.75,
            epsilon = 1e-14
        );
        let (c, q) = norm_comparison(&i, &four, &[1.0, 1.0], 0.5, 0.0).unwrap();
        assert_abs_diff_eq!(c, 2f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(q, 2f64.sqrt() / 2.0, epsilon = 1e-14);
        let (c, q) = norm_comparison(&four, &four, &[1.0, -3.0], 1.0, 0.1).unwrap();
        assert_abs_diff_eq!(c, q);
        assert!(approximation_error_gap(&i, &DMatrix::identity(3, 3), &[1.0, 0.0], 1.0, 0.0).is_err());
    }

    #[test]
    fn full_inverse_norm_ordering_can_fail() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let found = (0..2000).any(|_| {
            let fc = random_spd(&mut rng, 3, 3);
            let fq = &fc + random_spd(&mut rng, 3, 1);
            let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (c, q) = norm_comparison(&fc, &fq, &v, 1.0, 0.0).unwrap();
            c < q
        });
        assert!(found);
    }

    #[test]
    fn execution_counts() {
        assert_eq!(execution_count(ExecutionKind::Quantum, 2, 4, 2, 8), 12);
        assert_eq!(execution_count(ExecutionKind::ClassicalSoftmax, 2, 4, 2, 8), 24);
        assert_eq!(execution_count(ExecutionKind::ClassicalBorn, 2, 4, 2, 8), 72);
        assert_eq!(
            execution_count(ExecutionKind::Quantum, 8, 4, 2, 8),
            execution_count(ExecutionKind::Quantum, 8, 4, 4, 8)
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn power_identities(seed in any::<u64>(), k in 1usize..7) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_spd(&mut rng, k, k) + DMatrix::identity(k, k) * 0.05;
            let f = FisherMatrix::new(FisherKind::Classical, m).unwrap();
            let half = matrix_power(&f, -0.5).unwrap();
            let inv = matrix_power(&f, -1.0).unwrap();
            let scale = inv.amax().max(1.0);
            prop_assert!((&half * &half - &inv).amax() / scale < 1e-8);
            prop_assert!((&half - half.transpose()).amax() < 1e-12);
            prop_assert!(min_eigenvalue(&half) > 0.0);
        }

        #[test]
        fn loewner_consequences(seed in any::<u64>(), k in 1usize..6, eps in 0.01f64..0.5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (rc, rq) = (rng.gen_range(1..=k), rng.gen_range(1..=k));
            let fc = random_spd(&mut rng, k, rc);
            let fq = &fc + random_spd(&mut rng, k, rq);
            prop_assert!(loewner_leq(&fc, &fq, 1e-10).unwrap());
            let inv_c = regularized_power(&fc, 1.0, eps).unwrap();
            let inv_q = regularized_power(&fq, 1.0, eps).unwrap();
            prop_assert!(loewner_leq(&inv_q, &inv_c, 1e-8).unwrap());
            let v: Vec<f64> = (0..k).map(|_| rng.gen_range(-3.0..3.0)).collect();
            for phi in [0.5, 1.0] {
                prop_assert!(approximation_error_gap(&fc, &fq, &v, phi, eps).unwrap() >= -1e-8);
            }
            let (c, q) = norm_comparison(&fc, &fq, &v, 0.5, eps).unwrap();
            prop_assert!(q <= c + 1e-8);
        }
    }
}
