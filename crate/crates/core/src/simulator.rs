//! Exact statevector simulation of data-reuploading parameterized circuits.
//!
//! Basis indices are little-endian: bit `q` of an index is the value of qubit `q`.
//! Every rotation is `exp(-i θ σ / 2)` for a Pauli `σ`, so each trainable
//! parameter has a generator with eigenvalues ±½.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

const NORM_TOL: f64 = 1e-10;

/// Rotation axis of a single-qubit Pauli rotation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Where a rotation gate takes its angle from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Slot {
    /// Index into the trainable parameter vector θ.
    Variational(usize),
    /// Index into the environment feature vector.
    Feature(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gate {
    Hadamard(usize),
    Rot { axis: Axis, qubit: usize, slot: Slot },
    Cz(usize, usize),
}

impl Gate {
    pub fn rot(axis: Axis, qubit: usize, slot: Slot) -> Self {
        Gate::Rot { axis, qubit, slot }
    }
}

/// A layered gate program with variational and feature slots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    n_qubits: usize,
    n_layers: usize,
    gates: Vec<Gate>,
    n_params: usize,
    n_features: usize,
}

impl AnsatzSpec {
    /// Validates an arbitrary program. Every variational index in `0..k` must
    /// appear exactly once, where `k` is one past the largest index used.
    pub fn new(n_qubits: usize, n_layers: usize, gates: Vec<Gate>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::Ansatz("n_qubits must be positive".into()));
        }
        if n_qubits > 20 {
            return Err(Error::Ansatz(format!("{n_qubits} qubits exceeds the 20-qubit limit")));
        }
        let mut var_seen: Vec<usize> = Vec::new();
        let mut n_features = 0;
        for (pos, gate) in gates.iter().enumerate() {
            match *gate {
                Gate::Hadamard(q) => check_qubit(q, n_qubits, pos)?,
                Gate::Rot { qubit, slot, .. } => {
                    check_qubit(qubit, n_qubits, pos)?;
                    match slot {
                        Slot::Variational(j) => {
                            if var_seen.len() <= j {
                                var_seen.resize(j + 1, 0);
                            }
                            var_seen[j] += 1;
                        }
                        Slot::Feature(i) => n_features = n_features.max(i + 1),
                    }
                }
                Gate::Cz(a, b) => {
                    check_qubit(a, n_qubits, pos)?;
                    check_qubit(b, n_qubits, pos)?;
                    if a == b {
                        return Err(Error::Ansatz(format!("gate {pos}: CZ on identical qubits {a}")));
                    }
                }
            }
        }
        if let Some(j) = var_seen.iter().position(|&c| c != 1) {
            return Err(Error::Ansatz(format!(
                "variational index {j} used {} times; every index must appear exactly once",
                var_seen[j]
            )));
        }
        Ok(Self {
            n_qubits,
            n_layers,
            gates,
            n_params: var_seen.len(),
            n_features,
        })
    }

    /// Hardware-efficient data-reuploading circuit.
    ///
    /// Hadamard wall, then per layer: variational RY and RZ on every qubit, a
    /// CZ ring and a data-encoding RZ(feature) on every qubit. A final
    /// variational RY+RZ layer closes the circuit, giving `2n(L+1)` parameters.
    /// Qubit `q` reads feature `q mod n_features`.
    ///
    /// All data gates are diagonal, so at θ = 0 the circuit is diagonal after
    /// the Hadamard wall and every computational-basis outcome has probability
    /// `2^-n` regardless of the features.
    pub fn reuploading(n_qubits: usize, n_layers: usize, n_features: usize) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::Ansatz("at least one feature is required".into()));
        }
        let n = n_qubits;
        let mut gates = Vec::new();
        let mut next = 0usize;
        let mut var = || {
            let s = Slot::Variational(next);
            next += 1;
            s
        };
        gates.extend((0..n).map(Gate::Hadamard));
        let ring: Vec<(usize, usize)> = match n {
            1 => vec![],
            2 => vec![(0, 1)],
            _ => (0..n).map(|q| (q, (q + 1) % n)).collect(),
        };
        for _ in 0..n_layers {
            for q in 0..n {
                gates.push(Gate::rot(Axis::Y, q, var()));
                gates.push(Gate::rot(Axis::Z, q, var()));
            }
            gates.extend(ring.iter().map(|&(a, b)| Gate::Cz(a, b)));
            for q in 0..n {
                gates.push(Gate::rot(Axis::Z, q, Slot::Feature(q % n_features)));
            }
        }
        for q in 0..n {
            gates.push(Gate::rot(Axis::Y, q, var()));
            gates.push(Gate::rot(Axis::Z, q, var()));
        }
        let mut spec = Self::new(n_qubits, n_layers, gates)?;
        spec.n_features = spec.n_features.max(n_features);
        Ok(spec)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    /// Number of trainable parameters `k`.
    pub fn n_params(&self) -> usize {
        self.n_params
    }

    /// Minimum feature-vector length accepted by [`prepare_state`].
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// True when the program opens with a Hadamard on every qubit.
    pub fn has_hadamard_wall(&self) -> bool {
        let n = self.n_qubits;
        self.gates.len() >= n
            && (0..n).all(|q| self.gates[..n].contains(&Gate::Hadamard(q)))
    }

    fn check_inputs(&self, theta: &[f64], features: &[f64]) -> Result<()> {
        check_len("theta", self.n_params, theta.len())?;
        if features.len() < self.n_features {
            return Err(Error::Dimension {
                context: "features",
                expected: self.n_features,
                actual: features.len(),
            });
        }
        if theta.iter().chain(features).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("rotation angles"));
        }
        Ok(())
    }
}

fn check_qubit(q: usize, n: usize, pos: usize) -> Result<()> {
    if q < n {
        Ok(())
    } else {
        Err(Error::Ansatz(format!("gate {pos}: qubit {q} out of range for {n} qubits")))
    }
}

/// Pure state of `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl Statevector {
    /// `|0…0⟩`.
    pub fn zero(n_qubits: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Self {
            n_qubits,
            amplitudes,
        }
    }

    /// Wraps raw amplitudes, checking length and normalization.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "statevector length {len} is not a power of two"
            )));
        }
        let state = Self {
            n_qubits: len.trailing_zeros() as usize,
            amplitudes,
        };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidArgument(format!("statevector norm² {norm} is not 1")));
        }
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Statevector) -> Result<Complex64> {
        check_len("statevector", self.amplitudes.len(), other.amplitudes.len())?;
        Ok(inner(&self.amplitudes, &other.amplitudes))
    }

    fn apply_gate(&mut self, gate: &Gate, theta: &[f64], features: &[f64]) {
        apply_gate(&mut self.amplitudes, gate, theta, features);
    }
}

pub(crate) fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn angle(slot: Slot, theta: &[f64], features: &[f64]) -> f64 {
    match slot {
        Slot::Variational(j) => theta[j],
        Slot::Feature(i) => features[i],
    }
}

fn rotation_matrix(axis: Axis, angle: f64) -> [[Complex64; 2]; 2] {
    let c = (angle / 2.0).cos();
    let s = (angle / 2.0).sin();
    let z = Complex64::new(0.0, 0.0);
    match axis {
        Axis::X => [
            [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
            [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
        ],
        Axis::Y => [
            [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
            [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
        ],
        Axis::Z => [[Complex64::new(c, -s), z], [z, Complex64::new(c, s)]],
    }
}

fn apply_1q(amps: &mut [Complex64], q: usize, m: &[[Complex64; 2]; 2]) {
    let bit = 1usize << q;
    for i0 in 0..amps.len() {
        if i0 & bit != 0 {
            continue;
        }
        let i1 = i0 | bit;
        let a0 = amps[i0];
        let a1 = amps[i1];
        amps[i0] = m[0][0] * a0 + m[0][1] * a1;
        amps[i1] = m[1][0] * a0 + m[1][1] * a1;
    }
}

/// Multiplies by `-i/2 · σ_axis` on qubit `q`.
fn apply_generator(amps: &mut [Complex64], q: usize, axis: Axis) {
    let h = Complex64::new(0.0, -0.5);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let z = Complex64::new(0.0, 0.0);
    let pauli = match axis {
        Axis::X => [[z, one], [one, z]],
        Axis::Y => [[z, -i], [i, z]],
        Axis::Z => [[one, z], [z, -one]],
    };
    let m = [
        [h * pauli[0][0], h * pauli[0][1]],
        [h * pauli[1][0], h * pauli[1][1]],
    ];
    apply_1q(amps, q, &m);
}

fn apply_gate(amps: &mut [Complex64], gate: &Gate, theta: &[f64], features: &[f64]) {
    match *gate {
        Gate::Hadamard(q) => {
            let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            apply_1q(amps, q, &[[r, r], [r, -r]]);
        }
        Gate::Rot { axis, qubit, slot } => {
            let m = rotation_matrix(axis, angle(slot, theta, features));
            apply_1q(amps, qubit, &m);
        }
        Gate::Cz(a, b) => {
            let mask = (1usize << a) | (1usize << b);
            for (idx, amp) in amps.iter_mut().enumerate() {
                if idx & mask == mask {
                    *amp = -*amp;
                }
            }
        }
    }
}

/// Runs the ansatz on `|0…0⟩`.
pub fn prepare_state(ansatz: &AnsatzSpec, theta: &[f64], features: &[f64]) -> Result<Statevector> {
    ansatz.check_inputs(theta, features)?;
    let mut state = Statevector::zero(ansatz.n_qubits);
    for gate in &ansatz.gates {
        state.apply_gate(gate, theta, features);
    }
    Ok(state)
}

/// The states `ψ(θ ± shift·e_j)` for every parameter `j`, as `(plus, minus)`
/// pairs indexed by `j`, plus the unshifted state.
///
/// Each shifted circuit shares the prefix before gate `j` with the unshifted
/// one, so only the suffix is re-simulated. The result is bit-identical to
/// calling [`prepare_state`] on the shifted parameter vectors.
pub fn shifted_states(
    ansatz: &AnsatzSpec,
    theta: &[f64],
    features: &[f64],
    shift: f64,
) -> Result<(Statevector, Vec<(Statevector, Statevector)>)> {
    ansatz.check_inputs(theta, features)?;
    let mut slots: Vec<Option<(Statevector, Statevector)>> = vec![None; ansatz.n_params];
    let mut prefix = Statevector::zero(ansatz.n_qubits);
    let mut t = theta.to_vec();
    for (g, gate) in ansatz.gates.iter().enumerate() {
        if let Gate::Rot {
            slot: Slot::Variational(j),
            ..
        } = *gate
        {
            let mut run = |delta: f64| {
                t[j] = theta[j] + delta;
                let mut st = prefix.clone();
                for later in &ansatz.gates[g..] {
                    st.apply_gate(later, &t, features);
                }
                t[j] = theta[j];
                st
            };
            let plus = run(shift);
            let minus = run(-shift);
            slots[j] = Some((plus, minus));
        }
        prefix.apply_gate(gate, theta, features);
    }
    let pairs = slots
        .into_iter()
        .map(|s| s.expect("every parameter appears exactly once"))
        .collect();
    Ok((prefix, pairs))
}

/// `|∂_j ψ⟩`, obtained by inserting the rotation generator right after the
/// gate that carries parameter `j`.
pub fn state_derivative(
    ansatz: &AnsatzSpec,
    theta: &[f64],
    features: &[f64],
    j: usize,
) -> Result<Vec<Complex64>> {
    ansatz.check_inputs(theta, features)?;
    if j >= ansatz.n_params {
        return Err(Error::Index {
            context: "parameter",
            index: j,
            limit: ansatz.n_params,
        });
    }
    let mut amps = Statevector::zero(ansatz.n_qubits).amplitudes;
    for gate in &ansatz.gates {
        apply_gate(&mut amps, gate, theta, features);
        if let Gate::Rot {
            axis,
            qubit,
            slot: Slot::Variational(p),
        } = *gate
        {
            if p == j {
                apply_generator(&mut amps, qubit, axis);
            }
        }
    }
    Ok(amps)
}

/// `|⟨a|b⟩|²`.
pub fn overlap_sq(a: &Statevector, b: &Statevector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

/// Assignment of measured computational-basis outcomes to actions.
///
/// Outcome `b` is read little-endian over `measured_qubits`: bit `i` of `b`
/// is the value of `measured_qubits[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    measured_qubits: Vec<usize>,
    assignment: Vec<usize>,
    n_actions: usize,
}

impl Partition {
    /// `assignment[b]` is the action for outcome `b`; it must cover all
    /// `2^|measured|` outcomes and every action in `0..=max` must own one.
    pub fn new(measured_qubits: Vec<usize>, assignment: Vec<usize>) -> Result<Self> {
        if measured_qubits.is_empty() {
            return Err(Error::Partition("no measured qubits".into()));
        }
        if measured_qubits.len() > 20 {
            return Err(Error::Partition("too many measured qubits".into()));
        }
        let mut sorted = measured_qubits.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != measured_qubits.len() {
            return Err(Error::Partition("measured qubits must be distinct".into()));
        }
        check_len("partition assignment", 1 << measured_qubits.len(), assignment.len())?;
        let n_actions = assignment.iter().max().map_or(0, |m| m + 1);
        for a in 0..n_actions {
            if !assignment.contains(&a) {
                return Err(Error::Partition(format!("action {a} has no outcomes")));
            }
        }
        Ok(Self {
            measured_qubits,
            assignment,
            n_actions,
        })
    }

    /// `int(b) mod n_actions = a`.
    pub fn modulo(measured_qubits: Vec<usize>, n_actions: usize) -> Result<Self> {
        if n_actions == 0 {
            return Err(Error::Partition("n_actions must be positive".into()));
        }
        let outcomes = 1usize << measured_qubits.len().min(20);
        Self::new(measured_qubits, (0..outcomes).map(|b| b % n_actions).collect())
    }

    pub fn measured_qubits(&self) -> &[usize] {
        &self.measured_qubits
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// `|V_a|`: number of measured outcomes assigned to `action`.
    pub fn outcome_count(&self, action: usize) -> usize {
        self.assignment.iter().filter(|&&a| a == action).count()
    }

    /// Number of full computational-basis states of an `n_qubits` register
    /// that fall into the largest action set.
    pub fn max_basis_states(&self, n_qubits: usize) -> usize {
        let unmeasured = n_qubits.saturating_sub(self.measured_qubits.len());
        let largest = (0..self.n_actions).map(|a| self.outcome_count(a)).max().unwrap_or(0);
        largest << unmeasured
    }

    fn validate_for(&self, n_qubits: usize) -> Result<()> {
        match self.measured_qubits.iter().find(|&&q| q >= n_qubits) {
            Some(&q) => Err(Error::Index {
                context: "measured qubit",
                index: q,
                limit: n_qubits,
            }),
            None => Ok(()),
        }
    }

    fn outcome_of(&self, basis_index: usize) -> usize {
        self.measured_qubits
            .iter()
            .enumerate()
            .fold(0, |b, (i, &q)| b | (((basis_index >> q) & 1) << i))
    }
}

/// `⟨P_a⟩` for every action, marginalizing unmeasured qubits exactly.
pub fn partition_probs(state: &Statevector, partition: &Partition) -> Result<Vec<f64>> {
    partition.validate_for(state.n_qubits)?;
    let mut probs = vec![0.0; partition.n_actions];
    for (idx, amp) in state.amplitudes.iter().enumerate() {
        probs[partition.assignment[partition.outcome_of(idx)]] += amp.norm_sqr();
    }
    Ok(probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn ry_program() -> AnsatzSpec {
        AnsatzSpec::new(1, 1, vec![Gate::rot(Axis::Y, 0, Slot::Variational(0))]).unwrap()
    }

    fn random_ansatz(rng: &mut ChaCha8Rng, n: usize, layers: usize) -> (AnsatzSpec, Vec<f64>, Vec<f64>) {
        let ansatz = AnsatzSpec::reuploading(n, layers, 4).unwrap();
        let theta = (0..ansatz.n_params()).map(|_| rng.gen_range(-PI..PI)).collect();
        let feats = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        (ansatz, theta, feats)
    }

    #[test]
    fn shifted_states_match_full_runs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (a, theta, x) = random_ansatz(&mut rng, 3, 2);
        let (base, pairs) = shifted_states(&a, &theta, &x, 0.7).unwrap();
        assert_eq!(base, prepare_state(&a, &theta, &x).unwrap());
        for (j, (plus, minus)) in pairs.iter().enumerate() {
            let mut t = theta.clone();
            t[j] += 0.7;
            assert_eq!(*plus, prepare_state(&a, &t, &x).unwrap());
            t[j] = theta[j] - 0.7;
            assert_eq!(*minus, prepare_state(&a, &t, &x).unwrap());
        }
    }

    #[test]
    fn hadamard_on_zero() {
        let a = AnsatzSpec::new(1, 0, vec![Gate::Hadamard(0)]).unwrap();
        let s = prepare_state(&a, &[], &[]).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0].re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[1].re, FRAC_1_SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn ry_closed_form() {
        let a = ry_program();
        let s = prepare_state(&a, &[0.0], &[]).unwrap();
        assert_eq!(s.amplitudes()[0], Complex64::new(1.0, 0.0));
        assert_eq!(s.amplitudes()[1], Complex64::new(0.0, 0.0));
        let s = prepare_state(&a, &[PI / 2.0], &[]).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0].re, (PI / 4.0).cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[1].re, (PI / 4.0).sin(), epsilon = 1e-15);
    }

    #[test]
    fn dimension_errors() {
        let a = ry_program();
        assert!(matches!(prepare_state(&a, &[], &[]), Err(Error::Dimension { .. })));
        let r = AnsatzSpec::reuploading(2, 1, 4).unwrap();
        let theta = vec![0.0; r.n_params()];
        assert!(matches!(prepare_state(&r, &theta, &[0.0; 3]), Err(Error::Dimension { .. })));
        assert!(matches!(
            prepare_state(&a, &[f64::NAN], &[]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn rejects_duplicate_parameters() {
        let gates = vec![
            Gate::rot(Axis::Y, 0, Slot::Variational(0)),
            Gate::rot(Axis::Z, 0, Slot::Variational(0)),
        ];
        assert!(AnsatzSpec::new(1, 1, gates).is_err());
        let gap = vec![Gate::rot(Axis::Y, 0, Slot::Variational(1))];
        assert!(AnsatzSpec::new(1, 1, gap).is_err());
    }

    #[test]
    fn reuploading_shape() {
        for (n, l) in [(1, 1), (2, 3), (4, 4), (4, 5)] {
            let a = AnsatzSpec::reuploading(n, l, 4).unwrap();
            assert_eq!(a.n_params(), 2 * n * (l + 1));
            assert!(a.has_hadamard_wall());
        }
        // wrap-around: 6 qubits over 4 features
        let a = AnsatzSpec::reuploading(6, 1, 4).unwrap();
        assert_eq!(a.n_features(), 4);
    }

    #[test]
    fn partition_examples() {
        let wall = AnsatzSpec::new(2, 0, vec![Gate::Hadamard(0), Gate::Hadamard(1)]).unwrap();
        let uniform = prepare_state(&wall, &[], &[]).unwrap();
        let p = partition_probs(&uniform, &Partition::new(vec![0], vec![0, 1]).unwrap()).unwrap();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-12);

        let s = prepare_state(&ry_program(), &[PI / 3.0], &[]).unwrap();
        let p = partition_probs(&s, &Partition::new(vec![0], vec![0, 1]).unwrap()).unwrap();
        assert_abs_diff_eq!(p[0], 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.25, epsilon = 1e-12);

        let mod3 = Partition::modulo(vec![0, 1], 3).unwrap();
        assert_eq!(mod3.assignment(), &[0, 1, 2, 0]);
        let p = partition_probs(&uniform, &mod3).unwrap();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(p[2], 0.25, epsilon = 1e-12);
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(vec![], vec![0]).is_err());
        assert!(Partition::new(vec![0], vec![0]).is_err());
        assert!(Partition::new(vec![0], vec![0, 2]).is_err());
        assert!(Partition::new(vec![1, 1], vec![0, 1, 0, 1]).is_err());
        let s = Statevector::zero(1);
        let p = Partition::new(vec![3], vec![0, 1]).unwrap();
        assert!(matches!(partition_probs(&s, &p), Err(Error::Index { .. })));
    }

    #[test]
    fn partition_outcome_counts() {
        let cart = Partition::new(vec![0], vec![0, 1]).unwrap();
        assert_eq!(cart.outcome_count(0), 1);
        assert_eq!(cart.max_basis_states(4), 8);
        let all = Partition::modulo(vec![0, 1, 2, 3], 3).unwrap();
        assert_eq!(all.outcome_count(0), 6);
        assert_eq!(all.outcome_count(1), 5);
    }

    #[test]
    fn overlap_examples() {
        let zero = Statevector::zero(1);
        let one = Statevector::from_amplitudes(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)])
            .unwrap();
        let plus = Statevector::from_amplitudes(vec![
            Complex64::new(FRAC_1_SQRT_2, 0.0),
            Complex64::new(FRAC_1_SQRT_2, 0.0),
        ])
        .unwrap();
        assert_abs_diff_eq!(overlap_sq(&plus, &plus).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(overlap_sq(&zero, &one).unwrap(), 0.0);
        assert_abs_diff_eq!(overlap_sq(&plus, &zero).unwrap(), 0.5, epsilon = 1e-15);
        assert!(overlap_sq(&zero, &Statevector::zero(2)).is_err());
    }

    #[test]
    fn derivative_examples() {
        let a = ry_program();
        let d = state_derivative(&a, &[0.0], &[], 0).unwrap();
        assert_abs_diff_eq!(d[0].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d[1].re, 0.5, epsilon = 1e-15);
        assert!(matches!(state_derivative(&a, &[0.0], &[], 1), Err(Error::Index { .. })));

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (ansatz, theta, feats) = random_ansatz(&mut rng, 3, 2);
        for j in 0..ansatz.n_params() {
            let d = state_derivative(&ansatz, &theta, &feats, j).unwrap();
            let norm: f64 = d.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            assert_abs_diff_eq!(norm, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        let h = 1e-5;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let (ansatz, theta, feats) = random_ansatz(&mut rng, 4, 2);
            let mut worst: f64 = 0.0;
            for j in 0..ansatz.n_params() {
                let d = state_derivative(&ansatz, &theta, &feats, j).unwrap();
                let mut tp = theta.clone();
                tp[j] += h;
                let mut tm = theta.clone();
                tm[j] -= h;
                let sp = prepare_state(&ansatz, &tp, &feats).unwrap();
                let sm = prepare_state(&ansatz, &tm, &feats).unwrap();
                for (i, di) in d.iter().enumerate() {
                    let fd = (sp.amplitudes()[i] - sm.amplitudes()[i]) / (2.0 * h);
                    worst = worst.max((fd - di).norm());
                }
            }
            assert!(worst < 1e-8, "max derivative error {worst}");
        }
    }

    #[test]
    fn zero_theta_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (n, l) in [(4, 4), (4, 5), (3, 2)] {
            let a = AnsatzSpec::reuploading(n, l, 4).unwrap();
            let theta = vec![0.0; a.n_params()];
            for _ in 0..20 {
                let f: Vec<f64> = (0..4).map(|_| rng.gen_range(-5.0..5.0)).collect();
                let s = prepare_state(&a, &theta, &f).unwrap();
                for p in s.probabilities() {
                    assert_abs_diff_eq!(p, 1.0 / (1 << n) as f64, epsilon = 1e-12);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn norm_is_preserved(
            seed in any::<u64>(),
            n in 1usize..5,
            layers in 0usize..4,
            scale in 0.1f64..10.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = AnsatzSpec::reuploading(n, layers, 4).unwrap();
            let theta: Vec<f64> = (0..a.n_params()).map(|_| rng.gen_range(-scale..scale)).collect();
            let f: Vec<f64> = (0..4).map(|_| rng.gen_range(-scale..scale)).collect();
            let s = prepare_state(&a, &theta, &f).unwrap();
            prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
            let p = partition_probs(&s, &Partition::modulo((0..n).collect(), 3.min(1 << n)).unwrap()).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            prop_assert!(p.iter().all(|&x| (0.0..=1.0 + 1e-12).contains(&x)));
        }
    }
}
