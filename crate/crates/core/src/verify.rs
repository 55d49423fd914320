//! Self-checks of the numerical core: each check compares two independent
//! routes to the same quantity, or tests an inequality that must hold.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::environments::N_FEATURES;
use crate::error::Result;
use crate::fisher::{
    approximation_error_gap, classical_fim_exhaustive, execution_count, min_eigenvalue, norm_comparison,
    quantum_fim_exact, quantum_fim_shift, ExecutionKind,
};
use crate::policies::{
    parameter_shift_derivative, projector_expectations, smoothness_estimate, BetaSchedule, PolicyEvaluation,
    PolicySpec,
};
use crate::simulator::{AnsatzSpec, Axis, Gate, Partition, Slot};

/// Outcome of one property check.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<28} measured={:.3e} threshold={:.3e}  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.threshold,
            self.detail
        )
    }
}

fn check(name: &str, passed: bool, measured: f64, threshold: f64, detail: String) -> Check {
    Check {
        name: name.to_string(),
        passed,
        measured,
        threshold,
        detail,
    }
}

/// Regularization used by the inverse-power checks. Small, so the
/// comparison is dominated by the matrices themselves.
pub const VERIFY_EPS: f64 = 1e-3;

fn uniform(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

fn normal(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// The CartPole circuit: 4 qubits, 4 layers, Born policy on qubit 0.
pub fn cartpole_born() -> (AnsatzSpec, PolicySpec) {
    let ansatz = AnsatzSpec::reuploading(4, 4, N_FEATURES).expect("valid ansatz");
    let policy = PolicySpec::born(Partition::new(vec![0], vec![0, 1]).expect("valid partition"));
    (ansatz, policy)
}

/// Exhaustive classical FIM and exact QFIM at a single state.
pub fn fisher_pair(
    policy: &PolicySpec,
    ansatz: &AnsatzSpec,
    theta: &[f64],
    features: &[f64],
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let eval = PolicyEvaluation::new(policy, ansatz, theta, features, 1.0)?;
    let grads = eval.log_gradients();
    let k = ansatz.n_params();
    let fc = classical_fim_exhaustive(
        std::iter::once(grads.iter().map(|(_, p, g)| (*p, g.as_slice()))),
        k,
    )?;
    let fq = quantum_fim_exact(ansatz, theta, &[features.to_vec()])?;
    Ok((fc.entries, fq.entries))
}

/// Four-overlap QFIM against the analytic-derivative QFIM on random
/// re-uploading circuits (n ≤ 4, L ≤ 3).
pub fn qfim_oracle(seed: u64, n_instances: usize) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..n_instances {
        let n = rng.gen_range(1..=4);
        let l = rng.gen_range(1..=3);
        let ansatz = AnsatzSpec::reuploading(n, l, N_FEATURES)?;
        let theta = uniform(&mut rng, ansatz.n_params(), -PI, PI);
        let feats = vec![uniform(&mut rng, N_FEATURES, -2.0, 2.0)];
        let shift = quantum_fim_shift(&ansatz, &theta, &feats)?;
        let exact = quantum_fim_exact(&ansatz, &theta, &feats)?;
        worst = worst.max((shift.entries - exact.entries).amax());
    }
    Ok(check(
        "qfim_shift_vs_exact",
        worst < 1e-8,
        worst,
        1e-8,
        format!("{n_instances} random circuits, max entry error"),
    ))
}

/// Parameter-shift derivatives of `⟨P_a⟩` and of `log π` against central
/// finite differences.
pub fn parameter_shift(seed: u64, n_instances: usize) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-5;
    let (mut worst_p, mut worst_log) = (0.0_f64, 0.0_f64);
    for i in 0..n_instances {
        let n = rng.gen_range(1..=3);
        let l = rng.gen_range(1..=2);
        let ansatz = AnsatzSpec::reuploading(n, l, N_FEATURES)?;
        let n_actions = if n >= 2 { rng.gen_range(2..=3) } else { 2 };
        let measured: Vec<usize> = (0..n.min(2)).collect();
        let partition = Partition::modulo(measured, n_actions)?;
        let policy = if i % 2 == 0 {
            PolicySpec::born(partition.clone())
        } else {
            PolicySpec::softmax(partition.clone(), rng.gen_range(0.5..3.0), BetaSchedule::Constant)
        };
        let beta = policy.beta_final;
        let theta = uniform(&mut rng, ansatz.n_params(), -PI, PI);
        let x = uniform(&mut rng, N_FEATURES, -2.0, 2.0);
        let action = rng.gen_range(0..n_actions);
        let eval = PolicyEvaluation::new(&policy, &ansatz, &theta, &x, beta)?;
        let log_grad = eval.log_gradient(action).ok();
        for j in 0..ansatz.n_params() {
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[j] += h;
            tm[j] -= h;
            let ep = projector_expectations(&ansatz, &tp, &x, &partition)?;
            let em = projector_expectations(&ansatz, &tm, &x, &partition)?;
            let fd = (ep[action] - em[action]) / (2.0 * h);
            let ps = parameter_shift_derivative(&ansatz, &theta, &x, &partition, action, j)?;
            worst_p = worst_p.max((fd - ps).abs());
            if let Some(g) = &log_grad {
                let pp = PolicyEvaluation::new(&policy, &ansatz, &tp, &x, beta)?.probs[action];
                let pm = PolicyEvaluation::new(&policy, &ansatz, &tm, &x, beta)?.probs[action];
                let fd_log = (pp.ln() - pm.ln()) / (2.0 * h);
                worst_log = worst_log.max((fd_log - g[j]).abs());
            }
        }
    }
    Ok(vec![
        check(
            "parameter_shift_expectation",
            worst_p < 1e-8,
            worst_p,
            1e-8,
            format!("{n_instances} instances vs central differences"),
        ),
        check(
            "parameter_shift_log_policy",
            worst_log < 1e-6,
            worst_log,
            1e-6,
            format!("{n_instances} instances, Born and Softmax"),
        ),
    ])
}

/// `F ⪯ 𝓕` at random points of the CartPole circuit under a Born policy.
/// Reports the smallest eigenvalue of `𝓕 − F`.
pub fn loewner_order(seed: u64, n_points: usize) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ansatz, policy) = cartpole_born();
    let mut worst = f64::INFINITY;
    for _ in 0..n_points {
        let theta = uniform(&mut rng, ansatz.n_params(), -PI, PI);
        let x = uniform(&mut rng, N_FEATURES, -2.0, 2.0);
        let (fc, fq) = fisher_pair(&policy, &ansatz, &theta, &x)?;
        worst = worst.min(min_eigenvalue(&(fq - fc)));
    }
    Ok(check(
        "loewner_order",
        worst >= -1e-6,
        worst,
        -1e-6,
        format!("{n_points} CartPole points, min eigenvalue of QFIM − FIM"),
    ))
}

/// Single-qubit `RY` with a computational-basis Born policy: the classical
/// and quantum information matrices coincide (both equal 1).
pub fn equality_case(seed: u64, n_points: usize) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ansatz = AnsatzSpec::new(1, 1, vec![Gate::rot(Axis::Y, 0, Slot::Variational(0))])?;
    let policy = PolicySpec::born(Partition::new(vec![0], vec![0, 1])?);
    let mut worst = 0.0_f64;
    for _ in 0..n_points {
        // stay away from θ = 0, π where one outcome has zero probability
        let theta = [rng.gen_range(0.1..PI - 0.1) * if rng.gen() { 1.0 } else { -1.0 }];
        let (fc, fq) = fisher_pair(&policy, &ansatz, &theta, &[])?;
        worst = worst.max((fc[(0, 0)] - fq[(0, 0)]).abs()).max((fq[(0, 0)] - 1.0).abs());
    }
    Ok(check(
        "equality_case",
        worst < 1e-8,
        worst,
        1e-8,
        format!("{n_points} angles, |FIM − QFIM| and |QFIM − 1|"),
    ))
}

/// `‖𝓕^(−½)v‖ ≤ ‖F^(−½)v‖` and `vᵀ(F^(−φ) − 𝓕^(−φ))v ≥ 0` for φ ∈ {½, 1}
/// at Born-policy points of the CartPole circuit.
pub fn inverse_power_checks(seed: u64, n_points: usize, n_vectors: usize) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ansatz, policy) = cartpole_born();
    let k = ansatz.n_params();
    let mut worst_norm = f64::NEG_INFINITY;
    let mut worst_gap = f64::INFINITY;
    for _ in 0..n_points {
        let theta = uniform(&mut rng, k, -PI, PI);
        let x = uniform(&mut rng, N_FEATURES, -2.0, 2.0);
        let (fc, fq) = fisher_pair(&policy, &ansatz, &theta, &x)?;
        for _ in 0..n_vectors {
            let v = normal(&mut rng, k);
            let (c, q) = norm_comparison(&fc, &fq, &v, 0.5, VERIFY_EPS)?;
            worst_norm = worst_norm.max(q - c);
        }
        for phi in [0.5, 1.0] {
            for _ in 0..10 {
                let v = normal(&mut rng, k);
                let gap = approximation_error_gap(&fc, &fq, &v, phi, VERIFY_EPS)?;
                worst_gap = worst_gap.min(gap);
            }
        }
    }
    Ok(vec![
        check(
            "sqrt_norm_comparison",
            worst_norm <= 1e-8,
            worst_norm,
            1e-8,
            format!("{n_points} points × {n_vectors} vectors, max ‖Q^-½v‖ − ‖F^-½v‖, ε = {VERIFY_EPS}"),
        ),
        check(
            "approximation_error_gap",
            worst_gap >= -1e-8,
            worst_gap,
            -1e-8,
            format!("φ ∈ {{0.5, 1}}, min vᵀ(F^-φ − Q^-φ)v, ε = {VERIFY_EPS}"),
        ),
    ])
}

/// Searches random pairs `A ⪯ B` for a vector with `‖B⁻¹v‖ > ‖A⁻¹v‖`:
/// the square-root norm ordering does not extend to φ = 1.
pub fn phi_one_counterexample(seed: u64, max_tries: usize) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = 3;
    let random_psd = |rng: &mut ChaCha8Rng| {
        let m = DMatrix::from_vec(k, k, normal(rng, k * k));
        &m * m.transpose()
    };
    let mut best = f64::NEG_INFINITY;
    for _ in 0..max_tries {
        let a = random_psd(&mut rng) + DMatrix::identity(k, k) * 0.01;
        let b = &a + random_psd(&mut rng);
        let v = normal(&mut rng, k);
        let (na, nb) = norm_comparison(&a, &b, &v, 1.0, 0.0)?;
        best = best.max((nb - na) / na);
        if best > 1e-3 {
            break;
        }
    }
    Ok(check(
        "phi_one_counterexample",
        best > 1e-3,
        best,
        1e-3,
        "relative excess ‖B⁻¹v‖/‖A⁻¹v‖ − 1 for some A ⪯ B".into(),
    ))
}

/// Empirical gradient smoothness on a random 4-qubit instance against the
/// analytic constants: β·|A| (Softmax) and |V_a|/4 (Born, on ∇π).
///
/// Pairs are drawn independently and uniformly over the parameter torus.
pub fn smoothness(seed: u64, n_pairs: usize) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ansatz = AnsatzSpec::reuploading(4, 2, N_FEATURES)?;
    let partition = Partition::modulo(vec![0, 1], 3)?;
    let x = uniform(&mut rng, N_FEATURES, -2.0, 2.0);
    let samples: Vec<Vec<f64>> = (0..2 * n_pairs)
        .map(|_| uniform(&mut rng, ansatz.n_params(), -PI, PI))
        .collect();
    let mut out = Vec::new();
    for (name, policy, beta) in [
        ("smoothness_softmax", PolicySpec::softmax(partition.clone(), 1.0, BetaSchedule::Constant), 1.0),
        ("smoothness_born", PolicySpec::born(partition.clone()), 1.0),
    ] {
        let est = smoothness_estimate(&policy, &ansatz, &samples, &x, n_pairs, beta)?;
        // worst ratio of estimate to bound over actions
        let ratio = est
            .iter()
            .enumerate()
            .map(|(a, e)| e / policy.smoothness_constant(a, beta))
            .fold(0.0, f64::max);
        out.push(check(
            name,
            ratio <= 1.0,
            ratio,
            1.0,
            format!("{n_pairs} pairs, max estimate/bound over actions; estimates {est:.3?}"),
        ));
    }
    Ok(out)
}

/// Execution counts for k ∈ {2, 4, 8}: quantum cost is `2k(k+1)` and does
/// not depend on the action set; classical Softmax needs `|A|` times more.
pub fn execution_accounting() -> Vec<Check> {
    let mut out = Vec::new();
    for k in [2usize, 4, 8] {
        let q2 = execution_count(ExecutionKind::Quantum, k, 4, 2, 2);
        let q3 = execution_count(ExecutionKind::Quantum, k, 4, 3, 4);
        let soft = execution_count(ExecutionKind::ClassicalSoftmax, k, 4, 3, 4);
        let born = execution_count(ExecutionKind::ClassicalBorn, k, 4, 3, 4);
        let expected = (2 * k * (k + 1)) as u64;
        let ok = q2 == expected && q3 == expected && soft == 3 * expected && born == 3 * 4 * (k * (k + 1) / 2) as u64;
        out.push(check(
            &format!("execution_count_k{k}"),
            ok,
            q2 as f64,
            expected as f64,
            format!("quantum {q2}, classical softmax(|A|=3) {soft}, classical born(|V|=4) {born}"),
        ));
    }
    out
}

/// Every check with the sample sizes used by `qnpg verify`.
pub fn run_all(seed: u64) -> Result<Vec<Check>> {
    let mut out = vec![qfim_oracle(seed, 20)?];
    out.extend(parameter_shift(seed + 1, 50)?);
    out.push(loewner_order(seed + 2, 100)?);
    out.push(equality_case(seed + 3, 20)?);
    out.extend(inverse_power_checks(seed + 4, 20, 1000)?);
    out.push(phi_one_counterexample(seed + 5, 10_000)?);
    out.extend(smoothness(seed + 6, 200)?);
    out.extend(execution_accounting());
    Ok(out)
}
