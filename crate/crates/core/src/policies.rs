//! Born and Softmax policies on top of projector expectations.
//!
//! Gradients of `⟨P_a⟩` use the two-term parameter-shift rule, which is exact
//! for rotations whose generator has eigenvalues ±½.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::simulator::{partition_probs, prepare_state, shifted_states, AnsatzSpec, Partition, Statevector};

/// Below this probability a sampled Born action is treated as degenerate.
pub const BORN_DEGENERATE_PROB: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Born,
    Softmax,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaSchedule {
    Constant,
    /// Linear ramp from 1 to `beta_final` over `over_episodes` episodes.
    LinearAnneal { over_episodes: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    pub partition: Partition,
    /// Inverse temperature reached at the end of the schedule. Ignored by Born.
    pub beta_final: f64,
    pub schedule: BetaSchedule,
}

impl PolicySpec {
    pub fn born(partition: Partition) -> Self {
        Self {
            kind: PolicyKind::Born,
            partition,
            beta_final: 1.0,
            schedule: BetaSchedule::Constant,
        }
    }

    pub fn softmax(partition: Partition, beta_final: f64, schedule: BetaSchedule) -> Self {
        Self {
            kind: PolicyKind::Softmax,
            partition,
            beta_final,
            schedule,
        }
    }

    pub fn n_actions(&self) -> usize {
        self.partition.n_actions()
    }

    pub fn beta_at(&self, episode: usize, total_episodes: usize) -> Result<f64> {
        beta_at(self.schedule, self.beta_final, episode, total_episodes)
    }

    /// Empirical smoothness constants of the log policy: `β|A|M²` with
    /// `M = 1` for Softmax, `|V_a|/4` for the clipped Born gradient.
    pub fn smoothness_constant(&self, action: usize, beta: f64) -> f64 {
        match self.kind {
            PolicyKind::Softmax => beta * self.n_actions() as f64,
            PolicyKind::Born => self.partition.outcome_count(action) as f64 / 4.0,
        }
    }
}

/// Inverse temperature at `episode`.
pub fn beta_at(
    schedule: BetaSchedule,
    beta_final: f64,
    episode: usize,
    total_episodes: usize,
) -> Result<f64> {
    if total_episodes == 0 {
        return Err(Error::InvalidArgument("total_episodes must be positive".into()));
    }
    if episode > total_episodes {
        return Err(Error::InvalidArgument(format!(
            "episode {episode} exceeds total {total_episodes}"
        )));
    }
    Ok(match schedule {
        BetaSchedule::Constant => beta_final,
        BetaSchedule::LinearAnneal { over_episodes } => {
            if over_episodes == 0 || episode >= over_episodes {
                beta_final
            } else {
                1.0 + (beta_final - 1.0) * episode as f64 / over_episodes as f64
            }
        }
    })
}

/// Max-subtracted softmax of `beta * prefs`.
pub fn softmax(prefs: &[f64], beta: f64) -> Vec<f64> {
    let max = prefs.iter().fold(f64::NEG_INFINITY, |m, &p| m.max(beta * p));
    let exps: Vec<f64> = prefs.iter().map(|&p| (beta * p - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Action probabilities for a prepared state.
pub fn action_distribution(policy: &PolicySpec, state: &Statevector, beta: f64) -> Result<Vec<f64>> {
    if policy.n_actions() == 0 {
        return Err(Error::Partition("empty partition".into()));
    }
    let prefs = partition_probs(state, &policy.partition)?;
    distribution_from_expectations(policy, &prefs, beta)
}

fn distribution_from_expectations(policy: &PolicySpec, prefs: &[f64], beta: f64) -> Result<Vec<f64>> {
    match policy.kind {
        PolicyKind::Born => Ok(prefs.to_vec()),
        PolicyKind::Softmax => {
            if !(beta > 0.0 && beta.is_finite()) {
                return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
            }
            Ok(softmax(prefs, beta))
        }
    }
}

/// `⟨P_a⟩` for every action.
pub fn projector_expectations(
    ansatz: &AnsatzSpec,
    theta: &[f64],
    features: &[f64],
    partition: &Partition,
) -> Result<Vec<f64>> {
    partition_probs(&prepare_state(ansatz, theta, features)?, partition)
}

fn shifted(theta: &[f64], j: usize, delta: f64) -> Vec<f64> {
    let mut t = theta.to_vec();
    t[j] += delta;
    t
}

fn check_param(ansatz: &AnsatzSpec, j: usize) -> Result<()> {
    if j < ansatz.n_params() {
        Ok(())
    } else {
        Err(Error::Index {
            context: "parameter",
            index: j,
            limit: ansatz.n_params(),
        })
    }
}

fn check_action(partition: &Partition, action: usize) -> Result<()> {
    if action < partition.n_actions() {
        Ok(())
    } else {
        Err(Error::Index {
            context: "action",
            index: action,
            limit: partition.n_actions(),
        })
    }
}

/// `½[⟨P_a⟩(θ + π/2·e_j) − ⟨P_a⟩(θ − π/2·e_j)]`.
pub fn parameter_shift_derivative(
    ansatz: &AnsatzSpec,
    theta: &[f64],
    features: &[f64],
    partition: &Partition,
    action: usize,
    j: usize,
) -> Result<f64> {
    check_len("theta", ansatz.n_params(), theta.len())?;
    check_param(ansatz, j)?;
    check_action(partition, action)?;
    let plus = projector_expectations(ansatz, &shifted(theta, j, FRAC_PI_2), features, partition)?;
    let minus = projector_expectations(ansatz, &shifted(theta, j, -FRAC_PI_2), features, partition)?;
    Ok(0.5 * (plus[action] - minus[action]))
}

/// `⟨P_a⟩` and the parameter-shift Jacobian `∂_j⟨P_a⟩` for all actions,
/// using `2k + 1` circuit evaluations.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpectationJacobian {
    pub expectations: Vec<f64>,
    /// `rows[a][j] = ∂⟨P_a⟩/∂θ_j`.
    pub rows: Vec<Vec<f64>>,
}

pub fn expectation_jacobian(
    ansatz: &AnsatzSpec,
    theta: &[f64],
    features: &[f64],
    partition: &Partition,
) -> Result<ExpectationJacobian> {
    check_len("theta", ansatz.n_params(), theta.len())?;
    let (base, pairs) = shifted_states(ansatz, theta, features, FRAC_PI_2)?;
    let expectations = partition_probs(&base, partition)?;
    let mut rows = vec![vec![0.0; pairs.len()]; partition.n_actions()];
    for (j, (plus, minus)) in pairs.iter().enumerate() {
        let plus = partition_probs(plus, partition)?;
        let minus = partition_probs(minus, partition)?;
        for (a, row) in rows.iter_mut().enumerate() {
            row[j] = 0.5 * (plus[a] - minus[a]);
        }
    }
    Ok(ExpectationJacobian { expectations, rows })
}

/// Everything a policy needs at one state: probabilities plus the Jacobian
/// they were derived from.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyEvaluation {
    pub kind: PolicyKind,
    pub beta: f64,
    pub probs: Vec<f64>,
    pub jacobian: ExpectationJacobian,
}

impl PolicyEvaluation {
    pub fn new(
        policy: &PolicySpec,
        ansatz: &AnsatzSpec,
        theta: &[f64],
        features: &[f64],
        beta: f64,
    ) -> Result<Self> {
        let jacobian = expectation_jacobian(ansatz, theta, features, &policy.partition)?;
        let probs = distribution_from_expectations(policy, &jacobian.expectations, beta)?;
        Ok(Self {
            kind: policy.kind,
            beta,
            probs,
            jacobian,
        })
    }

    pub fn n_actions(&self) -> usize {
        self.probs.len()
    }

    /// `∇_θ log π(a|s,θ)`.
    pub fn log_gradient(&self, action: usize) -> Result<Vec<f64>> {
        if action >= self.n_actions() {
            return Err(Error::Index {
                context: "action",
                index: action,
                limit: self.n_actions(),
            });
        }
        let rows = &self.jacobian.rows;
        match self.kind {
            PolicyKind::Born => {
                let p = self.jacobian.expectations[action];
                if p < BORN_DEGENERATE_PROB {
                    return Err(Error::DegenerateAction {
                        action,
                        probability: p,
                    });
                }
                Ok(rows[action].iter().map(|d| d / p).collect())
            }
            PolicyKind::Softmax => {
                let k = rows[action].len();
                let mut mean = vec![0.0; k];
                for (p, row) in self.probs.iter().zip(rows) {
                    for (m, d) in mean.iter_mut().zip(row) {
                        *m += p * d;
                    }
                }
                Ok(rows[action]
                    .iter()
                    .zip(&mean)
                    .map(|(d, m)| self.beta * (d - m))
                    .collect())
            }
        }
    }

    /// Log-gradients of every action with non-degenerate probability, as
    /// `(action, π(a), ∇log π(a))`.
    pub fn log_gradients(&self) -> Vec<(usize, f64, Vec<f64>)> {
        (0..self.n_actions())
            .filter_map(|a| self.log_gradient(a).ok().map(|g| (a, self.probs[a], g)))
            .collect()
    }

    /// Born: `∇π(a)` (the log-gradient multiplied back by `π`). Softmax: the
    /// unclipped log-gradient.
    pub fn clipped_gradient(&self, action: usize) -> Result<Vec<f64>> {
        match self.kind {
            PolicyKind::Born => {
                check_action_count(action, self.n_actions())?;
                Ok(self.jacobian.rows[action].clone())
            }
            PolicyKind::Softmax => self.log_gradient(action),
        }
    }
}

fn check_action_count(action: usize, n: usize) -> Result<()> {
    if action < n {
        Ok(())
    } else {
        Err(Error::Index {
            context: "action",
            index: action,
            limit: n,
        })
    }
}

/// `∇_θ log π(a|s,θ)` via parameter shifts.
pub fn log_policy_gradient(
    policy: &PolicySpec,
    ansatz: &AnsatzSpec,
    theta: &[f64],
    features: &[f64],
    action: usize,
    beta: f64,
) -> Result<Vec<f64>> {
    PolicyEvaluation::new(policy, ansatz, theta, features, beta)?.log_gradient(action)
}

/// `⟨P⟩(x) = amplitude·sin(x + phase) + offset` along one parameter axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SineDecomposition {
    pub amplitude: f64,
    pub phase: f64,
    pub offset: f64,
}

impl SineDecomposition {
    pub fn eval(&self, x: f64) -> f64 {
        self.amplitude * (x + self.phase).sin() + self.offset
    }
}

/// Fits the sine form of `⟨P_a⟩` as a function of `θ_j` from three
/// evaluations at `θ_j`, `θ_j + π/2` and `θ_j + π`.
pub fn sine_decompose(
    ansatz: &AnsatzSpec,
    theta: &[f64],
    features: &[f64],
    partition: &Partition,
    action: usize,
    j: usize,
) -> Result<SineDecomposition> {
    check_len("theta", ansatz.n_params(), theta.len())?;
    check_param(ansatz, j)?;
    check_action(partition, action)?;
    let at = |delta: f64| -> Result<f64> {
        Ok(projector_expectations(ansatz, &shifted(theta, j, delta), features, partition)?[action])
    };
    let f0 = at(0.0)?;
    let f1 = at(FRAC_PI_2)?;
    let f2 = at(PI)?;
    let offset = 0.5 * (f0 + f2);
    // amplitude·sin(θ_j + phase) = f0 − offset, amplitude·cos(θ_j + phase) = f1 − offset
    let s = f0 - offset;
    let c = f1 - offset;
    let amplitude = s.hypot(c);
    let phase = if amplitude < 1e-15 {
        0.0
    } else {
        wrap_angle(s.atan2(c) - theta[j])
    };
    Ok(SineDecomposition {
        amplitude,
        phase,
        offset,
    })
}

/// Wraps into `(−π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut y = x.rem_euclid(two_pi);
    if y > PI {
        y -= two_pi;
    }
    y
}

/// Largest observed `‖g(θ) − g(θ')‖ / ‖θ − θ'‖` per action, with `g` the
/// Softmax log-gradient or the clipped Born gradient `∇π`.
///
/// Pair `i` is `(theta_samples[2i], theta_samples[2i+1])`. Coincident pairs
/// are skipped. The result is a lower bound on the true smoothness constant.
pub fn smoothness_estimate(
    policy: &PolicySpec,
    ansatz: &AnsatzSpec,
    theta_samples: &[Vec<f64>],
    features: &[f64],
    n_pairs: usize,
    beta: f64,
) -> Result<Vec<f64>> {
    if n_pairs == 0 {
        return Err(Error::InvalidArgument("n_pairs must be at least 1".into()));
    }
    if theta_samples.len() < 2 * n_pairs {
        return Err(Error::Dimension {
            context: "theta samples (two per pair)",
            expected: 2 * n_pairs,
            actual: theta_samples.len(),
        });
    }
    let n_actions = policy.n_actions();
    let mut best = vec![0.0_f64; n_actions];
    for pair in theta_samples.chunks_exact(2).take(n_pairs) {
        let (t0, t1) = (&pair[0], &pair[1]);
        let dist = euclidean(t0, t1);
        if dist < 1e-12 {
            continue;
        }
        let e0 = PolicyEvaluation::new(policy, ansatz, t0, features, beta)?;
        let e1 = PolicyEvaluation::new(policy, ansatz, t1, features, beta)?;
        for (a, slot) in best.iter_mut().enumerate() {
            let g0 = e0.clipped_gradient(a)?;
            let g1 = e1.clipped_gradient(a)?;
            *slot = slot.max(euclidean(&g0, &g1) / dist);
        }
    }
    Ok(best)
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}
