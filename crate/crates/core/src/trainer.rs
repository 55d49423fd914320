//! REINFORCE with a per-timestep baseline, the training loop, and the
//! regret diagnostics comparing classical and quantum metrics.

use nalgebra::DVector;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::environments::EnvKind;
use crate::error::{check_len, Error, Result};
use crate::fisher::{
    classical_fim, classical_fim_exhaustive, execution_count, loewner_margin, natural_direction,
    quantum_fim_exact, sym_power, ExecutionKind, FisherMatrix,
};
use crate::optimizers::{adam_step, natural_step, Metric, OptimizerConfig, OptimizerKind, OptimizerState};
use crate::policies::{PolicyEvaluation, PolicyKind, PolicySpec};
use crate::simulator::{AnsatzSpec, Partition};

/// Tolerance of the Löwner check reported in diagnostics.
pub const LOEWNER_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub features: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    /// `∇log π(a_t|s_t)` of the sampled action.
    pub log_grad: Vec<f64>,
    /// `(π(a), ∇log π(a))` for every non-degenerate action at this state.
    pub action_grads: Vec<(f64, Vec<f64>)>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Episode {
    pub steps: Vec<Step>,
}

impl Episode {
    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// `N` episodes plus discounted returns and the per-timestep baseline.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryBatch {
    pub episodes: Vec<Episode>,
    /// `returns[i][t] = G_t(τ_i)`.
    pub returns: Vec<Vec<f64>>,
    /// Mean of `G_t` over the episodes that reached step `t`.
    pub baseline: Vec<f64>,
    pub gamma: f64,
}

impl TrajectoryBatch {
    pub fn new(episodes: Vec<Episode>) -> Self {
        Self {
            episodes,
            ..Self::default()
        }
    }

    pub fn n_steps(&self) -> usize {
        self.episodes.iter().map(Episode::len).sum()
    }

    pub fn steps(&self) -> impl Iterator<Item = &Step> {
        self.episodes.iter().flat_map(|e| e.steps.iter())
    }

    pub fn visited_features(&self) -> Vec<Vec<f64>> {
        self.steps().map(|s| s.features.clone()).collect()
    }

    pub fn mean_return(&self) -> f64 {
        if self.episodes.is_empty() {
            return 0.0;
        }
        self.episodes.iter().map(Episode::total_reward).sum::<f64>() / self.episodes.len() as f64
    }

    /// Backward recursion `G_t = r_t + γ G_{t+1}` and the alive-episode baseline.
    pub fn returns_and_baseline(&mut self, gamma: f64) -> Result<()> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::InvalidArgument(format!("gamma must lie in (0, 1], got {gamma}")));
        }
        self.gamma = gamma;
        self.returns = self
            .episodes
            .iter()
            .map(|ep| {
                let mut g = vec![0.0; ep.len()];
                let mut acc = 0.0;
                for (t, step) in ep.steps.iter().enumerate().rev() {
                    acc = step.reward + gamma * acc;
                    g[t] = acc;
                }
                g
            })
            .collect();
        let horizon = self.returns.iter().map(Vec::len).max().unwrap_or(0);
        let mut sum = vec![0.0; horizon];
        let mut count = vec![0usize; horizon];
        for g in &self.returns {
            for (t, v) in g.iter().enumerate() {
                sum[t] += v;
                count[t] += 1;
            }
        }
        self.baseline = sum.iter().zip(&count).map(|(s, &c)| s / c as f64).collect();
        Ok(())
    }

    /// `(1/N) Σ_i Σ_t (G_t(τ_i) − b_t) ∇log π(a_t|s_t)`.
    pub fn policy_gradient(&self) -> Result<Vec<f64>> {
        let first = self
            .steps()
            .next()
            .ok_or(Error::Empty("policy gradient needs at least one step"))?;
        if self.returns.len() != self.episodes.len() {
            return Err(Error::InvalidArgument("returns not computed; call returns_and_baseline".into()));
        }
        let k = first.log_grad.len();
        let mut grad = vec![0.0; k];
        for (ep, g) in self.episodes.iter().zip(&self.returns) {
            for (t, step) in ep.steps.iter().enumerate() {
                let adv = g[t] - self.baseline[t];
                check_len("log-policy gradient", k, step.log_grad.len())?;
                for (acc, x) in grad.iter_mut().zip(&step.log_grad) {
                    *acc += adv * x;
                }
            }
        }
        let n = self.episodes.len() as f64;
        grad.iter_mut().for_each(|x| *x /= n);
        Ok(grad)
    }

    /// Monte Carlo FIM from the sampled actions' log-gradients.
    pub fn classical_fim(&self, cost: &CostModel) -> Result<FisherMatrix> {
        let k = self.param_count()?;
        let f = classical_fim(self.steps().map(|s| s.log_grad.as_slice()), k)?;
        Ok(f.with_executions(cost.classical_per_state * self.n_steps() as u64))
    }

    /// FIM with the action expectation taken exactly at every visited state.
    pub fn classical_fim_exhaustive(&self, cost: &CostModel) -> Result<FisherMatrix> {
        let k = self.param_count()?;
        let f = classical_fim_exhaustive(
            self.steps()
                .map(|s| s.action_grads.iter().map(|(p, g)| (*p, g.as_slice()))),
            k,
        )?;
        Ok(f.with_executions(cost.classical_per_state * self.n_steps() as u64))
    }

    fn param_count(&self) -> Result<usize> {
        self.steps()
            .next()
            .map(|s| s.log_grad.len())
            .ok_or(Error::Empty("batch has no steps"))
    }
}

/// Per-visited-state circuit counts for both information matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CostModel {
    pub classical_per_state: u64,
    pub quantum_per_state: u64,
}

impl CostModel {
    pub fn new(policy: &PolicySpec, ansatz: &AnsatzSpec) -> Self {
        let k = ansatz.n_params();
        let n = ansatz.n_qubits();
        let partition: &Partition = &policy.partition;
        let classical_kind = match policy.kind {
            PolicyKind::Born => ExecutionKind::ClassicalBorn,
            PolicyKind::Softmax => ExecutionKind::ClassicalSoftmax,
        };
        Self {
            classical_per_state: execution_count(
                classical_kind,
                k,
                n,
                partition.n_actions(),
                partition.max_basis_states(n),
            ),
            quantum_per_state: execution_count(ExecutionKind::Quantum, k, n, partition.n_actions(), 1),
        }
    }
}

fn sample_action<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (a, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return a;
        }
    }
    // rounding left u above the cumulative sum; take the last action with mass
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

fn run_episode(
    env: EnvKind,
    policy: &PolicySpec,
    ansatz: &AnsatzSpec,
    theta: &[f64],
    beta: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Episode> {
    let mut state = env.reset(rng);
    let mut features = env.features(&state).to_vec();
    let mut steps = Vec::new();
    loop {
        let eval = PolicyEvaluation::new(policy, ansatz, theta, &features, beta)?;
        let action = sample_action(&eval.probs, rng);
        let log_grad = eval.log_gradient(action)?;
        let action_grads = eval.log_gradients().into_iter().map(|(_, p, g)| (p, g)).collect();
        let (next, result) = env.step(&state, action)?;
        steps.push(Step {
            features,
            action,
            reward: result.reward,
            log_grad,
            action_grads,
        });
        if result.done {
            return Ok(Episode { steps });
        }
        state = next;
        features = result.features.to_vec();
    }
}

/// Samples `batch_size` complete episodes under `π_θ`. Episode `i` draws from
/// stream `i` of a ChaCha generator keyed by `seed`, so the result does not
/// depend on scheduling.
pub fn collect_batch(
    env: EnvKind,
    policy: &PolicySpec,
    ansatz: &AnsatzSpec,
    theta: &[f64],
    batch_size: usize,
    beta: f64,
    seed: u64,
) -> Result<TrajectoryBatch> {
    check_len("theta", ansatz.n_params(), theta.len())?;
    let episodes = (0..batch_size)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            run_episode(env, policy, ansatz, theta, beta, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrajectoryBatch::new(episodes))
}

/// Measurable ingredients of the regret bound at one checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    /// Episodes completed before the checkpoint batch.
    pub episode: usize,
    pub mean_return: f64,
    pub w_norm_classical: f64,
    pub w_norm_quantum: f64,
    /// `Σ_t v_tᵀ(F^(−φ) − 𝓕^(−φ))v_t` over the batch's log-gradients.
    pub eps_gap: f64,
    pub loewner_ok: bool,
    /// `λ_min(𝓕 − F)`.
    pub loewner_margin: f64,
    pub executions_classical: u64,
    pub executions_quantum: u64,
}

/// Compares `w = (F+εI)^(−φ) g` under the exhaustive classical FIM and the
/// exact QFIM of the batch's visited states.
pub fn regret_diagnostics(
    batch: &TrajectoryBatch,
    theta: &[f64],
    ansatz: &AnsatzSpec,
    policy: &PolicySpec,
    phi: f64,
    eps: f64,
    episode: usize,
) -> Result<DiagnosticsRecord> {
    let cost = CostModel::new(policy, ansatz);
    let fc = batch.classical_fim_exhaustive(&cost)?;
    let fq = quantum_fim_exact(ansatz, theta, &batch.visited_features())?;
    let g = batch.policy_gradient()?;
    let wc = natural_direction(&fc, &g, phi, eps)?;
    let wq = natural_direction(&fq, &g, phi, eps)?;
    let reg = |m: &FisherMatrix| -> Result<nalgebra::DMatrix<f64>> {
        sym_power(&m.regularize(eps)?.entries, -phi, eps > 0.0)
    };
    let diff = reg(&fc)? - reg(&fq)?;
    let eps_gap = batch
        .steps()
        .map(|s| {
            let v = DVector::from_column_slice(&s.log_grad);
            v.dot(&(&diff * &v))
        })
        .sum();
    let margin = loewner_margin(&fc.entries, &fq.entries)?;
    let n_steps = batch.n_steps() as u64;
    Ok(DiagnosticsRecord {
        episode,
        mean_return: batch.mean_return(),
        w_norm_classical: norm(&wc),
        w_norm_quantum: norm(&wq),
        eps_gap,
        loewner_ok: margin >= -LOEWNER_TOL,
        loewner_margin: margin,
        executions_classical: cost.classical_per_state * n_steps,
        executions_quantum: cost.quantum_per_state * n_steps,
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Everything needed for one training run apart from the seed.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub label: String,
    pub env: EnvKind,
    pub policy: PolicySpec,
    pub ansatz: AnsatzSpec,
    pub optimizer: OptimizerConfig,
    pub batch_size: usize,
    pub episodes: usize,
    pub gamma: f64,
    pub seeds: Vec<u64>,
    /// Diagnostics every this many updates; 0 disables them.
    pub diagnostics_every: usize,
}

impl ExperimentConfig {
    /// Benchmark defaults: 4 qubits, 4 layers (CartPole) or 5 (Acrobot),
    /// batch 10, 500 episodes, γ = 0.99, five seeds.
    pub fn standard(env: EnvKind, kind: PolicyKind, optimizer: OptimizerConfig) -> Result<Self> {
        let (layers, partition) = match env {
            EnvKind::CartPole => (4, Partition::new(vec![0], vec![0, 1])?),
            EnvKind::Acrobot => (5, Partition::modulo(vec![0, 1], 3)?),
        };
        let policy = match kind {
            PolicyKind::Born => PolicySpec::born(partition),
            PolicyKind::Softmax => {
                PolicySpec::softmax(partition, 1.0, crate::policies::BetaSchedule::Constant)
            }
        };
        Ok(Self {
            label: optimizer.label(),
            env,
            policy,
            ansatz: AnsatzSpec::reuploading(4, layers, crate::environments::N_FEATURES)?,
            optimizer,
            batch_size: 10,
            episodes: 500,
            gamma: 0.99,
            seeds: (0..5).collect(),
            diagnostics_every: 10,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.batch_size == 0 {
            return bad("training.batch_size must be at least 1".into());
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("training.gamma must lie in (0, 1], got {}", self.gamma));
        }
        if !self.ansatz.has_hadamard_wall() {
            return bad("ansatz must open with a Hadamard on every qubit".into());
        }
        if self.ansatz.n_features() > crate::environments::N_FEATURES {
            return bad(format!(
                "ansatz reads {} features but environments expose {}",
                self.ansatz.n_features(),
                crate::environments::N_FEATURES
            ));
        }
        if let Some(&q) = self
            .policy
            .partition
            .measured_qubits()
            .iter()
            .find(|&&q| q >= self.ansatz.n_qubits())
        {
            return bad(format!("policy measures qubit {q} outside the {}-qubit ansatz", self.ansatz.n_qubits()));
        }
        if self.policy.n_actions() != self.env.n_actions() {
            return bad(format!(
                "policy has {} actions but {} needs {}",
                self.policy.n_actions(),
                self.env.name(),
                self.env.n_actions()
            ));
        }
        if self.policy.kind == PolicyKind::Softmax && !(self.policy.beta_final > 0.0 && self.policy.beta_final.is_finite()) {
            return bad(format!("policy.beta_final must be positive, got {}", self.policy.beta_final));
        }
        self.optimizer.validate()
    }
}

/// Result of one seed's training run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainOutcome {
    /// Undiscounted return of every episode, in order.
    pub curve: Vec<f64>,
    pub diagnostics: Vec<DiagnosticsRecord>,
    pub theta: Vec<f64>,
    /// What estimating each metric at every visited state would have cost.
    pub executions_classical: u64,
    pub executions_quantum: u64,
}

/// A run stopped early; `partial` holds everything produced so far.
#[derive(Debug, Clone, PartialEq)]
pub struct Aborted {
    pub reason: Error,
    pub partial: Box<TrainOutcome>,
}

impl std::fmt::Display for Aborted {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "training aborted after {} episodes: {}",
            self.partial.curve.len(),
            self.reason
        )
    }
}

impl std::error::Error for Aborted {}

/// Trains from θ = 0, one gradient step per batch.
pub fn train(config: &ExperimentConfig, seed: u64) -> std::result::Result<TrainOutcome, Aborted> {
    let k = config.ansatz.n_params();
    let mut out = TrainOutcome {
        theta: vec![0.0; k],
        ..TrainOutcome::default()
    };
    if let Err(reason) = config.validate() {
        return Err(Aborted { reason, partial: Box::new(out) });
    }
    match train_loop(config, seed, &mut out) {
        Ok(()) => Ok(out),
        Err(reason) => Err(Aborted { reason, partial: Box::new(out) }),
    }
}

fn train_loop(config: &ExperimentConfig, seed: u64, out: &mut TrainOutcome) -> Result<()> {
    let cost = CostModel::new(&config.policy, &config.ansatz);
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut opt_state = OptimizerState::new(config.ansatz.n_params());
    let mut episode = 0usize;
    let mut update = 0usize;
    while episode < config.episodes {
        let n = config.batch_size.min(config.episodes - episode);
        let beta = config.policy.beta_at(episode, config.episodes)?;
        let mut batch = collect_batch(
            config.env,
            &config.policy,
            &config.ansatz,
            &out.theta,
            n,
            beta,
            master.next_u64(),
        )?;
        batch.returns_and_baseline(config.gamma)?;
        out.curve.extend(batch.episodes.iter().map(Episode::total_reward));
        let steps = batch.n_steps() as u64;
        out.executions_classical += cost.classical_per_state * steps;
        out.executions_quantum += cost.quantum_per_state * steps;

        if config.diagnostics_every > 0 && update.is_multiple_of(config.diagnostics_every) {
            let phi = match config.optimizer.kind {
                OptimizerKind::Natural => config.optimizer.phi,
                OptimizerKind::Adam => 1.0,
            };
            out.diagnostics.push(regret_diagnostics(
                &batch,
                &out.theta,
                &config.ansatz,
                &config.policy,
                phi,
                config.optimizer.eps,
                episode,
            )?);
        }

        let grad = batch.policy_gradient()?;
        let theta = match config.optimizer.kind {
            OptimizerKind::Adam => {
                let (s, t) = adam_step(&opt_state, &out.theta, &grad, &config.optimizer)?;
                opt_state = s;
                t
            }
            OptimizerKind::Natural => {
                let fisher = match config.optimizer.metric {
                    Metric::Classical => batch.classical_fim(&cost)?,
                    Metric::Quantum => quantum_fim_exact(&config.ansatz, &out.theta, &batch.visited_features())?,
                };
                natural_step(&out.theta, &grad, &fisher, &config.optimizer)?
            }
        };
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("theta after update"));
        }
        out.theta = theta;
        episode += n;
        update += 1;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policies::BetaSchedule;
    use crate::simulator::{Axis, Gate, Slot};
    use approx::assert_abs_diff_eq;

    fn step(reward: f64, g: Vec<f64>) -> Step {
        Step {
            features: vec![0.0; 4],
            action: 0,
            reward,
            log_grad: g.clone(),
            action_grads: vec![(1.0, g)],
        }
    }

    fn episode(rewards: &[f64]) -> Episode {
        Episode {
            steps: rewards.iter().map(|&r| step(r, vec![1.0, -1.0])).collect(),
        }
    }

    #[test]
    fn returns_examples() {
        let mut b = TrajectoryBatch::new(vec![episode(&[1.0, 1.0, 1.0])]);
        b.returns_and_baseline(1.0).unwrap();
        assert_eq!(b.returns[0], vec![3.0, 2.0, 1.0]);
        assert_eq!(b.baseline, vec![3.0, 2.0, 1.0]);

        let mut b = TrajectoryBatch::new(vec![episode(&[1.0, 1.0])]);
        b.returns_and_baseline(0.5).unwrap();
        assert_eq!(b.returns[0], vec![1.5, 1.0]);
        assert!(b.returns_and_baseline(0.0).is_err());
    }

    #[test]
    fn baseline_over_alive_episodes() {
        let mut b = TrajectoryBatch::new(vec![episode(&[1.0, 1.0, 1.0]), episode(&[2.0])]);
        b.returns_and_baseline(1.0).unwrap();
        assert_eq!(b.baseline, vec![2.5, 2.0, 1.0]);
        for (ep, g) in b.episodes.iter().zip(&b.returns) {
            for t in 0..ep.len() {
                let next = g.get(t + 1).copied().unwrap_or(0.0);
                assert_eq!(g[t], ep.steps[t].reward + next);
            }
        }
    }

    #[test]
    fn identical_episodes_cancel() {
        let mut b = TrajectoryBatch::new(vec![episode(&[1.0, 2.0]), episode(&[1.0, 2.0])]);
        b.returns_and_baseline(0.9).unwrap();
        assert_eq!(b.policy_gradient().unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn single_term_gradient() {
        let mut b = TrajectoryBatch::new(vec![Episode {
            steps: vec![step(2.0, vec![1.0, -1.0])],
        }]);
        b.returns_and_baseline(1.0).unwrap();
        b.baseline = vec![0.0];
        assert_eq!(b.policy_gradient().unwrap(), vec![2.0, -2.0]);
        assert!(TrajectoryBatch::new(vec![]).policy_gradient().is_err());
    }

    #[test]
    fn sampling_edges() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sample_action(&[0.0, 1.0], &mut rng), 1);
        assert_eq!(sample_action(&[1.0, 0.0], &mut rng), 0);
    }

    fn small_config(opt: OptimizerConfig) -> ExperimentConfig {
        let mut c = ExperimentConfig::standard(EnvKind::CartPole, PolicyKind::Softmax, opt).unwrap();
        c.ansatz = AnsatzSpec::reuploading(2, 1, 4).unwrap();
        c.episodes = 6;
        c.batch_size = 3;
        c.diagnostics_every = 1;
        c
    }

    #[test]
    fn zero_episodes_is_empty() {
        let mut c = small_config(OptimizerConfig::adam(0.01));
        c.episodes = 0;
        let out = train(&c, 1).unwrap();
        assert!(out.curve.is_empty());
        assert!(out.theta.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn training_is_deterministic() {
        for opt in OptimizerConfig::standard_set(0.05, 0.1) {
            let c = small_config(opt);
            let a = train(&c, 42).unwrap();
            let b = train(&c, 42).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.curve.len(), 6);
            assert_eq!(a.diagnostics.len(), 2);
            assert_ne!(a.theta, vec![0.0; c.ansatz.n_params()]);
        }
    }

    #[test]
    fn invalid_config_aborts() {
        let mut c = small_config(OptimizerConfig::adam(0.01));
        c.gamma = 1.5;
        assert!(train(&c, 0).is_err());
        let mut c = small_config(OptimizerConfig::adam(0.01));
        c.policy = PolicySpec::softmax(Partition::modulo(vec![0, 1], 3).unwrap(), 1.0, BetaSchedule::Constant);
        assert!(c.validate().is_err());
    }

    #[test]
    fn bandit_ascent_increases_target_probability() {
        // one-state bandit: reward 1 iff action 0, direct gradient ascent
        let ansatz = AnsatzSpec::new(
            1,
            1,
            vec![Gate::Hadamard(0), Gate::rot(Axis::Y, 0, Slot::Variational(0))],
        )
        .unwrap();
        let policy = PolicySpec::born(Partition::new(vec![0], vec![0, 1]).unwrap());
        let mut theta = vec![0.0];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let prob0 = |t: &[f64]| PolicyEvaluation::new(&policy, &ansatz, t, &[], 1.0).unwrap().probs[0];
        let start = prob0(&theta);
        for _ in 0..200 {
            let eval = PolicyEvaluation::new(&policy, &ansatz, &theta, &[], 1.0).unwrap();
            let episodes = (0..10)
                .map(|_| {
                    let a = sample_action(&eval.probs, &mut rng);
                    Episode {
                        steps: vec![Step {
                            features: vec![],
                            action: a,
                            reward: if a == 0 { 1.0 } else { 0.0 },
                            log_grad: eval.log_gradient(a).unwrap(),
                            action_grads: vec![],
                        }],
                    }
                })
                .collect();
            let mut b = TrajectoryBatch::new(episodes);
            b.returns_and_baseline(1.0).unwrap();
            let g = b.policy_gradient().unwrap();
            theta[0] += 0.05 * g[0];
        }
        assert!(prob0(&theta) > start + 0.2, "{} -> {}", start, prob0(&theta));
    }

    #[test]
    fn equality_case_diagnostics() {
        // single-qubit computational-basis Born policy: F = 𝓕
        let ansatz = AnsatzSpec::new(
            1,
            1,
            vec![Gate::Hadamard(0), Gate::rot(Axis::Y, 0, Slot::Variational(0))],
        )
        .unwrap();
        let policy = PolicySpec::born(Partition::new(vec![0], vec![0, 1]).unwrap());
        let theta = vec![0.4];
        let eval = PolicyEvaluation::new(&policy, &ansatz, &theta, &[], 1.0).unwrap();
        let eps = vec![
            Episode { steps: vec![Step {
                features: vec![],
                action: 0,
                reward: 1.0,
                log_grad: eval.log_gradient(0).unwrap(),
                action_grads: eval.log_gradients().into_iter().map(|(_, p, g)| (p, g)).collect(),
            }] },
            Episode { steps: vec![Step {
                features: vec![],
                action: 1,
                reward: 0.0,
                log_grad: eval.log_gradient(1).unwrap(),
                action_grads: eval.log_gradients().into_iter().map(|(_, p, g)| (p, g)).collect(),
            }] },
        ];
        let mut b = TrajectoryBatch::new(eps);
        b.returns_and_baseline(1.0).unwrap();
        for phi in [0.5, 1.0] {
            let d = regret_diagnostics(&b, &theta, &ansatz, &policy, phi, 0.1, 0).unwrap();
            assert_abs_diff_eq!(d.eps_gap, 0.0, epsilon = 1e-10);
            assert_abs_diff_eq!(d.w_norm_classical, d.w_norm_quantum, epsilon = 1e-10);
            assert!(d.loewner_ok);
        }
    }
}
