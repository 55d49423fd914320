//! Experiment runner: TOML configs, multi-seed runs and CSV/JSON outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::environments::{EnvKind, N_FEATURES};
use crate::optimizers::OptimizerConfig;
use crate::policies::{BetaSchedule, PolicyKind, PolicySpec};
use crate::simulator::{AnsatzSpec, Partition};
use crate::trainer::{train, DiagnosticsRecord, ExperimentConfig, TrainOutcome};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const RUNNING_WINDOW: usize = 10;

/// Failures surfaced by the runner, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config {path}: {message}")]
    Config { path: String, message: String },
    #[error("run aborted: {0}")]
    Aborted(String),
    #[error("{0}")]
    Compare(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0} properties failed")]
    Verify(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Aborted(_) => 3,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvironmentSection {
    pub kind: EnvKind,
}

impl Default for EnvironmentSection {
    fn default() -> Self {
        Self {
            kind: EnvKind::CartPole,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicySection {
    pub kind: PolicyKind,
    pub beta_final: f64,
    /// Episodes of the linear β ramp from 1; 0 keeps β constant.
    pub anneal_episodes: usize,
    /// Defaults to `[0]` for CartPole and `[0, 1]` for Acrobot.
    pub measured_qubits: Option<Vec<usize>>,
    /// Outcome → action table; defaults to `int(b) mod |A|`.
    pub assignment: Option<Vec<usize>>,
}

impl Default for PolicySection {
    fn default() -> Self {
        Self {
            kind: PolicyKind::Softmax,
            beta_final: 1.0,
            anneal_episodes: 0,
            measured_qubits: None,
            assignment: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnsatzSection {
    pub n_qubits: usize,
    /// Defaults to 4 for CartPole and 5 for Acrobot.
    pub n_layers: Option<usize>,
}

impl Default for AnsatzSection {
    fn default() -> Self {
        Self {
            n_qubits: 4,
            n_layers: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSection {
    pub batch_size: usize,
    pub episodes: usize,
    pub gamma: f64,
    pub seeds: Vec<u64>,
    pub diagnostics_every: usize,
}

impl Default for TrainingSection {
    fn default() -> Self {
        Self {
            batch_size: 10,
            episodes: 500,
            gamma: 0.99,
            seeds: (0..5).collect(),
            diagnostics_every: 10,
        }
    }
}

/// On-disk experiment description. Every section and key is optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub label: Option<String>,
    pub environment: EnvironmentSection,
    pub policy: PolicySection,
    pub ansatz: AnsatzSection,
    pub optimizer: OptimizerConfig,
    pub training: TrainingSection,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text).map_err(|message| CliError::Config {
            path: path.display().to_string(),
            message,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical (sorted-key) JSON form, so key order and
    /// formatting in the source file do not matter.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let canonical = serde_json::to_string(&value).expect("json serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    /// Resolves defaults and validates, naming the offending field on failure.
    pub fn to_experiment(&self) -> Result<ExperimentConfig, String> {
        let env = self.environment.kind;
        let n_qubits = self.ansatz.n_qubits;
        let n_layers = self.ansatz.n_layers.unwrap_or(match env {
            EnvKind::CartPole => 4,
            EnvKind::Acrobot => 5,
        });
        let ansatz = AnsatzSpec::reuploading(n_qubits, n_layers, N_FEATURES)
            .map_err(|e| format!("ansatz: {e}"))?;
        let measured = self.policy.measured_qubits.clone().unwrap_or(match env {
            EnvKind::CartPole => vec![0],
            EnvKind::Acrobot => vec![0, 1],
        });
        let partition = match &self.policy.assignment {
            Some(table) => Partition::new(measured, table.clone()),
            None => Partition::modulo(measured, env.n_actions()),
        }
        .map_err(|e| format!("policy.measured_qubits/assignment: {e}"))?;
        let schedule = match self.policy.anneal_episodes {
            0 => BetaSchedule::Constant,
            n => BetaSchedule::LinearAnneal { over_episodes: n },
        };
        let policy = PolicySpec {
            kind: self.policy.kind,
            partition,
            beta_final: self.policy.beta_final,
            schedule,
        };
        let t = &self.training;
        if t.seeds.is_empty() {
            return Err("training.seeds must list at least one seed".into());
        }
        let config = ExperimentConfig {
            label: self.label.clone().unwrap_or_else(|| self.optimizer.label()),
            env,
            policy,
            ansatz,
            optimizer: self.optimizer.clone(),
            batch_size: t.batch_size,
            episodes: t.episodes,
            gamma: t.gamma,
            seeds: t.seeds.clone(),
            diagnostics_every: t.diagnostics_every,
        };
        config.validate().map_err(|e| e.to_string())?;
        Ok(config)
    }
}

/// Command-line overrides applied on top of a config file.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seeds: Option<Vec<u64>>,
    pub episodes: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub jobs: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeedArtifacts {
    pub seed: u64,
    pub curve: String,
    pub diagnostics: String,
    pub wall_clock_secs: f64,
    pub aborted: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub label: String,
    pub seeds: Vec<u64>,
    pub artifact_version: String,
    pub runs: Vec<SeedArtifacts>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub label: String,
    pub environment: EnvKind,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub episodes: usize,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub running_mean_10: Vec<f64>,
    /// Mean return over each seed's last 50 episodes.
    pub final_50_mean: Vec<f64>,
    pub executions_classical_total: u64,
    pub executions_quantum_total: u64,
    pub aborted_seeds: Vec<u64>,
}

/// Output directory for a config: `<base>/<config file stem>`.
pub fn run_dir(config_path: &Path, out_dir: Option<&Path>) -> PathBuf {
    let base = out_dir
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os("QNPG_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"));
    let stem = config_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    base.join(stem)
}

/// Trailing mean over up to `window` entries ending at each index.
pub fn running_mean(values: &[f64], window: usize) -> Vec<f64> {
    (0..values.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(window);
            values[lo..=i].iter().sum::<f64>() / (i + 1 - lo) as f64
        })
        .collect()
}

pub fn curve_csv(curve: &[f64]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["episode", "return", "running_mean_10"]).unwrap();
    for (i, (r, m)) in curve.iter().zip(running_mean(curve, RUNNING_WINDOW)).enumerate() {
        w.write_record([i.to_string(), r.to_string(), m.to_string()]).unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

pub fn diagnostics_csv(records: &[DiagnosticsRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "episode",
        "mean_return",
        "w_norm_classical",
        "w_norm_quantum",
        "eps_gap",
        "loewner_ok",
        "loewner_margin",
        "executions_classical",
        "executions_quantum",
    ])
    .unwrap();
    for d in records {
        w.write_record([
            d.episode.to_string(),
            d.mean_return.to_string(),
            d.w_norm_classical.to_string(),
            d.w_norm_quantum.to_string(),
            d.eps_gap.to_string(),
            d.loewner_ok.to_string(),
            d.loewner_margin.to_string(),
            d.executions_classical.to_string(),
            d.executions_quantum.to_string(),
        ])
        .unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

fn mean_std(column: &[f64]) -> (f64, f64) {
    let n = column.len() as f64;
    let mean = column.iter().sum::<f64>() / n;
    let var = column.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn summarize(
    config: &ExperimentConfig,
    hash: &str,
    seeds: &[u64],
    outcomes: &[(u64, TrainOutcome, Option<String>)],
) -> Summary {
    let longest = outcomes.iter().map(|(_, o, _)| o.curve.len()).max().unwrap_or(0);
    let mut mean = Vec::with_capacity(longest);
    let mut std = Vec::with_capacity(longest);
    for ep in 0..longest {
        let column: Vec<f64> = outcomes.iter().filter_map(|(_, o, _)| o.curve.get(ep).copied()).collect();
        let (m, s) = mean_std(&column);
        mean.push(m);
        std.push(s);
    }
    Summary {
        label: config.label.clone(),
        environment: config.env,
        config_hash: hash.to_string(),
        seeds: seeds.to_vec(),
        episodes: config.episodes,
        running_mean_10: running_mean(&mean, RUNNING_WINDOW),
        mean,
        std,
        final_50_mean: outcomes
            .iter()
            .map(|(_, o, _)| {
                let tail = &o.curve[o.curve.len().saturating_sub(50)..];
                if tail.is_empty() {
                    0.0
                } else {
                    tail.iter().sum::<f64>() / tail.len() as f64
                }
            })
            .collect(),
        executions_classical_total: outcomes.iter().map(|(_, o, _)| o.executions_classical).sum(),
        executions_quantum_total: outcomes.iter().map(|(_, o, _)| o.executions_quantum).sum(),
        aborted_seeds: outcomes.iter().filter(|(_, _, a)| a.is_some()).map(|(s, _, _)| *s).collect(),
    }
}

/// Executes every seed of a config and writes curves, diagnostics, the
/// summary and a manifest into [`run_dir`].
pub fn run(config_path: &Path, opts: &RunOptions) -> Result<Summary, CliError> {
    let mut file = ConfigFile::load(config_path)?;
    if let Some(seeds) = &opts.seeds {
        file.training.seeds = seeds.clone();
    }
    if let Some(episodes) = opts.episodes {
        file.training.episodes = episodes;
    }
    let config = file.to_experiment().map_err(|message| CliError::Config {
        path: config_path.display().to_string(),
        message,
    })?;
    let hash = file.hash();
    let dir = run_dir(config_path, opts.out_dir.as_deref());
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;

    let run_seed = |seed: u64| {
        let start = Instant::now();
        let (outcome, aborted) = match train(&config, seed) {
            Ok(o) => (o, None),
            Err(a) => {
                let reason = a.to_string();
                (*a.partial, Some(reason))
            }
        };
        (seed, outcome, aborted, start.elapsed().as_secs_f64())
    };
    let jobs = opts.jobs.unwrap_or(1).max(1);
    let results: Vec<_> = if jobs == 1 {
        config.seeds.iter().map(|&s| run_seed(s)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CliError::Aborted(e.to_string()))?;
        pool.install(|| config.seeds.par_iter().map(|&s| run_seed(s)).collect())
    };

    let mut manifest = RunManifest {
        config_hash: hash.clone(),
        label: config.label.clone(),
        seeds: config.seeds.clone(),
        artifact_version: ARTIFACT_VERSION.to_string(),
        runs: Vec::new(),
    };
    let mut outcomes = Vec::new();
    for (seed, outcome, aborted, secs) in results {
        let curve = dir.join(format!("curve_{seed}.csv"));
        let diags = dir.join(format!("diagnostics_{seed}.csv"));
        fs::write(&curve, curve_csv(&outcome.curve)).map_err(io_err(&curve))?;
        fs::write(&diags, diagnostics_csv(&outcome.diagnostics)).map_err(io_err(&diags))?;
        manifest.runs.push(SeedArtifacts {
            seed,
            curve: curve.display().to_string(),
            diagnostics: diags.display().to_string(),
            wall_clock_secs: secs,
            aborted: aborted.clone(),
        });
        outcomes.push((seed, outcome, aborted));
    }
    let summary = summarize(&config, &hash, &config.seeds, &outcomes);
    let summary_path = dir.join("summary.json");
    fs::write(&summary_path, serde_json::to_string_pretty(&summary).unwrap()).map_err(io_err(&summary_path))?;
    let manifest_path = dir.join("manifest.json");
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest).unwrap())
        .map_err(io_err(&manifest_path))?;

    match manifest.runs.iter().find_map(|r| r.aborted.clone()) {
        Some(reason) => Err(CliError::Aborted(reason)),
        None => Ok(summary),
    }
}

/// Aligns per-episode mean/std columns of finished runs into one CSV.
pub fn compare(config_paths: &[PathBuf], out_dir: Option<&Path>) -> Result<String, CliError> {
    if config_paths.len() < 2 {
        return Err(CliError::Compare("compare needs at least two runs".into()));
    }
    let mut summaries = Vec::new();
    for path in config_paths {
        let summary_path = run_dir(path, out_dir).join("summary.json");
        let text = fs::read_to_string(&summary_path).map_err(io_err(&summary_path))?;
        let summary: Summary = serde_json::from_str(&text)
            .map_err(|e| CliError::Compare(format!("{}: {e}", summary_path.display())))?;
        summaries.push(summary);
    }
    let len = summaries[0].mean.len();
    if let Some(s) = summaries.iter().find(|s| s.mean.len() != len) {
        return Err(CliError::Compare(format!(
            "episode counts differ: '{}' has {} episodes, '{}' has {}",
            summaries[0].label,
            len,
            s.label,
            s.mean.len()
        )));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["episode".to_string()];
    for s in &summaries {
        header.push(format!("{}_mean", s.label));
        header.push(format!("{}_std", s.label));
    }
    w.write_record(&header).unwrap();
    for ep in 0..len {
        let mut row = vec![ep.to_string()];
        for s in &summaries {
            row.push(s.mean[ep].to_string());
            row.push(s.std[ep].to_string());
        }
        w.write_record(&row).unwrap();
    }
    Ok(String::from_utf8(w.into_inner().unwrap()).unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizers::{Metric, OptimizerKind};

    #[test]
    fn running_mean_window() {
        let v: Vec<f64> = (0..15).map(|x| x as f64).collect();
        let m = running_mean(&v, 10);
        assert_eq!(m[0], 0.0);
        assert_eq!(m[9], 4.5);
        assert_eq!(m[14], (5..15).sum::<i32>() as f64 / 10.0);
    }

    #[test]
    fn parse_full_config() {
        let text = r#"
label = "GQNPG phi=0.5"
[environment]
kind = "acrobot"
[policy]
kind = "born"
[ansatz]
n_qubits = 4
n_layers = 5
[optimizer]
kind = "natural"
metric = "quantum"
phi = 0.5
eta = 0.01
eps = 0.1
[training]
seeds = [1, 2]
episodes = 20
"#;
        let file = ConfigFile::parse(text).unwrap();
        let c = file.to_experiment().unwrap();
        assert_eq!(c.env, EnvKind::Acrobot);
        assert_eq!(c.policy.n_actions(), 3);
        assert_eq!(c.optimizer.kind, OptimizerKind::Natural);
        assert_eq!(c.optimizer.metric, Metric::Quantum);
        assert_eq!(c.ansatz.n_params(), 48);
        assert_eq!(c.seeds, vec![1, 2]);
    }

    #[test]
    fn config_errors_name_the_field() {
        let err = ConfigFile::parse("[training]\nbatch_sise = 3\n").unwrap_err();
        assert!(err.contains("batch_sise"), "{err}");
        assert!(err.contains("line 2"), "{err}");
        let file = ConfigFile::parse("[optimizer]\nphi = 2.0\n").unwrap();
        assert!(file.to_experiment().unwrap_err().contains("phi"));
        let file = ConfigFile::parse("[environment]\nkind = \"acrobot\"\n[policy]\nmeasured_qubits = [0]\n").unwrap();
        assert!(file.to_experiment().unwrap_err().contains("actions"));
    }

    #[test]
    fn hash_ignores_key_order() {
        let a = ConfigFile::parse("[optimizer]\neta = 0.02\nphi = 0.5\n[training]\nepisodes = 3\n").unwrap();
        let b = ConfigFile::parse("[training]\nepisodes = 3\n\n[optimizer]\nphi = 0.5\neta = 0.02\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = ConfigFile::parse("[optimizer]\neta = 0.03\nphi = 0.5\n").unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn csv_layout() {
        let csv = curve_csv(&[1.0, 2.5]);
        assert_eq!(csv, "episode,return,running_mean_10\n0,1,1\n1,2.5,1.75\n");
    }
}
