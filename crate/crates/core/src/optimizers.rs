//! Parameter updates for gradient ascent: Adam and (generalized) natural
//! gradients preconditioned by `(F + εI)^(−φ)`.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::fisher::{natural_direction, FisherMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam,
    Natural,
}

/// Information matrix driving a natural update.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Classical,
    Quantum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub eta: f64,
    pub phi: f64,
    pub metric: Metric,
    pub eps: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            kind: OptimizerKind::Adam,
            eta: 0.01,
            phi: 1.0,
            metric: Metric::Classical,
            eps: 0.1,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

impl OptimizerConfig {
    pub fn adam(eta: f64) -> Self {
        Self {
            kind: OptimizerKind::Adam,
            eta,
            ..Self::default()
        }
    }

    pub fn natural(metric: Metric, phi: f64, eta: f64, eps: f64) -> Self {
        Self {
            kind: OptimizerKind::Natural,
            eta,
            phi,
            metric,
            eps,
            ..Self::default()
        }
    }

    /// The five optimizers compared in the experiments.
    pub fn standard_set(eta: f64, eps: f64) -> Vec<Self> {
        vec![
            Self::adam(eta),
            Self::natural(Metric::Classical, 1.0, eta, eps),
            Self::natural(Metric::Classical, 0.5, eta, eps),
            Self::natural(Metric::Quantum, 1.0, eta, eps),
            Self::natural(Metric::Quantum, 0.5, eta, eps),
        ]
    }

    /// `Adam`, `NPG`, `GQNPG`, with a `phi=<φ>` suffix when φ ≠ 1.
    pub fn label(&self) -> String {
        match self.kind {
            OptimizerKind::Adam => "Adam".to_string(),
            OptimizerKind::Natural => {
                let base = match self.metric {
                    Metric::Classical => "NPG",
                    Metric::Quantum => "GQNPG",
                };
                if self.phi == 1.0 {
                    base.to_string()
                } else {
                    format!("{base} phi={}", self.phi)
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad(format!("optimizer.eta must be positive, got {}", self.eta));
        }
        if !(0.0..=1.0).contains(&self.phi) {
            return bad(format!("optimizer.phi must lie in [0, 1], got {}", self.phi));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return bad(format!("optimizer.eps must be >= 0, got {}", self.eps));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return bad("optimizer.adam_beta1/adam_beta2 must lie in [0, 1)".into());
        }
        if self.adam_eps.is_nan() || self.adam_eps <= 0.0 {
            return bad("optimizer.adam_eps must be positive".into());
        }
        Ok(())
    }
}

/// Adam moment estimates. Unused by natural updates.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl OptimizerState {
    pub fn new(k: usize) -> Self {
        Self {
            step: 0,
            m: vec![0.0; k],
            v: vec![0.0; k],
        }
    }
}

/// One bias-corrected Adam ascent step.
pub fn adam_step(
    state: &OptimizerState,
    theta: &[f64],
    grad_ascent: &[f64],
    config: &OptimizerConfig,
) -> Result<(OptimizerState, Vec<f64>)> {
    check_len("theta", state.m.len(), theta.len())?;
    check_len("gradient", theta.len(), grad_ascent.len())?;
    if grad_ascent.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("gradient"));
    }
    let (b1, b2) = (config.adam_beta1, config.adam_beta2);
    let step = state.step + 1;
    let bc1 = 1.0 - b1.powi(step as i32);
    let bc2 = 1.0 - b2.powi(step as i32);
    let mut next = OptimizerState {
        step,
        m: Vec::with_capacity(theta.len()),
        v: Vec::with_capacity(theta.len()),
    };
    let mut out = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        let g = grad_ascent[i];
        let m = b1 * state.m[i] + (1.0 - b1) * g;
        let v = b2 * state.v[i] + (1.0 - b2) * g * g;
        let m_hat = m / bc1;
        let v_hat = v / bc2;
        out.push(theta[i] + config.eta * m_hat / (v_hat.sqrt() + config.adam_eps));
        next.m.push(m);
        next.v.push(v);
    }
    Ok((next, out))
}

/// `θ + η (F + εI)^(−φ) ∇J`.
pub fn natural_step(
    theta: &[f64],
    grad_ascent: &[f64],
    fisher: &FisherMatrix,
    config: &OptimizerConfig,
) -> Result<Vec<f64>> {
    check_len("theta", fisher.dim(), theta.len())?;
    if grad_ascent.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("gradient"));
    }
    let dir = natural_direction(fisher, grad_ascent, config.phi, config.eps)?;
    Ok(theta.iter().zip(dir).map(|(t, d)| t + config.eta * d).collect())
}
