//! Deterministic CartPole and Acrobot dynamics with a four-feature view.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policies::wrap_angle;

pub const N_FEATURES: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    #[serde(rename = "cartpole", alias = "cart_pole")]
    CartPole,
    Acrobot,
}

/// Physical state plus episode bookkeeping.
///
/// `vars` is `(x, ẋ, θ, θ̇)` for CartPole and `(θ1, θ2, θ̇1, θ̇2)` for Acrobot.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvState {
    pub kind: EnvKind,
    pub vars: [f64; 4],
    pub step_count: usize,
    pub done: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub features: [f64; N_FEATURES],
    pub reward: f64,
    pub done: bool,
}

mod cartpole {
    pub const GRAVITY: f64 = 9.8;
    pub const MASS_CART: f64 = 1.0;
    pub const MASS_POLE: f64 = 0.1;
    pub const TOTAL_MASS: f64 = MASS_CART + MASS_POLE;
    /// Half the pole length.
    pub const LENGTH: f64 = 0.5;
    pub const POLE_MASS_LENGTH: f64 = MASS_POLE * LENGTH;
    pub const FORCE: f64 = 10.0;
    pub const TAU: f64 = 0.02;
    pub const X_LIMIT: f64 = 2.4;
    pub const THETA_LIMIT: f64 = 12.0 * 2.0 * std::f64::consts::PI / 360.0;
    pub const HORIZON: usize = 200;
}

mod acrobot {
    use std::f64::consts::PI;

    pub const LINK_LENGTH_1: f64 = 1.0;
    pub const LINK_MASS_1: f64 = 1.0;
    pub const LINK_MASS_2: f64 = 1.0;
    pub const LINK_COM_1: f64 = 0.5;
    pub const LINK_COM_2: f64 = 0.5;
    pub const LINK_MOI: f64 = 1.0;
    pub const GRAVITY: f64 = 9.8;
    pub const DT: f64 = 0.2;
    pub const MAX_VEL_1: f64 = 4.0 * PI;
    pub const MAX_VEL_2: f64 = 9.0 * PI;
    pub const TORQUES: [f64; 3] = [-1.0, 0.0, 1.0];
    pub const GOAL_HEIGHT: f64 = 1.0;
    pub const HORIZON: usize = 500;
}

impl EnvKind {
    pub fn n_actions(self) -> usize {
        match self {
            EnvKind::CartPole => 2,
            EnvKind::Acrobot => 3,
        }
    }

    pub fn horizon(self) -> usize {
        match self {
            EnvKind::CartPole => cartpole::HORIZON,
            EnvKind::Acrobot => acrobot::HORIZON,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::CartPole => "cartpole",
            EnvKind::Acrobot => "acrobot",
        }
    }

    /// Uniform start state: ±0.05 per component for CartPole, ±0.1 for Acrobot.
    pub fn reset<R: Rng + ?Sized>(self, rng: &mut R) -> EnvState {
        let half = match self {
            EnvKind::CartPole => 0.05,
            EnvKind::Acrobot => 0.1,
        };
        let mut vars = [0.0; 4];
        for v in &mut vars {
            *v = rng.gen_range(-half..=half);
        }
        EnvState {
            kind: self,
            vars,
            step_count: 0,
            done: false,
        }
    }

    /// A state at rest with the given variables, for tests and scripted starts.
    pub fn state_from(self, vars: [f64; 4]) -> EnvState {
        EnvState {
            kind: self,
            vars,
            step_count: 0,
            done: false,
        }
    }

    pub fn step(self, state: &EnvState, action: usize) -> Result<(EnvState, StepResult)> {
        if state.kind != self {
            return Err(Error::InvalidArgument(format!(
                "state belongs to {}, not {}",
                state.kind.name(),
                self.name()
            )));
        }
        if state.done {
            return Err(Error::EpisodeDone);
        }
        if action >= self.n_actions() {
            return Err(Error::InvalidAction {
                action,
                n_actions: self.n_actions(),
            });
        }
        let mut next = state.clone();
        next.step_count += 1;
        let reward = match self {
            EnvKind::CartPole => {
                next.vars = cartpole_step(state.vars, action);
                let [x, _, th, _] = next.vars;
                next.done = x.abs() > cartpole::X_LIMIT
                    || th.abs() > cartpole::THETA_LIMIT
                    || next.step_count >= cartpole::HORIZON;
                1.0
            }
            EnvKind::Acrobot => {
                next.vars = acrobot_step(state.vars, acrobot::TORQUES[action]);
                let h = acrobot_height(&next.vars);
                next.done = h > acrobot::GOAL_HEIGHT || next.step_count >= acrobot::HORIZON;
                -1.0 + h
            }
        };
        let result = StepResult {
            features: self.features(&next),
            reward,
            done: next.done,
        };
        Ok((next, result))
    }

    /// CartPole: raw `(x, ẋ, θ, θ̇)`. Acrobot: `(θ1, θ2, θ̇1/4π, θ̇2/9π)`.
    pub fn features(self, state: &EnvState) -> [f64; N_FEATURES] {
        let v = state.vars;
        match self {
            EnvKind::CartPole => v,
            EnvKind::Acrobot => [v[0], v[1], v[2] / acrobot::MAX_VEL_1, v[3] / acrobot::MAX_VEL_2],
        }
    }
}

/// Tip-height surrogate `−cos θ1 − cos(θ1 + θ2)`.
pub fn acrobot_height(vars: &[f64; 4]) -> f64 {
    -vars[0].cos() - (vars[0] + vars[1]).cos()
}

fn cartpole_step(vars: [f64; 4], action: usize) -> [f64; 4] {
    use cartpole::*;
    let [x, x_dot, theta, theta_dot] = vars;
    let force = if action == 1 { FORCE } else { -FORCE };
    let (sin, cos) = theta.sin_cos();
    let temp = (force + POLE_MASS_LENGTH * theta_dot * theta_dot * sin) / TOTAL_MASS;
    let theta_acc = (GRAVITY * sin - cos * temp)
        / (LENGTH * (4.0 / 3.0 - MASS_POLE * cos * cos / TOTAL_MASS));
    let x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos / TOTAL_MASS;
    [
        x + TAU * x_dot,
        x_dot + TAU * x_acc,
        wrap_angle(theta + TAU * theta_dot),
        theta_dot + TAU * theta_acc,
    ]
}

fn acrobot_derivs(s: [f64; 4], torque: f64) -> [f64; 4] {
    use acrobot::*;
    let (m1, m2, l1, lc1, lc2, i1, i2, g) = (
        LINK_MASS_1,
        LINK_MASS_2,
        LINK_LENGTH_1,
        LINK_COM_1,
        LINK_COM_2,
        LINK_MOI,
        LINK_MOI,
        GRAVITY,
    );
    let [t1, t2, dt1, dt2] = s;
    let d1 = m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * t2.cos()) + i1 + i2;
    let d2 = m2 * (lc2 * lc2 + l1 * lc2 * t2.cos()) + i2;
    let phi2 = m2 * lc2 * g * (t1 + t2 - PI / 2.0).cos();
    let phi1 = -m2 * l1 * lc2 * dt2 * dt2 * t2.sin()
        - 2.0 * m2 * l1 * lc2 * dt2 * dt1 * t2.sin()
        + (m1 * lc1 + m2 * l1) * g * (t1 - PI / 2.0).cos()
        + phi2;
    let ddt2 = (torque + d2 / d1 * phi1 - m2 * l1 * lc2 * dt1 * dt1 * t2.sin() - phi2)
        / (m2 * lc2 * lc2 + i2 - d2 * d2 / d1);
    let ddt1 = -(d2 * ddt2 + phi1) / d1;
    [dt1, dt2, ddt1, ddt2]
}

fn acrobot_step(vars: [f64; 4], torque: f64) -> [f64; 4] {
    use acrobot::*;
    let add = |a: [f64; 4], b: [f64; 4], h: f64| -> [f64; 4] {
        [a[0] + h * b[0], a[1] + h * b[1], a[2] + h * b[2], a[3] + h * b[3]]
    };
    let k1 = acrobot_derivs(vars, torque);
    let k2 = acrobot_derivs(add(vars, k1, DT / 2.0), torque);
    let k3 = acrobot_derivs(add(vars, k2, DT / 2.0), torque);
    let k4 = acrobot_derivs(add(vars, k3, DT), torque);
    let mut next = [0.0; 4];
    for i in 0..4 {
        next[i] = vars[i] + DT / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    [
        wrap_angle(next[0]),
        wrap_angle(next[1]),
        next[2].clamp(-MAX_VEL_1, MAX_VEL_1),
        next[3].clamp(-MAX_VEL_2, MAX_VEL_2),
    ]
}
