//! Two-link acrobot with swing-up and constant-spin objectives.
//!
//! Dynamics follow the classic textbook equations with the centre of mass
//! at mid-link and link inertia `m l^2`, which reduces to the usual unit
//! inertia for the standard `(1, 1)` robot. Each control step of `dt` is
//! integrated with `substeps` fixed RK4 steps and no friction.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use super::{check_action, check_state, Environment, Step};
use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::task::TaskSpec;

const MAX_VEL_1: f64 = 4.0 * PI;
const MAX_VEL_2: f64 = 9.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AcrobotTask {
    SwingUp,
    ConstantSpin,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AcrobotConfig {
    pub lengths: [f64; 2],
    pub masses: [f64; 2],
    pub task: AcrobotTask,
    #[cfg_attr(feature = "serde", serde(default = "default_torque"))]
    pub torque: f64,
    #[cfg_attr(feature = "serde", serde(default = "default_dt"))]
    pub dt: f64,
    #[cfg_attr(feature = "serde", serde(default = "default_substeps"))]
    pub substeps: usize,
    #[cfg_attr(feature = "serde", serde(default = "default_gravity"))]
    pub gravity: f64,
    #[cfg_attr(feature = "serde", serde(default = "default_gamma"))]
    pub gamma: f64,
    #[cfg_attr(feature = "serde", serde(default = "default_horizon"))]
    pub horizon: usize,
}

fn default_torque() -> f64 {
    2.0
}
fn default_dt() -> f64 {
    0.2
}
fn default_substeps() -> usize {
    4
}
fn default_gravity() -> f64 {
    9.8
}
fn default_gamma() -> f64 {
    0.95
}
fn default_horizon() -> usize {
    100
}

impl AcrobotConfig {
    pub fn new(lengths: [f64; 2], masses: [f64; 2], task: AcrobotTask) -> Self {
        Self {
            lengths,
            masses,
            task,
            torque: default_torque(),
            dt: default_dt(),
            substeps: default_substeps(),
            gravity: default_gravity(),
            gamma: default_gamma(),
            horizon: default_horizon(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Acrobot {
    config: AcrobotConfig,
    spec: TaskSpec,
}

/// `(theta1, theta2, dtheta1, dtheta2)`.
type State = [f64; 4];

impl Acrobot {
    pub fn new(config: AcrobotConfig) -> Result<Self> {
        let positive = config.lengths.iter().chain(&config.masses).all(|&x| x > 0.0);
        if !positive || config.dt.partial_cmp(&0.0) != Some(core::cmp::Ordering::Greater) || config.substeps == 0 {
            return Err(Error::InvalidParameter("acrobot lengths, masses and dt must be positive"));
        }
        let r_max = match config.task {
            AcrobotTask::SwingUp => 4.0,
            AcrobotTask::ConstantSpin => PI + MAX_VEL_1,
        };
        let spec = TaskSpec::new(4, 2, config.gamma, config.horizon, r_max)?;
        Ok(Self { config, spec })
    }

    pub fn config(&self) -> &AcrobotConfig {
        &self.config
    }

    /// Height of the tip above the pivot, in units where each link has length 1.
    pub fn tip_height(s: &[f64]) -> f64 {
        -libm::cos(s[0]) - libm::cos(s[0] + s[1])
    }

    pub fn reward(&self, s: &[f64]) -> f64 {
        match self.config.task {
            AcrobotTask::SwingUp => Self::tip_height(s) - 2.0,
            AcrobotTask::ConstantSpin => -libm::fabs(s[2] - PI),
        }
    }

    fn is_terminal(&self, s: &[f64]) -> bool {
        matches!(self.config.task, AcrobotTask::SwingUp) && Self::tip_height(s) > 1.0
    }

    fn torque_for(&self, action: usize) -> f64 {
        if action == 0 {
            -self.config.torque
        } else {
            self.config.torque
        }
    }

    fn derivatives(&self, s: &State, torque: f64) -> State {
        let [l1, _] = self.config.lengths;
        let [m1, m2] = self.config.masses;
        let lc1 = self.config.lengths[0] / 2.0;
        let lc2 = self.config.lengths[1] / 2.0;
        let i1 = m1 * l1 * l1;
        let i2 = m2 * self.config.lengths[1] * self.config.lengths[1];
        let g = self.config.gravity;
        let [t1, t2, dt1, dt2] = *s;

        let cos2 = libm::cos(t2);
        let sin2 = libm::sin(t2);
        let d1 = m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * cos2) + i1 + i2;
        let d2 = m2 * (lc2 * lc2 + l1 * lc2 * cos2) + i2;
        let phi2 = m2 * lc2 * g * libm::cos(t1 + t2 - PI / 2.0);
        let phi1 = -m2 * l1 * lc2 * dt2 * dt2 * sin2 - 2.0 * m2 * l1 * lc2 * dt2 * dt1 * sin2
            + (m1 * lc1 + m2 * l1) * g * libm::cos(t1 - PI / 2.0)
            + phi2;
        let ddt2 = (torque + d2 / d1 * phi1 - m2 * l1 * lc2 * dt1 * dt1 * sin2 - phi2)
            / (m2 * lc2 * lc2 + i2 - d2 * d2 / d1);
        let ddt1 = -(d2 * ddt2 + phi1) / d1;
        [dt1, dt2, ddt1, ddt2]
    }

    fn rk4(&self, s: &State, torque: f64, h: f64) -> State {
        let add = |a: &State, k: &State, f: f64| -> State {
            [a[0] + f * k[0], a[1] + f * k[1], a[2] + f * k[2], a[3] + f * k[3]]
        };
        let k1 = self.derivatives(s, torque);
        let k2 = self.derivatives(&add(s, &k1, h / 2.0), torque);
        let k3 = self.derivatives(&add(s, &k2, h / 2.0), torque);
        let k4 = self.derivatives(&add(s, &k3, h), torque);
        let mut out = *s;
        for i in 0..4 {
            out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out
    }

    /// Integrates one control step without wrapping or velocity limits.
    pub fn integrate(&self, s: &[f64], torque: f64) -> [f64; 4] {
        let mut x = [s[0], s[1], s[2], s[3]];
        let h = self.config.dt / self.config.substeps as f64;
        for _ in 0..self.config.substeps {
            x = self.rk4(&x, torque, h);
        }
        x
    }

    /// Total mechanical energy, with potential measured from the hanging rest
    /// position so it is never negative.
    pub fn energy(&self, s: &[f64]) -> f64 {
        let [l1, l2] = self.config.lengths;
        let [m1, m2] = self.config.masses;
        let (lc1, lc2) = (l1 / 2.0, l2 / 2.0);
        let (i1, i2) = (m1 * l1 * l1, m2 * l2 * l2);
        let g = self.config.gravity;
        let [t1, t2, dt1, dt2] = [s[0], s[1], s[2], s[3]];
        // centre-of-mass velocities
        let v1 = lc1 * dt1;
        let v2x = l1 * libm::cos(t1) * dt1 + lc2 * libm::cos(t1 + t2) * (dt1 + dt2);
        let v2y = l1 * libm::sin(t1) * dt1 + lc2 * libm::sin(t1 + t2) * (dt1 + dt2);
        let kinetic = 0.5 * m1 * v1 * v1
            + 0.5 * m2 * (v2x * v2x + v2y * v2y)
            + 0.5 * i1 * dt1 * dt1
            + 0.5 * i2 * (dt1 + dt2) * (dt1 + dt2);
        let y1 = -lc1 * libm::cos(t1);
        let y2 = -l1 * libm::cos(t1) - lc2 * libm::cos(t1 + t2);
        let potential = m1 * g * (y1 + lc1) + m2 * g * (y2 + l1 + lc2);
        kinetic + potential
    }
}

fn wrap(x: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut y = libm::fmod(x + PI, two_pi);
    if y < 0.0 {
        y += two_pi;
    }
    y - PI
}

impl Environment for Acrobot {
    fn spec(&self) -> &TaskSpec {
        &self.spec
    }

    fn reset(&self, rng: &mut StreamRng) -> Vec<f64> {
        vec![rng.random_range(-2.0..=2.0), 0.0, 0.0, 0.0]
    }

    fn step(&self, state: &[f64], action: usize, _rng: &mut StreamRng) -> Result<Step> {
        check_state(&self.spec, state)?;
        check_action(&self.spec, action)?;
        let reward = self.reward(state);
        let x = self.integrate(state, self.torque_for(action));
        let next_state = vec![
            wrap(x[0]),
            wrap(x[1]),
            x[2].clamp(-MAX_VEL_1, MAX_VEL_1),
            x[3].clamp(-MAX_VEL_2, MAX_VEL_2),
        ];
        let done = self.is_terminal(&next_state);
        Ok(Step { next_state, reward, done })
    }

    fn evaluation_starts(&self, count: usize) -> Vec<Vec<f64>> {
        match count {
            0 => Vec::new(),
            1 => vec![vec![0.0; 4]],
            n => (0..n).map(|i| vec![-2.0 + 4.0 * i as f64 / (n - 1) as f64, 0.0, 0.0, 0.0]).collect(),
        }
    }
}
