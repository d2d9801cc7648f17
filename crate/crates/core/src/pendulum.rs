//! Double-pendulum dynamics and generator.
//!
//! Two integrators share the same equations of motion. [`Method::Rk4`] is the
//! real-arithmetic reference. [`Method::Euler`] runs one explicit Euler step
//! in the fixed-point core, the path that feeds bit extraction: angles are
//! Q3.28 wrapped to `[-π, π)` with the format's representable π, angular
//! velocities Q6.25, and all intermediate arithmetic Q20.40.
//!
//! The real-arithmetic sine and cosine reduce by whole half turns of the
//! `f64` π, so `sin(π)` is exactly zero and both equilibria are exact fixed
//! points.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::entropy::{MixEntropy, MixMode};
use crate::error::{Error, Result};
use crate::fixedpoint::{FixedPoint, QFormat};

pub const DEFAULT_STEP: f64 = 1e-3;
pub const DEFAULT_BURN_IN: u64 = 1000;
pub const DEFAULT_SEED: PendulumState = PendulumState {
    theta1: 2.0,
    theta2: 1.0,
    omega1: 0.0,
    omega2: 0.0,
    t: 0.0,
};

/// Angle storage format.
pub const ANGLE_FORMAT: QFormat = QFormat::Q3_28;
/// Angular velocity storage format.
pub const RATE_FORMAT: QFormat = QFormat::Q6_25;
/// Working format of the fixed-point datapath.
pub const WORK_FORMAT: QFormat = QFormat::new_unchecked(20, 40);

// Wider container so wrapping happens before saturation.
const ANGLE_WIDE: QFormat = QFormat::new_unchecked(30, 28);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsRepr", into = "ParamsRepr")]
pub struct PendulumParams {
    m1: f64,
    m2: f64,
    l1: f64,
    l2: f64,
    g: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ParamsRepr {
    m1: f64,
    m2: f64,
    l1: f64,
    l2: f64,
    g: f64,
}

impl Default for ParamsRepr {
    fn default() -> Self {
        PendulumParams::default().into()
    }
}

impl TryFrom<ParamsRepr> for PendulumParams {
    type Error = Error;

    fn try_from(r: ParamsRepr) -> Result<Self> {
        PendulumParams::new(r.m1, r.m2, r.l1, r.l2, r.g)
    }
}

impl From<PendulumParams> for ParamsRepr {
    fn from(p: PendulumParams) -> Self {
        ParamsRepr {
            m1: p.m1,
            m2: p.m2,
            l1: p.l1,
            l2: p.l2,
            g: p.g,
        }
    }
}

impl Default for PendulumParams {
    fn default() -> Self {
        PendulumParams {
            m1: 1.0,
            m2: 1.0,
            l1: 1.0,
            l2: 1.0,
            g: 9.81,
        }
    }
}

impl PendulumParams {
    pub fn new(m1: f64, m2: f64, l1: f64, l2: f64, g: f64) -> Result<Self> {
        for (name, v) in [("m1", m1), ("m2", m2), ("l1", l1), ("l2", l2), ("g", g)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!(
                    "{name} = {v} must be positive and finite"
                )));
            }
        }
        Ok(PendulumParams { m1, m2, l1, l2, g })
    }

    pub fn m1(&self) -> f64 {
        self.m1
    }

    pub fn m2(&self) -> f64 {
        self.m2
    }

    pub fn l1(&self) -> f64 {
        self.l1
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    pub fn g(&self) -> f64 {
        self.g
    }
}

/// Angles in radians (0 hangs straight down, counterclockwise positive).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PendulumState {
    pub theta1: f64,
    pub theta2: f64,
    pub omega1: f64,
    pub omega2: f64,
    #[serde(default)]
    pub t: f64,
}

impl PendulumState {
    pub fn new(theta1: f64, theta2: f64, omega1: f64, omega2: f64) -> Result<Self> {
        let state = PendulumState {
            theta1,
            theta2,
            omega1,
            omega2,
            t: 0.0,
        };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.theta1, self.theta2, self.omega1, self.omega2, self.t];
        if all.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::invalid("pendulum state must be finite"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Derivatives {
    pub dtheta1: f64,
    pub dtheta2: f64,
    pub domega1: f64,
    pub domega2: f64,
}

/// Sine reduced by whole half turns of `f64` π.
pub fn sin_half_turn(x: f64) -> f64 {
    let k = (x / PI).round();
    let r = (-k).mul_add(PI, x);
    let s = r.sin();
    if k.rem_euclid(2.0) == 0.0 {
        s
    } else {
        -s
    }
}

/// Cosine reduced by whole half turns of `f64` π.
pub fn cos_half_turn(x: f64) -> f64 {
    let k = (x / PI).round();
    let r = (-k).mul_add(PI, x);
    let c = r.cos();
    if k.rem_euclid(2.0) == 0.0 {
        c
    } else {
        -c
    }
}

/// Shared denominator factor `2 m1 + m2 - m2 cos(2θ1 - 2θ2)`; `d1 = l1 · factor`.
pub fn denominators(state: &PendulumState, p: &PendulumParams) -> (f64, f64) {
    let factor = 2.0 * p.m1 + p.m2 - p.m2 * cos_half_turn(2.0 * state.theta1 - 2.0 * state.theta2);
    (p.l1 * factor, p.l2 * factor)
}

pub fn pendulum_accel(state: &PendulumState, p: &PendulumParams) -> Derivatives {
    let PendulumState {
        theta1: t1,
        theta2: t2,
        omega1: w1,
        omega2: w2,
        ..
    } = *state;
    let (d1, d2) = denominators(state, p);
    let delta = t1 - t2;
    let s12 = sin_half_turn(delta);
    let c12 = cos_half_turn(delta);
    let domega1 = (-p.g * (2.0 * p.m1 + p.m2) * sin_half_turn(t1)
        - p.m2 * p.g * sin_half_turn(t1 - 2.0 * t2)
        - 2.0 * s12 * p.m2 * (w2 * w2 * p.l2 + w1 * w1 * p.l1 * c12))
        / d1;
    let domega2 = 2.0 * s12 / d2
        * (w1 * w1 * p.l1 * (p.m1 + p.m2)
            + p.g * (p.m1 + p.m2) * cos_half_turn(t1)
            + w2 * w2 * p.l2 * p.m2 * c12);
    Derivatives {
        dtheta1: w1,
        dtheta2: w2,
        domega1,
        domega2,
    }
}

/// Kinetic plus potential energy in joules, potential zero at the pivot.
pub fn total_energy(state: &PendulumState, p: &PendulumParams) -> f64 {
    let PendulumState {
        theta1: t1,
        theta2: t2,
        omega1: w1,
        omega2: w2,
        ..
    } = *state;
    let kinetic = 0.5 * p.m1 * p.l1 * p.l1 * w1 * w1
        + 0.5
            * p.m2
            * ((p.l1 * w1).powi(2)
                + (p.l2 * w2).powi(2)
                + 2.0 * p.l1 * p.l2 * w1 * w2 * cos_half_turn(t1 - t2));
    let potential = -p.m1 * p.g * p.l1 * cos_half_turn(t1)
        - p.m2 * p.g * (p.l1 * cos_half_turn(t1) + p.l2 * cos_half_turn(t2));
    kinetic + potential
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Fixed-point explicit Euler.
    #[default]
    Euler,
    /// Classical fourth-order Runge-Kutta in `f64`.
    Rk4,
}

pub fn pendulum_step(
    state: &PendulumState,
    params: &PendulumParams,
    h: f64,
    method: Method,
) -> Result<PendulumState> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::invalid(format!("step size {h} must be positive")));
    }
    state.validate()?;
    match method {
        Method::Rk4 => Ok(rk4_step(state, params, h)),
        Method::Euler => {
            let core = FixedCore::new(params, h)?;
            let mut fixed = FixedState::from_state(state)?;
            core.step(&mut fixed);
            let mut next = fixed.to_state();
            next.t = state.t + h;
            Ok(next)
        }
    }
}

fn rk4_step(s: &PendulumState, p: &PendulumParams, h: f64) -> PendulumState {
    let offset = |k: &Derivatives, scale: f64| PendulumState {
        theta1: s.theta1 + scale * k.dtheta1,
        theta2: s.theta2 + scale * k.dtheta2,
        omega1: s.omega1 + scale * k.domega1,
        omega2: s.omega2 + scale * k.domega2,
        t: s.t,
    };
    let k1 = pendulum_accel(s, p);
    let k2 = pendulum_accel(&offset(&k1, h / 2.0), p);
    let k3 = pendulum_accel(&offset(&k2, h / 2.0), p);
    let k4 = pendulum_accel(&offset(&k3, h), p);
    let combine = |a: f64, b: f64, c: f64, d: f64| h / 6.0 * (a + 2.0 * b + 2.0 * c + d);
    PendulumState {
        theta1: s.theta1 + combine(k1.dtheta1, k2.dtheta1, k3.dtheta1, k4.dtheta1),
        theta2: s.theta2 + combine(k1.dtheta2, k2.dtheta2, k3.dtheta2, k4.dtheta2),
        omega1: s.omega1 + combine(k1.domega1, k2.domega1, k3.domega1, k4.domega1),
        omega2: s.omega2 + combine(k1.domega2, k2.domega2, k3.domega2, k4.domega2),
        t: s.t + h,
    }
}

/// Raw fixed-point state: angles Q3.28 in `[-π, π)`, rates Q6.25.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FixedState {
    pub theta1: i64,
    pub theta2: i64,
    pub omega1: i64,
    pub omega2: i64,
}

impl FixedState {
    pub fn from_state(state: &PendulumState) -> Result<Self> {
        state.validate()?;
        let angle = |v: f64| -> Result<i64> {
            Ok(wrap_angle(
                FixedPoint::from_f64(v % (2.0 * PI), ANGLE_WIDE)?.raw(),
            ))
        };
        let rate = |v: f64| -> Result<i64> { Ok(FixedPoint::from_f64(v, RATE_FORMAT)?.raw()) };
        Ok(FixedState {
            theta1: angle(state.theta1)?,
            theta2: angle(state.theta2)?,
            omega1: rate(state.omega1)?,
            omega2: rate(state.omega2)?,
        })
    }

    pub fn to_state(&self) -> PendulumState {
        PendulumState {
            theta1: FixedPoint::from_raw(self.theta1, ANGLE_FORMAT).to_f64(),
            theta2: FixedPoint::from_raw(self.theta2, ANGLE_FORMAT).to_f64(),
            omega1: FixedPoint::from_raw(self.omega1, RATE_FORMAT).to_f64(),
            omega2: FixedPoint::from_raw(self.omega2, RATE_FORMAT).to_f64(),
            t: 0.0,
        }
    }
}

/// Reduces a Q3.28-scaled angle into `[-π, π)` using the format's π.
pub fn wrap_angle(raw: i64) -> i64 {
    let pi = ANGLE_FORMAT.pi_raw();
    (raw + pi).rem_euclid(2 * pi) - pi
}

/// XOR of the low 16 bits of the two wrapped Q3.28 angles.
pub fn pendulum_extract_bits(state: &FixedState) -> u16 {
    ((state.theta1 ^ state.theta2) & 0xFFFF) as u16
}

/// Parameters and step size pre-converted to the working format.
#[derive(Debug, Clone, Copy)]
pub struct FixedCore {
    m1: FixedPoint,
    m2: FixedPoint,
    l1: FixedPoint,
    l2: FixedPoint,
    g: FixedPoint,
    h: FixedPoint,
}

fn w(v: f64) -> Result<FixedPoint> {
    FixedPoint::from_f64(v, WORK_FORMAT)
}

fn mul(a: FixedPoint, b: FixedPoint) -> FixedPoint {
    a.mul_floor(&b).expect("working format")
}

fn add(a: FixedPoint, b: FixedPoint) -> FixedPoint {
    a.add_sat(&b).expect("working format")
}

fn sub(a: FixedPoint, b: FixedPoint) -> FixedPoint {
    a.sub_sat(&b).expect("working format")
}

// sin/cos of a Q3.28-scaled angle, evaluated against the Q3.28 π and widened.
fn angle_sin(raw: i64) -> FixedPoint {
    FixedPoint::from_raw(wrap_angle(raw), ANGLE_FORMAT)
        .sin()
        .convert(WORK_FORMAT)
}

fn angle_cos(raw: i64) -> FixedPoint {
    FixedPoint::from_raw(wrap_angle(raw), ANGLE_FORMAT)
        .cos()
        .convert(WORK_FORMAT)
}

impl FixedCore {
    pub fn new(params: &PendulumParams, h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::invalid(format!("step size {h} must be positive")));
        }
        let h_fixed = w(h)?;
        if h_fixed.raw() == 0 {
            return Err(Error::invalid(format!(
                "step size {h} underflows the datapath"
            )));
        }
        Ok(FixedCore {
            m1: w(params.m1)?,
            m2: w(params.m2)?,
            l1: w(params.l1)?,
            l2: w(params.l2)?,
            g: w(params.g)?,
            h: h_fixed,
        })
    }

    /// Angular accelerations in the working format.
    pub fn accel(&self, s: &FixedState) -> (FixedPoint, FixedPoint) {
        let two = w(2.0).expect("finite");
        let w1 = FixedPoint::from_raw(s.omega1, RATE_FORMAT).convert(WORK_FORMAT);
        let w2 = FixedPoint::from_raw(s.omega2, RATE_FORMAT).convert(WORK_FORMAT);
        let delta = s.theta1 - s.theta2;
        let s12 = angle_sin(delta);
        let c12 = angle_cos(delta);
        let s1 = angle_sin(s.theta1);
        let c1 = angle_cos(s.theta1);
        let s1m2 = angle_sin(s.theta1 - 2 * s.theta2);
        let c2d = angle_cos(2 * delta);

        let two_m1_m2 = add(mul(two, self.m1), self.m2);
        let factor = sub(two_m1_m2, mul(self.m2, c2d));
        let d1 = mul(self.l1, factor);
        let d2 = mul(self.l2, factor);
        let w1sq = mul(w1, w1);
        let w2sq = mul(w2, w2);
        let m_sum = add(self.m1, self.m2);

        let coupling = add(mul(w2sq, self.l2), mul(mul(w1sq, self.l1), c12));
        let num1 = sub(
            sub(
                mul(mul(self.g, two_m1_m2), s1).neg_sat(),
                mul(mul(self.m2, self.g), s1m2),
            ),
            mul(mul(mul(two, s12), self.m2), coupling),
        );
        let bracket = add(
            add(mul(mul(w1sq, self.l1), m_sum), mul(mul(self.g, m_sum), c1)),
            mul(mul(mul(w2sq, self.l2), self.m2), c12),
        );
        let num2 = mul(mul(two, s12), bracket);
        (
            num1.div_floor(&d1).expect("d1 > 0"),
            num2.div_floor(&d2).expect("d2 > 0"),
        )
    }

    /// One explicit Euler step.
    pub fn step(&self, s: &mut FixedState) {
        let (a1, a2) = self.accel(s);
        let advance_angle = |theta: i64, omega: i64| {
            let theta = FixedPoint::from_raw(theta, ANGLE_FORMAT).convert(WORK_FORMAT);
            let omega = FixedPoint::from_raw(omega, RATE_FORMAT).convert(WORK_FORMAT);
            wrap_angle(add(theta, mul(self.h, omega)).convert(ANGLE_WIDE).raw())
        };
        let advance_rate = |omega: i64, accel: FixedPoint| {
            let omega = FixedPoint::from_raw(omega, RATE_FORMAT).convert(WORK_FORMAT);
            add(omega, mul(self.h, accel)).convert(RATE_FORMAT).raw()
        };
        *s = FixedState {
            theta1: advance_angle(s.theta1, s.omega1),
            theta2: advance_angle(s.theta2, s.omega2),
            omega1: advance_rate(s.omega1, a1),
            omega2: advance_rate(s.omega2, a2),
        };
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PendulumConfig {
    pub params: PendulumParams,
    pub seed: PendulumState,
    pub h: f64,
    pub burn_in: u64,
}

impl Default for PendulumConfig {
    fn default() -> Self {
        PendulumConfig {
            params: PendulumParams::default(),
            seed: DEFAULT_SEED,
            h: DEFAULT_STEP,
            burn_in: DEFAULT_BURN_IN,
        }
    }
}

impl PendulumConfig {
    pub fn validate(&self) -> Result<()> {
        self.seed.validate()?;
        FixedCore::new(&self.params, self.h).map(|_| ())
    }
}

/// Fixed-point Euler generator emitting one 16-bit word per step.
#[derive(Debug, Clone)]
pub struct PendulumGenerator {
    config: PendulumConfig,
    core: FixedCore,
    state: FixedState,
    steps_taken: u64,
}

impl PendulumGenerator {
    pub fn new(config: PendulumConfig) -> Result<Self> {
        config.validate()?;
        Ok(PendulumGenerator {
            core: FixedCore::new(&config.params, config.h)?,
            state: FixedState::from_state(&config.seed)?,
            config,
            steps_taken: 0,
        })
    }

    /// Constructs and runs the burn-in.
    pub fn ready(config: PendulumConfig) -> Result<Self> {
        let mut generator = Self::new(config)?;
        generator.burn_in();
        Ok(generator)
    }

    pub fn config(&self) -> &PendulumConfig {
        &self.config
    }

    pub fn state(&self) -> &FixedState {
        &self.state
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps_taken
    }

    pub fn is_ready(&self) -> bool {
        self.steps_taken >= self.config.burn_in
    }

    pub fn burn_in(&mut self) {
        while !self.is_ready() {
            self.step();
        }
    }

    pub fn step(&mut self) {
        self.core.step(&mut self.state);
        self.steps_taken += 1;
    }

    /// Steps once and returns the extracted word.
    pub fn extract_bits(&mut self) -> Result<u16> {
        if !self.is_ready() {
            return Err(Error::NotReady {
                steps_taken: self.steps_taken,
                burn_in: self.config.burn_in,
            });
        }
        self.step();
        Ok(pendulum_extract_bits(&self.state))
    }
}

impl MixEntropy for PendulumGenerator {
    /// xor-state: low half into θ1, high half into θ2. perturb-value: low half into θ1.
    fn mix_entropy(&mut self, word: u32, mode: MixMode) {
        self.state.theta1 = wrap_angle(self.state.theta1 ^ (word & 0xFFFF) as i64);
        if mode == MixMode::XorState {
            self.state.theta2 = wrap_angle(self.state.theta2 ^ (word >> 16) as i64);
        }
    }
}
