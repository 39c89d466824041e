//! Vertical juggling as a two-mode hybrid system.
//!
//! In *flight* the ball is ballistic. At touchdown the ball meets the
//! pre-compressed paddle at `z_rest - p_com`, keeps a fraction `e` of its
//! speed, and rides the paddle as a mass on a linear spring-damper whose rest
//! point is `z_rest`. The *hit* ends when the spring is back at its rest
//! length; the ball lifts off and the paddle is reset instantly.
//!
//! Sampling the apex height once per cycle gives a one-dimensional return
//! map whose fixed points are steady juggles.
//!
//! All quantities are SI: m, kg, s.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::bisect;

pub const GRAVITY: f64 = 9.81;
pub const DEFAULT_RK4_STEP: f64 = 1e-5;
/// Upper end of the default fixed-point search bracket (m above rest).
pub const DEFAULT_BRACKET_TOP: f64 = 2.0;
pub const FIXED_POINT_TOL: f64 = 1e-7;
pub const MULTIPLIER_STEP: f64 = 1e-5;
pub const CALIBRATION_TOL: f64 = 1e-5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JuggleError {
    #[error("invalid ball: {0}")]
    InvalidBall(String),
    #[error("invalid juggler: {0}")]
    InvalidJuggler(String),
    #[error("apex {h:.6} m is below the waiting paddle at {floor:.6} m")]
    BelowPaddle { h: f64, floor: f64 },
    #[error("no fixed point in bracket [{lo:.6}, {hi:.6}] m")]
    NoFixedPoint { lo: f64, hi: f64 },
    #[error("return map undefined near h = {h:.6} m (juggle dies)")]
    DeathNearFixedPoint { h: f64 },
    #[error("target apex {target:.6} m unachievable by varying {parameter}; feasible range ({lo:.6}, {hi:.6}) m")]
    Unachievable {
        target: f64,
        parameter: &'static str,
        lo: f64,
        hi: f64,
    },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    pub mass: f64,
    /// Fraction of touchdown speed kept through the impact.
    pub restitution: f64,
    pub label: String,
}

impl BallSpec {
    pub fn new(mass: f64, restitution: f64, label: impl Into<String>) -> Self {
        Self {
            mass,
            restitution,
            label: label.into(),
        }
    }

    pub fn validate(&self) -> Result<(), JuggleError> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(JuggleError::InvalidBall(format!("mass {} kg", self.mass)));
        }
        if !(self.restitution >= 0.0 && self.restitution <= 1.0) {
            return Err(JuggleError::InvalidBall(format!(
                "restitution {} outside [0, 1]",
                self.restitution
            )));
        }
        Ok(())
    }

    pub fn with_restitution(&self, restitution: f64) -> Self {
        Self {
            restitution,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JugglerSpec {
    /// Effective stiffness of the three springs in parallel (N/m).
    pub k_es: f64,
    /// Viscous damping during the hit (N s/m).
    pub b_s: f64,
    /// Pre-compression loaded before touchdown (m).
    pub p_com: f64,
    /// Paddle height at spring rest; the datum for apex heights (m).
    pub z_rest: f64,
}

impl JugglerSpec {
    pub fn validate(&self) -> Result<(), JuggleError> {
        if !(self.k_es > 0.0 && self.k_es.is_finite()) {
            return Err(JuggleError::InvalidJuggler(format!("k_es = {}", self.k_es)));
        }
        if !(self.b_s >= 0.0 && self.b_s.is_finite()) {
            return Err(JuggleError::InvalidJuggler(format!("b_s = {}", self.b_s)));
        }
        if !(self.p_com >= 0.0 && self.p_com.is_finite()) {
            return Err(JuggleError::InvalidJuggler(format!("p_com = {}", self.p_com)));
        }
        if self.z_rest > 0.0 && self.p_com >= self.z_rest {
            return Err(JuggleError::InvalidJuggler(format!(
                "pre-compression {} m exceeds paddle height {} m",
                self.p_com, self.z_rest
            )));
        }
        Ok(())
    }

    pub fn with_precompression(&self, p_com: f64) -> Self {
        Self { p_com, ..*self }
    }

    pub fn with_damping(&self, b_s: f64) -> Self {
        Self { b_s, ..*self }
    }
}

fn validate(ball: &BallSpec, spec: &JugglerSpec) -> Result<(), JuggleError> {
    ball.validate()?;
    spec.validate()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Flight {
    /// Downward speed at touchdown.
    pub v_touchdown: f64,
    /// Time from apex to touchdown.
    pub t_fall: f64,
}

/// Free fall from `h0` above rest onto the paddle waiting at `-p_com`.
pub fn flight(h0: f64, spec: &JugglerSpec) -> Result<Flight, JuggleError> {
    let drop = h0 + spec.p_com;
    if !(drop >= 0.0) {
        return Err(JuggleError::BelowPaddle {
            h: h0,
            floor: -spec.p_com,
        });
    }
    let v_touchdown = (2.0 * GRAVITY * drop).sqrt();
    Ok(Flight {
        v_touchdown,
        t_fall: v_touchdown / GRAVITY,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HitMethod {
    /// Closed-form damped oscillator with bracketed event search.
    #[default]
    Analytic,
    /// Fixed-step classical Runge-Kutta with bisection on the event.
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Liftoff {
    pub v_out: f64,
    /// Touchdown to liftoff.
    pub t_hit: f64,
    /// Deepest compression to liftoff: the stroke over which the spring
    /// returns its energy to the ball.
    pub t_release: f64,
    /// Deepest excursion below rest (m, positive).
    pub max_compression: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum HitOutcome {
    Liftoff(Liftoff),
    /// The ball never climbs back to rest height with upward speed.
    Death {
        t_end: f64,
        /// Height relative to rest when the search stopped (m, <= 0).
        height: f64,
    },
}

impl HitOutcome {
    pub fn v_out(&self) -> Option<f64> {
        match self {
            HitOutcome::Liftoff(l) => Some(l.v_out),
            HitOutcome::Death { .. } => None,
        }
    }

    pub fn liftoff(&self) -> Option<&Liftoff> {
        match self {
            HitOutcome::Liftoff(l) => Some(l),
            HitOutcome::Death { .. } => None,
        }
    }
}

/// Linear stance dynamics in coordinates relative to the loaded equilibrium
/// `z_eq = z_rest - m g / k`: `x'' + 2 sigma x' + omega^2 x = 0`.
#[derive(Debug, Clone, Copy)]
struct Stance {
    omega: f64,
    sigma: f64,
    x0: f64,
    v0: f64,
    /// Rest height relative to equilibrium; liftoff happens when `x` climbs
    /// back here.
    x_target: f64,
    regime: Regime,
}

#[derive(Debug, Clone, Copy)]
enum Regime {
    Under { wd: f64 },
    Critical,
    Over { r1: f64, r2: f64, c1: f64, c2: f64 },
}

impl Stance {
    fn new(v_in: f64, ball: &BallSpec, spec: &JugglerSpec) -> Self {
        let m = ball.mass;
        let omega = (spec.k_es / m).sqrt();
        let sigma = spec.b_s / (2.0 * m);
        let x_target = m * GRAVITY / spec.k_es;
        let x0 = x_target - spec.p_com;
        let v0 = -ball.restitution * v_in;
        let zeta = sigma / omega;
        let regime = if (zeta - 1.0).abs() < 1e-9 {
            Regime::Critical
        } else if zeta < 1.0 {
            Regime::Under {
                wd: omega * (1.0 - zeta * zeta).sqrt(),
            }
        } else {
            let root = (sigma * sigma - omega * omega).sqrt();
            let r1 = -sigma + root;
            let r2 = -sigma - root;
            let c1 = (v0 - r2 * x0) / (r1 - r2);
            Regime::Over {
                r1,
                r2,
                c1,
                c2: x0 - c1,
            }
        };
        Self {
            omega,
            sigma,
            x0,
            v0,
            x_target,
            regime,
        }
    }

    fn position(&self, t: f64) -> f64 {
        match self.regime {
            Regime::Under { wd } => {
                let (s, c) = (wd * t).sin_cos();
                (-self.sigma * t).exp() * (self.x0 * c + (self.v0 + self.sigma * self.x0) / wd * s)
            }
            Regime::Critical => (self.x0 + (self.v0 + self.omega * self.x0) * t) * (-self.omega * t).exp(),
            Regime::Over { r1, r2, c1, c2 } => c1 * (r1 * t).exp() + c2 * (r2 * t).exp(),
        }
    }

    fn velocity(&self, t: f64) -> f64 {
        match self.regime {
            Regime::Under { wd } => {
                let (s, c) = (wd * t).sin_cos();
                let w2 = self.omega * self.omega;
                (-self.sigma * t).exp() * (self.v0 * c - (self.sigma * self.v0 + w2 * self.x0) / wd * s)
            }
            Regime::Critical => {
                (self.v0 - self.omega * (self.v0 + self.omega * self.x0) * t) * (-self.omega * t).exp()
            }
            Regime::Over { r1, r2, c1, c2 } => c1 * r1 * (r1 * t).exp() + c2 * r2 * (r2 * t).exp(),
        }
    }

    fn accel(&self, x: f64, v: f64) -> f64 {
        -self.omega * self.omega * x - 2.0 * self.sigma * v
    }

    /// Time after which a ball that has not lifted off never will.
    fn horizon(&self) -> f64 {
        let slow = match self.regime {
            Regime::Over { r1, .. } => r1.abs(),
            _ => self.sigma.max(self.omega * 1e-3),
        };
        10.0 * std::f64::consts::TAU / self.omega + 40.0 / slow.max(1e-12)
    }
}

fn refine<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64) -> f64 {
    // f(lo) <= 0 < f(hi)
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn hit_analytic(stance: &Stance) -> HitOutcome {
    let period = std::f64::consts::TAU / stance.omega;
    let dt = period / 512.0;
    let horizon = stance.horizon();
    let gap = |t: f64| stance.position(t) - stance.x_target;

    let mut t_prev = 0.0;
    let mut v_prev = stance.v0;
    let mut t_bottom: Option<f64> = if stance.v0 == 0.0 && stance.accel(stance.x0, 0.0) > 0.0 {
        Some(0.0)
    } else {
        None
    };
    let mut k = 1u64;
    loop {
        let t = k as f64 * dt;
        if t > horizon {
            return HitOutcome::Death {
                t_end: t_prev,
                height: gap(t_prev),
            };
        }
        let g = gap(t);
        let v = stance.velocity(t);
        if t_bottom.is_none() && v_prev <= 0.0 && v > 0.0 {
            t_bottom = Some(refine(|s| stance.velocity(s), t_prev, t));
        }
        let crossing = if g > 0.0 {
            Some((t_prev, t))
        } else if v_prev > 0.0 && v <= 0.0 {
            // Peak inside this step; it may poke above rest between samples.
            let t_peak = refine(|s| -stance.velocity(s), t_prev, t);
            if gap(t_peak) > 0.0 {
                Some((t_prev, t_peak))
            } else {
                return HitOutcome::Death {
                    t_end: t_peak,
                    height: gap(t_peak),
                };
            }
        } else {
            None
        };
        if let Some((lo, hi)) = crossing {
            let t_hit = refine(gap, lo, hi);
            let v_out = stance.velocity(t_hit);
            if !(v_out > 0.0) {
                return HitOutcome::Death {
                    t_end: t_hit,
                    height: 0.0,
                };
            }
            let t_bottom = t_bottom.unwrap_or(0.0);
            return HitOutcome::Liftoff(Liftoff {
                v_out,
                t_hit,
                t_release: t_hit - t_bottom,
                max_compression: stance.x_target - stance.position(t_bottom),
            });
        }
        t_prev = t;
        v_prev = v;
        k += 1;
    }
}

fn rk4_step(stance: &Stance, (x, v): (f64, f64), h: f64) -> (f64, f64) {
    let f = |x: f64, v: f64| (v, stance.accel(x, v));
    let (k1x, k1v) = f(x, v);
    let (k2x, k2v) = f(x + 0.5 * h * k1x, v + 0.5 * h * k1v);
    let (k3x, k3v) = f(x + 0.5 * h * k2x, v + 0.5 * h * k2v);
    let (k4x, k4v) = f(x + h * k3x, v + h * k3v);
    (
        x + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
        v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
    )
}

fn hit_rk4(stance: &Stance, step: f64) -> HitOutcome {
    let horizon = stance.horizon();
    let mut state = (stance.x0, stance.v0);
    let mut t = 0.0;
    let mut k = 0u64;
    let mut bottom: Option<(f64, f64)> = if stance.v0 == 0.0 && stance.accel(stance.x0, 0.0) > 0.0 {
        Some((0.0, stance.x0))
    } else {
        None
    };
    loop {
        if t > horizon {
            return HitOutcome::Death {
                t_end: t,
                height: state.0 - stance.x_target,
            };
        }
        let next = rk4_step(stance, state, step);
        if bottom.is_none() && state.1 <= 0.0 && next.1 > 0.0 {
            let tau = refine(|s| rk4_step(stance, state, s).1, 0.0, step);
            bottom = Some((t + tau, rk4_step(stance, state, tau).0));
        }
        if next.0 - stance.x_target > 0.0 {
            let tau = refine(|s| rk4_step(stance, state, s).0 - stance.x_target, 0.0, step);
            let (_, v_out) = rk4_step(stance, state, tau);
            let t_hit = t + tau;
            if !(v_out > 0.0) {
                return HitOutcome::Death {
                    t_end: t_hit,
                    height: 0.0,
                };
            }
            let (t_bottom, x_bottom) = bottom.unwrap_or((0.0, stance.x0));
            return HitOutcome::Liftoff(Liftoff {
                v_out,
                t_hit,
                t_release: t_hit - t_bottom,
                max_compression: stance.x_target - x_bottom,
            });
        }
        if state.1 > 0.0 && next.1 <= 0.0 {
            return HitOutcome::Death {
                t_end: t + step,
                height: next.0 - stance.x_target,
            };
        }
        k += 1;
        t = k as f64 * step;
        state = next;
    }
}

/// Stance phase from touchdown speed `v_in` to liftoff.
pub fn hit(v_in: f64, ball: &BallSpec, spec: &JugglerSpec, method: HitMethod) -> Result<HitOutcome, JuggleError> {
    validate(ball, spec)?;
    if !(v_in >= 0.0 && v_in.is_finite()) {
        return Err(JuggleError::InvalidRequest(format!("touchdown speed {v_in}")));
    }
    let stance = Stance::new(v_in, ball, spec);
    Ok(match method {
        HitMethod::Analytic => hit_analytic(&stance),
        HitMethod::Rk4 => hit_rk4(&stance, DEFAULT_RK4_STEP),
    })
}

/// RK4 stance with a caller-chosen step.
pub fn hit_rk4_with_step(
    v_in: f64,
    ball: &BallSpec,
    spec: &JugglerSpec,
    step: f64,
) -> Result<HitOutcome, JuggleError> {
    validate(ball, spec)?;
    if !(step > 0.0) {
        return Err(JuggleError::InvalidRequest(format!("step {step}")));
    }
    Ok(hit_rk4(&Stance::new(v_in, ball, spec), step))
}

/// One flight-hit-rise cycle: next apex height above rest, or `None` when
/// the juggle dies.
pub fn apex_map(h: f64, ball: &BallSpec, spec: &JugglerSpec, method: HitMethod) -> Result<Option<f64>, JuggleError> {
    let fl = flight(h, spec)?;
    Ok(hit(fl.v_touchdown, ball, spec, method)?
        .v_out()
        .map(|v| v * v / (2.0 * GRAVITY)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    AsymptoticallyStable,
    Neutral,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub h_star: f64,
    /// Derivative of the return map at the fixed point.
    pub multiplier: f64,
    pub stability: Stability,
    /// The map is the identity on the whole bracket; every height is fixed.
    pub degenerate: bool,
}

pub fn default_bracket(spec: &JugglerSpec) -> (f64, f64) {
    (-spec.p_com, DEFAULT_BRACKET_TOP)
}

fn classify(multiplier: f64) -> Stability {
    let m = multiplier.abs();
    if (m - 1.0).abs() < 1e-6 {
        Stability::Neutral
    } else if m < 1.0 {
        Stability::AsymptoticallyStable
    } else {
        Stability::Unstable
    }
}

/// Central-difference derivative of the return map.
pub fn map_multiplier(h: f64, ball: &BallSpec, spec: &JugglerSpec, method: HitMethod) -> Result<f64, JuggleError> {
    let floor = -spec.p_com;
    // One-sided at the paddle, where the map is not defined below.
    let (lo, hi) = if h - MULTIPLIER_STEP < floor {
        (h, h + 2.0 * MULTIPLIER_STEP)
    } else {
        (h - MULTIPLIER_STEP, h + MULTIPLIER_STEP)
    };
    let p_lo = apex_map(lo, ball, spec, method)?.ok_or(JuggleError::DeathNearFixedPoint { h })?;
    let p_hi = apex_map(hi, ball, spec, method)?.ok_or(JuggleError::DeathNearFixedPoint { h })?;
    Ok((p_hi - p_lo) / (hi - lo))
}

/// Bisection on `P(h) - h` over `bracket`.
pub fn find_fixed_point(
    ball: &BallSpec,
    spec: &JugglerSpec,
    bracket: (f64, f64),
    method: HitMethod,
) -> Result<FixedPoint, JuggleError> {
    validate(ball, spec)?;
    let (lo, hi) = bracket;
    if !(lo < hi) || lo < -spec.p_com {
        return Err(JuggleError::InvalidRequest(format!(
            "bracket [{lo}, {hi}] must be ordered and above the paddle at {}",
            -spec.p_com
        )));
    }
    let residual = |h: f64| -> f64 {
        match apex_map(h, ball, spec, method) {
            Ok(Some(next)) => next - h,
            // Dying means the ball falls short of any apex.
            _ => f64::NEG_INFINITY,
        }
    };
    let (r_lo, r_hi) = (residual(lo), residual(hi));
    let r_mid = residual(0.5 * (lo + hi));
    let identity_tol = 1e-9;
    if r_lo.abs() < identity_tol && r_hi.abs() < identity_tol && r_mid.abs() < identity_tol {
        let h_star = 0.5 * (lo + hi);
        let multiplier = map_multiplier(h_star, ball, spec, method)?;
        return Ok(FixedPoint {
            h_star,
            multiplier,
            stability: classify(multiplier),
            degenerate: true,
        });
    }
    // Low drops may die outright. The map grows with h, so the dead heights
    // form an interval at the bottom; start the search just above it.
    let mut search_lo = lo;
    if r_lo == f64::NEG_INFINITY && r_hi.is_finite() {
        let (mut dead, mut alive) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (dead + alive);
            if mid <= dead || mid >= alive {
                break;
            }
            if residual(mid).is_finite() {
                alive = mid;
            } else {
                dead = mid;
            }
        }
        search_lo = alive;
    }
    let h_star = bisect(residual, search_lo, hi, 1e-13, FIXED_POINT_TOL * 1e-3)
        .ok_or(JuggleError::NoFixedPoint { lo, hi })?;
    let multiplier = map_multiplier(h_star, ball, spec, method)?;
    Ok(FixedPoint {
        h_star,
        multiplier,
        stability: classify(multiplier),
        degenerate: false,
    })
}

/// Iterates the return map from `h0`, stopping early if the juggle dies.
pub fn iterate_apex(
    h0: f64,
    n: usize,
    ball: &BallSpec,
    spec: &JugglerSpec,
    method: HitMethod,
) -> Result<Vec<f64>, JuggleError> {
    let mut seq = Vec::with_capacity(n + 1);
    seq.push(h0);
    let mut h = h0;
    for _ in 0..n {
        match apex_map(h, ball, spec, method)? {
            Some(next) => {
                seq.push(next);
                h = next;
            }
            None => break,
        }
    }
    Ok(seq)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossParameter {
    Restitution,
    Damping,
}

impl LossParameter {
    fn name(self) -> &'static str {
        match self {
            LossParameter::Restitution => "restitution",
            LossParameter::Damping => "damping",
        }
    }
}

/// Steady apex for the given losses; `+inf` when the map gains energy at
/// every height in the bracket, `-inf` when it loses it everywhere.
pub fn steady_apex(ball: &BallSpec, spec: &JugglerSpec, method: HitMethod) -> f64 {
    let bracket = default_bracket(spec);
    match find_fixed_point(ball, spec, bracket, method) {
        Ok(fp) => fp.h_star,
        Err(_) => match apex_map(bracket.1, ball, spec, method) {
            Ok(Some(next)) if next > bracket.1 => f64::INFINITY,
            _ => f64::NEG_INFINITY,
        },
    }
}

/// Adjusts one loss channel until the steady apex equals `target` (m).
pub fn calibrate_losses(
    target: f64,
    ball: &BallSpec,
    spec: &JugglerSpec,
    free: LossParameter,
    method: HitMethod,
) -> Result<(BallSpec, JugglerSpec), JuggleError> {
    validate(ball, spec)?;
    let apply = |x: f64| match free {
        LossParameter::Restitution => (ball.with_restitution(x), *spec),
        LossParameter::Damping => (ball.clone(), spec.with_damping(x)),
    };
    let apex_for = |x: f64| {
        let (b, s) = apply(x);
        steady_apex(&b, &s, method)
    };
    // Both ranges are ordered so the apex increases from lo to hi.
    let (lo, hi) = match free {
        LossParameter::Restitution => (0.0, 1.0),
        LossParameter::Damping => {
            let b_max = 40.0 * (spec.k_es * ball.mass).sqrt();
            (b_max, 0.0)
        }
    };
    let (apex_lo, apex_hi) = (apex_for(lo), apex_for(hi));
    let unachievable = JuggleError::Unachievable {
        target,
        parameter: free.name(),
        lo: apex_lo,
        hi: apex_hi,
    };
    if !target.is_finite() || !(target > apex_lo && target < apex_hi) {
        return Err(unachievable);
    }
    let x = bisect(|x| apex_for(x) - target, lo, hi, 1e-14, CALIBRATION_TOL * 1e-2)
        .ok_or(unachievable)?;
    let (b, s) = apply(x);
    let achieved = steady_apex(&b, &s, method);
    if (achieved - target).abs() >= CALIBRATION_TOL {
        return Err(JuggleError::Unachievable {
            target,
            parameter: free.name(),
            lo: apex_lo,
            hi: apex_hi,
        });
    }
    Ok((b, s))
}

/// Elastic energy loaded by the pre-compression (J).
pub fn preload_energy(spec: &JugglerSpec) -> f64 {
    0.5 * spec.k_es * spec.p_com * spec.p_com
}

pub fn power_for_duration(energy_j: f64, duration_s: f64) -> f64 {
    energy_j / duration_s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub h_star: f64,
    pub energy_j: f64,
    pub t_hit: f64,
    pub t_release: f64,
    /// Preload energy over the whole stance.
    pub power_w: f64,
    /// Preload energy over the release stroke only.
    pub release_power_w: f64,
}

/// Preload energy and the power it is delivered at, evaluated on the steady
/// juggle.
pub fn mean_power(ball: &BallSpec, spec: &JugglerSpec, method: HitMethod) -> Result<PowerReport, JuggleError> {
    let fp = find_fixed_point(ball, spec, default_bracket(spec), method)?;
    let fl = flight(fp.h_star, spec)?;
    let lift = *hit(fl.v_touchdown, ball, spec, method)?
        .liftoff()
        .ok_or(JuggleError::DeathNearFixedPoint { h: fp.h_star })?;
    let energy_j = preload_energy(spec);
    Ok(PowerReport {
        h_star: fp.h_star,
        energy_j,
        t_hit: lift.t_hit,
        t_release: lift.t_release,
        power_w: power_for_duration(energy_j, lift.t_hit),
        release_power_w: power_for_duration(energy_j, lift.t_release),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Apex,
    Touchdown,
    Liftoff,
    Death,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Flight,
    Hit,
}

/// One trace record. `mode` is the mode in force after the event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JuggleEvent {
    pub t: f64,
    pub kind: EventKind,
    pub chi_m: f64,
    pub chidot_mps: f64,
    pub mode: Mode,
    pub cycle: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JuggleTrace {
    pub events: Vec<JuggleEvent>,
    /// Apex heights above rest, starting with the initial height.
    pub apex_sequence: Vec<f64>,
    pub died: bool,
}

impl JuggleTrace {
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub h0: f64,
    pub n_cycles: usize,
    pub seed: u64,
    /// Standard deviation of per-touchdown restitution noise.
    pub sigma_e: f64,
    pub method: HitMethod,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            h0: 0.1,
            n_cycles: 100,
            seed: 0,
            sigma_e: 0.0,
            method: HitMethod::Analytic,
        }
    }
}

/// Runs the hybrid system for `n_cycles` bounces from an apex at `h0`.
pub fn simulate(ball: &BallSpec, spec: &JugglerSpec, opts: &SimOptions) -> Result<JuggleTrace, JuggleError> {
    validate(ball, spec)?;
    if opts.n_cycles < 1 {
        return Err(JuggleError::InvalidRequest("n_cycles must be at least 1".into()));
    }
    if !(opts.sigma_e >= 0.0) {
        return Err(JuggleError::InvalidRequest(format!("sigma_e = {}", opts.sigma_e)));
    }
    let noise = Normal::new(0.0, opts.sigma_e.max(f64::MIN_POSITIVE))
        .map_err(|e| JuggleError::InvalidRequest(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut events = Vec::with_capacity(3 * opts.n_cycles + 1);
    let mut apex_sequence = Vec::with_capacity(opts.n_cycles + 1);
    let mut t = 0.0;
    let mut h = opts.h0;
    events.push(JuggleEvent {
        t,
        kind: EventKind::Apex,
        chi_m: spec.z_rest + h,
        chidot_mps: 0.0,
        mode: Mode::Flight,
        cycle: 0,
    });
    apex_sequence.push(h);

    for cycle in 1..=opts.n_cycles {
        let fl = flight(h, spec)?;
        t += fl.t_fall;
        events.push(JuggleEvent {
            t,
            kind: EventKind::Touchdown,
            chi_m: spec.z_rest - spec.p_com,
            chidot_mps: -fl.v_touchdown,
            mode: Mode::Hit,
            cycle,
        });
        let e = if opts.sigma_e > 0.0 {
            (ball.restitution + noise.sample(&mut rng)).clamp(0.0, 1.0)
        } else {
            ball.restitution
        };
        match hit(fl.v_touchdown, &ball.with_restitution(e), spec, opts.method)? {
            HitOutcome::Liftoff(lift) => {
                t += lift.t_hit;
                events.push(JuggleEvent {
                    t,
                    kind: EventKind::Liftoff,
                    chi_m: spec.z_rest,
                    chidot_mps: lift.v_out,
                    mode: Mode::Flight,
                    cycle,
                });
                h = lift.v_out * lift.v_out / (2.0 * GRAVITY);
                t += lift.v_out / GRAVITY;
                events.push(JuggleEvent {
                    t,
                    kind: EventKind::Apex,
                    chi_m: spec.z_rest + h,
                    chidot_mps: 0.0,
                    mode: Mode::Flight,
                    cycle,
                });
                apex_sequence.push(h);
            }
            HitOutcome::Death { t_end, height } => {
                events.push(JuggleEvent {
                    t: t + t_end,
                    kind: EventKind::Death,
                    chi_m: spec.z_rest + height,
                    chidot_mps: 0.0,
                    mode: Mode::Hit,
                    cycle,
                });
                return Ok(JuggleTrace {
                    events,
                    apex_sequence,
                    died: true,
                });
            }
        }
    }
    Ok(JuggleTrace {
        events,
        apex_sequence,
        died: false,
    })
}

/// Dense `(t, chi)` samples of the noiseless ball trajectory, for plotting.
pub fn sample_trajectory(
    ball: &BallSpec,
    spec: &JugglerSpec,
    h0: f64,
    n_cycles: usize,
    dt: f64,
) -> Result<Vec<(f64, f64)>, JuggleError> {
    validate(ball, spec)?;
    if !(dt > 0.0) {
        return Err(JuggleError::InvalidRequest(format!("dt = {dt}")));
    }
    let mut out = Vec::new();
    let mut t0 = 0.0;
    let mut h = h0;
    let z = spec.z_rest;
    for _ in 0..n_cycles {
        let fl = flight(h, spec)?;
        let mut s = 0.0;
        while s < fl.t_fall {
            out.push((t0 + s, z + h - 0.5 * GRAVITY * s * s));
            s += dt;
        }
        t0 += fl.t_fall;
        let stance = Stance::new(fl.v_touchdown, ball, spec);
        let lift = match hit_analytic(&stance) {
            HitOutcome::Liftoff(l) => l,
            HitOutcome::Death { t_end, .. } => {
                let mut s = 0.0;
                while s <= t_end {
                    out.push((t0 + s, z + stance.position(s) - stance.x_target));
                    s += dt;
                }
                return Ok(out);
            }
        };
        let mut s = 0.0;
        while s < lift.t_hit {
            out.push((t0 + s, z + stance.position(s) - stance.x_target));
            s += dt;
        }
        t0 += lift.t_hit;
        let rise = lift.v_out / GRAVITY;
        let mut s = 0.0;
        while s < rise {
            out.push((t0 + s, z + lift.v_out * s - 0.5 * GRAVITY * s * s));
            s += dt;
        }
        t0 += rise;
        h = lift.v_out * lift.v_out / (2.0 * GRAVITY);
    }
    out.push((t0, z + h));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p_com_mm: f64,
    pub h_star_mm: f64,
    pub multiplier: f64,
    pub energy_j: f64,
    pub power_w: f64,
}

/// Steady state for each pre-compression, sorted by pre-compression.
pub fn sweep_precompression(
    ball: &BallSpec,
    spec: &JugglerSpec,
    p_com_values: &[f64],
    method: HitMethod,
) -> Result<Vec<SweepRow>, JuggleError> {
    let mut rows = p_com_values
        .par_iter()
        .map(|&p| {
            let s = spec.with_precompression(p);
            let fp = find_fixed_point(ball, &s, default_bracket(&s), method)?;
            let power = mean_power(ball, &s, method)?;
            Ok(SweepRow {
                p_com_mm: p * 1e3,
                h_star_mm: fp.h_star * 1e3,
                multiplier: fp.multiplier,
                energy_j: power.energy_j,
                power_w: power.power_w,
            })
        })
        .collect::<Result<Vec<_>, JuggleError>>()?;
    rows.sort_by(|a, b| a.p_com_mm.total_cmp(&b.p_com_mm));
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "p_com_mm,h_star_mm,multiplier,energy_j,power_w")?;
    for r in rows {
        writeln!(
            out,
            "{:.6},{:.6},{:.9},{:.9},{:.6}",
            r.p_com_mm, r.h_star_mm, r.multiplier, r.energy_j, r.power_w
        )?;
    }
    Ok(())
}
