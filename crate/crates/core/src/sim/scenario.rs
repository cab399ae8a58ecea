use serde::{Deserialize, Serialize};

use super::controller::{controller_update, ControllerRuntimeConfig, Measurement, RateSource};
use super::filter::{filtered_derivative_update, DerivativeFilter};
use super::integrate::rk4_step;
use super::trace::{PlantMode, Trace, TraceMeta, TraceRecord};
use crate::error::{Error, Result};
use crate::lti::DisturbanceProfile;
use crate::model::{full_derivative, motor_torque, reduced_derivative, FullState, PendulumState, PhysicalParams, ReducedDynamics};
use crate::synthesis::GainVector;

/// Plant integrated by [`run_scenario`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PlantModel {
    FullNonlinear(PhysicalParams),
    SmallAngleReduced(ReducedDynamics),
}

impl PlantModel {
    pub fn mode(&self) -> PlantMode {
        match self {
            PlantModel::FullNonlinear(_) => PlantMode::FullNonlinear,
            PlantModel::SmallAngleReduced(_) => PlantMode::SmallAngleReduced,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PlantModel::FullNonlinear(p) => p.validate(),
            PlantModel::SmallAngleReduced(r) => r.validate(),
        }
    }

    /// `(θ̈, α̈)` with motor voltage `v_m` and extra arm torque `tau_d`.
    fn accelerations(&self, s: &FullState, v_m: f64, tau_d: f64) -> (f64, f64) {
        match self {
            PlantModel::FullNonlinear(p) => {
                let tau = motor_torque(p, v_m, s.theta_dot) + tau_d;
                let d = full_derivative(p, s, tau);
                (d[2], d[3])
            }
            PlantModel::SmallAngleReduced(r) => {
                let ps = PendulumState {
                    x0: 0.0,
                    x1: s.theta,
                    x2: s.alpha,
                    x3: s.theta_dot,
                    x4: s.alpha_dot,
                };
                let d = reduced_derivative(r, &ps, v_m, tau_d);
                (d[3], d[4])
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    #[default]
    Constant,
    SquarePulse,
}

/// Arm-angle reference.
///
/// Before `start_time` the value is `offset`. Afterwards a constant
/// reference holds `offset + amplitude`; a square pulse starts at
/// `offset + amplitude` for half a period, then `offset − amplitude`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSignal {
    pub kind: ReferenceKind,
    pub amplitude: f64,
    #[serde(default)]
    pub period: f64,
    #[serde(default)]
    pub start_time: f64,
    #[serde(default)]
    pub offset: f64,
}

impl ReferenceSignal {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(value: f64) -> Self {
        Self {
            kind: ReferenceKind::Constant,
            amplitude: value,
            ..Default::default()
        }
    }

    pub fn square_pulse(amplitude: f64, period: f64, start_time: f64) -> Self {
        Self {
            kind: ReferenceKind::SquarePulse,
            amplitude,
            period,
            start_time,
            offset: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("amplitude", self.amplitude),
            ("period", self.period),
            ("start_time", self.start_time),
            ("offset", self.offset),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(format!("reference {name} must be finite")));
            }
        }
        if self.kind == ReferenceKind::SquarePulse && self.period <= 0.0 {
            return Err(Error::invalid("square-pulse period must be positive"));
        }
        Ok(())
    }

    pub fn value_at(&self, t: f64) -> f64 {
        if t < self.start_time {
            return self.offset;
        }
        match self.kind {
            ReferenceKind::Constant => self.offset + self.amplitude,
            ReferenceKind::SquarePulse => {
                let phase = (t - self.start_time).rem_euclid(self.period);
                if phase < 0.5 * self.period {
                    self.offset + self.amplitude
                } else {
                    self.offset - self.amplitude
                }
            }
        }
    }
}

/// A complete closed-loop run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub plant: PlantModel,
    pub gains: GainVector,
    pub runtime: ControllerRuntimeConfig,
    pub reference: ReferenceSignal,
    /// Arm torque disturbance, N·m.
    pub disturbance: DisturbanceProfile,
    pub initial: FullState,
    pub duration: f64,
    pub dt: f64,
}

impl Scenario {
    /// Identified dynamics with the laboratory gains, starting at rest with
    /// the pendulum tipped by `alpha0` and a zero reference.
    pub fn regulation(alpha0: f64, duration: f64) -> Self {
        Self {
            plant: PlantModel::SmallAngleReduced(ReducedDynamics::identified()),
            gains: GainVector::lab_design(),
            runtime: ControllerRuntimeConfig::default(),
            reference: ReferenceSignal::zero(),
            disturbance: DisturbanceProfile::empty(),
            initial: FullState::at_rest(0.0, alpha0),
            duration,
            dt: 1e-3,
        }
    }

    /// The laboratory protocol: 10° initial tilt, 15 s of regulation, then a
    /// ±20° square pulse with a 10 s period, 50 s in total.
    pub fn laboratory() -> Self {
        Self {
            reference: ReferenceSignal::square_pulse(20f64.to_radians(), 10.0, 15.0),
            ..Self::regulation(10f64.to_radians(), 50.0)
        }
    }

    /// Plant steps per controller sample.
    pub fn steps_per_sample(&self) -> Result<usize> {
        let ratio = self.runtime.sample_period / self.dt;
        let n = ratio.round();
        if n < 1.0 || (ratio - n).abs() > 1e-6 * ratio {
            return Err(Error::invalid(format!(
                "sample_period ({}) must be a whole multiple of dt ({})",
                self.runtime.sample_period, self.dt
            )));
        }
        Ok(n as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::invalid(format!("duration must be positive, got {}", self.duration)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !self.initial.is_finite() {
            return Err(Error::invalid("initial state must be finite"));
        }
        self.runtime.validate()?;
        if self.dt > self.runtime.sample_period * (1.0 + 1e-12) {
            return Err(Error::invalid("dt must not exceed the controller sample period"));
        }
        self.steps_per_sample()?;
        self.reference.validate()?;
        self.plant.validate()?;
        if self.gains.as_array().iter().any(|k| !k.is_finite()) {
            return Err(Error::invalid("gains must be finite"));
        }
        Ok(())
    }

    pub fn config_hash(&self) -> u64 {
        fnv1a(format!("{self:?}").as_bytes())
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Disturbance torque at time `t`.
pub fn inject_disturbance(profile: &DisturbanceProfile, t: f64) -> f64 {
    profile.value_at(t)
}

fn quantize(x: f64, q: Option<f64>) -> f64 {
    match q {
        Some(q) => (x / q).floor() * q,
        None => x,
    }
}

/// Integrate the scenario's plant under the sampled controller.
///
/// The plant advances with RK4 at `dt`; the controller runs every
/// `sample_period` and its voltage is held in between. The controller stays
/// off (zero voltage, zero integrator) until the measured `|α|` first drops to
/// `catch_angle`. The run stops at the first sample with `|θ| > theta_limit`,
/// which is recorded with the terminated flag.
pub fn run_scenario(sc: &Scenario) -> Result<Trace> {
    sc.validate()?;
    let steps_per_sample = sc.steps_per_sample()?;
    let n_steps = (sc.duration / sc.dt).round() as usize;
    let cfg = &sc.runtime;
    let ts = cfg.sample_period;

    let meta = TraceMeta {
        plant: sc.plant.mode(),
        dt: sc.dt,
        config_hash: sc.config_hash(),
        zero_input: false,
        frictionless: match &sc.plant {
            PlantModel::FullNonlinear(p) => p.b1 == 0.0 && p.b2 == 0.0,
            PlantModel::SmallAngleReduced(r) => r.damping.iter().flatten().all(|&b| b == 0.0),
        },
    };
    let mut records = Vec::with_capacity(n_steps + 1);

    let mut state = sc.initial.to_array().to_vec();
    let mut theta_filter = DerivativeFilter::new();
    let mut alpha_filter = DerivativeFilter::new();
    let mut integrator = 0.0;
    let mut engaged = false;
    let mut est = Measurement::default();
    let mut held = (0.0, 0.0); // (v_cmd, v_sat)
    let mut x0_at_sample = 0.0;

    for k in 0..=n_steps {
        let t = k as f64 * sc.dt;
        let s = FullState::from_slice(&state);
        let theta_ref = sc.reference.value_at(t);

        if k % steps_per_sample == 0 {
            let theta_m = quantize(s.theta, cfg.quantization);
            let alpha_m = quantize(s.alpha, cfg.quantization);
            let (tf, td) = filtered_derivative_update(theta_filter, theta_m, ts, cfg.filter_cutoff);
            let (af, ad) = filtered_derivative_update(alpha_filter, alpha_m, ts, cfg.filter_cutoff);
            theta_filter = tf;
            alpha_filter = af;
            est = match cfg.rate_source {
                RateSource::FilteredDifference => Measurement {
                    theta: theta_m,
                    alpha: alpha_m,
                    theta_dot: td,
                    alpha_dot: ad,
                },
                RateSource::Exact => Measurement {
                    theta: theta_m,
                    alpha: alpha_m,
                    theta_dot: s.theta_dot,
                    alpha_dot: s.alpha_dot,
                },
            };
            if !engaged && alpha_m.abs() <= cfg.catch_angle {
                engaged = true;
            }
            x0_at_sample = integrator;
            if engaged {
                let out = controller_update(&sc.gains, &est, theta_ref, cfg, integrator, ts);
                held = (out.v_cmd, out.v_sat);
                integrator = out.integrator;
            }
        }

        let terminated = s.theta.abs() > cfg.theta_limit;
        records.push(TraceRecord {
            t,
            theta_ref,
            theta: s.theta,
            alpha: s.alpha,
            theta_dot_est: est.theta_dot,
            alpha_dot_est: est.alpha_dot,
            x0: x0_at_sample,
            v_cmd: held.0,
            v_sat: held.1,
            engaged,
            terminated,
            theta_dot: s.theta_dot,
            alpha_dot: s.alpha_dot,
        });
        if terminated || k == n_steps {
            break;
        }

        let v = held.1;
        let deriv = |tt: f64, x: &[f64], dx: &mut [f64]| {
            let s = FullState::from_slice(x);
            let (tdd, add) = sc.plant.accelerations(&s, v, inject_disturbance(&sc.disturbance, tt));
            dx[0] = s.theta_dot;
            dx[1] = s.alpha_dot;
            dx[2] = tdd;
            dx[3] = add;
        };
        state = match rk4_step(deriv, t, &state, sc.dt) {
            Ok(next) => next,
            Err(_) => {
                return Err(Error::Diverged {
                    t,
                    partial: Box::new(Trace { meta, records }),
                })
            }
        };
    }
    Ok(Trace { meta, records })
}

/// Unforced motion of the full model (no motor, no disturbance).
pub fn simulate_free_motion(p: &PhysicalParams, initial: &FullState, duration: f64, dt: f64) -> Result<Trace> {
    p.validate()?;
    if !(duration > 0.0 && dt > 0.0) {
        return Err(Error::invalid("duration and dt must be positive"));
    }
    let n = (duration / dt).round() as usize;
    let meta = TraceMeta {
        plant: PlantMode::FullNonlinear,
        dt,
        config_hash: fnv1a(format!("{p:?}{initial:?}{duration}{dt}").as_bytes()),
        zero_input: true,
        frictionless: p.b1 == 0.0 && p.b2 == 0.0,
    };
    let mut records = Vec::with_capacity(n + 1);
    let mut state = initial.to_array().to_vec();
    for k in 0..=n {
        let t = k as f64 * dt;
        let s = FullState::from_slice(&state);
        records.push(TraceRecord {
            t,
            theta_ref: 0.0,
            theta: s.theta,
            alpha: s.alpha,
            theta_dot_est: s.theta_dot,
            alpha_dot_est: s.alpha_dot,
            x0: 0.0,
            v_cmd: 0.0,
            v_sat: 0.0,
            engaged: false,
            terminated: false,
            theta_dot: s.theta_dot,
            alpha_dot: s.alpha_dot,
        });
        if k == n {
            break;
        }
        let deriv = |_: f64, x: &[f64], dx: &mut [f64]| {
            dx.copy_from_slice(&full_derivative(p, &FullState::from_slice(x), 0.0));
        };
        state = rk4_step(deriv, t, &state, dt).map_err(|_| Error::Diverged {
            t,
            partial: Box::new(Trace {
                meta: meta.clone(),
                records: records.clone(),
            }),
        })?;
    }
    Ok(Trace { meta, records })
}

/// Continuous, unsaturated loop `Ż = f(Z, −K·Z)` on the reduced model with
/// exact state feedback and a zero reference.
pub fn simulate_feedback_loop(
    r: &ReducedDynamics,
    gains: &GainVector,
    z0: [f64; 5],
    duration: f64,
    dt: f64,
) -> Result<Trace> {
    r.validate()?;
    if !(duration > 0.0 && dt > 0.0) {
        return Err(Error::invalid("duration and dt must be positive"));
    }
    let n = (duration / dt).round() as usize;
    let meta = TraceMeta {
        plant: PlantMode::SmallAngleReduced,
        dt,
        config_hash: fnv1a(format!("{r:?}{gains:?}{z0:?}{duration}{dt}").as_bytes()),
        zero_input: false,
        frictionless: false,
    };
    let mut records = Vec::with_capacity(n + 1);
    let mut z = z0.to_vec();
    for k in 0..=n {
        let t = k as f64 * dt;
        let zs: [f64; 5] = z.clone().try_into().expect("five states");
        let v = gains.voltage(&zs);
        records.push(TraceRecord {
            t,
            theta_ref: 0.0,
            theta: zs[1],
            alpha: zs[2],
            theta_dot_est: zs[3],
            alpha_dot_est: zs[4],
            x0: zs[0],
            v_cmd: v,
            v_sat: v,
            engaged: true,
            terminated: false,
            theta_dot: zs[3],
            alpha_dot: zs[4],
        });
        if k == n {
            break;
        }
        let deriv = |_: f64, x: &[f64], dx: &mut [f64]| {
            let s = PendulumState::from_slice(x);
            let v = gains.voltage(&s.to_array());
            dx.copy_from_slice(&reduced_derivative(r, &s, v, 0.0));
        };
        z = rk4_step(deriv, t, &z, dt).map_err(|_| Error::Diverged {
            t,
            partial: Box::new(Trace {
                meta: meta.clone(),
                records: records.clone(),
            }),
        })?;
    }
    Ok(Trace { meta, records })
}

/// One stretch of constant reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentSummary {
    pub start: f64,
    pub end: f64,
    pub theta_ref: f64,
    /// Largest `|θ − θ_ref|` over the final two seconds, rad. `None` for
    /// segments shorter than that window.
    pub steady_state_error: Option<f64>,
    /// Largest `|α|` over the engaged part of the segment, rad.
    pub max_abs_alpha: f64,
    /// Largest `|α|` over the same final window as the steady-state error.
    pub settled_max_abs_alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSummary {
    pub engagement_time: Option<f64>,
    pub max_abs_alpha_after_engagement: f64,
    pub max_abs_v_sat: f64,
    pub terminated: bool,
    pub final_time: f64,
    pub segments: Vec<SegmentSummary>,
}

/// Steady-state window used by [`summarize`], s.
pub const STEADY_STATE_WINDOW: f64 = 2.0;

/// Figures of merit computed from the trace alone.
pub fn summarize(trace: &Trace) -> ScenarioSummary {
    let engaged: Vec<&TraceRecord> = trace.records.iter().filter(|r| r.engaged).collect();
    let max_abs = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0f64, |m, v| m.max(v.abs()));

    let mut segments = Vec::new();
    let mut start = 0;
    let recs = &trace.records;
    for i in 1..=recs.len() {
        if i == recs.len() || recs[i].theta_ref != recs[start].theta_ref {
            let seg = &recs[start..i];
            let (t0, t1) = (seg[0].t, seg[seg.len() - 1].t);
            let from = t1 - STEADY_STATE_WINDOW;
            let long_enough = from >= t0 - 1e-9;
            segments.push(SegmentSummary {
                start: t0,
                end: t1,
                theta_ref: seg[0].theta_ref,
                steady_state_error: long_enough.then(|| {
                    max_abs(&mut seg.iter().filter(|r| r.t >= from - 1e-9).map(|r| r.theta - r.theta_ref))
                }),
                max_abs_alpha: max_abs(&mut seg.iter().filter(|r| r.engaged).map(|r| r.alpha)),
                settled_max_abs_alpha: long_enough
                    .then(|| max_abs(&mut seg.iter().filter(|r| r.t >= from - 1e-9).map(|r| r.alpha))),
            });
            start = i;
        }
    }

    ScenarioSummary {
        engagement_time: engaged.first().map(|r| r.t),
        max_abs_alpha_after_engagement: max_abs(&mut engaged.iter().map(|r| r.alpha)),
        max_abs_v_sat: max_abs(&mut recs.iter().map(|r| r.v_sat)),
        terminated: trace.terminated(),
        final_time: recs.last().map_or(0.0, |r| r.t),
        segments,
    }
}
