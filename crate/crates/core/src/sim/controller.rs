use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synthesis::GainVector;

/// Where the controller's rate feedback comes from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateSource {
    /// Finite difference of the measured angle through a first-order low-pass.
    #[default]
    FilteredDifference,
    /// Plant rates read directly, for analysis runs.
    Exact,
}

/// Sampled-controller settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerRuntimeConfig {
    /// Controller period, s.
    pub sample_period: f64,
    /// Symmetric voltage clamp, V.
    pub v_sat: f64,
    /// Derivative filter cutoff, rad/s.
    pub filter_cutoff: f64,
    /// Back-calculation reset time, s.
    pub antiwindup_reset: f64,
    /// Controller engages once `|α| ≤ catch_angle`, rad.
    pub catch_angle: f64,
    /// Run terminates once `|θ| > theta_limit`, rad.
    pub theta_limit: f64,
    /// Encoder resolution, rad/count; measured angles are floored to it.
    #[serde(default)]
    pub quantization: Option<f64>,
    #[serde(default)]
    pub rate_source: RateSource,
}

impl Default for ControllerRuntimeConfig {
    fn default() -> Self {
        Self {
            sample_period: 1e-3,
            v_sat: 15.0,
            filter_cutoff: 20.0 * PI,
            antiwindup_reset: 1.0,
            catch_angle: 20f64.to_radians(),
            theta_limit: 45f64.to_radians(),
            quantization: None,
            rate_source: RateSource::FilteredDifference,
        }
    }
}

impl ControllerRuntimeConfig {
    /// Encoder resolution of the laboratory rig, `2π / 4096` rad/count.
    pub const ENCODER_RESOLUTION: f64 = 2.0 * PI / 4096.0;

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sample_period", self.sample_period),
            ("v_sat", self.v_sat),
            ("filter_cutoff", self.filter_cutoff),
            ("antiwindup_reset", self.antiwindup_reset),
            ("catch_angle", self.catch_angle),
            ("theta_limit", self.theta_limit),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.catch_angle >= PI / 2.0 {
            return Err(Error::invalid("catch_angle must be below 90 degrees"));
        }
        // forward-Euler filter pole 1 − T·ω_c stays in [0, 1)
        if self.sample_period * self.filter_cutoff > 1.0 {
            return Err(Error::invalid(
                "sample_period * filter_cutoff must not exceed 1 for the derivative filter",
            ));
        }
        if let Some(q) = self.quantization {
            if !(q > 0.0 && q.is_finite()) {
                return Err(Error::invalid("quantization must be positive"));
            }
        }
        Ok(())
    }
}

/// Controller estimate of the state it feeds back.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Measurement {
    pub theta: f64,
    pub alpha: f64,
    pub theta_dot: f64,
    pub alpha_dot: f64,
}

/// Output of one controller sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    pub v_sat: f64,
    pub v_cmd: f64,
    pub integrator: f64,
}

/// One sample of the state-feedback law with back-calculation anti-windup.
///
/// `V_cmd = −(k₀x₀ + k₁(θ − θ_ref) + k₂α + k₃θ̇ + k₄α̇)` is clamped to
/// `±v_sat`. The integrator advances by
/// `dt·(θ − θ_ref − (V_sat − V_cmd)/(k₀·T_reset))`; the correction term is
/// zero whenever the command is inside the clamp, and pulls `−k₀x₀` (the
/// integral's voltage contribution) toward the clamp at rate `1/T_reset`
/// otherwise.
pub fn controller_update(
    gains: &GainVector,
    est: &Measurement,
    theta_ref: f64,
    cfg: &ControllerRuntimeConfig,
    integrator: f64,
    dt: f64,
) -> ControlOutput {
    let z_theta = est.theta - theta_ref;
    let v_cmd = gains.voltage(&[integrator, z_theta, est.alpha, est.theta_dot, est.alpha_dot]);
    let v_sat = v_cmd.clamp(-cfg.v_sat, cfg.v_sat);
    let k0 = gains.get(0);
    let back_calc = if k0 != 0.0 {
        -(v_sat - v_cmd) / (k0 * cfg.antiwindup_reset)
    } else {
        0.0
    };
    ControlOutput {
        v_sat,
        v_cmd,
        integrator: integrator + dt * (z_theta + back_calc),
    }
}
