//! TOML run configuration. Angles are degrees here and radians everywhere
//! past [`RunConfig::scenario`] and friends.

use num_complex::Complex64;
use pendulum_control::lti::DisturbanceProfile;
use pendulum_control::model::{reduced_dynamics, small_angle_matrices, FullState, PhysicalParams, ReducedDynamics};
use pendulum_control::sim::{ControllerRuntimeConfig, PlantModel, RateSource, ReferenceKind, ReferenceSignal, Scenario};
use pendulum_control::synthesis::{dominant_pole_design, lab_poles, place_poles, DominantSpec, GainVector};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub plant: PlantSection,
    #[serde(default)]
    pub gains: GainsSection,
    #[serde(default)]
    pub controller: ControllerSection,
    #[serde(default)]
    pub reference: ReferenceSection,
    #[serde(default)]
    pub disturbance: DisturbanceSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub lti: LtiSection,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PlantChoice {
    #[default]
    Reduced,
    Full,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    #[serde(default)]
    pub mode: PlantChoice,
    /// Reduced coefficients; the identified set when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identified: Option<ReducedDynamics>,
    /// Physical parameters for the full model, and for the reduced model when
    /// `identified` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physical: Option<PhysicalParams>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsSection {
    /// Explicit `K`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<[f64; 5]>,
    /// Closed-loop poles as `[re, im]` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poles: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dominant: Option<DominantSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DominantSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub percent_overshoot: Option<f64>,
    /// `ζω_n`, positive.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub real_part: Option<f64>,
    #[serde(default = "default_multipliers")]
    pub multipliers: [f64; 3],
}

fn default_multipliers() -> [f64; 3] {
    [5.0, 6.0, 7.5]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerSection {
    pub sample_period: f64,
    pub v_sat: f64,
    /// rad/s.
    pub filter_cutoff: f64,
    pub antiwindup_reset: f64,
    pub catch_angle_deg: f64,
    pub theta_limit_deg: f64,
    /// Floor measured angles to the 4096 count/rev encoder grid.
    pub quantize: bool,
    pub rate_source: RateSource,
}

impl Default for ControllerSection {
    fn default() -> Self {
        let c = ControllerRuntimeConfig::default();
        Self {
            sample_period: c.sample_period,
            v_sat: c.v_sat,
            filter_cutoff: c.filter_cutoff,
            antiwindup_reset: c.antiwindup_reset,
            catch_angle_deg: c.catch_angle.to_degrees(),
            theta_limit_deg: c.theta_limit.to_degrees(),
            quantize: false,
            rate_source: c.rate_source,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReferenceSection {
    pub kind: ReferenceKind,
    pub amplitude_deg: f64,
    pub period: f64,
    pub start_time: f64,
    pub offset_deg: f64,
}

impl Default for ReferenceSection {
    fn default() -> Self {
        Self {
            kind: ReferenceKind::SquarePulse,
            amplitude_deg: 20.0,
            period: 10.0,
            start_time: 15.0,
            offset_deg: 0.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DisturbanceSection {
    /// `[time s, torque N·m]` steps.
    pub steps: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    pub theta_deg: f64,
    pub alpha_deg: f64,
    pub theta_dot_deg: f64,
    pub alpha_dot_deg: f64,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self {
            theta_deg: 0.0,
            alpha_deg: 10.0,
            theta_dot_deg: 0.0,
            alpha_dot_deg: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub duration: f64,
    pub dt: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { duration: 50.0, dt: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    /// `‖Z(0)‖` for the bound; the scenario's initial error norm when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z0_norm: Option<f64>,
    /// Drop the cubic terms.
    pub linear_only: bool,
    /// Cauchy window, s.
    pub window: f64,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            z0_norm: None,
            linear_only: false,
            window: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LtiSection {
    /// Plant coefficients `a_1 … a_n`; the order is their count.
    pub a: Vec<f64>,
    /// `n + 1` closed-loop poles as `[re, im]` pairs.
    pub poles: Vec<[f64; 2]>,
    pub setpoint: f64,
    /// `[time, amplitude]` disturbance steps.
    pub disturbance: Vec<[f64; 2]>,
    pub duration: f64,
    pub dt: f64,
    pub integral: bool,
}

impl Default for LtiSection {
    fn default() -> Self {
        Self {
            a: vec![0.0, 0.0],
            poles: vec![[-1.0, 0.0], [-2.0, 0.0], [-3.0, 0.0]],
            setpoint: 1.0,
            disturbance: vec![[2.0, 5.0]],
            duration: 20.0,
            dt: 1e-3,
            integral: true,
        }
    }
}

/// Maximum chain order accepted by `lti-demo`.
pub const MAX_LTI_ORDER: usize = 6;

pub fn to_complex(pairs: &[[f64; 2]]) -> Vec<Complex64> {
    pairs.iter().map(|&[re, im]| Complex64::new(re, im)).collect()
}

impl RunConfig {
    /// Parse TOML text, apply `key=value` overrides, then validate the shape.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::Validation(format!("config: {e}")))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig = Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Validation(format!("config: {e}")))?;
        cfg.check_gain_source()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn check_gain_source(&self) -> Result<(), CliError> {
        let g = &self.gains;
        let sources = [g.k.is_some(), g.poles.is_some(), g.dominant.is_some()]
            .iter()
            .filter(|&&b| b)
            .count();
        if sources > 1 {
            return Err(CliError::Validation(
                "gains: give at most one of `k`, `poles` or `dominant`".into(),
            ));
        }
        Ok(())
    }

    pub fn reduced(&self) -> Result<ReducedDynamics, CliError> {
        let r = match (&self.plant.identified, &self.plant.physical) {
            (Some(r), _) => r.clone(),
            (None, Some(p)) => reduced_dynamics(&small_angle_matrices(p), p)?,
            (None, None) => ReducedDynamics::identified(),
        };
        r.validate()?;
        Ok(if self.analysis.linear_only { r.linear_only() } else { r })
    }

    pub fn physical(&self) -> PhysicalParams {
        self.plant.physical.clone().unwrap_or_default()
    }

    /// Requested closed-loop poles: explicit, dominant-pole design, or the
    /// laboratory set.
    pub fn poles(&self) -> Result<Vec<Complex64>, CliError> {
        if let Some(p) = &self.gains.poles {
            return Ok(to_complex(p));
        }
        match &self.gains.dominant {
            Some(d) => Ok(dominant_pole_design(&d.spec()?)?),
            None => Ok(lab_poles()),
        }
    }

    /// Explicit gains, or gains placed from the pole request. With neither
    /// present the laboratory gains are used verbatim.
    pub fn gains(&self) -> Result<GainVector, CliError> {
        if let Some(k) = self.gains.k {
            return Ok(GainVector::new(k)?);
        }
        if self.gains.poles.is_none() && self.gains.dominant.is_none() {
            return Ok(GainVector::lab_design());
        }
        Ok(place_poles(&self.reduced()?, &self.poles()?)?)
    }

    pub fn runtime(&self) -> ControllerRuntimeConfig {
        let c = &self.controller;
        ControllerRuntimeConfig {
            sample_period: c.sample_period,
            v_sat: c.v_sat,
            filter_cutoff: c.filter_cutoff,
            antiwindup_reset: c.antiwindup_reset,
            catch_angle: c.catch_angle_deg.to_radians(),
            theta_limit: c.theta_limit_deg.to_radians(),
            quantization: c.quantize.then_some(ControllerRuntimeConfig::ENCODER_RESOLUTION),
            rate_source: c.rate_source,
        }
    }

    pub fn reference(&self) -> ReferenceSignal {
        let r = &self.reference;
        ReferenceSignal {
            kind: r.kind,
            amplitude: r.amplitude_deg.to_radians(),
            period: r.period,
            start_time: r.start_time,
            offset: r.offset_deg.to_radians(),
        }
    }

    pub fn initial(&self) -> FullState {
        let i = &self.initial;
        FullState {
            theta: i.theta_deg.to_radians(),
            alpha: i.alpha_deg.to_radians(),
            theta_dot: i.theta_dot_deg.to_radians(),
            alpha_dot: i.alpha_dot_deg.to_radians(),
        }
    }

    pub fn scenario(&self) -> Result<Scenario, CliError> {
        let plant = match self.plant.mode {
            PlantChoice::Reduced => PlantModel::SmallAngleReduced(self.reduced()?),
            PlantChoice::Full => PlantModel::FullNonlinear(self.physical()),
        };
        let steps = self.disturbance.steps.iter().map(|&[t, a]| (t, a)).collect();
        let sc = Scenario {
            plant,
            gains: self.gains()?,
            runtime: self.runtime(),
            reference: self.reference(),
            disturbance: DisturbanceProfile::new(steps)?,
            initial: self.initial(),
            duration: self.run.duration,
            dt: self.run.dt,
        };
        sc.validate()?;
        Ok(sc)
    }
}

impl DominantSection {
    pub fn spec(&self) -> Result<DominantSpec, CliError> {
        let m = self.multipliers;
        let spec = match (self.zeta, self.omega_n, self.percent_overshoot, self.real_part) {
            (Some(z), Some(w), None, None) => DominantSpec::new(z, w, m)?,
            (Some(z), None, None, Some(s)) => DominantSpec::new(z, s / z, m)?,
            (None, None, Some(po), Some(s)) => DominantSpec::from_overshoot(po, s, m)?,
            _ => {
                return Err(CliError::Validation(
                    "gains.dominant: give zeta with omega_n or real_part, or percent_overshoot with real_part".into(),
                ))
            }
        };
        Ok(spec)
    }
}

/// Set `a.b.c = value` in a TOML table. The value is read as TOML, falling
/// back to a bare string.
pub fn apply_override(table: &mut Table, spec: &str) -> Result<(), CliError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Validation(format!("override `{spec}` is not key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(CliError::Validation(format!("override `{spec}` has an empty key")));
    }
    let value = parse_value(raw.trim());
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().expect("split yields at least one part");
    let mut cur = table;
    for p in parts {
        let entry = cur.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Validation(format!("override `{key}`: `{p}` is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_laboratory_scenario() {
        let cfg = RunConfig::parse("", &[]).unwrap();
        let sc = cfg.scenario().unwrap();
        let lab = Scenario::laboratory();
        assert_eq!(sc.gains, lab.gains);
        assert_eq!(sc.duration, lab.duration);
        assert!((sc.initial.alpha - lab.initial.alpha).abs() < 1e-15);
        assert!((sc.reference.amplitude - lab.reference.amplitude).abs() < 1e-15);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::parse("[run]\nduraton = 3\n", &[]).is_err());
        assert!(RunConfig::parse("[nonsense]\n", &[]).is_err());
    }

    #[test]
    fn overrides_nest_and_type() {
        let cfg = RunConfig::parse("", &["run.duration=3".into(), "plant.mode=full".into()]).unwrap();
        assert_eq!(cfg.run.duration, 3.0);
        assert_eq!(cfg.plant.mode, PlantChoice::Full);
        let cfg = RunConfig::parse("", &["gains.k=[1,2,3,4,5]".into()]).unwrap();
        assert_eq!(cfg.gains.k, Some([1.0, 2.0, 3.0, 4.0, 5.0]));
        assert!(RunConfig::parse("", &["run.duration".into()]).is_err());
    }

    #[test]
    fn conflicting_gain_sources_rejected() {
        let text = "[gains]\nk = [1,2,3,4,5]\npoles = [[-1,0]]\n";
        assert!(RunConfig::parse(text, &[]).is_err());
    }

    #[test]
    fn dominant_forms_agree() {
        let a = DominantSection {
            zeta: Some(0.7797),
            omega_n: None,
            percent_overshoot: None,
            real_part: Some(2.0),
            multipliers: default_multipliers(),
        };
        let poles = dominant_pole_design(&a.spec().unwrap()).unwrap();
        assert!((poles[0].im - 1.606).abs() < 1e-3);
        assert!((poles[4].re + 15.0).abs() < 1e-12);
    }
}
