//! Integral + derivative-chain control of nth-order single-input plants.
//!
//! The plant is a chain of integrators with feedback coefficients,
//!
//! ```text
//! x⁽ⁿ⁾ + a_n x⁽ⁿ⁻¹⁾ + … + a_2 ẋ + a_1 x = u + T_d
//! ```
//!
//! and the controller is
//!
//! ```text
//! u = b_0 ∫z + b_1 z + b_2 ż + … + b_n z⁽ⁿ⁻¹⁾,     z = x_d − x.
//! ```
//!
//! With this pairing the closed-loop denominator is
//! `s^{n+1} + Σ (a_i + b_i) s^i + b_0`, so every coefficient can be assigned
//! independently and a constant (step) disturbance leaves no offset.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::poly::Polynomial;
use crate::sim::rk4_step;

/// Plant `x⁽ⁿ⁾ + Σ a_i x⁽ⁱ⁻¹⁾ = u + T_d`; `a[i - 1]` holds `a_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainPlant {
    a: Vec<f64>,
}

impl ChainPlant {
    pub fn new(a: Vec<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::invalid("chain plant order must be at least 1"));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("chain plant coefficients must be finite"));
        }
        Ok(Self { a })
    }

    /// Pure n-fold integrator (`a_i = 0`).
    pub fn integrator_chain(order: usize) -> Result<Self> {
        Self::new(vec![0.0; order])
    }

    pub fn order(&self) -> usize {
        self.a.len()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.a
    }

    /// Open-loop characteristic polynomial `sⁿ + Σ a_i s^{i−1}`.
    pub fn characteristic_polynomial(&self) -> Polynomial {
        let mut c = self.a.clone();
        c.push(1.0);
        Polynomial::new(c).expect("monic")
    }
}

/// Gains `b_0` (integral) and `b_1..b_n`.
///
/// `b_0 > 0` for every controller built through [`GeneralController::new`]
/// or [`synthesize_controller`]. [`GeneralController::without_integral`]
/// produces the `b_0 = 0` variant used to demonstrate the steady-state offset
/// an integral-free loop leaves behind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralController {
    b0: f64,
    b: Vec<f64>,
}

impl GeneralController {
    pub fn new(b0: f64, b: Vec<f64>) -> Result<Self> {
        if !(b0 > 0.0 && b0.is_finite()) {
            return Err(Error::invalid("integral gain b0 must be positive and finite"));
        }
        if b.is_empty() || b.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("gains b_1..b_n must be finite and non-empty"));
        }
        Ok(Self { b0, b })
    }

    /// Same derivative-chain gains with the integral path removed.
    pub fn without_integral(&self) -> Self {
        Self {
            b0: 0.0,
            b: self.b.clone(),
        }
    }

    pub fn integral_gain(&self) -> f64 {
        self.b0
    }

    pub fn chain_gains(&self) -> &[f64] {
        &self.b
    }

    pub fn has_integral(&self) -> bool {
        self.b0 != 0.0
    }

    fn check_plant(&self, plant: &ChainPlant) -> Result<()> {
        if self.b.len() != plant.order() {
            return Err(Error::DimensionMismatch(format!(
                "controller has {} chain gains, plant order is {}",
                self.b.len(),
                plant.order()
            )));
        }
        Ok(())
    }
}

/// Closed-loop characteristic polynomial.
///
/// With integral action: `s^{n+1} + Σ (a_i + b_i) s^i + b_0`.
/// Without: `sⁿ + Σ (a_i + b_i) s^{i−1}`.
pub fn closed_loop_denominator(plant: &ChainPlant, ctrl: &GeneralController) -> Result<Polynomial> {
    ctrl.check_plant(plant)?;
    let sums = plant.a.iter().zip(&ctrl.b).map(|(a, b)| a + b);
    let coeffs: Vec<f64> = if ctrl.has_integral() {
        std::iter::once(ctrl.b0).chain(sums).chain([1.0]).collect()
    } else {
        sums.chain([1.0]).collect()
    };
    Polynomial::new(coeffs)
}

/// Gains placing the `n + 1` closed-loop poles at `poles`.
pub fn synthesize_controller(plant: &ChainPlant, poles: &[Complex64]) -> Result<GeneralController> {
    let n = plant.order();
    if poles.len() != n + 1 {
        return Err(Error::PoleCount {
            expected: n + 1,
            got: poles.len(),
        });
    }
    check_stable_poles(poles)?;
    let target = Polynomial::from_roots(poles)?;
    let c = target.coeffs();
    let b0 = c[0];
    let b = (1..=n).map(|i| c[i] - plant.a[i - 1]).collect();
    GeneralController::new(b0, b)
}

pub(crate) fn check_stable_poles(poles: &[Complex64]) -> Result<()> {
    if let Some(p) = poles.iter().find(|p| !(p.re < 0.0) || !p.im.is_finite()) {
        return Err(Error::UnstablePole { re: p.re, im: p.im });
    }
    if !linalg::is_conjugate_closed(poles, 1e-9) {
        return Err(Error::NotConjugateClosed);
    }
    Ok(())
}

/// Piecewise-constant signal `Σ α_i r(t − t_i)` with unit steps `r`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct DisturbanceProfile {
    steps: Vec<(f64, f64)>,
}

impl DisturbanceProfile {
    pub fn new(steps: Vec<(f64, f64)>) -> Result<Self> {
        if steps.iter().any(|(t, a)| !t.is_finite() || !a.is_finite()) {
            return Err(Error::invalid("disturbance steps must be finite"));
        }
        if steps.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::invalid("disturbance step times must be strictly increasing"));
        }
        Ok(Self { steps })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn single(t: f64, amplitude: f64) -> Result<Self> {
        Self::new(vec![(t, amplitude)])
    }

    pub fn steps(&self) -> &[(f64, f64)] {
        &self.steps
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last_step_time(&self) -> Option<f64> {
        self.steps.last().map(|s| s.0)
    }

    /// Value at `t`; a step at `t_i` is already active at `t = t_i`.
    pub fn value_at(&self, t: f64) -> f64 {
        self.steps
            .iter()
            .take_while(|(ti, _)| *ti <= t)
            .map(|(_, a)| a)
            .sum()
    }
}

impl TryFrom<Vec<(f64, f64)>> for DisturbanceProfile {
    type Error = Error;

    fn try_from(v: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DisturbanceProfile> for Vec<(f64, f64)> {
    fn from(p: DisturbanceProfile) -> Self {
        p.steps
    }
}

/// Fit a step sequence to time-ordered samples.
///
/// The first sample always opens a step. Afterwards a new step is emitted only
/// when a sample departs from the current level by more than `tolerance`, so
/// runs of values within tolerance merge into one step.
pub fn approximate_disturbance(samples: &[(f64, f64)], tolerance: f64) -> Result<DisturbanceProfile> {
    if !(tolerance >= 0.0) {
        return Err(Error::invalid("tolerance must be nonnegative"));
    }
    let Some(&(t0, v0)) = samples.first() else {
        return Ok(DisturbanceProfile::empty());
    };
    let mut steps = vec![(t0, v0)];
    let mut level = v0;
    for &(t, v) in &samples[1..] {
        if (v - level).abs() > tolerance {
            steps.push((t, v - level));
            level = v;
        }
    }
    DisturbanceProfile::new(steps)
}

/// Options for [`simulate_chain`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRun {
    pub setpoint: f64,
    pub duration: f64,
    pub dt: f64,
    /// Optional symmetric clamp `|u| ≤ u_max`; off by default.
    #[serde(default)]
    pub u_max: Option<f64>,
}

impl ChainRun {
    pub fn new(setpoint: f64, duration: f64, dt: f64) -> Self {
        Self {
            setpoint,
            duration,
            dt,
            u_max: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSample {
    pub t: f64,
    /// `∫ z dt`.
    pub integral: f64,
    /// `x, ẋ, …, x⁽ⁿ⁻¹⁾`.
    pub chain: Vec<f64>,
    pub u: f64,
    pub disturbance: f64,
}

impl ChainSample {
    pub fn output(&self) -> f64 {
        self.chain[0]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainTrace {
    pub samples: Vec<ChainSample>,
}

impl ChainTrace {
    pub fn final_output(&self) -> Option<f64> {
        self.samples.last().map(ChainSample::output)
    }
}

/// Integrate the augmented closed loop with RK4.
///
/// State is `(∫z, x, ẋ, …, x⁽ⁿ⁻¹⁾)`, starting at zero. The integral state is
/// frozen at zero when the controller has no integral path.
pub fn simulate_chain(
    plant: &ChainPlant,
    ctrl: &GeneralController,
    dist: &DisturbanceProfile,
    run: &ChainRun,
) -> Result<ChainTrace> {
    ctrl.check_plant(plant)?;
    if !(run.dt > 0.0 && run.dt.is_finite()) {
        return Err(Error::invalid("dt must be positive"));
    }
    if !(run.duration >= 0.0 && run.duration.is_finite()) {
        return Err(Error::invalid("duration must be nonnegative"));
    }
    if let Some(u) = run.u_max {
        if !(u > 0.0) {
            return Err(Error::invalid("u_max must be positive"));
        }
    }
    let n = plant.order();
    let control = |state: &[f64]| -> f64 {
        let z = run.setpoint - state[1];
        let mut u = ctrl.b0 * state[0] + ctrl.b[0] * z;
        for k in 1..n {
            u -= ctrl.b[k] * state[1 + k];
        }
        match run.u_max {
            Some(m) => u.clamp(-m, m),
            None => u,
        }
    };
    let deriv = |t: f64, state: &[f64], out: &mut [f64]| {
        let u = control(state);
        out[0] = if ctrl.has_integral() {
            run.setpoint - state[1]
        } else {
            0.0
        };
        for k in 0..n - 1 {
            out[1 + k] = state[2 + k];
        }
        let chain_feedback: f64 = (0..n).map(|i| plant.a[i] * state[1 + i]).sum();
        out[n] = u + dist.value_at(t) - chain_feedback;
    };

    let steps = (run.duration / run.dt).round() as usize;
    let mut state = vec![0.0; n + 1];
    let mut trace = ChainTrace {
        samples: Vec::with_capacity(steps + 1),
    };
    let record = |t: f64, state: &[f64], trace: &mut ChainTrace| {
        trace.samples.push(ChainSample {
            t,
            integral: state[0],
            chain: state[1..].to_vec(),
            u: control(state),
            disturbance: dist.value_at(t),
        });
    };
    record(0.0, &state, &mut trace);
    for k in 0..steps {
        let t = k as f64 * run.dt;
        state = rk4_step(&deriv, t, &state, run.dt).map_err(|_| Error::NonFinite { t })?;
        record((k + 1) as f64 * run.dt, &state, &mut trace);
    }
    Ok(trace)
}

/// Final value of `x` for a step disturbance of size `step_amplitude` and
/// setpoint `x_d`, by the final value theorem.
///
/// With integral action the response is
/// `X(s) = (α₀ + b₀ x_d / s) / D(s)`, so `lim s·X(s) = b₀ x_d / D(0) = x_d`
/// and `α₀` drops out. Without it, `D(0) = a_1 + b_1` and the limit becomes
/// `(b_1 x_d + α₀) / (a_1 + b_1)`.
pub fn steady_state_value(
    plant: &ChainPlant,
    ctrl: &GeneralController,
    step_amplitude: f64,
    setpoint: f64,
) -> Result<f64> {
    let den = closed_loop_denominator(plant, ctrl)?;
    if !den.is_hurwitz()? {
        return Err(Error::NotHurwitz);
    }
    let numerator_at_zero = if ctrl.has_integral() {
        // s·X(s) = (α₀ s + b₀ x_d) / D(s); the α₀ term vanishes at s = 0
        ctrl.b0 * setpoint
    } else {
        // s·X(s) = (b_1 x_d + α₀) / D(s)
        ctrl.b[0] * setpoint + step_amplitude
    };
    Ok(numerator_at_zero / den.eval(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn synthesis_examples() {
        let k = synthesize_controller(&ChainPlant::new(vec![0.0]).unwrap(), &[c(-1.0, 0.0), c(-2.0, 0.0)])
            .unwrap();
        assert!((k.integral_gain() - 2.0).abs() < 1e-12);
        assert!((k.chain_gains()[0] - 3.0).abs() < 1e-12);

        let k = synthesize_controller(&ChainPlant::new(vec![3.0]).unwrap(), &[c(-1.0, 0.0), c(-2.0, 0.0)])
            .unwrap();
        assert!((k.integral_gain() - 2.0).abs() < 1e-12);
        assert!(k.chain_gains()[0].abs() < 1e-12);

        let k = synthesize_controller(&ChainPlant::integrator_chain(2).unwrap(), &[c(-1.0, 0.0); 3]).unwrap();
        assert_eq!(k.integral_gain(), 1.0);
        assert_eq!(k.chain_gains(), &[3.0, 3.0]);
    }

    #[test]
    fn synthesis_rejects_bad_pole_sets() {
        let plant = ChainPlant::integrator_chain(1).unwrap();
        assert!(matches!(
            synthesize_controller(&plant, &[c(1.0, 0.0), c(-2.0, 0.0)]),
            Err(Error::UnstablePole { .. })
        ));
        assert!(matches!(
            synthesize_controller(&plant, &[c(0.0, 0.0), c(-2.0, 0.0)]),
            Err(Error::UnstablePole { .. })
        ));
        assert_eq!(
            synthesize_controller(&plant, &[c(-1.0, 1.0), c(-1.0, 2.0)]),
            Err(Error::NotConjugateClosed)
        );
        assert_eq!(
            synthesize_controller(&plant, &[c(-1.0, 0.0)]),
            Err(Error::PoleCount { expected: 2, got: 1 })
        );
    }

    #[test]
    fn approximation_examples() {
        let p = approximate_disturbance(&[(0.0, 1.0), (0.5, 1.0), (1.0, 1.0)], 0.0).unwrap();
        assert_eq!(p.steps(), &[(0.0, 1.0)]);

        let p = approximate_disturbance(&[(0.0, 1.0), (1.0, 3.0)], 0.0).unwrap();
        assert_eq!(p.steps(), &[(0.0, 1.0), (1.0, 2.0)]);

        let ramp: Vec<(f64, f64)> = (0..=10).map(|k| (k as f64 * 0.1, k as f64 * 0.1)).collect();
        let p = approximate_disturbance(&ramp, 0.0).unwrap();
        assert_eq!(p.steps().len(), 11);
        assert_eq!(p.steps()[0], (0.0, 0.0));
        for &(_, a) in &p.steps()[1..] {
            assert!((a - 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn approximation_rejects_unordered_samples() {
        assert!(approximate_disturbance(&[(1.0, 0.0), (0.5, 1.0)], 0.0).is_err());
        assert!(approximate_disturbance(&[(0.0, 0.0)], -1.0).is_err());
        assert!(approximate_disturbance(&[], 0.1).unwrap().is_empty());
    }

    #[test]
    fn profile_values() {
        let p = DisturbanceProfile::new(vec![(1.0, 2.0), (2.0, -2.0)]).unwrap();
        assert_eq!(p.value_at(0.5), 0.0);
        assert_eq!(p.value_at(1.0), 2.0);
        assert_eq!(p.value_at(3.0), 0.0);
        assert!(DisturbanceProfile::new(vec![(1.0, 2.0), (1.0, 1.0)]).is_err());
        assert!(DisturbanceProfile::new(vec![(1.0, f64::INFINITY)]).is_err());
    }

    #[test]
    fn steady_state_examples() {
        let plant = ChainPlant::integrator_chain(2).unwrap();
        let ctrl = synthesize_controller(&plant, &[c(-1.0, 0.0), c(-2.0, 0.0), c(-3.0, 0.0)]).unwrap();
        assert_eq!(steady_state_value(&plant, &ctrl, 3.0, 1.0).unwrap(), 1.0);
        assert_eq!(steady_state_value(&plant, &ctrl, 7.0, 0.0).unwrap(), 0.0);
        assert_eq!(steady_state_value(&plant, &ctrl, 7.0, -2.0).unwrap(), -2.0);
    }

    #[test]
    fn steady_state_without_integral_has_offset() {
        let plant = ChainPlant::integrator_chain(2).unwrap();
        let ctrl = synthesize_controller(&plant, &[c(-1.0, 0.0), c(-2.0, 0.0), c(-3.0, 0.0)])
            .unwrap()
            .without_integral();
        // D(s) = s² + 6s + 11, so x → (11·x_d + α₀)/11
        let v = steady_state_value(&plant, &ctrl, 5.0, 1.0).unwrap();
        assert!((v - (1.0 + 5.0 / 11.0)).abs() < 1e-12);
    }

    #[test]
    fn steady_state_rejects_unstable_loop() {
        let plant = ChainPlant::integrator_chain(1).unwrap();
        let ctrl = GeneralController::new(1.0, vec![-3.0]).unwrap();
        assert_eq!(steady_state_value(&plant, &ctrl, 0.0, 1.0), Err(Error::NotHurwitz));
    }

    #[test]
    fn zero_everything_stays_zero() {
        let plant = ChainPlant::integrator_chain(2).unwrap();
        let ctrl = GeneralController::new(1.0, vec![3.0, 3.0]).unwrap();
        let trace = simulate_chain(&plant, &ctrl, &DisturbanceProfile::empty(), &ChainRun::new(0.0, 5.0, 0.01))
            .unwrap();
        assert!(trace
            .samples
            .iter()
            .all(|s| s.integral == 0.0 && s.u == 0.0 && s.chain.iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn setpoint_and_disturbance_are_rejected() {
        let plant = ChainPlant::integrator_chain(2).unwrap();
        let ctrl = synthesize_controller(&plant, &[c(-1.0, 0.0), c(-2.0, 0.0), c(-3.0, 0.0)]).unwrap();
        let run = ChainRun::new(1.0, 30.0, 1e-3);
        let clean = simulate_chain(&plant, &ctrl, &DisturbanceProfile::empty(), &run).unwrap();
        assert!((clean.final_output().unwrap() - 1.0).abs() < 1e-3);
        let dist = DisturbanceProfile::single(1.0, 5.0).unwrap();
        let hit = simulate_chain(&plant, &ctrl, &dist, &run).unwrap();
        assert!((hit.final_output().unwrap() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn saturation_clamps_the_input() {
        let plant = ChainPlant::integrator_chain(1).unwrap();
        let ctrl = synthesize_controller(&plant, &[c(-1.0, 0.0), c(-2.0, 0.0)]).unwrap();
        let mut run = ChainRun::new(10.0, 2.0, 1e-2);
        run.u_max = Some(0.5);
        let trace = simulate_chain(&plant, &ctrl, &DisturbanceProfile::empty(), &run).unwrap();
        assert!(trace.samples.iter().all(|s| s.u.abs() <= 0.5));
    }

    #[test]
    fn divergence_is_reported() {
        let plant = ChainPlant::new(vec![0.0]).unwrap();
        let ctrl = GeneralController::new(1.0, vec![-1e3]).unwrap();
        let err = simulate_chain(&plant, &ctrl, &DisturbanceProfile::empty(), &ChainRun::new(1.0, 100.0, 0.01))
            .unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn controller_order_must_match() {
        let plant = ChainPlant::integrator_chain(2).unwrap();
        let ctrl = GeneralController::new(1.0, vec![1.0]).unwrap();
        assert!(matches!(
            closed_loop_denominator(&plant, &ctrl),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
