use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants of the rotary pendulum and its servo.
///
/// Inertias are about each link's own centre of mass. The arm's centre of
/// mass sits at `arm_com_ratio · l1` from the motor shaft; the pendulum's at
/// `l2 / 2` from the pivot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    /// Arm mass, kg.
    pub m1: f64,
    /// Pendulum mass, kg.
    pub m2: f64,
    /// Arm length, m.
    pub l1: f64,
    /// Pendulum length, m.
    pub l2: f64,
    /// Arm inertia about its centre of mass, kg·m².
    pub j1: f64,
    /// Pendulum inertia about its centre of mass, kg·m².
    pub j2: f64,
    /// Arm (yaw) viscous friction, N·m·s/rad.
    pub b1: f64,
    /// Pendulum (pitch) viscous friction, N·m·s/rad.
    pub b2: f64,
    /// Gravitational acceleration, m/s².
    pub g: f64,
    /// Gearbox efficiency.
    pub eta_g: f64,
    /// Motor efficiency.
    pub eta_m: f64,
    /// Total gear ratio.
    pub k_g: f64,
    /// Motor current-torque constant, N·m/A.
    pub k_t: f64,
    /// Motor back-emf constant, V·s/rad.
    pub k_m: f64,
    /// Armature resistance, Ω.
    pub r_m: f64,
    /// Arm centre-of-mass position as a fraction of `l1`.
    pub arm_com_ratio: f64,
}

impl Default for PhysicalParams {
    /// Datasheet-style parameter set whose reduced model matches the
    /// identified coefficients of [`ReducedDynamics::identified`] to better
    /// than 1e-4 relative. `b1` and `b2` were fitted.
    ///
    /// [`ReducedDynamics::identified`]: crate::model::ReducedDynamics::identified
    fn default() -> Self {
        Self {
            m1: 0.257,
            m2: 0.127,
            l1: 0.216,
            l2: 0.33699,
            j1: 9.998e-4,
            j2: 1.2001e-3,
            b1: 0.0024,
            b2: 0.0024,
            g: 9.81,
            eta_g: 0.9,
            eta_m: 0.69,
            k_g: 70.0,
            k_t: 0.00768,
            k_m: 0.00768,
            r_m: 2.6,
            arm_com_ratio: 2.0 / 7.0,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("m1", self.m1),
            ("m2", self.m2),
            ("l1", self.l1),
            ("l2", self.l2),
            ("j1", self.j1),
            ("j2", self.j2),
            ("g", self.g),
            ("k_g", self.k_g),
            ("k_t", self.k_t),
            ("k_m", self.k_m),
            ("r_m", self.r_m),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("b1", self.b1), ("b2", self.b2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be nonnegative, got {v}")));
            }
        }
        for (name, v) in [("eta_g", self.eta_g), ("eta_m", self.eta_m)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::invalid(format!("{name} must lie in (0, 1], got {v}")));
            }
        }
        if !(self.arm_com_ratio > 0.0 && self.arm_com_ratio < 1.0) {
            return Err(Error::invalid(format!(
                "arm_com_ratio must lie in (0, 1), got {}",
                self.arm_com_ratio
            )));
        }
        Ok(())
    }

    /// Same plant without viscous friction.
    pub fn frictionless(&self) -> Self {
        Self {
            b1: 0.0,
            b2: 0.0,
            ..self.clone()
        }
    }

    /// Voltage-to-torque gain `u₁ = η_g K_g η_m K_t / R_m`.
    pub fn u1(&self) -> f64 {
        self.eta_g * self.k_g * self.eta_m * self.k_t / self.r_m
    }

    /// Back-emf damping `u₂ = u₁ K_g K_m`.
    pub fn u2(&self) -> f64 {
        self.u1() * self.k_g * self.k_m
    }

    /// Constant part of the arm-axis inertia, `J₁ + r²M₁L₁² + M₂L₁²`.
    pub(crate) fn arm_inertia(&self) -> f64 {
        let r = self.arm_com_ratio;
        self.j1 + r * r * self.m1 * self.l1 * self.l1 + self.m2 * self.l1 * self.l1
    }

    /// Pendulum inertia about its pivot, `J₂ + M₂L₂²/4`.
    pub(crate) fn pendulum_inertia(&self) -> f64 {
        self.j2 + 0.25 * self.m2 * self.l2 * self.l2
    }

    /// `M₂L₁L₂`.
    pub(crate) fn coupling(&self) -> f64 {
        self.m2 * self.l1 * self.l2
    }
}
