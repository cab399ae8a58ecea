use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::PhysicalParams;

/// Configuration and rates of the two links.
///
/// `alpha` is measured from the upright position, counter-clockwise positive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FullState {
    pub theta: f64,
    pub alpha: f64,
    pub theta_dot: f64,
    pub alpha_dot: f64,
}

impl FullState {
    pub fn at_rest(theta: f64, alpha: f64) -> Self {
        Self {
            theta,
            alpha,
            theta_dot: 0.0,
            alpha_dot: 0.0,
        }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.theta, self.alpha, self.theta_dot, self.alpha_dot]
    }

    pub fn from_slice(x: &[f64]) -> Self {
        Self {
            theta: x[0],
            alpha: x[1],
            theta_dot: x[2],
            alpha_dot: x[3],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// α-dependent part of the potential energy, `M₂ g (L₂/2) cos α`.
pub fn potential_energy(p: &PhysicalParams, alpha: f64) -> f64 {
    0.5 * p.m2 * p.g * p.l2 * alpha.cos()
}

/// Rotational plus translational kinetic energy of both links.
pub fn kinetic_energy(p: &PhysicalParams, s: &FullState) -> f64 {
    let (td, ad) = (s.theta_dot, s.alpha_dot);
    let r = p.arm_com_ratio;
    let rotational = 0.5 * p.j1 * td * td + 0.5 * p.j2 * ad * ad;
    let sin_a = s.alpha.sin();
    let translational = (0.5 * r * r * p.m1 * p.l1 * p.l1 + 0.5 * p.m2 * p.l1 * p.l1) * td * td
        + p.m2 * p.l2 * p.l2 / 8.0 * (ad * ad + sin_a * sin_a * td * td)
        - 0.5 * p.coupling() * s.alpha.cos() * ad * td;
    rotational + translational
}

pub fn lagrangian(p: &PhysicalParams, s: &FullState) -> f64 {
    kinetic_energy(p, s) - potential_energy(p, s.alpha)
}

/// `KE + PE`, conserved when friction and torque vanish.
pub fn total_energy(p: &PhysicalParams, s: &FullState) -> f64 {
    kinetic_energy(p, s) + potential_energy(p, s.alpha)
}

/// Configuration-dependent inertia matrix of the full model.
pub fn mass_matrix(p: &PhysicalParams, alpha: f64) -> Matrix2<f64> {
    let sin_a = alpha.sin();
    let off = -0.5 * p.coupling() * alpha.cos();
    Matrix2::new(
        p.arm_inertia() + 0.25 * p.m2 * p.l2 * p.l2 * sin_a * sin_a,
        off,
        off,
        p.pendulum_inertia(),
    )
}

/// Arm and pendulum accelerations `(θ̈, α̈)` under arm torque `tau`, with every
/// trigonometric term kept.
pub fn full_dynamics(p: &PhysicalParams, s: &FullState, tau: f64) -> (f64, f64) {
    let FullState {
        alpha,
        theta_dot: td,
        alpha_dot: ad,
        ..
    } = *s;
    let sin2a = (2.0 * alpha).sin();
    let rhs = Vector2::new(
        tau - 0.25 * p.m2 * p.l2 * p.l2 * sin2a * ad * td
            - 0.5 * p.coupling() * alpha.sin() * ad * ad
            - p.b1 * td,
        p.m2 * p.l2 * p.l2 / 8.0 * sin2a * td * td - p.b2 * ad + 0.5 * p.m2 * p.g * p.l2 * alpha.sin(),
    );
    let m = mass_matrix(p, alpha);
    // det = m11·m22 − m12² > 0 for every α under valid parameters.
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let theta_ddot = (m[(1, 1)] * rhs[0] - m[(0, 1)] * rhs[1]) / det;
    let alpha_ddot = (m[(0, 0)] * rhs[1] - m[(1, 0)] * rhs[0]) / det;
    (theta_ddot, alpha_ddot)
}

/// Servo torque `τ = u₁ V_m − u₂ θ̇`.
pub fn motor_torque(p: &PhysicalParams, v_m: f64, theta_dot: f64) -> f64 {
    p.u1() * v_m - p.u2() * theta_dot
}

/// State derivative of `(θ, α, θ̇, α̇)` for the full model.
pub fn full_derivative(p: &PhysicalParams, s: &FullState, tau: f64) -> [f64; 4] {
    let (tdd, add) = full_dynamics(p, s, tau);
    [s.theta_dot, s.alpha_dot, tdd, add]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn p() -> PhysicalParams {
        PhysicalParams::default()
    }

    #[test]
    fn potential_energy_examples() {
        let p = p();
        let top = p.m2 * p.g * p.l2 / 2.0;
        assert_eq!(potential_energy(&p, 0.0), top);
        assert!(potential_energy(&p, PI / 2.0).abs() < 1e-16);
        assert!((potential_energy(&p, PI) + top).abs() < 1e-16);
    }

    #[test]
    fn kinetic_energy_examples() {
        let p = p();
        assert_eq!(kinetic_energy(&p, &FullState::at_rest(0.3, 0.7)), 0.0);

        let s = FullState {
            theta_dot: 1.0,
            ..Default::default()
        };
        let want = 0.5 * (p.j1 + 4.0 / 49.0 * p.m1 * p.l1 * p.l1 + p.m2 * p.l1 * p.l1);
        assert!((kinetic_energy(&p, &s) - want).abs() < 1e-15);

        let s = FullState {
            alpha_dot: 1.0,
            ..Default::default()
        };
        let want = 0.5 * (p.j2 + 0.25 * p.m2 * p.l2 * p.l2);
        assert!((kinetic_energy(&p, &s) - want).abs() < 1e-15);
    }

    /// Kinetic energy rebuilt from Cartesian centre-of-mass positions whose
    /// velocities are taken by central differences along the motion.
    fn cartesian_kinetic_energy(p: &PhysicalParams, s: &FullState) -> f64 {
        let arm = |th: f64| {
            let r = p.arm_com_ratio * p.l1;
            [r * th.cos(), r * th.sin(), 0.0]
        };
        let bob = |th: f64, al: f64| {
            let h = p.l2 / 2.0;
            [
                p.l1 * th.cos() + h * al.sin() * th.sin(),
                p.l1 * th.sin() - h * al.sin() * th.cos(),
                h * al.cos(),
            ]
        };
        let eps = 1e-6;
        let (tp, tm) = (s.theta + s.theta_dot * eps, s.theta - s.theta_dot * eps);
        let (ap, am) = (s.alpha + s.alpha_dot * eps, s.alpha - s.alpha_dot * eps);
        let speed2 = |a: [f64; 3], b: [f64; 3]| {
            (0..3).map(|i| ((a[i] - b[i]) / (2.0 * eps)).powi(2)).sum::<f64>()
        };
        0.5 * p.j1 * s.theta_dot.powi(2)
            + 0.5 * p.j2 * s.alpha_dot.powi(2)
            + 0.5 * p.m1 * speed2(arm(tp), arm(tm))
            + 0.5 * p.m2 * speed2(bob(tp, ap), bob(tm, am))
    }

    #[test]
    fn lagrangian_matches_cartesian_oracle() {
        let p = p();
        for &(th, al, td, ad) in &[
            (0.0, 0.0, 1.0, 0.0),
            (0.3, 0.5, -1.2, 2.0),
            (-1.0, 2.5, 0.7, -0.4),
            (2.0, -3.0, 3.0, 3.0),
        ] {
            let s = FullState {
                theta: th,
                alpha: al,
                theta_dot: td,
                alpha_dot: ad,
            };
            let oracle = cartesian_kinetic_energy(&p, &s) - 0.5 * p.m2 * p.g * p.l2 * al.cos();
            let got = lagrangian(&p, &s);
            assert!((got - oracle).abs() < 1e-8 * (1.0 + oracle.abs()), "{got} vs {oracle}");
        }
    }

    #[test]
    fn lagrangian_at_rest() {
        let p = p();
        let half = p.m2 * p.g * p.l2 / 2.0;
        assert!((lagrangian(&p, &FullState::at_rest(0.0, PI)) - half).abs() < 1e-15);
        assert_eq!(lagrangian(&p, &FullState::at_rest(0.0, 0.0)), -half);
    }

    #[test]
    fn equilibria_have_zero_acceleration() {
        let p = p();
        assert_eq!(full_dynamics(&p, &FullState::at_rest(0.0, 0.0), 0.0), (0.0, 0.0));
        let (a, b) = full_dynamics(&p, &FullState::at_rest(0.0, PI), 0.0);
        // sin π is 1.2e-16 in floating point, not zero.
        assert!(a.abs() < 1e-13 && b.abs() < 1e-13);
    }

    /// Accelerations from the Euler-Lagrange equations with every partial
    /// derivative of the Lagrangian taken by finite differences.
    fn variational_accelerations(p: &PhysicalParams, s: &FullState, tau: f64) -> (f64, f64) {
        let h = 1e-4;
        let lag = |q: [f64; 4]| lagrangian(p, &FullState::from_slice(&q));
        let x = s.to_array();
        let shifted = |i: usize, d: f64| {
            let mut y = x;
            y[i] += d;
            y
        };
        let d1 = |i: usize| (lag(shifted(i, h)) - lag(shifted(i, -h))) / (2.0 * h);
        let d2 = |i: usize, j: usize| {
            let f = |di: f64, dj: f64| {
                let mut y = x;
                y[i] += di;
                y[j] += dj;
                lag(y)
            };
            (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h)
        };
        // indices: 0 θ, 1 α, 2 θ̇, 3 α̇
        let m = Matrix2::new(d2(2, 2), d2(2, 3), d2(3, 2), d2(3, 3));
        let qd = [x[2], x[3]];
        let mixed = |r: usize| d2(r, 0) * qd[0] + d2(r, 1) * qd[1];
        let rhs = Vector2::new(
            tau - p.b1 * qd[0] - mixed(2) + d1(0),
            -p.b2 * qd[1] - mixed(3) + d1(1),
        );
        let acc = m.lu().solve(&rhs).unwrap();
        (acc[0], acc[1])
    }

    #[test]
    fn falls_away_from_upright_matching_variational_oracle() {
        let p = PhysicalParams {
            b1: 0.0,
            b2: 0.0,
            ..PhysicalParams::default()
        };
        let s = FullState::at_rest(0.0, 0.1);
        let (tdd, add) = full_dynamics(&p, &s, 0.0);
        assert!(add > 0.0);
        let (otdd, oadd) = variational_accelerations(&p, &s, 0.0);
        assert!((tdd - otdd).abs() < 1e-5 * (1.0 + otdd.abs()));
        assert!((add - oadd).abs() < 1e-5 * (1.0 + oadd.abs()));
    }

    #[test]
    fn eom_matches_variational_oracle_off_equilibrium() {
        let p = p();
        for &(al, td, ad, tau) in &[(0.4, 1.0, -2.0, 0.01), (2.2, -3.0, 1.0, -0.05), (-1.3, 0.5, 4.0, 0.0)] {
            let s = FullState {
                theta: 0.2,
                alpha: al,
                theta_dot: td,
                alpha_dot: ad,
            };
            let (a, b) = full_dynamics(&p, &s, tau);
            let (oa, ob) = variational_accelerations(&p, &s, tau);
            assert!((a - oa).abs() < 1e-4 * (1.0 + oa.abs()), "{a} vs {oa}");
            assert!((b - ob).abs() < 1e-4 * (1.0 + ob.abs()), "{b} vs {ob}");
        }
    }

    #[test]
    fn motor_torque_examples() {
        let p = p();
        assert_eq!(motor_torque(&p, 0.0, 0.0), 0.0);
        assert_eq!(motor_torque(&p, 1.0, 0.0), p.u1());
        assert_eq!(motor_torque(&p, 0.0, 1.0), -p.u2());
    }

    #[test]
    fn mass_matrix_positive_definite_everywhere() {
        let p = p();
        for k in 0..64 {
            let m = mass_matrix(&p, k as f64 * 0.1);
            assert!(m[(0, 0)] > 0.0);
            assert!(m.determinant() > 0.0);
            assert_eq!(m[(0, 1)], m[(1, 0)]);
        }
    }
}
