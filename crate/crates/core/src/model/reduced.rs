use nalgebra::{DMatrix, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::PhysicalParams;
use crate::error::{Error, Result};
use crate::linalg;

/// Small-angle model `A Ẍ + B Ẋ + C X = U V_m + N`, `X = (θ, α)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallAngleMatrices {
    pub mass: Matrix2<f64>,
    pub damping: Matrix2<f64>,
    pub stiffness: Matrix2<f64>,
    pub input: Vector2<f64>,
}

/// Inertia, damping, stiffness and input matrices of the small-angle model,
/// with the servo's `u₁`, `u₂` folded into the input and arm damping.
pub fn small_angle_matrices(p: &PhysicalParams) -> SmallAngleMatrices {
    let off = -0.5 * p.coupling();
    SmallAngleMatrices {
        mass: Matrix2::new(p.arm_inertia(), off, off, p.pendulum_inertia()),
        damping: Matrix2::new(p.b1 + p.u2(), 0.0, 0.0, p.b2),
        stiffness: Matrix2::new(0.0, 0.0, 0.0, -0.5 * p.m2 * p.g * p.l2),
        input: Vector2::new(p.u1(), 0.0),
    }
}

/// Numeric coefficients of the reduced pendulum model
///
/// ```text
/// θ̈ = v₁V − b₁₁θ̇ − b₁₂α̇ − c₁α + a₁αα̇θ̇ + a₂αα̇² + a₃αθ̇²
/// α̈ = v₂V − b₂₁θ̇ − b₂₂α̇ − c₂α + a₄αα̇θ̇ + a₅αα̇² + a₆αθ̇²
/// ```
///
/// `ainv` is the inverse small-angle inertia matrix; an arm torque `τ_d`
/// enters as `ainv · (τ_d, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReducedDynamics {
    pub ainv: [[f64; 2]; 2],
    /// `[[b11, b12], [b21, b22]]`.
    pub damping: [[f64; 2]; 2],
    /// `[c1, c2]`.
    pub stiffness: [f64; 2],
    /// `[v1, v2]`.
    pub input: [f64; 2],
    /// `[a1, …, a6]`.
    pub cubic: [f64; 6],
}

impl ReducedDynamics {
    /// The identified coefficient set of the laboratory rotary pendulum.
    pub fn identified() -> Self {
        Self {
            ainv: [[289.1545, 278.1123], [278.1123, 475.5730]],
            damping: [[20.6543, 0.6675], [19.8655, 1.1414]],
            stiffness: [-58.3839, -99.8366],
            input: [37.1285, 35.7106],
            cubic: [-2.0852, -1.3366, 1.0028, -2.0056, -1.2855, 1.7148],
        }
    }

    /// Same linear part with the cubic terms removed.
    pub fn linear_only(&self) -> Self {
        Self {
            cubic: [0.0; 6],
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = self
            .ainv
            .iter()
            .flatten()
            .chain(self.damping.iter().flatten())
            .chain(&self.stiffness)
            .chain(&self.input)
            .chain(&self.cubic);
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("reduced dynamics coefficients must be finite"));
        }
        let [[a, b], [c, d]] = self.ainv;
        if (b - c).abs() > 1e-9 * (b.abs() + c.abs()).max(1.0) {
            return Err(Error::invalid("inverse inertia matrix must be symmetric"));
        }
        if !(a > 0.0 && a * d - b * c > 0.0) {
            return Err(Error::invalid("inverse inertia matrix must be positive definite"));
        }
        Ok(())
    }

    /// Arm-torque to acceleration gains `(Ainv₁₁, Ainv₂₁)`.
    pub fn torque_gain(&self) -> [f64; 2] {
        [self.ainv[0][0], self.ainv[1][0]]
    }
}

/// Left-multiply the small-angle model by the inverse inertia matrix.
///
/// The `α²` corrections to the inertia matrix are dropped; the velocity
/// products on the right-hand side become the cubic coefficients.
pub fn reduced_dynamics(m: &SmallAngleMatrices, p: &PhysicalParams) -> Result<ReducedDynamics> {
    let ainv = m
        .mass
        .try_inverse()
        .ok_or_else(|| Error::Singular("small-angle inertia matrix".into()))?;
    let b = ainv * m.damping;
    let c = ainv * m.stiffness;
    let v = ainv * m.input;
    // Right-hand-side nonlinearity per unit α:
    //   row θ: −½M₂L₂² α̇θ̇ − ½M₂L₁L₂ α̇²,  row α: +¼M₂L₂² θ̇²
    let n_ad_td = -0.5 * p.m2 * p.l2 * p.l2;
    let n_ad_ad = -0.5 * p.coupling();
    let n_td_td = 0.25 * p.m2 * p.l2 * p.l2;
    let cubic = [
        ainv[(0, 0)] * n_ad_td,
        ainv[(0, 0)] * n_ad_ad,
        ainv[(0, 1)] * n_td_td,
        ainv[(1, 0)] * n_ad_td,
        ainv[(1, 0)] * n_ad_ad,
        ainv[(1, 1)] * n_td_td,
    ];
    let r = ReducedDynamics {
        ainv: [[ainv[(0, 0)], ainv[(0, 1)]], [ainv[(1, 0)], ainv[(1, 1)]]],
        damping: [[b[(0, 0)], b[(0, 1)]], [b[(1, 0)], b[(1, 1)]]],
        stiffness: [c[(0, 1)], c[(1, 1)]],
        input: [v[0], v[1]],
        cubic,
    };
    r.validate()?;
    Ok(r)
}

/// Augmented pendulum state `(∫θ, θ, α, θ̇, α̇)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PendulumState {
    pub x0: f64,
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    pub x4: f64,
}

impl PendulumState {
    pub fn to_array(self) -> [f64; 5] {
        [self.x0, self.x1, self.x2, self.x3, self.x4]
    }

    pub fn from_slice(x: &[f64]) -> Self {
        Self {
            x0: x[0],
            x1: x[1],
            x2: x[2],
            x3: x[3],
            x4: x[4],
        }
    }

    pub fn norm(&self) -> f64 {
        self.to_array().iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Time derivative of the augmented state under voltage `v_m`.
pub fn nonlinear_reduced_dynamics(r: &ReducedDynamics, s: &PendulumState, v_m: f64) -> [f64; 5] {
    reduced_derivative(r, s, v_m, 0.0)
}

/// As [`nonlinear_reduced_dynamics`] with an extra arm torque `tau_d`.
pub fn reduced_derivative(r: &ReducedDynamics, s: &PendulumState, v_m: f64, tau_d: f64) -> [f64; 5] {
    let PendulumState { x1, x2, x3, x4, .. } = *s;
    let [[b11, b12], [b21, b22]] = r.damping;
    let [c1, c2] = r.stiffness;
    let [v1, v2] = r.input;
    let [a1, a2, a3, a4, a5, a6] = r.cubic;
    let [g1, g2] = r.torque_gain();
    [
        x1,
        x3,
        x4,
        v1 * v_m - b11 * x3 - b12 * x4 - c1 * x2
            + a1 * x2 * x3 * x4
            + a2 * x2 * x4 * x4
            + a3 * x2 * x3 * x3
            + g1 * tau_d,
        v2 * v_m - b21 * x3 - b22 * x4 - c2 * x2
            + a4 * x2 * x3 * x4
            + a5 * x2 * x4 * x4
            + a6 * x2 * x3 * x3
            + g2 * tau_d,
    ]
}

/// Linear state model `ẋ = A₁x + U₁V` for `x = (θ, α, θ̇, α̇)`.
pub fn state_space(r: &ReducedDynamics) -> (DMatrix<f64>, DMatrix<f64>) {
    let [[b11, b12], [b21, b22]] = r.damping;
    let [c1, c2] = r.stiffness;
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(4, 4, &[
        0.0, 0.0, 1.0, 0.0,
        0.0, 0.0, 0.0, 1.0,
        0.0, -c1, -b11, -b12,
        0.0, -c2, -b21, -b22,
    ]);
    let u = DMatrix::from_column_slice(4, 1, &[0.0, 0.0, r.input[0], r.input[1]]);
    (a, u)
}

/// Numeric rank of the controllability matrix of `(A, B)`.
pub fn controllability_rank(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<usize> {
    Ok(linalg::numeric_rank(&linalg::controllability_matrix(a, b)?))
}

/// Output whose running integral can be added as a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntegralChannel {
    Theta,
    Alpha,
}

impl IntegralChannel {
    fn state_index(self) -> usize {
        match self {
            IntegralChannel::Theta => 0,
            IntegralChannel::Alpha => 1,
        }
    }
}

/// Prepend integral-of-output states for the selected channels to `(A₁, U₁)`.
pub fn augment_integral(
    a1: &DMatrix<f64>,
    u1: &DMatrix<f64>,
    channels: &[IntegralChannel],
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if channels.is_empty() {
        return Err(Error::invalid("at least one integral channel is required"));
    }
    if a1.shape() != (4, 4) || u1.nrows() != 4 {
        return Err(Error::DimensionMismatch(
            "expected the 4-state pendulum model".into(),
        ));
    }
    let mut seen = Vec::new();
    for c in channels {
        if seen.contains(c) {
            return Err(Error::invalid("duplicate integral channel"));
        }
        seen.push(*c);
    }
    let m = channels.len();
    let n = 4 + m;
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (row, c) in channels.iter().enumerate() {
        a[(row, m + c.state_index())] = 1.0;
    }
    a.view_mut((m, m), (4, 4)).copy_from(a1);
    let mut b = DMatrix::<f64>::zeros(n, u1.ncols());
    b.rows_mut(m, 4).copy_from(u1);
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn small_angle_entries() {
        let p = PhysicalParams::default();
        let m = small_angle_matrices(&p);
        assert_eq!(m.mass[(0, 1)], -0.5 * p.m2 * p.l1 * p.l2);
        assert_eq!(m.mass[(0, 1)], m.mass[(1, 0)]);
        assert_eq!(m.stiffness[(1, 1)], -0.5 * p.m2 * p.g * p.l2);
        assert_eq!(m.damping[(0, 0)], p.b1 + p.u2());
        assert_eq!(m.damping[(1, 1)], p.b2);
        assert_eq!(m.damping[(0, 1)], 0.0);
        assert_eq!(m.input, Vector2::new(p.u1(), 0.0));
        assert!(m.mass.symmetric_eigenvalues().iter().all(|&e| e > 0.0));
    }

    #[test]
    fn default_params_reproduce_identified_coefficients() {
        let p = PhysicalParams::default();
        let r = reduced_dynamics(&small_angle_matrices(&p), &p).unwrap();
        let id = ReducedDynamics::identified();
        let pairs = r
            .ainv
            .iter()
            .flatten()
            .zip(id.ainv.iter().flatten())
            .chain(r.damping.iter().flatten().zip(id.damping.iter().flatten()))
            .chain(r.stiffness.iter().zip(&id.stiffness))
            .chain(r.input.iter().zip(&id.input))
            .chain(r.cubic.iter().zip(&id.cubic));
        for (got, want) in pairs {
            assert!(rel(*got, *want) < 1e-3, "{got} vs {want}");
        }
    }

    #[test]
    fn singular_inertia_rejected() {
        let p = PhysicalParams::default();
        let mut m = small_angle_matrices(&p);
        m.mass = Matrix2::new(1.0, 1.0, 1.0, 1.0);
        assert!(matches!(reduced_dynamics(&m, &p), Err(Error::Singular(_))));
    }

    #[test]
    fn reduced_derivative_examples() {
        let r = ReducedDynamics::identified();
        assert_eq!(nonlinear_reduced_dynamics(&r, &PendulumState::default(), 0.0), [0.0; 5]);
        let d = nonlinear_reduced_dynamics(&r, &PendulumState::default(), 1.0);
        assert_eq!(d, [0.0, 0.0, 0.0, 37.1285, 35.7106]);
        let s = PendulumState {
            x2: 0.1,
            ..Default::default()
        };
        let d = nonlinear_reduced_dynamics(&r, &s, 0.0);
        assert!((d[3] - 5.83839).abs() < 1e-12);
        assert!((d[4] - 9.98366).abs() < 1e-12);
    }

    #[test]
    fn cubic_terms_follow_the_velocity_products() {
        let r = ReducedDynamics::identified();
        let s = PendulumState {
            x0: 0.0,
            x1: 0.0,
            x2: 0.2,
            x3: 0.5,
            x4: -0.3,
        };
        let lin = nonlinear_reduced_dynamics(&r.linear_only(), &s, 0.0);
        let full = nonlinear_reduced_dynamics(&r, &s, 0.0);
        let [a1, a2, a3, a4, a5, a6] = r.cubic;
        let (x2, x3, x4) = (0.2, 0.5, -0.3);
        assert!((full[3] - lin[3] - (a1 * x2 * x3 * x4 + a2 * x2 * x4 * x4 + a3 * x2 * x3 * x3)).abs() < 1e-14);
        assert!((full[4] - lin[4] - (a4 * x2 * x3 * x4 + a5 * x2 * x4 * x4 + a6 * x2 * x3 * x3)).abs() < 1e-14);
    }

    #[test]
    fn state_space_layout() {
        let (a, u) = state_space(&ReducedDynamics::identified());
        assert_eq!(a.row(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0, 1.0, 0.0]);
        assert_eq!(a.row(1).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0, 0.0, 1.0]);
        assert_eq!(a[(2, 1)], 58.3839);
        assert_eq!(u.as_slice(), &[0.0, 0.0, 37.1285, 35.7106]);
    }

    #[test]
    fn controllability_examples() {
        let (a, u) = state_space(&ReducedDynamics::identified());
        assert_eq!(controllability_rank(&a, &u).unwrap(), 4);
        let b = DMatrix::from_column_slice(4, 1, &[0.3, -1.0, 2.0, 0.5]);
        assert_eq!(controllability_rank(&DMatrix::zeros(4, 4), &b).unwrap(), 1);
    }

    #[test]
    fn integral_augmentation_ranks() {
        let (a, u) = state_space(&ReducedDynamics::identified());
        let (aa, bb) = augment_integral(&a, &u, &[IntegralChannel::Theta]).unwrap();
        assert_eq!(aa.shape(), (5, 5));
        assert_eq!(controllability_rank(&aa, &bb).unwrap(), 5);
        let (aa, bb) = augment_integral(&a, &u, &[IntegralChannel::Theta, IntegralChannel::Alpha]).unwrap();
        assert_eq!(aa.shape(), (6, 6));
        assert!(controllability_rank(&aa, &bb).unwrap() < 6);
    }

    #[test]
    fn integral_augmentation_of_bare_double_integrators() {
        // zero damping/stiffness: two decoupled double integrators, input on α̇ only
        let zero = ReducedDynamics {
            ainv: [[1.0, 0.0], [0.0, 1.0]],
            damping: [[0.0; 2]; 2],
            stiffness: [0.0; 2],
            input: [0.0, 1.0],
            cubic: [0.0; 6],
        };
        let (a, u) = state_space(&zero);
        let (aa, bb) = augment_integral(&a, &u, &[IntegralChannel::Theta]).unwrap();
        assert_eq!(controllability_rank(&aa, &bb).unwrap(), 2);
    }

    #[test]
    fn augmentation_needs_a_channel() {
        let (a, u) = state_space(&ReducedDynamics::identified());
        assert!(augment_integral(&a, &u, &[]).is_err());
    }

    #[test]
    fn validation_catches_non_symmetric_inverse() {
        let mut r = ReducedDynamics::identified();
        r.ainv[0][1] = 1.0;
        assert!(r.validate().is_err());
        ReducedDynamics::identified().validate().unwrap();
    }
}
