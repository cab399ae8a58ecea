//! Pole placement for the pendulum loop with an integral-of-θ state.
//!
//! The augmented state is `x = (∫θ, θ, α, θ̇, α̇)` and the feedback is
//! `V_m = −(k₀x₀ + k₁x₁ + k₂x₂ + k₃x₃ + k₄x₄)`. Because the input enters
//! through a single column `(0, 0, 0, v₁, v₂)`, the closed-loop matrix is a
//! rank-one update of the open loop and its characteristic coefficients are
//! affine in the gains.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::lti::check_stable_poles;
use crate::model::{augment_integral, state_space, IntegralChannel, ReducedDynamics};
use crate::poly::Polynomial;

/// Relative tolerance of the eigenvalue round trip after placement.
pub const PLACEMENT_ROUND_TRIP_TOLERANCE: f64 = 1e-6;

/// Feedback gains `k₀..k₄`, volts per unit of `(∫θ, θ, α, θ̇, α̇)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 5]", into = "[f64; 5]")]
pub struct GainVector {
    k: [f64; 5],
}

impl GainVector {
    pub fn new(k: [f64; 5]) -> Result<Self> {
        if k.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("gains must be finite"));
        }
        Ok(Self { k })
    }

    /// Gains run on the laboratory rig for poles `{−2 ± 1.606i, −10, −12, −15}`,
    /// rounded to three decimals.
    pub fn lab_design() -> Self {
        Self {
            k: [-7.302, -6.348, 27.681, -3.166, 3.829],
        }
    }

    pub fn as_array(&self) -> [f64; 5] {
        self.k
    }

    pub fn get(&self, i: usize) -> f64 {
        self.k[i]
    }

    /// Same gains with the integral gain `k₀` forced to zero.
    pub fn without_integral(&self) -> Self {
        let mut k = self.k;
        k[0] = 0.0;
        Self { k }
    }

    /// `−K·x`.
    pub fn voltage(&self, x: &[f64; 5]) -> f64 {
        -self.k.iter().zip(x).map(|(k, x)| k * x).sum::<f64>()
    }
}

impl TryFrom<[f64; 5]> for GainVector {
    type Error = Error;

    fn try_from(k: [f64; 5]) -> Result<Self> {
        Self::new(k)
    }
}

impl From<GainVector> for [f64; 5] {
    fn from(g: GainVector) -> Self {
        g.k
    }
}

/// Closed-loop matrix `A_d` with its gains and eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoop {
    pub a_d: DMatrix<f64>,
    pub gains: GainVector,
    pub poles: Vec<Complex64>,
}

/// Open-loop augmented pair `(A, B)` on `(∫θ, θ, α, θ̇, α̇)`.
pub fn augmented_pair(r: &ReducedDynamics) -> (DMatrix<f64>, DMatrix<f64>) {
    let (a1, u1) = state_space(r);
    augment_integral(&a1, &u1, &[IntegralChannel::Theta]).expect("4-state model with one channel")
}

/// Assemble `A_d = A − B K`.
pub fn closed_loop_matrix(r: &ReducedDynamics, k: &GainVector) -> ClosedLoop {
    let (a, b) = augmented_pair(r);
    let kt = DMatrix::from_row_slice(1, 5, &k.k);
    let a_d = a - b * kt;
    let poles = linalg::eigenvalues(&a_d);
    ClosedLoop {
        a_d,
        gains: *k,
        poles,
    }
}

/// Ackermann's formula for a single-input pair: the row `K` with
/// `eig(A − B K) = poles`, i.e. `K = eₙᵀ 𝒞⁻¹ φ(A)`.
///
/// The returned gains are checked by recomputing the closed-loop eigenvalues;
/// a relative mismatch above [`PLACEMENT_ROUND_TRIP_TOLERANCE`] is an error
/// carrying the controllability-matrix condition number.
pub fn ackermann(a: &DMatrix<f64>, b: &DMatrix<f64>, poles: &[Complex64]) -> Result<DVector<f64>> {
    let n = a.nrows();
    if b.ncols() != 1 {
        return Err(Error::DimensionMismatch("pole placement needs a single input".into()));
    }
    if poles.len() != n {
        return Err(Error::PoleCount {
            expected: n,
            got: poles.len(),
        });
    }
    check_stable_poles(poles)?;
    let ctrb = linalg::controllability_matrix(a, b)?;
    let rank = linalg::numeric_rank(&ctrb);
    if rank < n {
        return Err(Error::Uncontrollable { rank, dim: n });
    }
    let phi = Polynomial::from_roots(poles)?.eval_matrix(a);
    let mut e_n = DVector::<f64>::zeros(n);
    e_n[n - 1] = 1.0;
    let w = ctrb
        .transpose()
        .lu()
        .solve(&e_n)
        .ok_or_else(|| Error::Singular("controllability matrix".into()))?;
    let k = phi.transpose() * w;

    let closed = a - b * k.transpose();
    let error = linalg::max_relative_pole_error(&linalg::eigenvalues(&closed), poles);
    if !(error <= PLACEMENT_ROUND_TRIP_TOLERANCE) {
        return Err(Error::IllConditioned {
            condition: linalg::condition_number(&ctrb),
            error,
        });
    }
    Ok(k)
}

/// Gains placing the five closed-loop poles of the pendulum loop.
pub fn place_poles(r: &ReducedDynamics, poles: &[Complex64]) -> Result<GainVector> {
    if poles.len() != 5 {
        return Err(Error::PoleCount {
            expected: 5,
            got: poles.len(),
        });
    }
    let (a, b) = augmented_pair(r);
    let k = ackermann(&a, &b, poles)?;
    GainVector::new([k[0], k[1], k[2], k[3], k[4]])
}

/// Second-order dominant pair plus three faster real poles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DominantSpec {
    pub zeta: f64,
    /// Undamped natural frequency, rad/s.
    pub omega_n: f64,
    /// Far poles sit at these multiples of the dominant real part.
    pub far_pole_multipliers: [f64; 3],
}

impl DominantSpec {
    pub fn new(zeta: f64, omega_n: f64, far_pole_multipliers: [f64; 3]) -> Result<Self> {
        let spec = Self {
            zeta,
            omega_n,
            far_pole_multipliers,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Damping ratio from a percent overshoot, natural frequency from the
    /// dominant real part `σ = ζω_n`.
    pub fn from_overshoot(percent_overshoot: f64, real_part: f64, far_pole_multipliers: [f64; 3]) -> Result<Self> {
        if !(percent_overshoot > 0.0 && percent_overshoot < 100.0) {
            return Err(Error::invalid("percent overshoot must lie in (0, 100)"));
        }
        if !(real_part > 0.0) {
            return Err(Error::invalid("dominant real part magnitude must be positive"));
        }
        let l = (percent_overshoot / 100.0).ln();
        let zeta = -l / (std::f64::consts::PI.powi(2) + l * l).sqrt();
        Self::new(zeta, real_part / zeta, far_pole_multipliers)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.zeta > 0.0 && self.zeta < 1.0) {
            return Err(Error::invalid("damping ratio must lie in (0, 1)"));
        }
        if !(self.omega_n > 0.0 && self.omega_n.is_finite()) {
            return Err(Error::invalid("natural frequency must be positive"));
        }
        if self.far_pole_multipliers.iter().any(|&m| !(m > 1.0 && m.is_finite())) {
            return Err(Error::invalid("far-pole multipliers must exceed 1"));
        }
        Ok(())
    }

    pub fn percent_overshoot(&self) -> f64 {
        100.0 * (-self.zeta * std::f64::consts::PI / (1.0 - self.zeta * self.zeta).sqrt()).exp()
    }

    /// `ζω_n`.
    pub fn dominant_real_part(&self) -> f64 {
        self.zeta * self.omega_n
    }
}

/// `−ζω_n ± jω_n√(1−ζ²)` followed by the three far real poles.
pub fn dominant_pole_design(spec: &DominantSpec) -> Result<Vec<Complex64>> {
    spec.validate()?;
    let sigma = spec.dominant_real_part();
    let wd = spec.omega_n * (1.0 - spec.zeta * spec.zeta).sqrt();
    let mut poles = vec![Complex64::new(-sigma, wd), Complex64::new(-sigma, -wd)];
    poles.extend(spec.far_pole_multipliers.iter().map(|m| Complex64::new(-m * sigma, 0.0)));
    Ok(poles)
}

/// The laboratory pole set `{−2 ± 1.606i, −10, −12, −15}`.
pub fn lab_poles() -> Vec<Complex64> {
    vec![
        Complex64::new(-2.0, 1.606),
        Complex64::new(-2.0, -1.606),
        Complex64::new(-10.0, 0.0),
        Complex64::new(-12.0, 0.0),
        Complex64::new(-15.0, 0.0),
    ]
}
