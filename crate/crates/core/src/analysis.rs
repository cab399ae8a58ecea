//! Norm bounds and convergence checks for the closed pendulum loop.
//!
//! Writing `A_d = M Σ M⁻¹` with unit-norm eigenvector columns, the cubic
//! terms obey `‖N(Z)‖ ≤ κ‖Z‖³`, and variation of constants gives
//!
//! ```text
//! ‖Z(t)‖ ≤ β‖Z(0)‖ + βκγ³/|λ₁|        whenever ‖Z‖ ≤ γ on [0, t],
//! ```
//!
//! with `β = ‖M‖‖M⁻¹‖`. Any `γ` for which the right-hand side stays below `γ`
//! is therefore an a-priori bound on the trajectory.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{total_energy, FullState, PhysicalParams, ReducedDynamics};
use crate::sim::{PlantMode, Trace};
use crate::synthesis::ClosedLoop;

/// Eigenvector-matrix condition above which `A_d` counts as defective.
pub const DEFECTIVE_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundednessReport {
    /// `cond₂(M)` of the eigenvector matrix.
    pub beta: f64,
    /// Signed-sum constant `√((a1+a2+a3)² + (a4+a5+a6)²)`.
    pub kappa: f64,
    /// Absolute-sum variant, a valid bound for either sign pattern.
    pub kappa_abs: f64,
    /// Set when the two κ variants disagree.
    pub kappa_discrepancy: bool,
    /// Largest real part of the closed-loop eigenvalues.
    pub lambda1: f64,
    /// The initial-state norm the bound was evaluated for.
    pub z0_norm: f64,
    /// Smallest self-consistent bound, or `None` when infeasible.
    pub gamma_star: Option<f64>,
    /// Largest `‖Z(0)‖` for which a bound exists.
    pub z0_max: f64,
    pub normalization: &'static str,
}

impl fmt::Display for BoundednessReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let gamma = match self.gamma_star {
            Some(g) => format!("{g:.6e}"),
            None => "infeasible (bound infeasible for this Z(0))".into(),
        };
        let rows: [(&str, String); 9] = [
            ("beta", format!("{:.6}", self.beta)),
            ("kappa", format!("{:.6}", self.kappa)),
            ("kappa_abs", format!("{:.6}", self.kappa_abs)),
            ("kappa_discrepancy", self.kappa_discrepancy.to_string()),
            ("lambda1", format!("{:.6}", self.lambda1)),
            ("z0_norm", format!("{:.6e}", self.z0_norm)),
            ("gamma_star", gamma),
            ("z0_max", format!("{:.6e}", self.z0_max)),
            ("normalization", self.normalization.to_string()),
        ];
        for (i, (k, v)) in rows.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{k:<30} {v}")?;
        }
        Ok(())
    }
}

/// `(κ, κ′)`: signed and absolute row sums of the cubic coefficients.
pub fn kappa(r: &ReducedDynamics) -> (f64, f64) {
    let a = r.cubic;
    let signed = (a[0] + a[1] + a[2]).hypot(a[3] + a[4] + a[5]);
    let abs = (a[0].abs() + a[1].abs() + a[2].abs()).hypot(a[3].abs() + a[4].abs() + a[5].abs());
    (signed, abs)
}

/// Smallest fixed point of `g(γ) = β z₀ + βκγ³/|λ₁|`.
///
/// `g(γ) − γ` is convex on `γ ≥ 0` with its minimum at
/// `γ_turn = √(|λ₁|/(3βκ))`, so a fixed point exists iff `g(γ_turn) ≤ γ_turn`
/// and the smallest one lies in `[0, γ_turn]`. The returned value satisfies
/// `g(γ*) ≤ γ*`.
pub fn gamma_star(beta: f64, kappa: f64, lambda1: f64, z0_norm: f64) -> Option<f64> {
    let rate = lambda1.abs();
    let g = |x: f64| beta * z0_norm + beta * kappa * x.powi(3) / rate;
    if kappa == 0.0 {
        return Some(beta * z0_norm);
    }
    let turn = (rate / (3.0 * beta * kappa)).sqrt();
    if g(turn) > turn {
        return None;
    }
    let (mut lo, mut hi) = (0.0, turn);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) <= mid {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Some(hi)
}

/// `β`, `κ`, `λ₁` and the resulting bound for initial norm `z0_norm`.
pub fn boundedness_constants(cl: &ClosedLoop, r: &ReducedDynamics, z0_norm: f64) -> Result<BoundednessReport> {
    if !(z0_norm >= 0.0 && z0_norm.is_finite()) {
        return Err(Error::invalid("initial-state norm must be finite and non-negative"));
    }
    let poles = &cl.poles;
    let scale = poles.iter().map(|p| p.norm()).fold(1.0, f64::max);
    for (i, a) in poles.iter().enumerate() {
        for b in &poles[i + 1..] {
            if (a - b).norm() <= 1e-9 * scale {
                return Err(Error::Defective(f64::INFINITY));
            }
        }
    }
    let m = linalg::eigenvector_matrix(&cl.a_d, poles);
    let beta = linalg::complex_condition_number(&m);
    if !(beta <= DEFECTIVE_CONDITION) {
        return Err(Error::Defective(beta));
    }
    let lambda1 = poles.iter().map(|p| p.re).fold(f64::NEG_INFINITY, f64::max);
    if lambda1 >= 0.0 {
        return Err(Error::NotHurwitz);
    }
    let (kappa, kappa_abs) = kappa(r);
    let z0_max = if kappa == 0.0 {
        f64::INFINITY
    } else {
        // g(γ_turn) = βz₀ + γ_turn/3 ≤ γ_turn
        2.0 / 3.0 * (lambda1.abs() / (3.0 * beta * kappa)).sqrt() / beta
    };
    Ok(BoundednessReport {
        beta,
        kappa,
        kappa_abs,
        kappa_discrepancy: (kappa - kappa_abs).abs() > 1e-12 * kappa_abs.max(1.0),
        lambda1,
        z0_norm,
        gamma_star: gamma_star(beta, kappa, lambda1, z0_norm),
        z0_max,
        normalization: "unit-norm columns",
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    pub within: bool,
    pub first_violation: Option<f64>,
    pub max_norm: f64,
}

fn norm5(z: [f64; 5]) -> f64 {
    z.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Whether `‖Z(t)‖ ≤ γ` at every sample, with
/// `Z = (x₀, θ − θ_ref, α, θ̇, α̇)` built from the recorded estimates.
pub fn verify_bounded(trace: &Trace, gamma: f64) -> BoundCheck {
    let mut check = BoundCheck {
        within: true,
        first_violation: None,
        max_norm: 0.0,
    };
    for r in &trace.records {
        let n = norm5(r.error_state());
        check.max_norm = check.max_norm.max(n);
        if !(n <= gamma) && check.first_violation.is_none() {
            check.within = false;
            check.first_violation = Some(r.t);
        }
    }
    check
}

/// `d(T) = sup ‖Z(t₁) − Z(t₂)‖` over samples with `t₁, t₂ ≥ T` and
/// `|t₁ − t₂| ≤ window`, for every sample time `T ≤ t_end − window`.
///
/// `d` is nonincreasing by construction; a converging loop drives it to zero.
pub fn cauchy_check(trace: &Trace, window: f64) -> Result<Vec<(f64, f64)>> {
    if !(window > 0.0) {
        return Err(Error::invalid("window must be positive"));
    }
    if trace.duration() < 3.0 * window {
        return Err(Error::invalid(format!(
            "trace lasts {} s, need at least three windows ({} s)",
            trace.duration(),
            3.0 * window
        )));
    }
    let recs = &trace.records;
    let z: Vec<[f64; 5]> = recs.iter().map(|r| r.error_state()).collect();
    let tol = 1e-9 * window;
    // widest pair starting at each sample
    let mut spread = vec![0.0f64; recs.len()];
    for j in 0..recs.len() {
        let mut k = j + 1;
        while k < recs.len() && recs[k].t - recs[j].t <= window + tol {
            let d = norm5(std::array::from_fn(|i| z[j][i] - z[k][i]));
            spread[j] = spread[j].max(d);
            k += 1;
        }
    }
    let t_end = recs[recs.len() - 1].t;
    let mut out = Vec::new();
    let mut running = 0.0f64;
    for j in (0..recs.len()).rev() {
        running = running.max(spread[j]);
        if recs[j].t <= t_end - window + tol {
            out.push((recs[j].t, running));
        }
    }
    out.reverse();
    Ok(out)
}

/// Nonincreasing within `1e-9 + 1 %` of the first value.
pub fn is_nonincreasing(table: &[(f64, f64)]) -> bool {
    let Some(&(_, d0)) = table.first() else {
        return true;
    };
    let tol = 1e-9 + 0.01 * d0;
    table.windows(2).all(|w| w[1].1 <= w[0].1 + tol)
}

/// Largest `|E(t) − E(0)| / max(|E(0)|, ε)` along an unforced, frictionless
/// full-model trace.
pub fn energy_drift(p: &PhysicalParams, trace: &Trace) -> Result<f64> {
    let meta = &trace.meta;
    if meta.plant != PlantMode::FullNonlinear {
        return Err(Error::Provenance("energy drift needs a full-model trace".into()));
    }
    if !meta.zero_input {
        return Err(Error::Provenance("trace was produced with applied torque".into()));
    }
    if !meta.frictionless || p.b1 != 0.0 || p.b2 != 0.0 {
        return Err(Error::Provenance("energy drift needs zero friction".into()));
    }
    let energy = |i: usize| {
        let r = &trace.records[i];
        total_energy(
            p,
            &FullState {
                theta: r.theta,
                alpha: r.alpha,
                theta_dot: r.theta_dot,
                alpha_dot: r.alpha_dot,
            },
        )
    };
    if trace.is_empty() {
        return Ok(0.0);
    }
    let e0 = energy(0);
    let denom = e0.abs().max(1e-12);
    Ok((0..trace.len()).map(|i| (energy(i) - e0).abs() / denom).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ReducedDynamics;
    use crate::sim::{simulate_feedback_loop, simulate_free_motion, TraceMeta, TraceRecord};
    use crate::synthesis::{closed_loop_matrix, GainVector};
    use nalgebra::DMatrix;

    fn lab() -> (ClosedLoop, ReducedDynamics) {
        let r = ReducedDynamics::identified();
        (closed_loop_matrix(&r, &GainVector::lab_design()), r)
    }

    #[test]
    fn kappa_matches_literal_formula() {
        let (_, r) = lab();
        let a = r.cubic;
        // summed in the opposite order as an independent check
        let lit = ((a[2] + a[1] + a[0]).powi(2) + (a[5] + a[4] + a[3]).powi(2)).sqrt();
        let (k, kabs) = kappa(&r);
        assert!((k - lit).abs() < 1e-12);
        assert!((k - 2.8873).abs() < 1e-4);
        assert!(kabs > k);
    }

    #[test]
    fn lab_report() {
        let (cl, r) = lab();
        let rep = boundedness_constants(&cl, &r, 1e-7).unwrap();
        assert!(rep.beta >= 1.0);
        assert!(rep.kappa_discrepancy);
        assert!((rep.lambda1 + 2.0).abs() < 0.05);
        assert!(rep.gamma_star.is_some());
        assert!(rep.z0_max > 1e-7);
        let text = rep.to_string();
        assert!(text.contains("kappa ") && text.contains("unit-norm columns"));
        let too_big = boundedness_constants(&cl, &r, 2.0 * rep.z0_max).unwrap();
        assert!(too_big.gamma_star.is_none());
    }

    #[test]
    fn gamma_star_is_the_smallest_fixed_point() {
        let (beta, kappa, lambda1, z0) = (40.0, 2.9, -2.0, 1e-4);
        let g = gamma_star(beta, kappa, lambda1, z0).unwrap();
        let rhs = |x: f64| beta * z0 + beta * kappa * x.powi(3) / lambda1.abs();
        assert!(rhs(g) <= g && g - rhs(g) <= 1e-9);
        let below = g - 1e-6;
        assert!(rhs(below) > below);
    }

    #[test]
    fn linear_limit() {
        let (cl, r) = lab();
        let lin = r.linear_only();
        let rep = boundedness_constants(&cl, &lin, 0.3).unwrap();
        assert_eq!(rep.kappa, 0.0);
        assert!((rep.gamma_star.unwrap() - rep.beta * 0.3).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_eigenvectors_give_unit_beta() {
        let a_d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, -2.0, -3.0, -4.0, -5.0]));
        let poles = linalg::eigenvalues(&a_d);
        let cl = ClosedLoop {
            a_d,
            gains: GainVector::lab_design(),
            poles,
        };
        let rep = boundedness_constants(&cl, &ReducedDynamics::identified(), 0.0).unwrap();
        assert!((rep.beta - 1.0).abs() < 1e-9);
    }

    #[test]
    fn defective_and_unstable_rejected() {
        let jordan = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0]);
        let cl = ClosedLoop {
            poles: linalg::eigenvalues(&jordan),
            a_d: jordan,
            gains: GainVector::lab_design(),
        };
        assert!(matches!(
            boundedness_constants(&cl, &ReducedDynamics::identified(), 0.0),
            Err(Error::Defective(_))
        ));
        let (_, r) = lab();
        let unstable = closed_loop_matrix(&r, &GainVector::new([0.0, 0.0, 0.0, 0.0, 0.0]).unwrap());
        assert!(boundedness_constants(&unstable, &r, 0.0).is_err());
    }

    #[test]
    fn linear_loop_respects_exponential_envelope() {
        let (cl, r) = lab();
        let lin = r.linear_only();
        let rep = boundedness_constants(&cl, &lin, 1.0).unwrap();
        let z0 = [0.01, -0.02, 0.05, 0.1, -0.1];
        let n0 = norm5(z0);
        let tr = simulate_feedback_loop(&lin, &cl.gains, z0, 5.0, 1e-3).unwrap();
        for rec in &tr.records {
            let bound = rep.beta * (rep.lambda1 * rec.t).exp() * n0 * (1.0 + 1e-6);
            assert!(norm5(rec.error_state()) <= bound, "t = {}", rec.t);
        }
    }

    #[test]
    fn bounds_on_traces() {
        let zero = Trace {
            meta: TraceMeta::default(),
            records: vec![TraceRecord {
                t: 0.0,
                theta_ref: 0.0,
                theta: 0.0,
                alpha: 0.0,
                theta_dot_est: 0.0,
                alpha_dot_est: 0.0,
                x0: 0.0,
                v_cmd: 0.0,
                v_sat: 0.0,
                engaged: true,
                terminated: false,
                theta_dot: 0.0,
                alpha_dot: 0.0,
            }],
        };
        assert!(verify_bounded(&zero, 1e-9).within);

        let r = ReducedDynamics::identified().linear_only();
        let bad = GainVector::new([0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let tr = simulate_feedback_loop(&r, &bad, [0.0, 0.0, 1e-4, 0.0, 0.0], 3.0, 1e-3).unwrap();
        let check = verify_bounded(&tr, 1e-2);
        assert!(!check.within);
        assert!(check.first_violation.unwrap() < 3.0);
    }

    fn exponential_trace(z0: [f64; 5], duration: f64, dt: f64) -> Trace {
        let n = (duration / dt).round() as usize;
        let records = (0..=n)
            .map(|k| {
                let t = k as f64 * dt;
                let e = (-t).exp();
                TraceRecord {
                    t,
                    theta_ref: 0.0,
                    theta: e * z0[1],
                    alpha: e * z0[2],
                    theta_dot_est: e * z0[3],
                    alpha_dot_est: e * z0[4],
                    x0: e * z0[0],
                    v_cmd: 0.0,
                    v_sat: 0.0,
                    engaged: true,
                    terminated: false,
                    theta_dot: e * z0[3],
                    alpha_dot: e * z0[4],
                }
            })
            .collect();
        Trace {
            meta: TraceMeta::default(),
            records,
        }
    }

    #[test]
    fn cauchy_exponential_closed_form() {
        let z0 = [0.3, -0.2, 0.5, 1.0, 0.1];
        let w = 0.5;
        let table = cauchy_check(&exponential_trace(z0, 4.0, 1e-3), w).unwrap();
        let n0 = norm5(z0);
        for &(t, d) in &table {
            let want = (-t).exp() * (1.0 - (-w).exp()) * n0;
            assert!((d - want).abs() < 1e-6, "T = {t}: {d} vs {want}");
        }
        assert!(is_nonincreasing(&table));
        assert!((table.last().unwrap().0 - 3.5).abs() < 1e-9);
    }

    #[test]
    fn cauchy_constant_and_short() {
        let table = cauchy_check(&exponential_trace([0.0; 5], 3.0, 0.01), 1.0).unwrap();
        assert!(table.iter().all(|&(_, d)| d == 0.0));
        assert!(cauchy_check(&exponential_trace([0.0; 5], 2.0, 0.01), 1.0).is_err());
    }

    #[test]
    fn energy_drift_checks_provenance() {
        let p = PhysicalParams::default().frictionless();
        let rest = simulate_free_motion(&p, &FullState::at_rest(0.0, 0.0), 1.0, 1e-3).unwrap();
        assert_eq!(energy_drift(&p, &rest).unwrap(), 0.0);
        let with_friction = PhysicalParams::default();
        let tr = simulate_free_motion(&with_friction, &FullState::at_rest(0.0, 0.5), 0.1, 1e-3).unwrap();
        assert!(matches!(energy_drift(&with_friction, &tr), Err(Error::Provenance(_))));
        let read_back = Trace::read_csv(rest.to_csv_string().as_bytes()).unwrap();
        assert!(matches!(energy_drift(&p, &read_back), Err(Error::Provenance(_))));
    }

    #[test]
    fn energy_drift_order() {
        let p = PhysicalParams::default().frictionless();
        let s0 = FullState::at_rest(0.0, 2.0);
        let fine = energy_drift(&p, &simulate_free_motion(&p, &s0, 2.0, 1e-3).unwrap()).unwrap();
        let coarse = energy_drift(&p, &simulate_free_motion(&p, &s0, 2.0, 1e-2).unwrap()).unwrap();
        assert!(coarse > 10.0 * fine);
    }
}
