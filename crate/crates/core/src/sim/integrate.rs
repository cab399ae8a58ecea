use crate::error::{Error, Result};

/// One classical fourth-order Runge-Kutta step.
///
/// `deriv(t, x, dx)` writes the state derivative into `dx`. Any non-finite
/// stage value aborts the step with [`Error::NonFinite`] at the step's start
/// time.
pub fn rk4_step<F>(deriv: F, t: f64, state: &[f64], dt: f64) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let n = state.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());

    deriv(t, state, &mut k1);
    for i in 0..n {
        tmp[i] = state[i] + 0.5 * dt * k1[i];
    }
    deriv(t + 0.5 * dt, &tmp, &mut k2);
    for i in 0..n {
        tmp[i] = state[i] + 0.5 * dt * k2[i];
    }
    deriv(t + 0.5 * dt, &tmp, &mut k3);
    for i in 0..n {
        tmp[i] = state[i] + dt * k3[i];
    }
    deriv(t + dt, &tmp, &mut k4);

    if !(finite(&k1) && finite(&k2) && finite(&k3) && finite(&k4)) {
        return Err(Error::NonFinite { t });
    }
    let next: Vec<f64> = (0..n)
        .map(|i| state[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    if !finite(&next) {
        return Err(Error::NonFinite { t });
    }
    Ok(next)
}

/// Fixed-step RK4 from `t0` over `steps` steps, returning the final state.
pub fn rk4_integrate<F>(deriv: F, t0: f64, state: &[f64], dt: f64, steps: usize) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let mut x = state.to_vec();
    for k in 0..steps {
        x = rk4_step(&deriv, t0 + k as f64 * dt, &x, dt)?;
    }
    Ok(x)
}
