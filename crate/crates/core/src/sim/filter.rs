use serde::{Deserialize, Serialize};

/// First-order low-pass applied to a finite-difference derivative.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DerivativeFilter {
    prev: Option<f64>,
    estimate: f64,
}

impl DerivativeFilter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn estimate(&self) -> f64 {
        self.estimate
    }
}

/// Advance the filter by one sample of `raw` taken `dt` after the previous.
///
/// `est ← est + dt·ω_c·((raw − prev)/dt − est)`. The first sample only seeds
/// `prev` and leaves the estimate at zero.
pub fn filtered_derivative_update(filter: DerivativeFilter, raw: f64, dt: f64, cutoff: f64) -> (DerivativeFilter, f64) {
    debug_assert!(cutoff > 0.0 && dt > 0.0);
    let estimate = match filter.prev {
        None => filter.estimate,
        Some(prev) => {
            let slope = (raw - prev) / dt;
            filter.estimate + dt * cutoff * (slope - filter.estimate)
        }
    };
    (
        DerivativeFilter {
            prev: Some(raw),
            estimate,
        },
        estimate,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const WC: f64 = 20.0 * PI;
    const DT: f64 = 1e-3;

    fn run(signal: impl Fn(f64) -> f64, seconds: f64) -> Vec<(f64, f64)> {
        let mut f = DerivativeFilter::new();
        let n = (seconds / DT).round() as usize;
        (0..=n)
            .map(|k| {
                let t = k as f64 * DT;
                let (next, est) = filtered_derivative_update(f, signal(t), DT, WC);
                f = next;
                (t, est)
            })
            .collect()
    }

    #[test]
    fn constant_input_gives_zero_rate() {
        assert!(run(|_| 0.3, 1.0).iter().all(|&(_, e)| e == 0.0));
    }

    #[test]
    fn estimate_decays_after_input_stops_moving() {
        let out = run(|t| if t < 0.5 { t } else { 0.5 }, 1.5);
        assert!(out.last().unwrap().1.abs() < 1e-6);
    }

    #[test]
    fn ramp_slope_is_recovered() {
        // first-order step response: 1 − e^{−ω_c t} ≥ 0.993 after 5/ω_c
        let m = 2.5;
        let out = run(|t| m * t, 5.0 / WC + 0.01);
        let (_, est) = *out.last().unwrap();
        assert!((est - m).abs() < 0.01 * m, "{est}");
    }

    #[test]
    fn corner_frequency_attenuation() {
        // sin(ω_c t) has derivative amplitude ω_c; the filter passes 1/√2 of it
        let out = run(|t| (WC * t).sin(), 3.0);
        let tail = out.iter().filter(|(t, _)| *t > 2.0).map(|(_, e)| e.abs()).fold(0.0, f64::max);
        let ratio = tail / WC;
        assert!((ratio - 0.5f64.sqrt()).abs() < 0.05 * 0.5f64.sqrt(), "{ratio}");
    }
}
