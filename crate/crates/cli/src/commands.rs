use std::fmt::Display;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use pendulum_control::analysis::{boundedness_constants, cauchy_check, is_nonincreasing, verify_bounded};
use pendulum_control::lti::{
    simulate_chain, steady_state_value, synthesize_controller, ChainPlant, ChainRun, ChainTrace, DisturbanceProfile,
};
use pendulum_control::model::{augment_integral, controllability_rank, state_space, IntegralChannel};
use pendulum_control::sim::{format_sig9, run_scenario, summarize, Trace};
use pendulum_control::synthesis::{closed_loop_matrix, place_poles};
use pendulum_control::Error;

use crate::config::{to_complex, RunConfig, MAX_LTI_ORDER};
use crate::error::CliError;

type Out<'a> = &'a mut dyn Write;

fn kv(out: Out, key: &str, value: impl Display) -> Result<(), CliError> {
    writeln!(out, "{key:<30} {value}")?;
    Ok(())
}

fn complex_list(values: &[Complex64]) -> String {
    let mut v = values.to_vec();
    v.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    v.iter()
        .map(|z| {
            if z.im == 0.0 {
                format!("{:.4}", z.re)
            } else {
                format!("{:.4}{:+.4}i", z.re, z.im)
            }
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Place the requested poles and report gains, achieved eigenvalues and
/// controllability ranks.
pub fn cmd_synthesize(cfg: &RunConfig, out: Out) -> Result<(), CliError> {
    let r = cfg.reduced()?;
    let poles = cfg.poles()?;
    let (a1, u1) = state_space(&r);
    let rank4 = controllability_rank(&a1, &u1)?;
    let (a5, b5) = augment_integral(&a1, &u1, &[IntegralChannel::Theta])?;
    let rank5 = controllability_rank(&a5, &b5)?;
    let k = place_poles(&r, &poles)?;
    let cl = closed_loop_matrix(&r, &k);
    kv(out, "requested_poles", complex_list(&poles))?;
    for (i, g) in k.as_array().iter().enumerate() {
        kv(out, &format!("k{i}"), format!("{g:.4}"))?;
    }
    kv(out, "closed_loop_eigenvalues", complex_list(&cl.poles))?;
    kv(out, "ctrb_rank_4_state", format!("{rank4} of 4"))?;
    kv(out, "ctrb_rank_augmented", format!("{rank5} of 5"))?;
    Ok(())
}

/// Run the scenario, write the trace CSV and print the summary. Divergence
/// and termination still write the (partial) trace, then fail with exit 3.
pub fn cmd_simulate(cfg: &RunConfig, trace_path: &Path, out: Out) -> Result<(), CliError> {
    let sc = cfg.scenario()?;
    let (trace, failure) = match run_scenario(&sc) {
        Ok(t) => (t, None),
        Err(Error::Diverged { t, partial }) => (*partial, Some(format!("state diverged at t = {t} s"))),
        Err(e) => return Err(e.into()),
    };
    trace.write_csv(create(trace_path)?)?;

    let s = summarize(&trace);
    let deg = |x: f64| format!("{:.4} deg", x.to_degrees());
    kv(out, "plant", trace.meta.plant.as_str())?;
    kv(out, "config_hash", format!("{:016x}", trace.meta.config_hash))?;
    kv(out, "trace", trace_path.display())?;
    kv(out, "samples", trace.len())?;
    kv(out, "final_time_s", format!("{:.3}", s.final_time))?;
    match s.engagement_time {
        Some(t) => kv(out, "engaged_at_s", format!("{t:.3}"))?,
        None => kv(out, "engaged_at_s", "never")?,
    }
    kv(out, "max_abs_alpha_after_engage", deg(s.max_abs_alpha_after_engagement))?;
    kv(out, "max_abs_v_sat", format!("{:.3} V", s.max_abs_v_sat))?;
    kv(out, "terminated", s.terminated)?;
    for (i, g) in s.segments.iter().enumerate() {
        let err = g.steady_state_error.map_or_else(|| "n/a (shorter than window)".into(), deg);
        kv(
            out,
            &format!("segment_{i}"),
            format!(
                "{:.3}..{:.3} s  ref {:+.2} deg  steady_state_error {err}  max_abs_alpha {}",
                g.start,
                g.end,
                g.theta_ref.to_degrees(),
                deg(g.max_abs_alpha)
            ),
        )?;
    }
    if let Some(msg) = failure {
        return Err(CliError::Numerical(msg));
    }
    if s.terminated {
        return Err(CliError::Numerical(format!(
            "run terminated at t = {:.3} s: |theta| exceeded {:.1} deg",
            s.final_time, cfg.controller.theta_limit_deg
        )));
    }
    Ok(())
}

/// Boundedness report for the configured loop, plus bound and Cauchy checks
/// on an existing trace when one is given.
pub fn cmd_analyze(cfg: &RunConfig, trace_path: Option<&Path>, out: Out) -> Result<(), CliError> {
    let r = cfg.reduced()?;
    let k = cfg.gains()?;
    let cl = closed_loop_matrix(&r, &k);
    let z0 = match cfg.analysis.z0_norm {
        Some(z) => z,
        None => {
            let s = cfg.initial();
            let zt = s.theta - cfg.reference().value_at(0.0);
            [zt, s.alpha, s.theta_dot, s.alpha_dot].iter().map(|v| v * v).sum::<f64>().sqrt()
        }
    };
    let rep = boundedness_constants(&cl, &r, z0)?;
    kv(out, "gains", format!("{:.4?}", k.as_array()))?;
    kv(out, "closed_loop_eigenvalues", complex_list(&cl.poles))?;
    writeln!(out, "{rep}")?;

    let Some(path) = trace_path else {
        return Ok(());
    };
    let file = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let trace = Trace::read_csv(BufReader::new(file)).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    if trace.is_empty() {
        return Err(CliError::Validation("trace has no samples".into()));
    }
    match rep.gamma_star {
        Some(g) => {
            let c = verify_bounded(&trace, g);
            kv(out, "bounded_by_gamma_star", c.within)?;
            if let Some(t) = c.first_violation {
                kv(out, "first_violation_s", format!("{t:.4}"))?;
            }
            kv(out, "max_state_norm", format!("{:.6e}", c.max_norm))?;
        }
        None => kv(out, "bounded_by_gamma_star", "skipped (bound infeasible for this Z(0))")?,
    }
    let window = cfg.analysis.window;
    let table = cauchy_check(&trace, window)?;
    kv(out, "cauchy_window_s", window)?;
    kv(out, "cauchy_nonincreasing", is_nonincreasing(&table))?;
    kv(out, "cauchy_final", format!("{:.6e}", table.last().map_or(0.0, |p| p.1)))?;
    let mut next = f64::NEG_INFINITY;
    for &(t, d) in &table {
        if t >= next - 1e-9 {
            kv(out, &format!("  d(T = {t:.3} s)"), format!("{d:.6e}"))?;
            next = t + window;
        }
    }
    Ok(())
}

fn write_chain_csv(trace: &ChainTrace, w: impl Write) -> std::io::Result<()> {
    let mut w = w;
    writeln!(w, "t,x,integral,u,disturbance")?;
    for s in &trace.samples {
        writeln!(
            w,
            "{},{},{},{},{}",
            format_sig9(s.t),
            format_sig9(s.output()),
            format_sig9(s.integral),
            format_sig9(s.u),
            format_sig9(s.disturbance)
        )?;
    }
    w.flush()
}

/// Synthesize a chain-plant controller, simulate a setpoint step with the
/// configured disturbance steps, and report the final error.
pub fn cmd_lti_demo(cfg: &RunConfig, trace_path: &Path, out: Out) -> Result<(), CliError> {
    let l = &cfg.lti;
    let n = l.a.len();
    if n == 0 || n > MAX_LTI_ORDER {
        return Err(CliError::Validation(format!("lti order must be 1..={MAX_LTI_ORDER}, got {n}")));
    }
    let plant = ChainPlant::new(l.a.clone())?;
    let mut ctrl = synthesize_controller(&plant, &to_complex(&l.poles))?;
    if !l.integral {
        ctrl = ctrl.without_integral();
    }
    let dist = DisturbanceProfile::new(l.disturbance.iter().map(|&[t, a]| (t, a)).collect())?;
    let trace = simulate_chain(&plant, &ctrl, &dist, &ChainRun::new(l.setpoint, l.duration, l.dt))?;
    write_chain_csv(&trace, create(trace_path)?)?;

    let last = trace.final_output().unwrap_or(0.0);
    let err = last - l.setpoint;
    let total: f64 = dist.steps().iter().map(|s| s.1).sum();
    kv(out, "order", n)?;
    kv(out, "b0", format!("{:.6}", ctrl.integral_gain()))?;
    kv(out, "b", format!("{:.6?}", ctrl.chain_gains()))?;
    kv(out, "trace", trace_path.display())?;
    kv(out, "final_output", format!("{last:.6}"))?;
    kv(out, "final_error", format!("{err:.3e}"))?;
    match steady_state_value(&plant, &ctrl, total, l.setpoint) {
        Ok(v) => kv(out, "predicted_final_value", format!("{v:.6}"))?,
        Err(_) => kv(out, "predicted_final_value", "n/a (closed loop not Hurwitz)")?,
    }
    let verdict = if err.abs() < 1e-3 {
        "rejected (final error below 1e-3)"
    } else if ctrl.has_integral() {
        "not settled (final error above 1e-3; extend duration)"
    } else {
        "offset remains (no integral action)"
    };
    kv(out, "disturbance_rejection", verdict)?;
    Ok(())
}
