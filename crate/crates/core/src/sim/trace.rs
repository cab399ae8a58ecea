use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

/// Which plant produced a trace.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantMode {
    #[default]
    SmallAngleReduced,
    FullNonlinear,
}

impl PlantMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PlantMode::SmallAngleReduced => "reduced",
            PlantMode::FullNonlinear => "full",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: f64,
    pub theta_ref: f64,
    pub theta: f64,
    pub alpha: f64,
    pub theta_dot_est: f64,
    pub alpha_dot_est: f64,
    pub x0: f64,
    pub v_cmd: f64,
    pub v_sat: f64,
    pub engaged: bool,
    pub terminated: bool,
    /// Plant rates. Not part of the CSV; equal to the estimates for traces
    /// read back from disk.
    #[serde(skip)]
    pub theta_dot: f64,
    #[serde(skip)]
    pub alpha_dot: f64,
}

impl TraceRecord {
    /// Feedback error state `(x₀, θ − θ_ref, α, θ̇, α̇)` using the estimates.
    pub fn error_state(&self) -> [f64; 5] {
        [
            self.x0,
            self.theta - self.theta_ref,
            self.alpha,
            self.theta_dot_est,
            self.alpha_dot_est,
        ]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub plant: PlantMode,
    pub dt: f64,
    pub config_hash: u64,
    /// The plant ran with no applied torque at all (no motor, no disturbance).
    pub zero_input: bool,
    /// The plant ran with `b1 = b2 = 0`.
    pub frictionless: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub meta: TraceMeta,
    pub records: Vec<TraceRecord>,
}

pub const CSV_HEADER: &str =
    "t,theta_ref,theta,alpha,theta_dot_est,alpha_dot_est,x0,v_cmd,v_sat,engaged,terminated";

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn duration(&self) -> f64 {
        match (self.records.first(), self.records.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    pub fn terminated(&self) -> bool {
        self.records.iter().any(|r| r.terminated)
    }

    pub fn engagement_time(&self) -> Option<f64> {
        self.records.iter().find(|r| r.engaged).map(|r| r.t)
    }

    /// Records with `t ≤ until`.
    pub fn truncated(&self, until: f64) -> Trace {
        Trace {
            meta: self.meta.clone(),
            records: self.records.iter().take_while(|r| r.t <= until).copied().collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        let mut line = String::new();
        for r in &self.records {
            line.clear();
            for v in [
                r.t,
                r.theta_ref,
                r.theta,
                r.alpha,
                r.theta_dot_est,
                r.alpha_dot_est,
                r.x0,
                r.v_cmd,
                r.v_sat,
            ] {
                line.push_str(&format_sig9(v));
                line.push(',');
            }
            let _ = write!(line, "{},{}", r.engaged as u8, r.terminated as u8);
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii")
    }

    /// Parse a CSV written by [`Trace::write_csv`]. Metadata is not stored in
    /// the CSV and comes back as the default.
    pub fn read_csv<R: BufRead>(input: R) -> io::Result<Trace> {
        let bad = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| bad("empty trace file".into()))??;
        if header.trim() != CSV_HEADER {
            return Err(bad(format!("unexpected trace header: {header}")));
        }
        let mut records = Vec::new();
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 11 {
                return Err(bad(format!("line {}: expected 11 fields, got {}", n + 2, fields.len())));
            }
            let num = |i: usize| {
                fields[i]
                    .parse::<f64>()
                    .map_err(|e| bad(format!("line {}: field {}: {e}", n + 2, i + 1)))
            };
            let flag = |i: usize| match fields[i] {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(bad(format!("line {}: flag must be 0 or 1, got {other}", n + 2))),
            };
            let theta_dot_est = num(4)?;
            let alpha_dot_est = num(5)?;
            records.push(TraceRecord {
                t: num(0)?,
                theta_ref: num(1)?,
                theta: num(2)?,
                alpha: num(3)?,
                theta_dot_est,
                alpha_dot_est,
                x0: num(6)?,
                v_cmd: num(7)?,
                v_sat: num(8)?,
                engaged: flag(9)?,
                terminated: flag(10)?,
                theta_dot: theta_dot_est,
                alpha_dot: alpha_dot_est,
            });
        }
        Ok(Trace {
            meta: TraceMeta::default(),
            records,
        })
    }
}

/// Shortest-form rendering with 9 significant digits (like C's `%.9g`).
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let fixed = format!("{v:.decimals$}");
        trim_zeros(&fixed).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
