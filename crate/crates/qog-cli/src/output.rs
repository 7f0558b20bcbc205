//! Deterministic text output: CSV builders and the numeric format shared by
//! every emitted file (lower-case scientific, 17 significant digits, exact
//! f64 round trip).

use std::fmt::Write as _;

use qog::sensitivity::SensitivitySeries;
use qog::volterra::Trajectory;

pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{v:.16e}")
    }
}

pub const TRAJECTORY_HEADER: &str = "t,re_u1,im_u1,re_u2,im_u2,abs_u1,abs_u2";
pub const SENSITIVITY_HEADER: &str = "t,delta_omega,flag";
pub const SWEEP_HEADER: &str = "param,value,min_delta_omega,t_at_min,flag";

pub fn trajectory_csv(traj: &Trajectory, stride: usize) -> String {
    let stride = stride.max(1);
    let mut out = String::new();
    writeln!(out, "{TRAJECTORY_HEADER}").unwrap();
    let n = traj.grid.len();
    let mut k = 0;
    while k < n {
        let (u1, u2) = (traj.u1[k], traj.u2[k]);
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_float(traj.grid.time(k)),
            fmt_float(u1.re),
            fmt_float(u1.im),
            fmt_float(u2.re),
            fmt_float(u2.im),
            fmt_float(u1.norm()),
            fmt_float(u2.norm())
        )
        .unwrap();
        if k == n - 1 {
            break;
        }
        k = (k + stride).min(n - 1);
    }
    out
}

pub fn sensitivity_csv(series: &SensitivitySeries) -> String {
    let mut out = String::new();
    writeln!(out, "{SENSITIVITY_HEADER}").unwrap();
    for p in &series.points {
        writeln!(out, "{},{},{}", fmt_float(p.t), fmt_float(p.delta_omega), p.flag.label()).unwrap();
    }
    out
}

/// One sweep row; `flag` is empty on success and a short sanitized reason
/// otherwise.
pub struct SweepRow {
    pub param: String,
    pub value: f64,
    pub min_delta_omega: f64,
    pub t_at_min: f64,
    pub flag: String,
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    writeln!(out, "{SWEEP_HEADER}").unwrap();
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.param,
            fmt_float(r.value),
            fmt_float(r.min_delta_omega),
            fmt_float(r.t_at_min),
            sanitize(&r.flag)
        )
        .unwrap();
    }
    out
}

/// Keep flag text CSV-safe: one field, no separators or line breaks.
pub fn sanitize(msg: &str) -> String {
    msg.chars()
        .map(|c| if c == ',' || c == '\n' || c == '\r' { ';' } else { c })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for &v in &[0.2, 1.0 / 3.0, 6.02e23, -1.25e-300, 78.54] {
            let s = fmt_float(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
            assert_eq!(s, s.to_lowercase());
        }
        assert_eq!(fmt_float(f64::INFINITY), "inf");
    }

    #[test]
    fn sanitizer_strips_separators() {
        assert_eq!(sanitize("a,b\nc"), "a;b;c");
    }
}
