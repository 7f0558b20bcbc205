//! Scenario files: flat sectioned key=value text, hand-editable and
//! diff-friendly. Sections are [spectral], [probe], [grid], [run] and the
//! optional [sweep]; a [meta] section is ignored on input so a metadata
//! sidecar is itself a runnable scenario.

use std::collections::BTreeSet;
use std::fmt;

use qog::sensitivity::Provenance;
use qog::spectral::{Frequency, SpectralDensity};
use qog::volterra::ProbeConfig;

#[derive(Debug)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "scenario parse error at line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

/// Which series a run emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Emit {
    Sensitivity,
    Envelope,
    Trajectory,
}

impl Emit {
    pub fn label(&self) -> &'static str {
        match self {
            Emit::Sensitivity => "sensitivity",
            Emit::Envelope => "envelope",
            Emit::Trajectory => "trajectory",
        }
    }
}

/// A fully validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub eta: f64,
    pub omega_c: f64,
    pub s: f64,
    pub omega0: f64,
    pub omega: f64,
    /// Exactly one of (n, r) came from the file; the other is derived.
    pub n_photon: f64,
    pub squeeze: f64,
    /// Direct decay-rate override for the markovian pipeline.
    pub kappa: Option<f64>,
    pub t_max: f64,
    pub dt: Option<f64>,
    pub stride: Option<usize>,
    pub pipeline: Provenance,
    pub emit: Vec<Emit>,
    pub name: Option<String>,
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub param: String,
    pub values: Vec<f64>,
    pub at_t: Option<f64>,
    pub fit: bool,
}

/// Scalar fields a sweep may target.
pub const SWEEPABLE: &[&str] = &["eta", "omega_c", "s", "omega", "n", "r", "kappa", "t_max", "dt"];

struct RawEntry {
    section: String,
    key: String,
    value: String,
    line: usize,
    column: usize,
}

fn err(line: usize, column: usize, message: impl Into<String>) -> ParseError {
    ParseError { line, column, message: message.into() }
}

fn tokenize(text: &str) -> Result<Vec<RawEntry>, ParseError> {
    let mut entries = Vec::new();
    let mut section = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(name) = trimmed.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err(line_no, line.find('[').unwrap() + 1, "unterminated section header"))?;
            section = name.trim().to_ascii_lowercase();
            continue;
        }
        let eq = trimmed
            .find('=')
            .ok_or_else(|| err(line_no, 1, format!("expected key = value, got {trimmed:?}")))?;
        let key = trimmed[..eq].trim().to_ascii_lowercase();
        let value = trimmed[eq + 1..].trim().to_string();
        if key.is_empty() {
            return Err(err(line_no, 1, "empty key"));
        }
        if section.is_empty() {
            return Err(err(line_no, 1, format!("key {key:?} appears before any [section]")));
        }
        let column = raw.find('=').map(|p| p + 2).unwrap_or(1);
        entries.push(RawEntry { section: section.clone(), key, value, line: line_no, column });
    }
    Ok(entries)
}

fn parse_f64(e: &RawEntry) -> Result<f64, ParseError> {
    e.value
        .parse::<f64>()
        .map_err(|_| err(e.line, e.column, format!("{}.{}: not a number: {:?}", e.section, e.key, e.value)))
}

fn parse_usize(e: &RawEntry) -> Result<usize, ParseError> {
    e.value
        .parse::<usize>()
        .map_err(|_| err(e.line, e.column, format!("{}.{}: not a positive integer: {:?}", e.section, e.key, e.value)))
}

fn parse_bool(e: &RawEntry) -> Result<bool, ParseError> {
    match e.value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(err(e.line, e.column, format!("{}.{}: not a boolean: {:?}", e.section, e.key, e.value))),
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario, ParseError> {
        let entries = tokenize(text)?;

        let mut eta = None;
        let mut omega_c = None;
        let mut s_idx = None;
        let mut omega0 = None;
        let mut omega = None;
        let mut n_photon = None;
        let mut squeeze = None;
        let mut kappa = None;
        let mut t_max = None;
        let mut dt = None;
        let mut stride = None;
        let mut pipeline = None;
        let mut emit = None;
        let mut name = None;
        let mut sw_param: Option<(String, usize, usize)> = None;
        let mut sw_values = None;
        let mut sw_at_t = None;
        let mut sw_fit = false;
        let mut saw_sweep = false;

        for e in &entries {
            match (e.section.as_str(), e.key.as_str()) {
                ("spectral", "eta") => eta = Some(parse_f64(e)?),
                ("spectral", "omega_c") => omega_c = Some(parse_f64(e)?),
                ("spectral", "s") => s_idx = Some(parse_f64(e)?),
                ("probe", "omega0") => omega0 = Some(parse_f64(e)?),
                ("probe", "omega") => omega = Some(parse_f64(e)?),
                ("probe", "n") => n_photon = Some(parse_f64(e)?),
                ("probe", "r") => squeeze = Some(parse_f64(e)?),
                ("probe", "kappa") => kappa = Some(parse_f64(e)?),
                ("grid", "t_max") => t_max = Some(parse_f64(e)?),
                ("grid", "dt") => dt = Some(parse_f64(e)?),
                ("grid", "stride") => stride = Some(parse_usize(e)?),
                ("run", "pipeline") => {
                    pipeline = Some(match e.value.to_ascii_lowercase().as_str() {
                        "ideal" => Provenance::Ideal,
                        "markovian" => Provenance::Markovian,
                        "exact" => Provenance::Exact,
                        "asymptotic" => Provenance::Asymptotic,
                        other => {
                            return Err(err(
                                e.line,
                                e.column,
                                format!("unknown pipeline {other:?} (ideal|markovian|exact|asymptotic)"),
                            ))
                        }
                    })
                }
                ("run", "emit") => {
                    let mut set = BTreeSet::new();
                    for part in e.value.split(',') {
                        let p = part.trim().to_ascii_lowercase();
                        if p.is_empty() {
                            continue;
                        }
                        set.insert(match p.as_str() {
                            "sensitivity" => Emit::Sensitivity,
                            "envelope" => Emit::Envelope,
                            "trajectory" => Emit::Trajectory,
                            other => {
                                return Err(err(
                                    e.line,
                                    e.column,
                                    format!("unknown series {other:?} (sensitivity|envelope|trajectory)"),
                                ))
                            }
                        });
                    }
                    emit = Some(set.into_iter().collect::<Vec<_>>());
                }
                ("run", "name") => name = Some(e.value.clone()),
                ("sweep", "param") => {
                    saw_sweep = true;
                    sw_param = Some((e.value.to_ascii_lowercase(), e.line, e.column));
                }
                ("sweep", "values") => {
                    saw_sweep = true;
                    let mut vals = Vec::new();
                    for part in e.value.split(',') {
                        let p = part.trim();
                        if p.is_empty() {
                            continue;
                        }
                        vals.push(p.parse::<f64>().map_err(|_| {
                            err(e.line, e.column, format!("sweep.values: not a number: {p:?}"))
                        })?);
                    }
                    sw_values = Some((vals, e.line, e.column));
                }
                ("sweep", "at_t") => {
                    saw_sweep = true;
                    sw_at_t = Some(parse_f64(e)?);
                }
                ("sweep", "fit") => {
                    saw_sweep = true;
                    sw_fit = parse_bool(e)?;
                }
                ("meta", _) => {}
                (sec, key) => {
                    return Err(err(e.line, 1, format!("unknown entry {sec}.{key}")));
                }
            }
        }

        let missing = |what: &str| err(0, 0, format!("missing required entry: {what}"));
        let eta = eta.ok_or_else(|| missing("spectral.eta"))?;
        let omega_c = omega_c.ok_or_else(|| missing("spectral.omega_c"))?;
        let s_idx = s_idx.ok_or_else(|| missing("spectral.s"))?;
        let omega = omega.ok_or_else(|| missing("probe.omega"))?;
        let omega0 = omega0.unwrap_or(1.0);
        let t_max = t_max.ok_or_else(|| missing("grid.t_max"))?;
        let pipeline = pipeline.ok_or_else(|| missing("run.pipeline"))?;
        let emit = emit.unwrap_or_else(|| vec![Emit::Sensitivity]);

        let (n_photon, squeeze) = match (n_photon, squeeze) {
            (Some(_), Some(_)) => {
                return Err(err(0, 0, "probe.n and probe.r are mutually exclusive".to_string()))
            }
            (Some(n), None) => {
                if !(n >= 0.0) {
                    return Err(err(0, 0, format!("probe.n must be >= 0, got {n}")));
                }
                (n, (n / 2.0).sqrt().asinh())
            }
            (None, Some(r)) => {
                if !(r >= 0.0) {
                    return Err(err(0, 0, format!("probe.r must be >= 0, got {r}")));
                }
                (2.0 * r.sinh() * r.sinh(), r)
            }
            (None, None) => return Err(missing("probe.n or probe.r")),
        };

        let sweep = if saw_sweep {
            let (param, pl, pc) = sw_param.ok_or_else(|| missing("sweep.param"))?;
            if !SWEEPABLE.contains(&param.as_str()) {
                return Err(err(pl, pc, format!("sweep.param {param:?} is not a scalar field ({SWEEPABLE:?})")));
            }
            let (values, vl, vc) = sw_values.ok_or_else(|| missing("sweep.values"))?;
            if values.is_empty() {
                return Err(err(vl, vc, "sweep.values is empty"));
            }
            Some(SweepSpec { param, values, at_t: sw_at_t, fit: sw_fit })
        } else {
            None
        };

        let scenario = Scenario {
            eta,
            omega_c,
            s: s_idx,
            omega0,
            omega,
            n_photon,
            squeeze,
            kappa,
            t_max,
            dt,
            stride,
            pipeline,
            emit,
            name,
            sweep,
        };
        // early physical validation so a bad scenario never emits files; the
        // mode-frequency constraint only binds pipelines that evolve modes
        // (the closed-form pipelines admit Omega = omega0, e.g. kappa-driven
        // decay at unit rotation rate)
        scenario.spectral().map_err(|e| err(0, 0, e.to_string()))?;
        if !scenario.omega.is_finite() {
            return Err(err(0, 0, "probe.omega must be finite".to_string()));
        }
        if matches!(scenario.pipeline, Provenance::Exact | Provenance::Asymptotic) {
            scenario.probe().map_err(|e| err(0, 0, e.to_string()))?;
        }
        Ok(scenario)
    }

    pub fn spectral(&self) -> qog::Result<SpectralDensity> {
        SpectralDensity::new(self.eta, self.omega_c, self.s)
    }

    pub fn probe(&self) -> qog::Result<ProbeConfig> {
        ProbeConfig::with_photon_number(
            Frequency::new(self.omega0)?,
            Frequency::new(self.omega)?,
            self.n_photon,
        )
    }

    /// Set a sweepable scalar field. The (n, r) pair stays consistent.
    pub fn set_param(&self, param: &str, value: f64) -> Result<Scenario, String> {
        let mut next = self.clone();
        match param {
            "eta" => next.eta = value,
            "omega_c" => next.omega_c = value,
            "s" => next.s = value,
            "omega" => next.omega = value,
            "n" => {
                next.n_photon = value;
                next.squeeze = (value / 2.0).sqrt().asinh();
            }
            "r" => {
                next.squeeze = value;
                next.n_photon = 2.0 * value.sinh() * value.sinh();
            }
            "kappa" => next.kappa = Some(value),
            "t_max" => next.t_max = value,
            "dt" => next.dt = Some(value),
            other => return Err(format!("unknown sweep parameter {other:?}")),
        }
        Ok(next)
    }

    /// Render in scenario syntax (used verbatim as the metadata sidecar).
    pub fn render(&self, meta: &[(String, String)]) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        let f = crate::output::fmt_float;
        writeln!(out, "[spectral]").unwrap();
        writeln!(out, "eta = {}", f(self.eta)).unwrap();
        writeln!(out, "omega_c = {}", f(self.omega_c)).unwrap();
        writeln!(out, "s = {}", f(self.s)).unwrap();
        writeln!(out, "\n[probe]").unwrap();
        writeln!(out, "omega0 = {}", f(self.omega0)).unwrap();
        writeln!(out, "omega = {}", f(self.omega)).unwrap();
        writeln!(out, "n = {}", f(self.n_photon)).unwrap();
        if let Some(k) = self.kappa {
            writeln!(out, "kappa = {}", f(k)).unwrap();
        }
        writeln!(out, "\n[grid]").unwrap();
        writeln!(out, "t_max = {}", f(self.t_max)).unwrap();
        if let Some(dt) = self.dt {
            writeln!(out, "dt = {}", f(dt)).unwrap();
        }
        if let Some(st) = self.stride {
            writeln!(out, "stride = {st}").unwrap();
        }
        writeln!(out, "\n[run]").unwrap();
        writeln!(out, "pipeline = {}", self.pipeline.label()).unwrap();
        let emits: Vec<&str> = self.emit.iter().map(|e| e.label()).collect();
        writeln!(out, "emit = {}", emits.join(", ")).unwrap();
        if let Some(n) = &self.name {
            writeln!(out, "name = {n}").unwrap();
        }
        if let Some(sw) = &self.sweep {
            writeln!(out, "\n[sweep]").unwrap();
            writeln!(out, "param = {}", sw.param).unwrap();
            let vals: Vec<String> = sw.values.iter().map(|&v| f(v)).collect();
            writeln!(out, "values = {}", vals.join(", ")).unwrap();
            if let Some(t) = sw.at_t {
                writeln!(out, "at_t = {}", f(t)).unwrap();
            }
            if sw.fit {
                writeln!(out, "fit = true").unwrap();
            }
        }
        if !meta.is_empty() {
            writeln!(out, "\n[meta]").unwrap();
            for (k, v) in meta {
                writeln!(out, "{k} = {v}").unwrap();
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "\
[spectral]
eta = 0.05
omega_c = 25
s = 1

[probe]
omega = 1e-2
n = 100

[grid]
t_max = 500

[run]
pipeline = exact
emit = sensitivity, envelope
";

    #[test]
    fn parses_a_complete_scenario() {
        let sc = Scenario::parse(GOOD).unwrap();
        assert_eq!(sc.pipeline, Provenance::Exact);
        assert_eq!(sc.emit, vec![Emit::Sensitivity, Emit::Envelope]);
        assert!((sc.squeeze - (50.0f64).sqrt().asinh()).abs() < 1e-12);
        assert!(sc.sweep.is_none());
    }

    #[test]
    fn rejects_malformed_lines_with_position() {
        let bad = GOOD.replace("omega_c = 25", "omega_c 25");
        let e = Scenario::parse(&bad).unwrap_err();
        assert_eq!(e.line, 3);
        let bad = GOOD.replace("eta = 0.05", "eta = zero point five");
        let e = Scenario::parse(&bad).unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.column > 1);
    }

    #[test]
    fn rejects_unknown_keys_and_sections() {
        let bad = format!("{GOOD}\n[spectral]\ncutoff = 3\n");
        assert!(Scenario::parse(&bad).is_err());
        let bad = format!("{GOOD}\nstray = 1\n");
        // key lands in [run]; unknown there
        assert!(Scenario::parse(&bad).is_err());
    }

    #[test]
    fn rejects_inconsistent_probe() {
        let bad = GOOD.replace("n = 100", "n = 100\nr = 1.0");
        assert!(Scenario::parse(&bad).is_err());
        let bad = GOOD.replace("omega = 1e-2", "omega = 1.5");
        assert!(Scenario::parse(&bad).is_err(), "mode frequency w0 - Omega <= 0 must fail");
    }

    #[test]
    fn sweep_spec_round_trip() {
        let text = format!("{GOOD}\n[sweep]\nparam = omega_c\nvalues = 2, 20, 25\nfit = true\n");
        let sc = Scenario::parse(&text).unwrap();
        let sw = sc.sweep.as_ref().unwrap();
        assert_eq!(sw.param, "omega_c");
        assert_eq!(sw.values, vec![2.0, 20.0, 25.0]);
        assert!(sw.fit);
        let rendered = sc.render(&[("tool_version".into(), "x".into())]);
        let back = Scenario::parse(&rendered).unwrap();
        assert_eq!(back.sweep.as_ref().unwrap().values, sw.values);
        assert_eq!(back.n_photon, sc.n_photon);
    }

    #[test]
    fn sweep_param_must_be_scalar_field() {
        let text = format!("{GOOD}\n[sweep]\nparam = pipeline\nvalues = 1\n");
        assert!(Scenario::parse(&text).is_err());
    }
}
