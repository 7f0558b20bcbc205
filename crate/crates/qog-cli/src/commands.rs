//! Subcommand implementations. All numeric output flows through
//! [`crate::output`]; every file is assembled in memory first so a failing
//! run never leaves partial CSVs behind.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use qog::par;
use qog::sensitivity::{
    exact_sensitivity, ideal_series, local_minima_envelope, markovian_series, power_law_fit,
    AsymptoticSensitivity, Provenance, SensitivitySeries,
};
use qog::spectral::{kernel_by_quadrature, Frequency, SpectralDensity};
use qog::spectrum;
use qog::volterra::{self, TimeGrid, Trajectory};

use crate::output::{self, fmt_float, SweepRow};
use crate::scenario::{Emit, Scenario, SweepSpec};
use crate::CliError;

/// Default number of emitted series rows when no grid step / stride is given.
const TARGET_SAMPLES: usize = 20_000;

/// End-state tolerance for the exact-pipeline grid-convergence probe.
const CONVERGENCE_TOL: f64 = 1e-5;

pub struct RunOptions {
    pub out_dir: PathBuf,
    pub workers: Option<usize>,
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
}

/// A produced file, held in memory until the whole command has succeeded.
struct Artifact {
    path: PathBuf,
    contents: String,
}

fn write_all(artifacts: &[Artifact]) -> Result<(), CliError> {
    for a in artifacts {
        if let Some(dir) = a.path.parent() {
            fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        }
        fs::write(&a.path, &a.contents)
            .map_err(|e| CliError::Io(format!("{}: {e}", a.path.display())))?;
    }
    Ok(())
}

fn load_scenario(path: &Path, opts: &RunOptions) -> Result<(Scenario, String), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut sc = Scenario::parse(&text).map_err(|e| CliError::Parse(e.to_string()))?;
    if let Some(dt) = opts.dt {
        sc.dt = Some(dt);
    }
    if let Some(tm) = opts.t_max {
        sc.t_max = tm;
    }
    let stem = sc
        .name
        .clone()
        .unwrap_or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "scenario".into()));
    Ok((sc, stem))
}

/// Everything the sidecar reports about how one series was produced.
struct GridReport {
    dt: f64,
    steps: usize,
    stride: usize,
    memory_depth: Option<usize>,
    end_state_delta: Option<f64>,
}

impl GridReport {
    fn render(&self) -> String {
        let mut s = format!("dt:{} steps:{} stride:{}", fmt_float(self.dt), self.steps, self.stride);
        if let Some(m) = self.memory_depth {
            write!(s, " memory_depth:{m}").unwrap();
        }
        if let Some(d) = self.end_state_delta {
            write!(s, " halved_dt_end_state_delta:{}", fmt_float(d)).unwrap();
        }
        s
    }
}

struct SeriesBundle {
    series: SensitivitySeries,
    trajectory: Option<Trajectory>,
    report: GridReport,
}

/// Uniform sample times 0, dt_s, ..., t_max for the closed-form pipelines.
fn sample_times(sc: &Scenario) -> (Vec<f64>, f64) {
    let dt = sc.dt.unwrap_or(sc.t_max / TARGET_SAMPLES as f64);
    let steps = (sc.t_max / dt).round().max(1.0) as usize;
    ((0..=steps).map(|i| dt * i as f64).collect(), dt)
}

fn markovian_kappa(sc: &Scenario) -> Result<f64, CliError> {
    match sc.kappa {
        Some(k) if k >= 0.0 && k.is_finite() => Ok(k),
        Some(k) => Err(CliError::Parse(format!("probe.kappa must be >= 0, got {k}"))),
        None => {
            let j = sc.spectral()?;
            Ok(j.decay_rate(Frequency::new(sc.omega0)?)?)
        }
    }
}

fn produce(sc: &Scenario, want_trajectory: bool) -> Result<SeriesBundle, CliError> {
    let j = sc.spectral()?;
    match sc.pipeline {
        Provenance::Ideal => {
            let (times, dt) = sample_times(sc);
            let series = ideal_series(sc.n_photon, Frequency::new(sc.omega)?, &times)?;
            Ok(SeriesBundle {
                series,
                trajectory: None,
                report: GridReport { dt, steps: times.len() - 1, stride: 1, memory_depth: None, end_state_delta: None },
            })
        }
        Provenance::Markovian => {
            let kappa = markovian_kappa(sc)?;
            let (times, dt) = sample_times(sc);
            let series = markovian_series(sc.n_photon, kappa, Frequency::new(sc.omega)?, &times)?;
            Ok(SeriesBundle {
                series,
                trajectory: None,
                report: GridReport { dt, steps: times.len() - 1, stride: 1, memory_depth: None, end_state_delta: None },
            })
        }
        Provenance::Asymptotic => {
            let model = AsymptoticSensitivity::new(&j, &sc.probe()?)?;
            let (times, dt) = sample_times(sc);
            let series = model.series(&times);
            Ok(SeriesBundle {
                series,
                trajectory: None,
                report: GridReport { dt, steps: times.len() - 1, stride: 1, memory_depth: None, end_state_delta: None },
            })
        }
        Provenance::Exact => {
            let cfg = sc.probe()?;
            let grid = match sc.dt {
                Some(dt) => TimeGrid::new(sc.t_max, dt)?,
                None => TimeGrid::auto(&j, &cfg, sc.t_max)?,
            };
            let stride = sc.stride.unwrap_or_else(|| (grid.steps() / TARGET_SAMPLES).max(1));
            // grid-convergence probe: the same end state on a twice-coarser
            // grid; for a second-order stepper the fine-grid error is about a
            // third of the reported delta
            let fine = volterra::solve(&j, &cfg, &grid)?;
            let coarse_grid = TimeGrid::new(grid.t_max(), grid.dt() * 2.0)?;
            let coarse = volterra::solve(&j, &cfg, &coarse_grid)?;
            let scale = fine
                .u1
                .last()
                .unwrap()
                .norm()
                .max(fine.u2.last().unwrap().norm())
                .max(1e-30);
            let delta = ((coarse.u1.last().unwrap() - fine.u1.last().unwrap()).norm())
                .max((coarse.u2.last().unwrap() - fine.u2.last().unwrap()).norm())
                / scale;
            drop(coarse);
            if delta > 3.0 * CONVERGENCE_TOL {
                eprintln!(
                    "notice: end-state delta {delta:.2e} between dt and 2dt grids; consider --dt {}",
                    fmt_float(grid.dt() / 2.0)
                );
            }
            let series = exact_sensitivity(&j, &cfg, &grid, stride)?;
            Ok(SeriesBundle {
                series,
                trajectory: if want_trajectory { Some(fine) } else { None },
                report: GridReport {
                    dt: grid.dt(),
                    steps: grid.steps(),
                    stride,
                    memory_depth: Some(volterra::memory_depth(&j, &grid)),
                    end_state_delta: Some(delta),
                },
            })
        }
    }
}

fn emit_bundle(
    sc: &Scenario,
    bundle: &SeriesBundle,
    out_dir: &Path,
    stem: &str,
    suffix: &str,
    artifacts: &mut Vec<Artifact>,
) -> Result<(), CliError> {
    for e in &sc.emit {
        let path = out_dir.join(format!("{stem}_{}{suffix}.csv", e.label()));
        let contents = match e {
            Emit::Sensitivity => output::sensitivity_csv(&bundle.series),
            Emit::Envelope => {
                let env = local_minima_envelope(&bundle.series)?;
                if env.points.is_empty() {
                    eprintln!("notice: {stem}{suffix}: no local minima found; envelope CSV is empty");
                }
                output::sensitivity_csv(&env)
            }
            Emit::Trajectory => {
                let traj = bundle.trajectory.as_ref().ok_or_else(|| {
                    CliError::Parse("emit = trajectory requires pipeline = exact".to_string())
                })?;
                output::trajectory_csv(traj, bundle.report.stride)
            }
        };
        artifacts.push(Artifact { path, contents });
    }
    Ok(())
}

pub fn cmd_run(scenario_path: &Path, opts: &RunOptions) -> Result<(), CliError> {
    let (sc, stem) = load_scenario(scenario_path, opts)?;
    let want_traj = sc.emit.contains(&Emit::Trajectory);
    if want_traj && sc.pipeline != Provenance::Exact {
        return Err(CliError::Parse("emit = trajectory requires pipeline = exact".to_string()));
    }
    let mut artifacts = Vec::new();
    let mut meta: Vec<(String, String)> = vec![
        ("tool".into(), "qog".into()),
        ("tool_version".into(), env!("CARGO_PKG_VERSION").into()),
    ];
    par::with_workers(opts.workers, || -> Result<(), CliError> {
        match &sc.sweep {
            None => {
                let bundle = produce(&sc, want_traj)?;
                emit_bundle(&sc, &bundle, &opts.out_dir, &stem, "", &mut artifacts)?;
                meta.push(("grid_report".into(), bundle.report.render()));
                Ok(())
            }
            Some(sw) => {
                let variants: Vec<(usize, Scenario)> = sw
                    .values
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| sc.set_param(&sw.param, v).map(|s| (i, s)))
                    .collect::<Result<_, _>>()
                    .map_err(CliError::Parse)?;
                let bundles = par::map(&variants, |(_, sc_i)| produce(sc_i, want_traj));
                for ((idx, sc_i), bundle) in variants.iter().zip(bundles) {
                    let bundle = bundle?;
                    let suffix = format!("_{}-{idx}", sw.param);
                    emit_bundle(sc_i, &bundle, &opts.out_dir, &stem, &suffix, &mut artifacts)?;
                    meta.push((format!("grid_report_{}_{idx}", sw.param), bundle.report.render()));
                }
                Ok(())
            }
        }
    })?;
    // record the resolved stem so re-running the sidecar reproduces the
    // exact same file set
    let mut echo = sc.clone();
    echo.name = Some(stem.clone());
    artifacts.push(Artifact {
        path: opts.out_dir.join(format!("{stem}_meta.txt")),
        contents: echo.render(&meta),
    });
    write_all(&artifacts)?;
    for a in &artifacts {
        println!("wrote {}", a.path.display());
    }
    Ok(())
}

pub struct SpectrumArgs {
    pub eta: f64,
    pub s: f64,
    pub omega: f64,
    pub omega_c: Option<f64>,
    pub omega0: f64,
}

pub fn cmd_spectrum(args: &SpectrumArgs) -> Result<(), CliError> {
    let cfg = qog::volterra::ProbeConfig::with_photon_number(
        Frequency::new(args.omega0)?,
        Frequency::new(args.omega)?,
        0.0,
    )?;
    match args.omega_c {
        Some(wc) => {
            let j = SpectralDensity::new(args.eta, wc, args.s)?;
            let report = spectrum::analyze(&j, &cfg)?;
            print!("{}", report.render());
        }
        None => {
            // thresholds w_l / (eta Gamma(s)) are cutoff-independent
            let j = SpectralDensity::new(args.eta, 1.0, args.s)?;
            let (w1, w2) = cfg.mode_frequencies();
            if args.eta == 0.0 {
                println!("regime=none");
            }
            println!("threshold_omega_c_mode1={}", fmt_float(spectrum::binding_threshold(&j, Frequency::new(w1)?)));
            println!("threshold_omega_c_mode2={}", fmt_float(spectrum::binding_threshold(&j, Frequency::new(w2)?)));
        }
    }
    Ok(())
}

pub struct SweepArgs {
    pub param: Option<String>,
    pub values: Option<String>,
    pub at_t: Option<f64>,
    pub fit: bool,
}

/// One sweep point: global minimum of the local-minima envelope, or the
/// envelope node nearest `at_t`.
fn sweep_point(sc: &Scenario, at_t: Option<f64>) -> Result<(f64, f64), CliError> {
    let series = match at_t {
        None => produce(sc, false)?.series,
        Some(t_at) => {
            if !(t_at > 0.0) {
                return Err(CliError::Parse(format!("at_t must be > 0, got {t_at}")));
            }
            match sc.pipeline {
                Provenance::Exact => {
                    let mut sc2 = sc.clone();
                    sc2.t_max = t_at;
                    produce(&sc2, false)?.series
                }
                _ => {
                    // closed-form pipelines: sample a trailing window
                    let lo = 0.9 * t_at;
                    let n = 4000;
                    let times: Vec<f64> =
                        (0..=n).map(|i| lo + (t_at - lo) * i as f64 / n as f64).collect();
                    match sc.pipeline {
                        Provenance::Ideal => ideal_series(sc.n_photon, Frequency::new(sc.omega)?, &times)?,
                        Provenance::Markovian => markovian_series(
                            sc.n_photon,
                            markovian_kappa(sc)?,
                            Frequency::new(sc.omega)?,
                            &times,
                        )?,
                        Provenance::Asymptotic => {
                            AsymptoticSensitivity::new(&sc.spectral()?, &sc.probe()?)?.series(&times)
                        }
                        Provenance::Exact => unreachable!(),
                    }
                }
            }
        }
    };
    let env = local_minima_envelope(&series)?;
    if env.points.is_empty() {
        return Err(CliError::Qog(qog::Error::Regime("no local minima in the sweep window".into())));
    }
    match at_t {
        Some(t_at) => {
            let p = env
                .points
                .iter()
                .min_by(|a, b| (a.t - t_at).abs().partial_cmp(&(b.t - t_at).abs()).unwrap())
                .unwrap();
            Ok((p.delta_omega, p.t))
        }
        None => {
            // the markovian search window is capped at 10/kappa, where the
            // divergent tail takes over
            let t_cap = if sc.pipeline == Provenance::Markovian {
                let kappa = markovian_kappa(sc)?;
                if kappa > 0.0 { 10.0 / kappa } else { f64::INFINITY }
            } else {
                f64::INFINITY
            };
            let best = env
                .points
                .iter()
                .filter(|p| p.t <= t_cap)
                .map(|p| (p.delta_omega, p.t))
                .fold((f64::INFINITY, 0.0), |acc, p| if p.0 < acc.0 { p } else { acc });
            if best.0.is_finite() {
                Ok(best)
            } else {
                Err(CliError::Qog(qog::Error::Regime("no envelope node inside the search window".into())))
            }
        }
    }
}

pub fn cmd_sweep(scenario_path: &Path, args: &SweepArgs, opts: &RunOptions) -> Result<(), CliError> {
    let (mut sc, stem) = load_scenario(scenario_path, opts)?;
    // CLI flags supply or override the [sweep] section
    let from_file = sc.sweep.clone();
    let param = args
        .param
        .clone()
        .or_else(|| from_file.as_ref().map(|s| s.param.clone()))
        .ok_or_else(|| CliError::Parse("sweep needs --param or a [sweep] section".into()))?;
    if !crate::scenario::SWEEPABLE.contains(&param.as_str()) {
        return Err(CliError::Parse(format!("sweep parameter {param:?} is not a scalar field")));
    }
    let values: Vec<f64> = match &args.values {
        Some(list) => list
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| p.trim().parse::<f64>().map_err(|_| CliError::Parse(format!("--values: not a number: {p:?}"))))
            .collect::<Result<_, _>>()?,
        None => from_file.as_ref().map(|s| s.values.clone()).unwrap_or_default(),
    };
    if values.is_empty() {
        return Err(CliError::Parse("sweep needs a non-empty value list".into()));
    }
    let at_t = args.at_t.or(from_file.as_ref().and_then(|s| s.at_t));
    let fit = args.fit || from_file.as_ref().map(|s| s.fit).unwrap_or(false);
    sc.sweep = Some(SweepSpec { param: param.clone(), values: values.clone(), at_t, fit });

    let rows: Vec<SweepRow> = par::with_workers(opts.workers, || {
        par::map(&values, |&v| match sc
            .set_param(&param, v)
            .map_err(CliError::Parse)
            .and_then(|sc_i| sweep_point(&sc_i, at_t))
        {
            Ok((min, t_at)) => SweepRow {
                param: param.clone(),
                value: v,
                min_delta_omega: min,
                t_at_min: t_at,
                flag: String::new(),
            },
            Err(e) => SweepRow {
                param: param.clone(),
                value: v,
                min_delta_omega: f64::NAN,
                t_at_min: f64::NAN,
                flag: e.to_string(),
            },
        })
    });

    let mut rows = rows;
    let mut fit_file: Option<String> = None;
    if fit {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.flag.is_empty() && r.min_delta_omega.is_finite())
            .map(|r| (r.value, r.min_delta_omega))
            .collect();
        let fit_res = power_law_fit(&pts)?;
        rows.push(SweepRow {
            param: "fit".into(),
            value: fit_res.exponent,
            min_delta_omega: fit_res.prefactor,
            t_at_min: fit_res.residual,
            flag: "fit".into(),
        });
        fit_file = Some(fit_res.render());
    }

    let mut artifacts = vec![Artifact {
        path: opts.out_dir.join(format!("{stem}_sweep.csv")),
        contents: output::sweep_csv(&rows),
    }];
    if let Some(f) = fit_file {
        artifacts.push(Artifact { path: opts.out_dir.join(format!("{stem}_fit.txt")), contents: f });
    }
    let meta = vec![
        ("tool".into(), "qog".into()),
        ("tool_version".into(), env!("CARGO_PKG_VERSION").into()),
    ];
    artifacts.push(Artifact {
        path: opts.out_dir.join(format!("{stem}_meta.txt")),
        contents: sc.render(&meta),
    });
    write_all(&artifacts)?;
    for a in &artifacts {
        println!("wrote {}", a.path.display());
    }
    Ok(())
}

pub struct KernelCheckArgs {
    pub eta: f64,
    pub omega_c: f64,
    pub s: f64,
    pub x_max: f64,
    pub points: usize,
    pub rel_tol: f64,
}

pub fn cmd_kernel_check(args: &KernelCheckArgs) -> Result<(), CliError> {
    let j = SpectralDensity::new(args.eta, args.omega_c, args.s)?;
    if args.points < 2 || !(args.x_max > 0.0) {
        return Err(CliError::Parse("kernel-check needs --points >= 2 and --x-max > 0".into()));
    }
    let mut worst = 0.0f64;
    println!("x,closed_re,closed_im,quad_re,quad_im,rel_deviation");
    for i in 0..args.points {
        let x = args.x_max * i as f64 / (args.points - 1) as f64;
        let closed = j.kernel(x);
        let quad = kernel_by_quadrature(&j, x, args.rel_tol * 1e-2);
        let rel = (closed - quad).norm() / quad.norm().max(1e-300);
        worst = worst.max(rel);
        println!(
            "{},{},{},{},{},{}",
            fmt_float(x),
            fmt_float(closed.re),
            fmt_float(closed.im),
            fmt_float(quad.re),
            fmt_float(quad.im),
            fmt_float(rel)
        );
    }
    println!("max_rel_deviation={}", fmt_float(worst));
    if worst <= args.rel_tol {
        Ok(())
    } else {
        Err(CliError::Qog(qog::Error::Numerics(format!(
            "kernel closed form deviates from quadrature by {worst:e} (tolerance {:e})",
            args.rel_tol
        ))))
    }
}
