//! Acceptance suite: one test per exit criterion, each printing a pass line
//! with its runtime. Tolerances are pinned in the asserts.
//!
//! Run with `cargo test -p qog --test acceptance -- --nocapture` to see the
//! per-criterion lines.

use std::time::Instant;

use num_complex::Complex64;

use qog::sensitivity::{
    error_propagation, exact_sensitivity, ideal_sensitivity, local_minima_envelope,
    markovian_sensitivity, markovian_series, power_law_fit, AsymptoticSensitivity,
};
use qog::spectral::{kernel_by_quadrature, Frequency, SpectralDensity};
use qog::spectrum::{self, binding_threshold, find_bound_state, integrate_theta};
use qog::volterra::{self, ProbeConfig, TimeGrid};
use qog::{ideal_parity, parity_expectation, ParityInputs};

fn freq(v: f64) -> Frequency {
    Frequency::new(v).unwrap()
}

fn probe(omega: f64) -> ProbeConfig {
    ProbeConfig::with_photon_number(freq(1.0), freq(omega), 100.0).unwrap()
}

fn report(name: &str, started: Instant, budget_s: f64) {
    let elapsed = started.elapsed().as_secs_f64();
    println!("acceptance {name}: PASS ({elapsed:.2} s, budget {budget_s} s)");
    assert!(elapsed < budget_s, "{name} exceeded its {budget_s} s budget: {elapsed:.2} s");
}

/// Criterion 1: the exact pipeline at eta = 0 reaches the super-Heisenberg
/// minimum [2 t sqrt(N(N+2))]^{-1} at the grid point nearest Omega t = pi/4,
/// within relative 1e-6.
#[test]
fn c1_ideal_super_heisenberg_minimum() {
    let started = Instant::now();
    let n = 100.0f64;
    let om = 0.01;
    let j0 = SpectralDensity::new(0.0, 1.0, 1.0).unwrap();
    let cfg = probe(om);
    let grid = TimeGrid::new(100.0, 0.02).unwrap();
    let series = exact_sensitivity(&j0, &cfg, &grid, 1).unwrap();
    let (t_min, v_min) = series
        .defined()
        .map(|p| (p.t, p.delta_omega))
        .fold((0.0, f64::INFINITY), |acc, p| if p.1 < acc.1 { p } else { acc });
    let t_star = std::f64::consts::FRAC_PI_4 / om;
    assert!(
        (t_min - t_star).abs() <= grid.dt() / 2.0 + 1e-12,
        "minimum at t = {t_min}, expected near {t_star}"
    );
    let expect = 1.0 / (2.0 * t_min * (n * (n + 2.0)).sqrt());
    let rel = (v_min - expect).abs() / expect;
    assert!(rel < 1e-6, "min delta-Omega = {v_min} vs {expect} (rel {rel:e})");
    report("1 ideal super-Heisenberg minimum", started, 1.0);
}

/// Criterion 2: the parity bracket on lossless amplitudes reproduces the
/// closed form [1 + N(2+N)cos^2(2 Omega t)]^{-1/2} to 1e-12 on a 10x10x10
/// grid.
#[test]
fn c2_ideal_parity_closed_form() {
    let started = Instant::now();
    let mut worst = 0.0f64;
    for i in 0..10 {
        let n = 1.0 + 12.0 * i as f64;
        let r = (n / 2.0f64).sqrt().asinh();
        for k in 0..10 {
            let om = 0.003 + 0.11 * k as f64;
            for q in 0..10 {
                let t = 0.1 + 7.3 * q as f64;
                let u1 = Complex64::new(0.0, -(1.0 + om) * t).exp();
                let u2 = Complex64::new(0.0, -(1.0 - om) * t).exp();
                let v = parity_expectation(&ParityInputs::new(u1, u2, r).unwrap()).unwrap();
                let closed = ideal_parity(n, freq(om), t).unwrap();
                worst = worst.max((v - closed).abs());
            }
        }
    }
    assert!(worst < 1e-12, "worst parity deviation {worst:e}");
    report("2 ideal parity closed form", started, 1.0);
}

/// Criterion 3: Born-Markovian no-go. The closed form is validated against
/// the error-propagation oracle to relative 1e-8, the local-minima envelope
/// is U-shaped, and the global minimum matches 5.4 kappa N^{-0.23} within
/// +/- 10%.
#[test]
fn c3_markovian_no_go_minimum() {
    let started = Instant::now();
    let n = 100.0;
    let kappa = 0.2;
    let om = 1.0;
    let r = (n / 2.0f64).sqrt().asinh();

    // oracle validation of the closed form
    let mut worst = 0.0f64;
    for i in 0..60 {
        let t = 0.45 + 0.237 * i as f64;
        if (4.0 * om * t).sin().abs() < 0.05 {
            continue;
        }
        let oracle = error_propagation(
            |o: f64| {
                let u1 = (-Complex64::new(kappa, 1.0 + o) * t).exp();
                let u2 = (-Complex64::new(kappa, 1.0 - o) * t).exp();
                parity_expectation(&ParityInputs::new(u1, u2, r)?)
            },
            om,
            1e-4,
        )
        .unwrap();
        let closed = markovian_sensitivity(n, kappa, freq(om), t).unwrap();
        worst = worst.max((oracle.delta_omega - closed).abs() / closed);
    }
    assert!(worst < 1e-8, "oracle validation failed: worst rel {worst:e}");

    // envelope shape and global minimum over (0, 10/kappa]
    let times: Vec<f64> = (1..=25_000).map(|i| 0.002 * i as f64).collect();
    let series = markovian_series(n, kappa, freq(om), &times).unwrap();
    let env = local_minima_envelope(&series).unwrap();
    let vals: Vec<f64> = env.points.iter().map(|p| p.delta_omega).collect();
    let (arg_min, v_min) = vals
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    assert!(arg_min > 0 && arg_min < vals.len() - 1, "minimum sits at the envelope edge");
    assert!(vals[0] > v_min && vals[vals.len() - 1] > v_min, "envelope is not U-shaped");
    let fit_value = 5.4 * kappa * n.powf(-0.23);
    let rel = (v_min - fit_value).abs() / fit_value;
    assert!(rel < 0.10, "global min {v_min} vs fitted {fit_value} (rel {rel:.3})");
    report("3 markovian no-go minimum", started, 10.0);
}

/// Criterion 4: bound-state thresholds at eta = 0.05, s = 1, Omega = 1e-2
/// are omega_l / (eta Gamma(s)) = 19.8 and 20.2 exactly.
#[test]
fn c4_bound_state_thresholds() {
    let started = Instant::now();
    let j = SpectralDensity::new(0.05, 25.0, 1.0).unwrap();
    let cfg = probe(0.01);
    let (w1, w2) = cfg.mode_frequencies();
    let th1 = binding_threshold(&j, freq(w1));
    let th2 = binding_threshold(&j, freq(w2));
    assert!((th1 - 20.2).abs() < 1e-12, "mode-1 threshold {th1}");
    assert!((th2 - 19.8).abs() < 1e-12, "mode-2 threshold {th2}");
    report("4 bound-state thresholds", started, 0.1);
}

/// Criterion 5: steady-state plateau. For eta = 0.05, omega_c = 25, s = 1
/// the solved |u_l(500)| matches the residue weights Z_l within 2%.
#[test]
fn c5_steady_state_plateau() {
    let started = Instant::now();
    let j = SpectralDensity::new(0.05, 25.0, 1.0).unwrap();
    let cfg = probe(0.01);
    let grid = TimeGrid::auto(&j, &cfg, 500.0).unwrap();
    let traj = volterra::solve(&j, &cfg, &grid).unwrap();
    let report_ = spectrum::analyze(&j, &cfg).unwrap();
    let z1 = report_.bound1.unwrap().weight;
    let z2 = report_.bound2.unwrap().weight;
    let m1 = traj.u1.last().unwrap().norm();
    let m2 = traj.u2.last().unwrap().norm();
    assert!((m1 - z1).abs() / z1 < 0.02, "|u1(500)| = {m1} vs Z1 = {z1}");
    assert!((m2 - z2).abs() / z2 < 0.02, "|u2(500)| = {m2} vs Z2 = {z2}");
    report("5 steady-state plateau", started, 60.0);
}

/// Criterion 6: the exact-pipeline local-minima envelope matches the
/// asymptotic sensitivity within 10% over the final quarter of a t_max = 500
/// run at omega_c = 25.
#[test]
fn c6_exact_envelope_matches_asymptotic() {
    let started = Instant::now();
    let j = SpectralDensity::new(0.05, 25.0, 1.0).unwrap();
    let cfg = probe(0.01);
    let grid = TimeGrid::auto(&j, &cfg, 500.0).unwrap();
    // sample roughly every 0.2 time units
    let stride = ((0.2 / grid.dt()).round() as usize).max(1);
    let series = exact_sensitivity(&j, &cfg, &grid, stride).unwrap();
    let env = local_minima_envelope(&series).unwrap();
    let model = AsymptoticSensitivity::new(&j, &cfg).unwrap();
    let mut checked = 0;
    for p in env.points.iter().filter(|p| p.t >= 375.0) {
        let a = model.eval(p.t);
        let rel = (p.delta_omega - a).abs() / a;
        assert!(
            rel < 0.10,
            "t = {}: exact envelope {} vs asymptotic {} (rel {:.3})",
            p.t,
            p.delta_omega,
            a,
            rel
        );
        checked += 1;
    }
    assert!(checked >= 1, "no envelope nodes in the final quarter");
    report("6 exact envelope matches asymptotic", started, 300.0);
}

/// Criterion 7: the asymptotic envelope over t in [1e3, 1e4] recovers the
/// 1/t law (fitted exponent -1 +/- 0.05).
#[test]
fn c7_inverse_time_recovery() {
    let started = Instant::now();
    let j = SpectralDensity::new(0.05, 25.0, 1.0).unwrap();
    let model = AsymptoticSensitivity::new(&j, &probe(0.01)).unwrap();
    let times: Vec<f64> = (0..=36_000).map(|i| 1000.0 + 0.25 * i as f64).collect();
    let series = model.series(&times);
    let env = local_minima_envelope(&series).unwrap();
    let pts: Vec<(f64, f64)> = env.points.iter().map(|p| (p.t, p.delta_omega)).collect();
    assert!(pts.len() >= 5);
    let fit = power_law_fit(&pts).unwrap();
    assert!((fit.exponent + 1.0).abs() < 0.05, "fitted exponent {}", fit.exponent);
    report("7 inverse-time recovery", started, 10.0);
}

/// Criterion 8: the always-runnable property suite.
#[test]
fn c8_property_suite() {
    let started = Instant::now();

    // zero-coupling unitarity to 1e-8
    let j0 = SpectralDensity::new(0.0, 1.0, 1.0).unwrap();
    let grid = TimeGrid::new(100.0, 0.02).unwrap();
    let traj = volterra::solve(&j0, &probe(0.01), &grid).unwrap();
    let worst = traj
        .u1
        .iter()
        .chain(&traj.u2)
        .map(|u| (u.norm() - 1.0).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-8, "unitarity violated by {worst:e}");

    // completeness Z + int Theta = 1 to 1e-4
    let j = SpectralDensity::new(0.05, 25.0, 1.0).unwrap();
    let wl = freq(1.01);
    let b = find_bound_state(&j, wl).unwrap().unwrap();
    let total = b.weight + integrate_theta(&j, wl).unwrap();
    assert!((total - 1.0).abs() < 1e-4, "completeness sum {total}");

    // root residual < 1e-10
    let resid = (spectrum::self_energy(&j, wl, b.energy).unwrap() - b.energy).abs();
    assert!(resid < 1e-10, "root residual {resid:e}");

    // pole gradients (Z1, -Z2) vs finite differences to relative 1e-4
    let cfg = probe(0.01);
    let (g1, g2) = spectrum::bound_state_gradient(&j, &cfg).unwrap();
    let h = 1e-6;
    let eb_at = |om: f64, first: bool| {
        let c = cfg.with_omega(om).unwrap();
        let (w1, w2) = c.mode_frequencies();
        find_bound_state(&j, freq(if first { w1 } else { w2 }))
            .unwrap()
            .unwrap()
            .energy
    };
    let fd1 = (eb_at(0.01 + h, true) - eb_at(0.01 - h, true)) / (2.0 * h);
    let fd2 = (eb_at(0.01 + h, false) - eb_at(0.01 - h, false)) / (2.0 * h);
    assert!((fd1 - g1).abs() / g1.abs() < 1e-4, "fd {fd1} vs {g1}");
    assert!((fd2 - g2).abs() / g2.abs() < 1e-4, "fd {fd2} vs {g2}");

    // asymptotic form at unit weights reduces to the ideal law to 1e-10
    let n = 100.0;
    let om = 0.01;
    let model = AsymptoticSensitivity::from_parts(1.0, 1.0, 1.0 + om, 1.0 - om, 0.0, 0.0, n);
    for &t in &[0.37, 3.1, 17.0, 111.0, 431.0] {
        let a = model.eval(t);
        let id = ideal_sensitivity(n, freq(om), t);
        if a.is_finite() && id.is_finite() {
            assert!((a - id).abs() / id < 1e-10, "t={t}: {a} vs {id}");
        }
    }

    // kernel closed form vs quadrature oracle to relative 1e-8
    for &s in &[0.5, 1.0, 2.0] {
        let jk = SpectralDensity::new(0.05, 2.0, s).unwrap();
        for &x in &[0.0, 1.0, 10.0, 50.0] {
            let cf = jk.kernel(x);
            let q = kernel_by_quadrature(&jk, x, 1e-11);
            let rel = (cf - q).norm() / q.norm();
            assert!(rel < 1e-8, "kernel s={s} x={x}: rel {rel:e}");
        }
    }

    report("8 property suite", started, 30.0);
}
