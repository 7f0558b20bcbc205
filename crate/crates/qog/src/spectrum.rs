//! Laplace-domain analysis of the amplitude dynamics: isolated poles below
//! the continuum (bound states), their residue weights, the branch-cut
//! density on E > 0, and the asymptotic amplitudes they imply.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::par;
use crate::quad;
use crate::spectral::{Frequency, SpectralDensity, QUAD_REL_TOL};
use crate::volterra::ProbeConfig;

/// Bisection window below which the pole search stops (absolute, in E).
const ROOT_WIDTH: f64 = 1e-13;

/// An isolated eigenenergy below the continuum and its residue weight.
#[derive(Debug, Clone, Copy)]
pub struct BoundState {
    /// Pole position E_b < 0 in units of omega_0.
    pub energy: f64,
    /// Residue weight Z in (0, 1]: the amplitude retained at long times.
    pub weight: f64,
}

/// How many of the two modes hold a bound state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    None,
    OneBound,
    TwoBound,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::None => "none",
            Regime::OneBound => "one_bound",
            Regime::TwoBound => "two_bound",
        }
    }
}

/// Bound-state classification of a (bath, probe) configuration.
#[derive(Debug, Clone, Copy)]
pub struct RegimeReport {
    pub bound1: Option<BoundState>,
    pub bound2: Option<BoundState>,
    pub regime: Regime,
    /// Cutoff frequency above which mode 1 binds, omega_1 / (eta Gamma(s)).
    pub threshold1: f64,
    /// Cutoff frequency above which mode 2 binds, omega_2 / (eta Gamma(s)).
    pub threshold2: f64,
}

impl RegimeReport {
    /// Flat key-value rendering (the CLI's report format).
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("regime={}\n", self.regime.label()));
        out.push_str(&format!("threshold_omega_c_mode1={:.16e}\n", self.threshold1));
        out.push_str(&format!("threshold_omega_c_mode2={:.16e}\n", self.threshold2));
        for (idx, b) in [(1, &self.bound1), (2, &self.bound2)] {
            match b {
                Some(b) => {
                    out.push_str(&format!("e_b{idx}={:.16e}\n", b.energy));
                    out.push_str(&format!("z_{idx}={:.16e}\n", b.weight));
                }
                None => out.push_str(&format!("e_b{idx}=absent\nz_{idx}=absent\n")),
            }
        }
        out
    }
}

/// Self-energy function Y_l(E) = omega_l - int_0^inf J(w)/(w - E) dw, E < 0.
///
/// Decreasing in E; its fixed point is the bound-state pole.
pub fn self_energy(j: &SpectralDensity, omega_l: Frequency, e: f64) -> Result<f64> {
    if !(e < 0.0) {
        return Err(Error::domain(format!(
            "self energy is defined on E < 0 (branch cut on E >= 0; use theta_density), got {e}"
        )));
    }
    Ok(omega_l.value() - sigma_integral(j, e))
}

/// int_0^inf J(w)/(w - E) dw for E < 0 (no singularity on the path).
fn sigma_integral(j: &SpectralDensity, e: f64) -> f64 {
    if j.eta() == 0.0 {
        return 0.0;
    }
    quad::integrate_semi_infinite(|w| j.j_raw(w) / (w - e), 0.0, j.omega_c(), QUAD_REL_TOL).value
}

/// Y_l(0): closed form omega_l - eta*omega_c*Gamma(s), avoiding the endpoint
/// singularity of the quadrature for s < 1.
pub fn self_energy_at_zero(j: &SpectralDensity, omega_l: Frequency) -> f64 {
    omega_l.value() - j.total_weight()
}

/// Cutoff threshold omega_c above which the mode at omega_l binds. Infinite
/// in the decoupled limit.
pub fn binding_threshold(j: &SpectralDensity, omega_l: Frequency) -> f64 {
    let denom = j.total_weight() / j.omega_c(); // eta * Gamma(s)
    if denom == 0.0 {
        f64::INFINITY
    } else {
        omega_l.value() / denom
    }
}

/// Locate the isolated pole for one mode, if it exists.
///
/// Absent when Y_l(0) >= 0 (the threshold case counts as unbound: the weight
/// vanishes there). Otherwise the root of Y_l(E) = E is bracketed by
/// [Y_l(0), 0) and found by bisection; the residue weight follows from
/// Z = [1 + int J/(E_b - w)^2 dw]^{-1}.
pub fn find_bound_state(j: &SpectralDensity, omega_l: Frequency) -> Result<Option<BoundState>> {
    if omega_l.value() <= 0.0 {
        return Err(Error::domain(format!(
            "mode frequency must be positive, got {}",
            omega_l.value()
        )));
    }
    if j.eta() == 0.0 {
        return Ok(None);
    }
    let y0 = self_energy_at_zero(j, omega_l);
    if y0 >= 0.0 {
        return Ok(None);
    }
    let g = |e: f64| self_energy(j, omega_l, e).map(|y| y - e);

    let mut lo = y0;
    // upper end: g(-delta) < 0 unless the pole is impossibly shallow
    let mut hi = -1e-9 * j.omega_c().max(1.0);
    if hi <= lo {
        hi = lo / 2.0;
    }
    let g_lo = g(lo)?;
    let mut g_hi = g(hi)?;
    let mut shrink = 0;
    while g_hi >= 0.0 && shrink < 3 {
        hi *= 1e-3;
        g_hi = g(hi)?;
        shrink += 1;
    }
    if g_hi >= 0.0 {
        // pole within ~1e-18 of the continuum edge: treat as threshold
        return Ok(None);
    }
    if g_lo < 0.0 {
        return Err(Error::numerics(format!(
            "bound-state bracket lost its sign change (g({lo}) = {g_lo}); quadrature fault"
        )));
    }
    while hi - lo > ROOT_WIDTH {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid)? >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let energy = 0.5 * (lo + hi);
    let weight = residue_weight(j, energy)?;
    Ok(Some(BoundState { energy, weight }))
}

/// Z = [1 + int_0^inf J(w)/(E_b - w)^2 dw]^{-1}.
fn residue_weight(j: &SpectralDensity, e_b: f64) -> Result<f64> {
    let i2 = quad::integrate_semi_infinite(
        |w| {
            let d = e_b - w;
            j.j_raw(w) / (d * d)
        },
        0.0,
        j.omega_c(),
        QUAD_REL_TOL,
    )
    .value;
    let z = 1.0 / (1.0 + i2);
    if z > 0.0 && z <= 1.0 {
        Ok(z)
    } else {
        Err(Error::numerics(format!("residue weight {z} outside (0, 1]")))
    }
}

/// Classify both modes of a probe configuration.
pub fn analyze(j: &SpectralDensity, cfg: &ProbeConfig) -> Result<RegimeReport> {
    let (w1, w2) = cfg.mode_frequencies();
    let f1 = Frequency::new(w1)?;
    let f2 = Frequency::new(w2)?;
    let (b1, b2) = par::join(|| find_bound_state(j, f1), || find_bound_state(j, f2));
    let bound1 = b1?;
    let bound2 = b2?;
    let regime = match (bound1.is_some(), bound2.is_some()) {
        (false, false) => Regime::None,
        (true, true) => Regime::TwoBound,
        _ => Regime::OneBound,
    };
    Ok(RegimeReport {
        bound1,
        bound2,
        regime,
        threshold1: binding_threshold(j, f1),
        threshold2: binding_threshold(j, f2),
    })
}

/// Branch-cut spectral density Theta(E) = J(E) / ([E - w_l - Delta(E)]^2 + [pi J(E)]^2), E > 0.
pub fn theta_density(j: &SpectralDensity, omega_l: Frequency, e: f64) -> Result<f64> {
    if !(e > 0.0) {
        return Err(Error::domain(format!("theta density is defined on E > 0, got {e}")));
    }
    if j.eta() == 0.0 {
        return Ok(0.0);
    }
    let je = j.j_raw(e);
    let delta = j.lamb_shift(Frequency::new(e)?)?;
    let detune = e - omega_l.value() - delta;
    let gamma = std::f64::consts::PI * je;
    Ok(je / (detune * detune + gamma * gamma))
}

/// int_0^inf Theta(E) dE, with local refinement across the resonance band
/// around E = omega_l (panel width kappa/4) where the weak-coupling peak is
/// narrow.
pub fn integrate_theta(j: &SpectralDensity, omega_l: Frequency) -> Result<f64> {
    if j.eta() == 0.0 {
        return Ok(0.0);
    }
    let wl = omega_l.value();
    let kappa = j.decay_rate(omega_l)?.max(1e-12);
    let lo_band = (wl - 5.0 * kappa).max(1e-12);
    let hi_band = wl + 5.0 * kappa;
    let th = |e: f64| theta_density(j, omega_l, e).unwrap_or(0.0);
    // relative tolerances sized for the 1e-4 completeness target
    let mut total = quad::integrate(th, 1e-12, lo_band, 1e-7, 1e-9).value;
    let panels = 40;
    let width = (hi_band - lo_band) / panels as f64;
    for k in 0..panels {
        let a = lo_band + width * k as f64;
        total += quad::integrate(th, a, a + width, 1e-7, 1e-9).value;
    }
    total += quad::integrate_semi_infinite(th, hi_band, j.omega_c(), 1e-7).value;
    Ok(total)
}

/// Long-time amplitudes (u_1, u_2): Z_l e^{-i E_b t} per bound mode, zero for
/// unbound modes.
pub fn asymptotic_u(report: &RegimeReport, t: f64) -> (Complex64, Complex64) {
    let one = |b: &Option<BoundState>| match b {
        Some(b) => b.weight * Complex64::new(0.0, -b.energy * t).exp(),
        None => Complex64::new(0.0, 0.0),
    };
    (one(&report.bound1), one(&report.bound2))
}

/// Analytic pole gradients (d E_b1/d Omega, d E_b2/d Omega) = (Z_1, -Z_2),
/// from implicit differentiation of the pole condition. Requires both bound
/// states.
pub fn bound_state_gradient(j: &SpectralDensity, cfg: &ProbeConfig) -> Result<(f64, f64)> {
    let report = analyze(j, cfg)?;
    match (report.bound1, report.bound2) {
        (Some(b1), Some(b2)) => Ok((b1.weight, -b2.weight)),
        _ => Err(Error::regime(format!(
            "pole gradients need two bound states; regime is {}",
            report.regime.label()
        ))),
    }
}
