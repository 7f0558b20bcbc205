//! Ohmic-family spectral density and the bath quantities derived from it:
//! the correlation kernel f(x), the decay rate, the principal-value frequency
//! shift, and the total coupling weight that controls bound-state formation.
//!
//! Natural units throughout: the probe carrier frequency defines the unit
//! (omega_0 = 1), times are measured in 1/omega_0.

use num_complex::Complex64;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quad;

/// Relative tolerance for the semi-infinite bath integrals.
pub(crate) const QUAD_REL_TOL: f64 = 1e-10;

/// Agreement threshold for the principal-value window-halving loop.
const PV_WINDOW_TOL: f64 = 1e-9;

/// A frequency in units of omega_0. Always finite.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Frequency(f64);

impl Frequency {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() {
            Ok(Frequency(value))
        } else {
            Err(Error::domain(format!("frequency must be finite, got {value}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Frequency {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Frequency::new(value)
    }
}

/// Bath spectral density J(w) = eta * w^s * wc^(1-s) * exp(-w/wc).
///
/// `eta` is the dimensionless coupling (eta = 0 is the decoupled ideal
/// limit), `omega_c` the cutoff frequency and `s` the Ohmicity index.
#[derive(Debug, Clone, Copy)]
pub struct SpectralDensity {
    eta: f64,
    omega_c: f64,
    s: f64,
    gamma_s: f64,
    gamma_s1: f64,
}

impl SpectralDensity {
    pub fn new(eta: f64, omega_c: f64, s: f64) -> Result<Self> {
        if !eta.is_finite() || eta < 0.0 {
            return Err(Error::domain(format!("coupling eta must be >= 0, got {eta}")));
        }
        if !omega_c.is_finite() || omega_c <= 0.0 {
            return Err(Error::domain(format!("cutoff omega_c must be > 0, got {omega_c}")));
        }
        if !s.is_finite() || s <= 0.0 {
            return Err(Error::domain(format!("Ohmicity index s must be > 0, got {s}")));
        }
        Ok(SpectralDensity {
            eta,
            omega_c,
            s,
            gamma_s: gamma(s),
            gamma_s1: gamma(s + 1.0),
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn omega_c(&self) -> f64 {
        self.omega_c
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// J at a raw (already validated) frequency.
    pub(crate) fn j_raw(&self, omega: f64) -> f64 {
        if self.eta == 0.0 || omega == 0.0 {
            return 0.0;
        }
        self.eta * omega.powf(self.s) * self.omega_c.powf(1.0 - self.s) * (-omega / self.omega_c).exp()
    }

    /// dJ/dw, used to regularize the principal-value integrand at w = w_l.
    fn j_prime(&self, omega: f64) -> f64 {
        if self.eta == 0.0 {
            return 0.0;
        }
        self.eta
            * self.omega_c.powf(1.0 - self.s)
            * (-omega / self.omega_c).exp()
            * (self.s * omega.powf(self.s - 1.0) - omega.powf(self.s) / self.omega_c)
    }

    /// Evaluate J(omega). Requires omega >= 0.
    pub fn evaluate(&self, omega: Frequency) -> Result<f64> {
        let w = omega.value();
        if w < 0.0 {
            return Err(Error::domain(format!("spectral density requires omega >= 0, got {w}")));
        }
        Ok(self.j_raw(w))
    }

    /// Environmental correlation kernel f(x) = int_0^inf J(w) e^{-iwx} dw.
    ///
    /// Closed form eta * Gamma(s+1) * wc^2 / (1 + i*wc*x)^(s+1), principal
    /// branch. This is the production path; [`kernel_by_quadrature`] is the
    /// independent check.
    pub fn kernel(&self, x: f64) -> Complex64 {
        if self.eta == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let amp = self.eta * self.gamma_s1 * self.omega_c * self.omega_c;
        let base = Complex64::new(1.0, self.omega_c * x);
        amp * base.powf(-(self.s + 1.0))
    }

    /// Weak-coupling decay rate kappa = pi * J(omega_l). Requires omega_l > 0.
    pub fn decay_rate(&self, omega_l: Frequency) -> Result<f64> {
        let w = omega_l.value();
        if w <= 0.0 {
            return Err(Error::domain(format!("decay rate requires omega_l > 0, got {w}")));
        }
        Ok(std::f64::consts::PI * self.j_raw(w))
    }

    /// Principal-value frequency shift Delta(w_l) = P int_0^inf J(w)/(w_l - w) dw.
    ///
    /// Split at w_l: the symmetric window around the pole integrates the
    /// regular remainder [J(w) - J(w_l)]/(w_l - w) (the subtracted singular
    /// part cancels by symmetry); the window half-width is halved until two
    /// successive results agree.
    pub fn lamb_shift(&self, omega_l: Frequency) -> Result<f64> {
        let wl = omega_l.value();
        if wl <= 0.0 {
            return Err(Error::domain(format!("lamb shift requires omega_l > 0, got {wl}")));
        }
        if self.eta == 0.0 {
            return Ok(0.0);
        }
        let mut w = wl.min(self.omega_c) / 2.0;
        let mut prev = self.lamb_shift_with_window(wl, w);
        for _ in 0..30 {
            w *= 0.5;
            let cur = self.lamb_shift_with_window(wl, w);
            if (cur - prev).abs() <= PV_WINDOW_TOL * cur.abs().max(1.0) {
                return Ok(cur);
            }
            prev = cur;
        }
        Err(Error::numerics(format!(
            "principal-value window failed to converge at omega_l = {wl}"
        )))
    }

    fn lamb_shift_with_window(&self, wl: f64, w: f64) -> f64 {
        let jp = self.j_prime(wl);
        let near = 1e-9 * wl.max(1.0);
        let left = quad::integrate(|om| self.j_raw(om) / (wl - om), 0.0, wl - w, QUAD_REL_TOL, 0.0);
        let window = quad::integrate(
            |om| {
                let d = wl - om;
                if d.abs() < near {
                    -jp
                } else {
                    (self.j_raw(om) - self.j_raw(wl)) / d
                }
            },
            wl - w,
            wl + w,
            QUAD_REL_TOL,
            1e-14,
        );
        let right =
            quad::integrate_semi_infinite(|om| self.j_raw(om) / (wl - om), wl + w, self.omega_c, QUAD_REL_TOL);
        left.value + window.value + right.value
    }

    /// Total coupling weight int_0^inf J(w)/w dw = eta * wc * Gamma(s).
    ///
    /// The bound-state existence condition is omega_l < total_weight.
    pub fn total_weight(&self) -> f64 {
        self.eta * self.omega_c * self.gamma_s
    }

    /// Integral of J itself, int_0^inf J dw = eta * Gamma(s+1) * wc^2 = f(0).
    pub fn integral(&self) -> f64 {
        self.eta * self.gamma_s1 * self.omega_c * self.omega_c
    }
}

/// Quadrature evaluation of the correlation kernel, with explicit handling of
/// the e^{-iwx} oscillation: the half-line is cut into half-period segments
/// once x is large enough to matter, each integrated adaptively.
///
/// Validation path only; the closed form in [`SpectralDensity::kernel`] is
/// what the solver uses.
pub fn kernel_by_quadrature(j: &SpectralDensity, x: f64, rel_tol: f64) -> Complex64 {
    if j.eta() == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let w_max = 60.0 * j.omega_c() * (1.0 + j.s() / 10.0);
    let seg = if x * j.omega_c() > 0.5 {
        std::f64::consts::PI / x
    } else {
        w_max
    };
    let f = |w: f64| {
        let phase = Complex64::new(0.0, -w * x).exp();
        j.j_raw(w) * phase
    };
    let mut total = Complex64::new(0.0, 0.0);
    let mut lo = 0.0;
    while lo < w_max {
        let hi = (lo + seg).min(w_max);
        total += quad::integrate_complex(&f, lo, hi, rel_tol, rel_tol * j.integral() * 1e-3);
        lo = hi;
    }
    total
}
