//! Parity readout of the interferometer: the exact expectation for decayed
//! mode amplitudes, its lossless closed form, and the Sagnac mapping from
//! rotation rate to mode splitting.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::Frequency;

/// Tolerance on |u_l| against the single-excitation bound.
const AMPLITUDE_TOL: f64 = 1e-6;

/// Largest imaginary residue tolerated in the (analytically real) bracket.
const IMAG_RESIDUE_TOL: f64 = 1e-10;

/// Mode amplitudes at a common time plus the squeeze parameter of the input.
#[derive(Debug, Clone, Copy)]
pub struct ParityInputs {
    pub u1: Complex64,
    pub u2: Complex64,
    pub r: f64,
}

impl ParityInputs {
    pub fn new(u1: Complex64, u2: Complex64, r: f64) -> Result<Self> {
        if !r.is_finite() || r < 0.0 {
            return Err(Error::domain(format!("squeeze parameter must be >= 0, got {r}")));
        }
        for (label, u) in [("u1", u1), ("u2", u2)] {
            if !u.re.is_finite() || !u.im.is_finite() {
                return Err(Error::domain(format!("{label} must be finite")));
            }
            if u.norm() > 1.0 + AMPLITUDE_TOL {
                return Err(Error::domain(format!(
                    "|{label}| = {} exceeds the amplitude bound 1 + {AMPLITUDE_TOL}",
                    u.norm()
                )));
            }
        }
        Ok(ParityInputs { u1, u2, r })
    }
}

/// Per-mode Gaussian-state intermediates entering the parity expectation.
#[derive(Debug, Clone, Copy)]
pub struct ParityIntermediates {
    pub a1: f64,
    pub a2: f64,
    pub m1: Complex64,
    pub m2: Complex64,
    pub p1: f64,
    pub p2: f64,
    pub x: f64,
}

impl ParityIntermediates {
    pub fn from_inputs(inp: &ParityInputs) -> Self {
        let th = inp.r.tanh();
        let ch2 = inp.r.cosh() * inp.r.cosh();
        let mode = |u: Complex64| {
            let n2 = u.norm_sqr();
            let a = 1.0 - (n2 - 1.0) * (n2 - 1.0) * th * th;
            let m = Complex64::new(0.0, -1.0) * u * u * th / (2.0 * a);
            let p = n2 * (1.0 - 1.0 / a);
            (a, m, p)
        };
        let (a1, m1, p1) = mode(inp.u1);
        let (a2, m2, p2) = mode(inp.u2);
        let x = 1.0 / ((a1 * a2).sqrt() * ch2);
        ParityIntermediates { a1, a2, m1, m2, p1, p2, x }
    }
}

/// Expectation of the photon-number parity of mode 1 at the output port.
///
/// The bracket is evaluated in complex arithmetic and must come out real and
/// positive; a violation indicates a numerical fault rather than physics.
pub fn parity_expectation(inp: &ParityInputs) -> Result<f64> {
    let iv = ParityIntermediates::from_inputs(inp);
    let p1 = Complex64::new(iv.p1, 0.0);
    let p2 = Complex64::new(iv.p2, 0.0);
    let bracket = 4.0 * iv.m1 * (iv.m2.conj() - iv.m1.conj() * p2 * p2)
        + 4.0 * iv.m2 * (iv.m1.conj() - iv.m2.conj() * p1 * p1)
        + (1.0 - p1 * p2) * (1.0 - p1 * p2)
        + 16.0 * (iv.m1 * iv.m2).norm_sqr();
    if bracket.im.abs() > IMAG_RESIDUE_TOL {
        return Err(Error::numerics(format!(
            "parity bracket has imaginary residue {:e}",
            bracket.im
        )));
    }
    if !(bracket.re > 0.0) {
        return Err(Error::numerics(format!("parity bracket is non-positive: {}", bracket.re)));
    }
    Ok(iv.x / bracket.re.sqrt())
}

/// Lossless parity closed form [1 + N(2+N) cos^2(2 Omega t)]^{-1/2}.
pub fn ideal_parity(n_photon: f64, omega: Frequency, t: f64) -> Result<f64> {
    if !n_photon.is_finite() || n_photon < 0.0 {
        return Err(Error::domain(format!("photon number must be >= 0, got {n_photon}")));
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::domain(format!("time must be >= 0, got {t}")));
    }
    let c = (2.0 * omega.value() * t).cos();
    Ok(1.0 / (1.0 + n_photon * (2.0 + n_photon) * c * c).sqrt())
}

/// Sagnac splitting: counter-propagating modes of winding number n acquire a
/// frequency difference 2 n Omega.
pub fn sagnac_map(mode_number: i64, omega: Frequency) -> Result<Frequency> {
    if mode_number < 1 {
        return Err(Error::domain(format!("mode number must be >= 1, got {mode_number}")));
    }
    Frequency::new(2.0 * mode_number as f64 * omega.value())
}
