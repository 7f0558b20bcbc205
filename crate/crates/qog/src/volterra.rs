//! Exact memory-kernel equation of motion for the two mode amplitudes,
//!
//! ```text
//! du_l/dt + i*w_l*u_l(t) + int_0^t f(t-tau) u_l(tau) dtau = 0,  u_l(0) = 1,
//! ```
//!
//! with w_{1,2} = w0 +/- Omega. The solver works in the rotating frame
//! u_l(t) = e^{-i w_l t} v_l(t), which integrates the phase exactly (the
//! decoupled limit stays unitary to machine precision) and leaves
//!
//! ```text
//! dv_l/dt = -int_0^t f(x) e^{i w_l x} v_l(t-x) dx.
//! ```
//!
//! The memory integral uses trapezoidal quadrature over the stored history,
//! truncated where the kernel modulus has decayed below 1e-8 of f(0). The
//! lagged part of the sum is either accumulated directly (O(T*M)) or through
//! block-doubling FFT convolutions (O(T log^2 T)); both produce the same
//! quadrature, and `solve` picks by cost.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::history::LaggedConvolution;
use crate::par;
use crate::spectral::{Frequency, SpectralDensity};

/// Kernel-modulus drop defining the memory truncation depth.
const MEMORY_CUTOFF: f64 = 1e-8;

/// Hard sanity bound on |u|; exceeding it aborts the solve.
const AMPLITUDE_SANITY: f64 = 1.0 + 1e-3;

/// Gyroscope probe configuration: carrier frequency, rotation rate and the
/// two-mode squeezed-vacuum resource, kept consistent as N = 2 sinh^2 r.
#[derive(Debug, Clone, Copy)]
pub struct ProbeConfig {
    omega0: f64,
    omega: f64,
    r: f64,
    n_photon: f64,
}

impl ProbeConfig {
    /// Configuration from the squeeze parameter r >= 0.
    pub fn with_squeeze(omega0: Frequency, omega: Frequency, r: f64) -> Result<Self> {
        if !r.is_finite() || r < 0.0 {
            return Err(Error::domain(format!("squeeze parameter must be >= 0, got {r}")));
        }
        let n = 2.0 * r.sinh() * r.sinh();
        Self::validated(omega0.value(), omega.value(), r, n)
    }

    /// Configuration from the mean photon number N = 2 sinh^2 r.
    pub fn with_photon_number(omega0: Frequency, omega: Frequency, n: f64) -> Result<Self> {
        if !n.is_finite() || n < 0.0 {
            return Err(Error::domain(format!("photon number must be >= 0, got {n}")));
        }
        let r = (n / 2.0).sqrt().asinh();
        Self::validated(omega0.value(), omega.value(), r, n)
    }

    fn validated(omega0: f64, omega: f64, r: f64, n: f64) -> Result<Self> {
        let cfg = ProbeConfig { omega0, omega, r, n_photon: n };
        let (w1, w2) = cfg.mode_frequencies();
        if w1 <= 0.0 || w2 <= 0.0 {
            return Err(Error::domain(format!(
                "mode frequencies w0 +/- Omega must both be positive (got {w1}, {w2})"
            )));
        }
        Ok(cfg)
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    /// Angular velocity being sensed.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn squeeze(&self) -> f64 {
        self.r
    }

    pub fn photon_number(&self) -> f64 {
        self.n_photon
    }

    /// (w_1, w_2) = (w0 + Omega, w0 - Omega).
    pub fn mode_frequencies(&self) -> (f64, f64) {
        (self.omega0 + self.omega, self.omega0 - self.omega)
    }

    /// Same probe with the rotation rate replaced (used by finite differences).
    pub fn with_omega(&self, omega: f64) -> Result<Self> {
        Self::validated(self.omega0, omega, self.r, self.n_photon)
    }
}

/// Uniform time grid 0, dt, ..., t_max (t_max snapped to a whole number of steps).
#[derive(Debug, Clone, Copy)]
pub struct TimeGrid {
    dt: f64,
    steps: usize,
}

impl TimeGrid {
    const MAX_STEPS: usize = 1 << 27;

    pub fn new(t_max: f64, dt: f64) -> Result<Self> {
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::domain(format!("grid step must be > 0, got {dt}")));
        }
        if !t_max.is_finite() || t_max < dt {
            return Err(Error::domain(format!("t_max must be >= dt, got {t_max}")));
        }
        let steps_f = (t_max / dt).round();
        if steps_f > Self::MAX_STEPS as f64 {
            return Err(Error::domain(format!(
                "grid of {steps_f} steps exceeds the {} step limit",
                Self::MAX_STEPS
            )));
        }
        let steps = (steps_f as usize).max(1);
        Ok(TimeGrid { dt, steps })
    }

    /// Default step resolving both the kernel and the mode oscillation:
    /// dt = min(0.02/wc, 0.02/w_l, 0.05/sqrt(f(0))), then snapped so that
    /// t_max is a whole number of steps.
    pub fn auto(j: &SpectralDensity, cfg: &ProbeConfig, t_max: f64) -> Result<Self> {
        if !t_max.is_finite() || t_max <= 0.0 {
            return Err(Error::domain(format!("t_max must be > 0, got {t_max}")));
        }
        let (w1, w2) = cfg.mode_frequencies();
        let mut dt = (0.02 / j.omega_c()).min(0.02 / w1.max(w2));
        let f0 = j.integral();
        if f0 > 0.0 {
            dt = dt.min(0.05 / f0.sqrt());
        }
        let steps = (t_max / dt).ceil() as usize;
        TimeGrid::new(t_max, t_max / steps as f64)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of nodes, steps + 1.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t_max(&self) -> f64 {
        self.dt * self.steps as f64
    }

    pub fn time(&self, idx: usize) -> f64 {
        self.dt * idx as f64
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.time(i))
    }
}

/// Solved mode amplitudes u_1, u_2 on a grid, with the equation's right-hand
/// side stored at every node so master-equation coefficients need no
/// differencing.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub u1: Vec<Complex64>,
    pub u2: Vec<Complex64>,
    pub du1: Vec<Complex64>,
    pub du2: Vec<Complex64>,
}

/// How the lagged part of the memory sum is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HistoryEval {
    /// Pick by estimated cost.
    Auto,
    /// Plain accumulation over the stored history, O(T*M).
    Direct,
    /// Block-doubling FFT convolution, O(T log^2 T); same quadrature.
    Fft,
}

/// Memory depth M: smallest lag where |f(M dt)| < 1e-8 |f(0)|, capped at the
/// grid length. Zero when the probe is decoupled.
pub fn memory_depth(j: &SpectralDensity, grid: &TimeGrid) -> usize {
    if j.eta() == 0.0 {
        return 0;
    }
    // |f(x)|/|f(0)| = (1 + (wc x)^2)^{-(s+1)/2}
    let ratio = MEMORY_CUTOFF.powf(-2.0 / (j.s() + 1.0)) - 1.0;
    let x_m = ratio.sqrt() / j.omega_c();
    let m = (x_m / grid.dt()).ceil() as usize;
    m.clamp(1, grid.steps())
}

/// Solve both mode amplitudes over the grid.
pub fn solve(j: &SpectralDensity, cfg: &ProbeConfig, grid: &TimeGrid) -> Result<Trajectory> {
    solve_with(j, cfg, grid, HistoryEval::Auto)
}

/// Solve with an explicit choice of history evaluation (for tests and benches).
pub fn solve_with(
    j: &SpectralDensity,
    cfg: &ProbeConfig,
    grid: &TimeGrid,
    eval: HistoryEval,
) -> Result<Trajectory> {
    let depth = memory_depth(j, grid);
    let kernel: Vec<Complex64> = (0..=depth).map(|k| j.kernel(grid.dt() * k as f64)).collect();
    let (w1, w2) = cfg.mode_frequencies();
    let (m1, m2) = par::join(
        || solve_mode(&kernel, w1, grid, eval),
        || solve_mode(&kernel, w2, grid, eval),
    );
    let (u1, du1) = m1?;
    let (u2, du2) = m2?;
    Ok(Trajectory { grid: *grid, u1, u2, du1, du2 })
}

/// Integrate one mode; returns (u, du) on the grid nodes.
fn solve_mode(
    kernel: &[Complex64],
    w_l: f64,
    grid: &TimeGrid,
    eval: HistoryEval,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let dt = grid.dt();
    let steps = grid.steps();
    let depth = kernel.len() - 1;
    // rotating-frame kernel ftil(x) = f(x) e^{i w_l x}, sampled on lags
    let coeffs: Vec<Complex64> = kernel
        .iter()
        .enumerate()
        .map(|(k, f)| f * Complex64::new(0.0, w_l * dt * k as f64).exp())
        .collect();

    let use_fft = match eval {
        HistoryEval::Direct => false,
        HistoryEval::Fft => true,
        // direct cost ~ steps*min(steps, depth) multiply-adds
        HistoryEval::Auto => depth > 512 && steps.saturating_mul(steps.min(depth)) > 50_000_000,
    };

    let (v, dv) = if use_fft {
        step_loop(&coeffs, dt, steps, depth, LaggedFft::new(&coeffs, depth, steps))?
    } else {
        step_loop(&coeffs, dt, steps, depth, LaggedDirect { coeffs: &coeffs })?
    };

    // back to the lab frame: u = e^{-i w t} v, du = e^{-i w t} (dv - i w v)
    let mut u = Vec::with_capacity(steps + 1);
    let mut du = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let phase = Complex64::new(0.0, -w_l * dt * k as f64).exp();
        u.push(phase * v[k]);
        du.push(phase * (dv[k] - Complex64::new(0.0, w_l) * v[k]));
    }
    Ok((u, du))
}

/// Supplies P_n = sum_{j=1}^{min(n, M)} c_j v_{n-j} while the solution grows.
trait LaggedSum {
    /// Called once v[n] is final, before P_{n+1} is requested.
    fn push(&mut self, v: &[Complex64], n: usize);
    /// Plain lagged sum at step n (full trapezoid weights; endpoint fixed by caller).
    fn lagged(&mut self, v: &[Complex64], n: usize) -> Complex64;
}

struct LaggedDirect<'a> {
    coeffs: &'a [Complex64],
}

impl LaggedSum for LaggedDirect<'_> {
    fn push(&mut self, _v: &[Complex64], _n: usize) {}

    fn lagged(&mut self, v: &[Complex64], n: usize) -> Complex64 {
        let m = n.min(self.coeffs.len() - 1);
        let mut acc = Complex64::new(0.0, 0.0);
        // j runs over lags 1..=m; v index n-j runs n-1 down to n-m
        for (c, vv) in self.coeffs[1..=m].iter().zip(v[n - m..n].iter().rev()) {
            acc += c * vv;
        }
        acc
    }
}

/// Block-doubling FFT evaluation of the lagged sums.
///
/// Lags are split into a direct zone [1, B) plus doubling segments
/// [L, 2L), L = B * 2^k. When a length-L block of v completes, its linear
/// convolution with the matching kernel segment is scattered into an
/// accumulator covering the steps that will need it. Timing works out so that
/// every contribution lands before the step that reads it.
struct LaggedFft {
    conv: LaggedConvolution,
}

impl LaggedFft {
    fn new(coeffs: &[Complex64], depth: usize, steps: usize) -> Self {
        LaggedFft { conv: LaggedConvolution::new(coeffs, depth, steps) }
    }
}

impl LaggedSum for LaggedFft {
    fn push(&mut self, v: &[Complex64], n: usize) {
        self.conv.push(v, n);
    }

    fn lagged(&mut self, v: &[Complex64], n: usize) -> Complex64 {
        self.conv.lagged(v, n)
    }
}

/// Heun predictor-corrector over the rotating-frame equation.
fn step_loop<L: LaggedSum>(
    coeffs: &[Complex64],
    dt: f64,
    steps: usize,
    depth: usize,
    mut lag: L,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let mut v = vec![Complex64::new(0.0, 0.0); steps + 1];
    let mut dv = vec![Complex64::new(0.0, 0.0); steps + 1];
    v[0] = Complex64::new(1.0, 0.0);
    lag.push(&v, 0);
    let half_f0 = 0.5 * coeffs[0];
    for n in 1..=steps {
        let m = n.min(depth);
        let (lam, self_coupling) = if m == 0 {
            (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
        } else {
            // trapezoid endpoint at the oldest retained lag gets half weight
            let plain = lag.lagged(&v, n);
            (plain - 0.5 * coeffs[m] * v[n - m], half_f0)
        };
        let predictor = v[n - 1] + dt * dv[n - 1];
        let rhs_pred = -dt * (self_coupling * predictor + lam);
        v[n] = v[n - 1] + 0.5 * dt * (dv[n - 1] + rhs_pred);
        dv[n] = -dt * (self_coupling * v[n] + lam);
        if v[n].norm_sqr() > AMPLITUDE_SANITY * AMPLITUDE_SANITY {
            return Err(Error::numerics(format!(
                "|u| = {:.6} exceeded {} at t = {:.6}; reduce dt",
                v[n].norm(),
                AMPLITUDE_SANITY,
                dt * n as f64
            )));
        }
        lag.push(&v, n);
    }
    Ok((v, dv))
}

/// Solve, then halve dt until u(t_max) is grid-converged to `rel_tol`.
///
/// Returns the converged trajectory together with the relative change seen at
/// the accepted step.
pub fn converged_solve(
    j: &SpectralDensity,
    cfg: &ProbeConfig,
    t_max: f64,
    rel_tol: f64,
    max_halvings: usize,
) -> Result<(Trajectory, ConvergenceReport)> {
    let mut grid = TimeGrid::auto(j, cfg, t_max)?;
    let mut traj = solve(j, cfg, &grid)?;
    for halving in 0..=max_halvings {
        let fine_grid = TimeGrid::new(t_max, grid.dt() / 2.0)?;
        let fine = solve(j, cfg, &fine_grid)?;
        let delta = end_state_delta(&traj, &fine);
        if delta < rel_tol {
            return Ok((
                traj,
                ConvergenceReport { dt: grid.dt(), halvings: halving, end_state_delta: delta },
            ));
        }
        grid = fine_grid;
        traj = fine;
    }
    Err(Error::numerics(format!(
        "grid refinement did not converge to {rel_tol} within {max_halvings} halvings"
    )))
}

/// Relative change of (u_1, u_2) at t_max between two solves.
fn end_state_delta(coarse: &Trajectory, fine: &Trajectory) -> f64 {
    let d1 = (coarse.u1.last().unwrap() - fine.u1.last().unwrap()).norm();
    let d2 = (coarse.u2.last().unwrap() - fine.u2.last().unwrap()).norm();
    let scale = fine.u1.last().unwrap().norm().max(fine.u2.last().unwrap().norm()).max(1e-30);
    d1.max(d2) / scale
}

#[derive(Debug, Clone, Copy)]
pub struct ConvergenceReport {
    pub dt: f64,
    pub halvings: usize,
    pub end_state_delta: f64,
}

/// Time-local master-equation coefficients for one mode.
#[derive(Debug, Clone, Copy)]
pub struct MasteqNode {
    pub t: f64,
    /// Renormalized frequency -Im[du/u].
    pub varpi: f64,
    /// Dissipation rate -Re[du/u]; negative values witness backflow.
    pub gamma: f64,
    /// False where |u| fell below 1e-12 and the ratio is meaningless.
    pub defined: bool,
}

#[derive(Debug, Clone)]
pub struct MasteqCoefficients {
    pub mode1: Vec<MasteqNode>,
    pub mode2: Vec<MasteqNode>,
}

/// Renormalized frequency and dissipation rate series from a trajectory.
pub fn masteq_coefficients(traj: &Trajectory) -> MasteqCoefficients {
    let series = |u: &[Complex64], du: &[Complex64]| {
        u.iter()
            .zip(du)
            .enumerate()
            .map(|(k, (u, du))| {
                let t = traj.grid.time(k);
                if u.norm() <= 1e-12 {
                    MasteqNode { t, varpi: f64::NAN, gamma: f64::NAN, defined: false }
                } else {
                    let ratio = du / u;
                    MasteqNode { t, varpi: -ratio.im, gamma: -ratio.re, defined: true }
                }
            })
            .collect()
    };
    MasteqCoefficients {
        mode1: series(&traj.u1, &traj.du1),
        mode2: series(&traj.u2, &traj.du2),
    }
}
