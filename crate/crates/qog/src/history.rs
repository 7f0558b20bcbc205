//! Fast evaluation of the lagged history sums
//!
//! ```text
//! P_n = sum_{j=1}^{min(n, M)} c_j v_{n-j},   n = 1..T,
//! ```
//!
//! for an online sequence v (v_n becomes known only after P_n was consumed).
//!
//! Lags are partitioned into a small direct zone [1, B) plus doubling
//! segments [L, 2L) with L = B * 2^k. Whenever a length-L aligned block of v
//! completes, its linear convolution with the matching kernel segment is
//! computed by FFT and scattered into an accumulator slot for every future
//! step that needs it. The result is numerically the same sum as the direct
//! loop (up to floating-point reassociation) at O(T log^2 T) total cost.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

const BASE: usize = 64;

struct Scale {
    /// Segment start lag L; covers lags [L, 2L).
    len: usize,
    /// Forward FFT of the kernel segment c[L..2L), zero-padded to 2L.
    seg_fft: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

pub(crate) struct LaggedConvolution {
    coeffs: Vec<Complex64>,
    depth: usize,
    scales: Vec<Scale>,
    /// Pending contributions per step index.
    acc: Vec<Complex64>,
    buf: Vec<Complex64>,
}

impl LaggedConvolution {
    pub(crate) fn new(coeffs: &[Complex64], depth: usize, steps: usize) -> Self {
        let mut planner = FftPlanner::new();
        let mut scales = Vec::new();
        let mut seg_start = BASE;
        let mut max_fft = 0;
        while seg_start <= depth.min(steps) {
            let n = 2 * seg_start;
            let forward = planner.plan_fft_forward(n);
            let inverse = planner.plan_fft_inverse(n);
            let mut seg = vec![Complex64::new(0.0, 0.0); n];
            for (e, slot) in seg.iter_mut().enumerate().take(seg_start) {
                let lag = seg_start + e;
                if lag <= depth {
                    *slot = coeffs[lag];
                }
            }
            forward.process(&mut seg);
            scales.push(Scale { len: seg_start, seg_fft: seg, forward, inverse });
            max_fft = n;
            seg_start *= 2;
        }
        LaggedConvolution {
            coeffs: coeffs.to_vec(),
            depth,
            scales,
            acc: vec![Complex64::new(0.0, 0.0); steps + 1],
            buf: vec![Complex64::new(0.0, 0.0); max_fft],
        }
    }

    /// Flush every scale whose block [n+1-L, n+1) just completed.
    pub(crate) fn push(&mut self, v: &[Complex64], n: usize) {
        let steps = self.acc.len() - 1;
        for scale in &self.scales {
            let l = scale.len;
            if (n + 1) % l != 0 {
                continue;
            }
            let block_start = n + 1 - l;
            let first_target = n + 1; // (b+1)L
            if first_target > steps {
                continue;
            }
            let fft_len = 2 * l;
            let buf = &mut self.buf[..fft_len];
            buf[..l].copy_from_slice(&v[block_start..block_start + l]);
            buf[l..].fill(Complex64::new(0.0, 0.0));
            scale.forward.process(buf);
            for (b, s) in buf.iter_mut().zip(scale.seg_fft.iter()) {
                *b *= s;
            }
            scale.inverse.process(buf);
            let norm = 1.0 / fft_len as f64;
            let last = (first_target + fft_len - 2).min(steps);
            for target in first_target..=last {
                self.acc[target] += buf[target - first_target] * norm;
            }
        }
    }

    /// P_n: accumulated segment contributions plus the direct zone.
    pub(crate) fn lagged(&mut self, v: &[Complex64], n: usize) -> Complex64 {
        let m = n.min(BASE - 1).min(self.depth);
        let mut acc = self.acc[n];
        for (c, vv) in self.coeffs[1..=m].iter().zip(v[n - m..n].iter().rev()) {
            acc += c * vv;
        }
        acc
    }
}
