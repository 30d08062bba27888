//! Inverse-CDF sampling from one-dimensional log-concave densities on an
//! adaptive uniform grid.
//!
//! The density is replaced by its piecewise-linear interpolant on the grid; draws
//! are exact for that interpolant.  The grid is widened until the mass the
//! interpolant cannot see (bounded through the log-concave tail estimate) is
//! below a tolerance.

use crate::error::{Error, Result};

pub const DEFAULT_NODES: usize = 4096;
pub const DEFAULT_HALF_WIDTH: f64 = 12.0;
pub const TAIL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct LogConcaveGrid {
    x0: f64,
    h: f64,
    /// Unnormalized density at the nodes, scaled so the largest node value is 1.
    dens: Vec<f64>,
    /// Cumulative trapezoid mass at each node.
    cum: Vec<f64>,
    /// `ln ∫ exp(logf)` of the interpolant.
    log_norm: f64,
    /// Log-density offset removed before exponentiating.
    top: f64,
}

impl LogConcaveGrid {
    /// Build the grid on `mode ± half_width·scale`, doubling the width until the
    /// tail mass beyond both ends is below [`TAIL_TOLERANCE`] of the total.
    pub fn build<F: Fn(f64) -> f64>(logf: F, mode: f64, scale: f64, nodes: usize) -> Result<Self> {
        let mut width = DEFAULT_HALF_WIDTH * scale;
        let mut last_leak = f64::INFINITY;
        for _ in 0..12 {
            let g = Self::on_interval(&logf, mode - width, mode + width, nodes);
            let leak = g.tail_leak(&logf);
            if leak <= TAIL_TOLERANCE {
                return Ok(g);
            }
            last_leak = leak;
            width *= 2.0;
        }
        Err(Error::GridResolution { mass: last_leak })
    }

    fn on_interval<F: Fn(f64) -> f64>(logf: &F, a: f64, b: f64, nodes: usize) -> Self {
        let n = nodes.max(3);
        let h = (b - a) / (n - 1) as f64;
        let lf: Vec<f64> = (0..n).map(|i| logf(a + i as f64 * h)).collect();
        let top = lf.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let dens: Vec<f64> = lf.iter().map(|v| (v - top).exp()).collect();
        let mut cum = Vec::with_capacity(n);
        cum.push(0.0);
        for i in 1..n {
            let prev = cum[i - 1];
            cum.push(prev + 0.5 * h * (dens[i - 1] + dens[i]));
        }
        let total = cum[n - 1];
        Self {
            x0: a,
            h,
            dens,
            cum,
            log_norm: top + total.ln(),
            top,
        }
    }

    /// Relative mass outside the grid, bounded by `f(end)/|slope|` on each side.
    fn tail_leak<F: Fn(f64) -> f64>(&self, logf: &F) -> f64 {
        let n = self.dens.len();
        let total = self.cum[n - 1];
        let a = self.x0;
        let b = self.x0 + (n - 1) as f64 * self.h;
        let side = |end: f64, inner: f64, fend: f64| {
            let slope = (logf(end) - logf(inner)) / (end - inner).abs();
            if slope >= 0.0 || !slope.is_finite() {
                f64::INFINITY
            } else {
                fend / (-slope)
            }
        };
        let left = side(a, a + self.h, self.dens[0]);
        let right = side(b, b - self.h, self.dens[n - 1]);
        (left + right) / total
    }

    pub fn log_normalizer(&self) -> f64 {
        self.log_norm
    }

    pub fn support(&self) -> (f64, f64) {
        (self.x0, self.x0 + (self.dens.len() - 1) as f64 * self.h)
    }

    /// Draw for a uniform `u ∈ [0, 1)` by exact inversion of the interpolant.
    pub fn invert(&self, u: f64) -> f64 {
        self.invert_with_log_density(u).0
    }

    /// Draw together with the log of the normalized interpolant density at the draw.
    pub fn invert_with_log_density(&self, u: f64) -> (f64, f64) {
        let n = self.dens.len();
        let target = u * self.cum[n - 1];
        let i = match self.cum.binary_search_by(|c| c.total_cmp(&target)) {
            Ok(i) => {
                let x = self.x0 + i as f64 * self.h;
                return (x, self.dens[i].ln() + self.top - self.log_norm);
            }
            Err(i) => i.clamp(1, n - 1) - 1,
        };
        let f0 = self.dens[i];
        let f1 = self.dens[i + 1];
        let r = target - self.cum[i];
        let slope = (f1 - f0) / self.h;
        // solve f0·t + slope·t²/2 = r for t ∈ [0, h]
        let t = if slope.abs() < 1e-14 * f0.max(1e-300) / self.h {
            r / f0
        } else {
            let disc = (f0 * f0 + 2.0 * slope * r).max(0.0);
            2.0 * r / (f0 + disc.sqrt())
        };
        let t = t.clamp(0.0, self.h);
        let q = (f0 + slope * t).max(f64::MIN_POSITIVE);
        (self.x0 + i as f64 * self.h + t, q.ln() + self.top - self.log_norm)
    }

    /// Mean and second moment of the interpolated density.
    pub fn moments(&self) -> (f64, f64) {
        let n = self.dens.len();
        let total = self.cum[n - 1];
        let (mut m1, mut m2) = (0.0, 0.0);
        for i in 0..n - 1 {
            let a = self.x0 + i as f64 * self.h;
            let (f0, f1) = (self.dens[i], self.dens[i + 1]);
            let h = self.h;
            // exact integrals of x and x² against the linear interpolant on [a, a+h]
            let i1 = h * (f0 * (a / 2.0 + h / 6.0) + f1 * (a / 2.0 + h / 3.0));
            let i2 = h * (f0 * (a * a / 2.0 + a * h / 3.0 + h * h / 12.0)
                + f1 * (a * a / 2.0 + 2.0 * a * h / 3.0 + h * h / 4.0));
            m1 += i1;
            m2 += i2;
        }
        (m1 / total, m2 / total)
    }
}

/// Mode of `−|x|^p/p − κ(x − c)²/2` with `κ > 0`, by bisection on the derivative.
pub fn penalized_mode(p: f64, kappa: f64, c: f64) -> f64 {
    if c == 0.0 {
        return 0.0;
    }
    let s = c.signum();
    let a = c.abs();
    // derivative in t ≥ 0 of t^p/p + κ(t−a)²/2 is increasing
    let g = |t: f64| t.powf(p - 1.0) + kappa * (t - a);
    if p == 1.0 {
        return s * (a - 1.0 / kappa).max(0.0);
    }
    if p == 2.0 {
        return s * kappa * a / (1.0 + kappa);
    }
    let (mut lo, mut hi) = (0.0, a);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * a {
            break;
        }
    }
    s * 0.5 * (lo + hi)
}
