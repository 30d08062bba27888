#![allow(dead_code)]

/// Brute-force minimum of `Σ c_i |h_i|^p` over `‖h − w‖₂ ≤ eps`.
///
/// p = 1 enumerates the support of the minimizer: on a fixed support the
/// objective is linear, so the optimum sits at the ball boundary opposite `c`.
/// p > 1 runs projected gradient descent from the radial projection of 0.
pub fn inf_oracle(w: &[f64], c: &[f64], p: f64, eps: f64) -> f64 {
    let a: Vec<f64> = w.iter().map(|v| v.abs()).collect();
    if a.iter().map(|v| v * v).sum::<f64>() <= eps * eps {
        return 0.0;
    }
    if p == 1.0 {
        return l1_enumeration(&a, c, eps);
    }
    projected_gradient(&a, c, p, eps)
}

fn l1_enumeration(a: &[f64], c: &[f64], eps: f64) -> f64 {
    let n = a.len();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << n) {
        let off: f64 = (0..n).filter(|i| mask & (1 << i) == 0).map(|i| a[i] * a[i]).sum();
        if off > eps * eps {
            continue;
        }
        let r = (eps * eps - off).sqrt();
        let on: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let cn: f64 = on.iter().map(|&i| c[i] * c[i]).sum::<f64>().sqrt();
        let value: f64 = on
            .iter()
            .map(|&i| {
                let t = a[i] - r * c[i] / cn;
                c[i] * t.abs()
            })
            .sum();
        best = best.min(value);
    }
    best
}

fn project(h: &mut [f64], a: &[f64], eps: f64) {
    let d: f64 = h.iter().zip(a).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    if d > eps {
        for (x, y) in h.iter_mut().zip(a) {
            *x = y + (*x - y) * eps / d;
        }
    }
}

fn projected_gradient(a: &[f64], c: &[f64], p: f64, eps: f64) -> f64 {
    let f = |h: &[f64]| -> f64 { h.iter().zip(c).map(|(x, ci)| ci * x.abs().powf(p)).sum() };
    let na: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut h: Vec<f64> = a.iter().map(|v| v * (1.0 - eps / na)).collect();
    let mut best = f(&h);
    let mut step = 0.1 / c.iter().cloned().fold(0.0, f64::max);
    let mut trial = h.clone();
    for _ in 0..200_000 {
        let g: Vec<f64> = h
            .iter()
            .zip(c)
            .map(|(x, ci)| ci * p * x.abs().powf(p - 1.0) * x.signum())
            .collect();
        loop {
            for i in 0..h.len() {
                trial[i] = (h[i] - step * g[i]).max(0.0);
            }
            project(&mut trial, a, eps);
            let v = f(&trial);
            if v <= best {
                best = v;
                std::mem::swap(&mut h, &mut trial);
                step *= 1.2;
                break;
            }
            step *= 0.5;
            if step < 1e-18 {
                return best;
            }
        }
    }
    best
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    f(lo).min(f(hi)).min(f1).min(f2)
}

/// Lagrangian dual lower bound `max_μ Σ min_t [c t^p + μ (t − a)²] − μ ε²`
/// for the same problem as [`inf_oracle`], by nested golden-section search.
pub fn inf_dual_bound(w: &[f64], c: &[f64], p: f64, eps: f64) -> f64 {
    let a: Vec<f64> = w.iter().map(|v| v.abs()).collect();
    let dual = |log_mu: f64| {
        let mu = log_mu.exp();
        let inner: f64 = a
            .iter()
            .zip(c)
            .map(|(ai, ci)| golden_min(|t| ci * t.powf(p) + mu * (t - ai).powi(2), 0.0, *ai, 200))
            .sum();
        inner - mu * eps * eps
    };
    -golden_min(|lm| -dual(lm), -30.0, 30.0, 200)
}
