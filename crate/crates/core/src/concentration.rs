//! The concentration function `φ_w(ε) = inf_{‖h−w‖≤ε} ‖h‖_Z^p / p − log μ(εB)`:
//! an exact solver for the infimum term, truncation upper bounds, Monte Carlo
//! small-ball estimates in ℓ₂ and sup norm, the f/g complexity functions and a
//! numerical solver for the rate equation `φ_w(ε) ≤ nε²`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Error, Result};
use crate::grid1d::LogConcaveGrid;
use crate::measure::{sup_norm, PExpMeasure, WaveletBasis};
use crate::quadrature::GaussLegendre;
use crate::rng::substream;
use crate::sequences::{z_norm_p, CoefVec, IndexScheme, ScalingSpec};
use crate::stats::wilson_interval;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BallNorm {
    L2,
    Sup,
}

impl std::str::FromStr for BallNorm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l2" => Ok(BallNorm::L2),
            "sup" => Ok(BallNorm::Sup),
            other => Err(Error::Parse(format!("unknown norm `{other}` (l2 | sup)"))),
        }
    }
}

/// Solution of `min Σ γ_ℓ^{-p}|h_ℓ|^p` subject to `‖h − w‖₂ ≤ ε`.
#[derive(Debug, Clone)]
pub struct InfTermSolution {
    pub value: f64,
    pub argmin: CoefVec,
    /// Lagrange multiplier of the ball constraint.
    pub multiplier: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
}

const KKT_TOL: f64 = 1e-9;
const MAX_OUTER: usize = 2000;

/// Minimizer of `c t^p + μ (t − a)²` over `t ∈ [0, a]`, and its relative error bound.
fn coordinate_solve(c: f64, p: f64, mu: f64, a: f64) -> (f64, f64) {
    if a == 0.0 {
        return (0.0, 0.0);
    }
    if p == 1.0 {
        return ((a - c / (2.0 * mu)).max(0.0), 0.0);
    }
    if p == 2.0 {
        return (mu * a / (c + mu), 0.0);
    }
    let g = |t: f64| c * p * t.powf(p - 1.0) + 2.0 * mu * (t - a);
    let dg = |t: f64| c * p * (p - 1.0) * t.powf(p - 2.0) + 2.0 * mu;
    let (mut lo, mut hi) = (0.0, a);
    let mut t = mu * a / (c + mu);
    for _ in 0..200 {
        let v = g(t);
        if v > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let next = t - v / dg(t);
        let next = if next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
        if (next - t).abs() <= 1e-16 * a || hi - lo <= 1e-16 * a {
            t = next;
            break;
        }
        t = next;
    }
    let scale = c * p * t.powf(p - 1.0) + 2.0 * mu * a;
    (t, (g(t).abs() / scale).min((hi - lo) / a))
}

struct Inner {
    t: Vec<f64>,
    dist: f64,
    residual: f64,
}

fn inner_solve(c: &[f64], absw: &[f64], p: f64, mu: f64) -> Inner {
    let mut t = Vec::with_capacity(absw.len());
    let mut d2 = 0.0;
    let mut residual: f64 = 0.0;
    for (ci, ai) in c.iter().zip(absw) {
        let (ti, r) = coordinate_solve(*ci, p, mu, *ai);
        d2 += (ai - ti) * (ai - ti);
        residual = residual.max(r);
        t.push(ti);
    }
    Inner {
        t,
        dist: d2.sqrt(),
        residual,
    }
}

/// Exact infimum of `‖h‖_Z^p` over the ℓ₂ ball of radius `eps` around `w`.
///
/// The multiplier is found by bisection in `log μ`; every coordinate is then an
/// independent one-dimensional convex problem.
pub fn inf_term_exact(w: &CoefVec, eps: f64, spec: &ScalingSpec) -> Result<InfTermSolution> {
    check_positive("eps", eps)?;
    w.ensure_same_scheme(spec.scheme)?;
    let p = spec.p;
    if w.l2_norm() <= eps {
        return Ok(InfTermSolution {
            value: 0.0,
            argmin: CoefVec::zeros(spec.scheme),
            multiplier: 0.0,
            kkt_residual: 0.0,
            iterations: 0,
        });
    }
    let support: Vec<usize> = (0..w.len()).filter(|&i| w.values()[i] != 0.0).collect();
    let absw: Vec<f64> = support.iter().map(|&i| w.values()[i].abs()).collect();
    let c: Vec<f64> = support.iter().map(|&i| spec.gamma(i).powf(-p)).collect();

    let mut lo = 1.0;
    let mut hi = 1.0;
    let mut iterations = 0;
    while inner_solve(&c, &absw, p, lo).dist < eps {
        lo *= 0.25;
        iterations += 1;
    }
    while inner_solve(&c, &absw, p, hi).dist > eps {
        hi *= 4.0;
        iterations += 1;
        if iterations > MAX_OUTER {
            return Err(Error::NonConvergence {
                what: "multiplier bracketing",
                residual: f64::INFINITY,
            });
        }
    }
    let mut best: Option<(f64, Inner)> = None;
    let mut gap = f64::INFINITY;
    while iterations < MAX_OUTER {
        iterations += 1;
        let mid = (0.5 * (lo.ln() + hi.ln())).exp();
        let sol = inner_solve(&c, &absw, p, mid);
        gap = (sol.dist - eps).abs() / eps;
        let done = gap <= 1e-10 || mid <= lo || mid >= hi;
        if sol.dist > eps {
            lo = mid;
        } else {
            hi = mid;
        }
        if done {
            best = Some((mid, sol));
            break;
        }
    }
    let Some((mu, sol)) = best else {
        return Err(Error::NonConvergence {
            what: "multiplier bisection",
            residual: gap,
        });
    };
    let kkt = gap.max(sol.residual);
    if kkt > KKT_TOL {
        return Err(Error::NonConvergence {
            what: "inf-term solver",
            residual: kkt,
        });
    }
    let mut h = vec![0.0; w.len()];
    let mut value = 0.0;
    for ((k, &i), ti) in support.iter().enumerate().zip(&sol.t) {
        h[i] = w.values()[i].signum() * ti;
        value += c[k] * ti.powf(p);
    }
    Ok(InfTermSolution {
        value,
        argmin: CoefVec::from_parts(w.scheme(), h)?,
        multiplier: mu,
        kkt_residual: kkt,
        iterations,
    })
}

/// Keep the first `L` coefficients of `w`, with `L` the smallest length whose
/// ℓ₂ remainder is within `eps`.  Returns `(‖w_{1:L}‖_Z^p, L)`.
pub fn inf_term_truncation_ub(w: &CoefVec, eps: f64, spec: &ScalingSpec) -> Result<(f64, usize)> {
    check_positive("eps", eps)?;
    w.ensure_same_scheme(spec.scheme)?;
    let v = w.values();
    let mut tail = vec![0.0; v.len() + 1];
    for i in (0..v.len()).rev() {
        tail[i] = tail[i + 1] + v[i] * v[i];
    }
    let eps2 = eps * eps;
    let l = (0..=v.len()).find(|&l| tail[l] <= eps2).unwrap_or(v.len());
    let mut h = v.to_vec();
    h[l..].iter_mut().for_each(|x| *x = 0.0);
    let value = z_norm_p(&CoefVec::from_parts(w.scheme(), h)?, spec)?;
    Ok((value, l))
}

/// Sup-norm analogue: keep whole levels `0..L` until the remainder has sup norm ≤ eps.
/// Returns `(‖w_{<L}‖_Z^p, L)`.
pub fn inf_term_truncation_ub_sup(
    w: &CoefVec,
    eps: f64,
    spec: &ScalingSpec,
    basis: &WaveletBasis,
) -> Result<(f64, u32)> {
    check_positive("eps", eps)?;
    w.ensure_same_scheme(spec.scheme)?;
    let IndexScheme::Dyadic { max_level } = spec.scheme else {
        return Err(Error::SchemeMismatch {
            expected: "dyadic".into(),
            found: spec.scheme.to_string(),
        });
    };
    for levels in 0..=max_level + 1 {
        let cut = (1usize << levels) - 1;
        let mut rem = w.values().to_vec();
        rem[..cut].iter_mut().for_each(|x| *x = 0.0);
        let rem = CoefVec::from_parts(w.scheme(), rem)?;
        if sup_norm(&rem, basis)? <= eps {
            let mut h = w.values().to_vec();
            h[cut..].iter_mut().for_each(|x| *x = 0.0);
            let value = z_norm_p(&CoefVec::from_parts(w.scheme(), h)?, spec)?;
            return Ok((value, levels));
        }
    }
    unreachable!("removing every level leaves the zero function")
}

/// How small-ball probabilities are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SmallBallMethod {
    /// Fraction of prior draws inside the ball.
    #[default]
    Plain,
    /// Exponentially tilted importance sampling (ℓ₂ only).
    Tilted,
    /// Plain when it resolves the probability, tilted otherwise.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallBallOptions {
    pub samples: usize,
    pub p_min: f64,
    pub seed: u64,
    pub method: SmallBallMethod,
    pub tilted_samples: usize,
}

impl Default for SmallBallOptions {
    fn default() -> Self {
        Self {
            samples: 1_000_000,
            p_min: 1e-4,
            seed: 0,
            method: SmallBallMethod::Plain,
            tilted_samples: 20_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallBallEstimate {
    pub eps: f64,
    pub p_hat: f64,
    pub hits: u64,
    pub samples: usize,
    pub neglog: f64,
    pub neglog_lo: f64,
    pub neglog_hi: f64,
    pub method: SmallBallMethod,
}

const BLOCKS: usize = 128;

fn node_sup(values: &[f64], levels: u32, buf: &mut [f64]) -> f64 {
    let m = buf.len() - 1;
    buf.iter_mut().for_each(|b| *b = 0.0);
    for k in 0..=levels {
        let count = 1usize << k;
        let step = m / count;
        let half = step / 2;
        let amp = (count as f64).sqrt();
        let level = &values[count - 1..2 * count - 1];
        for (l, &c) in level.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let start = l * step;
            for j in 1..step {
                let tentv = if j <= half {
                    j as f64 / half as f64
                } else {
                    (step - j) as f64 / half as f64
                };
                buf[start + j] += amp * c * tentv;
            }
        }
    }
    buf.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Norms of `samples` prior draws, sorted ascending.
///
/// Draws come from fixed blocks of independent sub-streams, so the result does
/// not depend on the number of threads.
pub fn sample_norms(
    m: &PExpMeasure,
    norm: BallNorm,
    samples: usize,
    seed: u64,
    basis: Option<&WaveletBasis>,
) -> Result<Vec<f64>> {
    let levels = match norm {
        BallNorm::L2 => 0,
        BallNorm::Sup => {
            let basis = basis.ok_or_else(|| Error::Config("sup-norm small balls need a basis".into()))?;
            match m.spec().scheme {
                IndexScheme::Dyadic { max_level } if max_level <= basis.max_level => max_level,
                other => {
                    return Err(Error::SchemeMismatch {
                        expected: format!("dyadic with K <= {}", basis.max_level),
                        found: other.to_string(),
                    })
                }
            }
        }
    };
    let per = samples.div_ceil(BLOCKS);
    let gam = m.spec().sequence();
    let params = m.params().clone();
    let mut out: Vec<f64> = (0..BLOCKS)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = substream(seed, &[b as u64]);
            let take = per.min(samples.saturating_sub(b * per));
            let mut draws = Vec::with_capacity(take);
            let mut u = vec![0.0; gam.len()];
            let mut buf = vec![0.0; (1usize << (levels + 1)) + 1];
            for _ in 0..take {
                for (ui, g) in u.iter_mut().zip(&gam) {
                    *ui = g * params.sample(&mut rng);
                }
                let v = match norm {
                    BallNorm::L2 => u.iter().map(|x| x * x).sum::<f64>().sqrt(),
                    BallNorm::Sup => node_sup(&u, levels, &mut buf),
                };
                draws.push(v);
            }
            draws
        })
        .collect();
    out.sort_by(|a, b| a.total_cmp(b));
    Ok(out)
}

/// Estimate from a sorted sample of norms.
pub fn estimate_from_norms(sorted: &[f64], eps: f64, p_min: f64) -> Result<SmallBallEstimate> {
    let n = sorted.len();
    let hits = sorted.partition_point(|v| *v <= eps) as u64;
    if hits == 0 {
        return Err(Error::ZeroHits { eps, samples: n });
    }
    let p_hat = hits as f64 / n as f64;
    if p_hat < p_min {
        return Err(Error::BelowResolution { p_hat, p_min });
    }
    let (lo, hi) = wilson_interval(hits, n as u64, 1.96);
    Ok(SmallBallEstimate {
        eps,
        p_hat,
        hits,
        samples: n,
        neglog: -p_hat.ln(),
        neglog_lo: -hi.ln(),
        neglog_hi: -lo.max(f64::MIN_POSITIVE).ln(),
        method: SmallBallMethod::Plain,
    })
}

/// Plain Monte Carlo estimate of `−log μ(εB)`.
pub fn smallball_mc(
    m: &PExpMeasure,
    eps: f64,
    norm: BallNorm,
    opts: &SmallBallOptions,
    basis: Option<&WaveletBasis>,
) -> Result<SmallBallEstimate> {
    check_positive("eps", eps)?;
    let norms = sample_norms(m, norm, opts.samples, opts.seed, basis)?;
    estimate_from_norms(&norms, eps, opts.p_min)
}

fn tilted_second_moments(params_p: f64, gam: &[f64], theta: f64, gl: &GaussLegendre) -> f64 {
    gam.iter()
        .map(|g| {
            let k = theta * g * g;
            let scale = 1.0 / (1.0 + 2.0 * k).sqrt();
            let upper = 40.0 * scale.max(1.0 / (1.0 + 2.0 * k)) + 40.0 * scale;
            let kern = |x: f64| (-x.powf(params_p) / params_p - k * x * x).exp();
            let z = gl.integrate(0.0, upper, kern);
            let m2 = gl.integrate(0.0, upper, |x| x * x * kern(x));
            g * g * m2 / z
        })
        .sum()
}

/// Importance-sampling estimate of `−log μ(εB_{ℓ₂})` under the tilt
/// `exp(−θ‖u‖²)` with θ chosen so the tilted mean of `‖u‖²` is `ε²`.
pub fn smallball_tilted(m: &PExpMeasure, eps: f64, samples: usize, seed: u64) -> Result<SmallBallEstimate> {
    check_positive("eps", eps)?;
    if samples < 2 {
        return Err(Error::InvalidParameter {
            name: "samples",
            value: samples as f64,
            reason: "need at least 2 samples",
        });
    }
    let p = m.spec().p;
    let gam = m.spec().sequence();
    let gl = GaussLegendre::new(96);
    let target = eps * eps;
    let mean0 = tilted_second_moments(p, &gam, 0.0, &gl);
    let theta = if mean0 <= target {
        0.0
    } else {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while tilted_second_moments(p, &gam, hi, &gl) > target {
            lo = hi;
            hi *= 4.0;
        }
        for _ in 0..40 {
            let mid = if lo == 0.0 { 0.5 * hi } else { (lo * hi).sqrt() };
            if tilted_second_moments(p, &gam, mid, &gl) > target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi / lo.max(f64::MIN_POSITIVE) < 1.001 {
                break;
            }
        }
        0.5 * (lo + hi)
    };
    let grids: Vec<LogConcaveGrid> = gam
        .iter()
        .map(|g| {
            let k = theta * g * g;
            LogConcaveGrid::build(
                move |x: f64| -x.abs().powf(p) / p - k * x * x,
                0.0,
                (1.0 / (1.0 + 2.0 * k)).sqrt().max(1.0 / (1.0 + 2.0 * k)),
                1024,
            )
        })
        .collect::<Result<_>>()?;
    let params = m.params().clone();
    let per = samples.div_ceil(BLOCKS);
    // log-weights of hits, relative to the ball boundary
    let logw: Vec<Option<f64>> = (0..BLOCKS)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = substream(seed, &[b as u64, 0x7117]);
            let take = per.min(samples.saturating_sub(b * per));
            let mut out = Vec::with_capacity(take);
            for _ in 0..take {
                let mut s = 0.0;
                let mut lw = 0.0;
                for (grid, g) in grids.iter().zip(&gam) {
                    let (x, lq) = grid.invert_with_log_density(rng.random::<f64>());
                    s += g * g * x * x;
                    lw += params.ln_pdf(x) - lq;
                }
                out.push((s <= target).then_some(lw));
            }
            out
        })
        .collect();
    let n = logw.len();
    let hits = logw.iter().filter(|v| v.is_some()).count();
    if hits == 0 {
        return Err(Error::ZeroHits { eps, samples: n });
    }
    let top = logw
        .iter()
        .flatten()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<f64> = logw
        .iter()
        .map(|v| v.map_or(0.0, |l| (l - top).exp()))
        .collect();
    let mean = scaled.iter().sum::<f64>() / n as f64;
    let var = scaled.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let rel_se = (var / n as f64).sqrt() / mean;
    let neglog = -(mean.ln() + top);
    let p_hat = (-neglog).exp();
    Ok(SmallBallEstimate {
        eps,
        p_hat,
        hits: hits as u64,
        samples: n,
        neglog,
        neglog_lo: neglog - 1.96 * rel_se,
        neglog_hi: neglog + 1.96 * rel_se,
        method: SmallBallMethod::Tilted,
    })
}

/// Small-ball estimate following `opts.method`.
pub fn smallball(
    m: &PExpMeasure,
    eps: f64,
    norm: BallNorm,
    opts: &SmallBallOptions,
    basis: Option<&WaveletBasis>,
) -> Result<SmallBallEstimate> {
    match (opts.method, norm) {
        (SmallBallMethod::Plain, _) | (_, BallNorm::Sup) => smallball_mc(m, eps, norm, opts, basis),
        (SmallBallMethod::Tilted, BallNorm::L2) => smallball_tilted(m, eps, opts.tilted_samples, opts.seed),
        (SmallBallMethod::Auto, BallNorm::L2) => match smallball_mc(m, eps, norm, opts, basis) {
            Ok(e) => Ok(e),
            Err(Error::ZeroHits { .. }) | Err(Error::BelowResolution { .. }) => {
                smallball_tilted(m, eps, opts.tilted_samples, opts.seed)
            }
            Err(e) => Err(e),
        },
    }
}

/// One evaluation of the concentration function.
#[derive(Debug, Clone, Serialize)]
pub struct ConcEstimate {
    pub eps: f64,
    /// `inf ‖h‖_Z^p` (without the 1/p factor).
    pub inf_term: f64,
    #[serde(skip)]
    pub argmin: CoefVec,
    pub neglog_smallball: f64,
    pub neglog_lo: f64,
    pub neglog_hi: f64,
    pub phi: f64,
}

impl ConcEstimate {
    pub fn argmin_l2norm(&self) -> f64 {
        self.argmin.l2_norm()
    }

    /// φ with the small-ball term at the upper end of its interval.
    pub fn phi_upper(&self, p: f64) -> f64 {
        self.inf_term / p + self.neglog_hi
    }
}

/// Infimum term `λ^{-p}·inf ‖h‖_{Z,λ=1}^p` for the norm in use, with argmin.
pub fn inf_term(
    w: &CoefVec,
    eps: f64,
    spec: &ScalingSpec,
    norm: BallNorm,
    basis: Option<&WaveletBasis>,
) -> Result<(f64, CoefVec)> {
    let base = spec.with_lambda(1.0)?;
    let scale = spec.lambda.powf(-spec.p);
    match norm {
        BallNorm::L2 => {
            let sol = inf_term_exact(w, eps, &base)?;
            Ok((scale * sol.value, sol.argmin))
        }
        BallNorm::Sup => {
            let basis = basis.ok_or_else(|| Error::Config("sup norm needs a basis".into()))?;
            let (v, levels) = inf_term_truncation_ub_sup(w, eps, &base, basis)?;
            let cut = (1usize << levels) - 1;
            let mut h = w.values().to_vec();
            h[cut..].iter_mut().for_each(|x| *x = 0.0);
            Ok((scale * v, CoefVec::from_parts(w.scheme(), h)?))
        }
    }
}

/// `φ_w(ε)` for the (possibly rescaled) measure `m`: the infimum term carries
/// `λ^{-p}` and the centred ball is evaluated at radius `ε/λ` under the λ = 1 prior.
pub fn concentration_fn(
    w: &CoefVec,
    eps: f64,
    m: &PExpMeasure,
    norm: BallNorm,
    opts: &SmallBallOptions,
    basis: Option<&WaveletBasis>,
) -> Result<ConcEstimate> {
    check_positive("eps", eps)?;
    let spec = *m.spec();
    let (inf, argmin) = inf_term(w, eps, &spec, norm, basis)?;
    let base = PExpMeasure::new(spec.with_lambda(1.0)?)?;
    let sb = smallball(&base, eps / spec.lambda, norm, opts, basis)?;
    Ok(ConcEstimate {
        eps,
        inf_term: inf,
        argmin,
        neglog_smallball: sb.neglog,
        neglog_lo: sb.neglog_lo,
        neglog_hi: sb.neglog_hi,
        phi: inf / spec.p + sb.neglog,
    })
}

/// Evaluate φ on a grid of radii, reusing one set of prior draws for the plain estimator.
pub fn concentration_curve(
    w: &CoefVec,
    eps_grid: &[f64],
    m: &PExpMeasure,
    norm: BallNorm,
    opts: &SmallBallOptions,
    basis: Option<&WaveletBasis>,
) -> Result<Vec<Result<ConcEstimate>>> {
    let spec = *m.spec();
    let base = PExpMeasure::new(spec.with_lambda(1.0)?)?;
    let norms = match opts.method {
        SmallBallMethod::Tilted if norm == BallNorm::L2 => None,
        _ => Some(sample_norms(&base, norm, opts.samples, opts.seed, basis)?),
    };
    Ok(eps_grid
        .iter()
        .map(|&eps| {
            check_positive("eps", eps)?;
            let (inf, argmin) = inf_term(w, eps, &spec, norm, basis)?;
            let r = eps / spec.lambda;
            let sb = match (&norms, opts.method, norm) {
                (Some(ns), SmallBallMethod::Auto, BallNorm::L2) => match estimate_from_norms(ns, r, opts.p_min) {
                    Err(Error::ZeroHits { .. }) | Err(Error::BelowResolution { .. }) => {
                        smallball_tilted(&base, r, opts.tilted_samples, opts.seed)?
                    }
                    other => other?,
                },
                (Some(ns), _, _) => estimate_from_norms(ns, r, opts.p_min)?,
                (None, _, _) => smallball_tilted(&base, r, opts.tilted_samples, opts.seed)?,
            };
            Ok(ConcEstimate {
                eps,
                inf_term: inf,
                argmin,
                neglog_smallball: sb.neglog,
                neglog_lo: sb.neglog_lo,
                neglog_hi: sb.neglog_hi,
                phi: inf / spec.p + sb.neglog,
            })
        })
        .collect())
}

/// The complexity functions `(f(a), g(ε))` of the approximation bound.
pub fn fg_values(p: f64, alpha: f64, d: u32, setting: BallNorm, a: f64, eps: f64) -> Result<(f64, f64)> {
    check_positive("a", a)?;
    check_positive("eps", eps)?;
    check_positive("alpha", alpha)?;
    let d = d as f64;
    Ok(match setting {
        BallNorm::L2 => {
            let f = a.powf(p) * a.powf((2.0 * d - p * d) / (d + 2.0 * alpha)).max(1.0);
            let g = 2.0 * eps.powf(-2.0 * d / (d + 2.0 * alpha)).max(1.0);
            (f, g)
        }
        BallNorm::Sup => {
            let f = a.powf((2.0 - p + 2.0 * alpha * p) / (2.0 * alpha));
            let g = eps.powf(-1.0 / alpha);
            (f, g)
        }
    })
}

/// `f(√n ε)·g(ε)^{1−p/2} / (nε²)`, bounded along the contraction rate.
pub fn dominance_ratio(p: f64, alpha: f64, d: u32, setting: BallNorm, n: f64, eps: f64) -> Result<f64> {
    let (f, g) = fg_values(p, alpha, d, setting, n.sqrt() * eps, eps)?;
    Ok(f * g.powf(1.0 - p / 2.0) / (n * eps * eps))
}

#[derive(Debug, Clone, Serialize)]
pub struct RateSolution {
    pub eps_n: f64,
    /// Multiplicative spacing of the ε grid searched.
    pub grid_ratio: f64,
    pub phi_upper: f64,
    pub evaluations: usize,
}

/// Smallest ε on a geometric grid (ratio 2^{1/8}) with `φ_upper(ε) ≤ nε²`,
/// where `φ_upper` uses the upper end of the small-ball interval.
pub fn rate_solve_numeric(w: &CoefVec, m: &PExpMeasure, n: f64, opts: &SmallBallOptions) -> Result<RateSolution> {
    check_positive("n", n)?;
    let p = m.spec().p;
    let grid_ratio = 2f64.powf(0.125);
    let mut evaluations = 0usize;
    let mut check = |eps: f64| -> Result<(bool, f64)> {
        evaluations += 1;
        let c = concentration_fn(w, eps, m, BallNorm::L2, opts, None)?;
        let phi = c.phi_upper(p);
        Ok((phi <= n * eps * eps, phi))
    };
    // grid index j ↦ ε = ε₀·2^{j/8}
    let eps0 = w.l2_norm().max(1.0);
    let at = |j: i64| eps0 * grid_ratio.powi(j as i32);
    let mut hi = 0i64;
    let mut hi_phi;
    loop {
        let (ok, phi) = check(at(hi))?;
        hi_phi = phi;
        if ok {
            break;
        }
        hi += 8;
        if hi > 8 * 40 {
            return Err(Error::NonConvergence {
                what: "rate equation bracketing",
                residual: phi,
            });
        }
    }
    let mut lo = hi - 8;
    loop {
        let (ok, phi) = check(at(lo))?;
        if !ok {
            break;
        }
        hi = lo;
        hi_phi = phi;
        lo -= 8;
    }
    while hi - lo > 1 {
        let mid = (hi + lo) / 2;
        let (ok, phi) = check(at(mid))?;
        if ok {
            hi = mid;
            hi_phi = phi;
        } else {
            lo = mid;
        }
    }
    Ok(RateSolution {
        eps_n: at(hi),
        grid_ratio,
        phi_upper: hi_phi,
        evaluations,
    })
}
