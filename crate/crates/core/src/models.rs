//! The two statistical models.
//!
//! * White noise in sequence form, `y_ℓ = w_ℓ + n^{-1/2} z_ℓ`, whose posterior
//!   factorizes over coordinates and is sampled exactly.
//! * Density estimation on [0, 1] with `π_W ∝ e^W`, `W` a Faber–Schauder series
//!   drawn from the prior, sampled by adaptive random-walk Metropolis.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Error, Result};
use crate::grid1d::{penalized_mode, LogConcaveGrid, DEFAULT_NODES};
use crate::measure::{evaluate_function, PExpMeasure, WaveletBasis};
use crate::rng::{substream, StreamRng};
use crate::sequences::{CoefVec, IndexScheme};
use crate::stats::{median, quantile};

#[derive(Debug, Clone, PartialEq)]
pub struct WhiteNoiseData {
    pub n: f64,
    pub y: CoefVec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensitySample {
    pub points: Vec<f64>,
}

impl DensitySample {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if let Some(x) = points.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::InvalidParameter {
                name: "x",
                value: *x,
                reason: "observations must lie in [0, 1]",
            });
        }
        Ok(Self { points })
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }
}

/// Posterior draws in whitened coordinates `ξ` (so `u = γ ξ`).
#[derive(Debug, Clone, Default)]
pub struct PosteriorChain {
    pub draws: Vec<CoefVec>,
    pub acceptance_rate: f64,
    /// Final proposal scale per level (empty for exact samplers).
    pub step_log: Vec<f64>,
    pub level_acceptance: Vec<f64>,
    pub warnings: Vec<String>,
}

impl PosteriorChain {
    pub fn colored(&self, m: &PExpMeasure) -> Vec<CoefVec> {
        self.draws.iter().map(|xi| m.color(xi.values())).collect()
    }
}

pub fn wn_simulate(w0: &CoefVec, n: f64, rng: &mut StreamRng) -> Result<WhiteNoiseData> {
    check_positive("n", n)?;
    let sd = n.sqrt().recip();
    let y = w0
        .values()
        .iter()
        .map(|w| w + sd * rng.sample::<f64, _>(StandardNormal))
        .collect();
    Ok(WhiteNoiseData {
        n,
        y: CoefVec::from_parts(w0.scheme(), y)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WnSampler {
    /// Closed form for p = 2, grid inversion otherwise.
    #[default]
    Auto,
    /// Grid inversion for every p.
    Grid,
}

/// Draw `s` independent coordinates from `∝ exp(−|ξ|^p/p − κ(ξ − c)²/2)`.
fn coordinate_draws(
    m: &PExpMeasure,
    kappa: f64,
    c: f64,
    s: usize,
    sampler: WnSampler,
    rng: &mut StreamRng,
) -> Result<Vec<f64>> {
    let p = m.spec().p;
    if p == 2.0 && sampler == WnSampler::Auto {
        let mean = kappa * c / (1.0 + kappa);
        let sd = (1.0 + kappa).sqrt().recip();
        return Ok((0..s)
            .map(|_| mean + sd * rng.sample::<f64, _>(StandardNormal))
            .collect());
    }
    let mode = penalized_mode(p, kappa, c);
    let scale = if kappa >= 1.0 { kappa.sqrt().recip() } else { 2.5 };
    let grid = LogConcaveGrid::build(
        |x: f64| -x.abs().powf(p) / p - 0.5 * kappa * (x - c) * (x - c),
        mode,
        scale,
        DEFAULT_NODES,
    )?;
    Ok((0..s).map(|_| grid.invert(rng.random::<f64>())).collect())
}

/// `s` exact joint posterior draws for the white noise model.
///
/// Coordinates are independent a posteriori; each gets its own random stream
/// keyed by `(seed, index)` so the output does not depend on the thread count.
pub fn wn_posterior_sample(
    data: &WhiteNoiseData,
    m: &PExpMeasure,
    s: usize,
    seed: u64,
    sampler: WnSampler,
) -> Result<PosteriorChain> {
    data.y.ensure_same_scheme(m.spec().scheme)?;
    let gam = m.spec().sequence();
    let columns: Vec<Vec<f64>> = data
        .y
        .values()
        .par_iter()
        .zip(gam.par_iter())
        .enumerate()
        .map(|(i, (y, g))| {
            let mut rng = substream(seed, &[i as u64]);
            coordinate_draws(m, data.n * g * g, y / g, s, sampler, &mut rng)
        })
        .collect::<Result<_>>()?;
    let scheme = m.spec().scheme;
    let draws = (0..s)
        .map(|j| CoefVec::from_parts(scheme, columns.iter().map(|c| c[j]).collect()))
        .collect::<Result<_>>()?;
    Ok(PosteriorChain {
        draws,
        acceptance_rate: 1.0,
        ..Default::default()
    })
}

/// Summary of the posterior L2 distance to the truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorStats {
    pub median: f64,
    pub q90: f64,
    pub lo: f64,
    pub hi: f64,
}

impl ErrorStats {
    pub fn from_errors(errors: &[f64]) -> Result<Self> {
        if errors.is_empty() {
            return Err(Error::Degenerate("no posterior draws".into()));
        }
        Ok(Self {
            median: median(errors),
            q90: quantile(errors, 0.9),
            lo: quantile(errors, 0.05),
            hi: quantile(errors, 0.95),
        })
    }
}

/// Per-draw `‖u − w0‖₂` for colored draws.  The truth may be longer than the
/// draws; its remaining coefficients count fully towards the error.
pub fn l2_errors(draws: &[CoefVec], w0: &CoefVec) -> Result<Vec<f64>> {
    let Some(len) = draws.first().map(CoefVec::len) else {
        return Ok(Vec::new());
    };
    if len > w0.len() || draws.iter().any(|u| u.len() != len) {
        return Err(Error::SchemeMismatch {
            expected: format!("draws of equal length <= {}", w0.len()),
            found: format!("length {len}"),
        });
    }
    let tail: f64 = w0.values()[len..].iter().map(|v| v * v).sum();
    Ok(draws
        .iter()
        .map(|u| {
            let head: f64 = u
                .values()
                .iter()
                .zip(w0.values())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (head + tail).sqrt()
        })
        .collect())
}

/// Median and 90th percentile of the posterior L2 error.
pub fn wn_error_stats(chain: &PosteriorChain, m: &PExpMeasure, w0: &CoefVec) -> Result<ErrorStats> {
    ErrorStats::from_errors(&l2_errors(&chain.colored(m), w0)?)
}

/// Uniform grid with `2^bits + 1` points on [0, 1].
pub fn uniform_grid(bits: u32) -> Vec<f64> {
    let m = 1usize << bits;
    (0..=m).map(|i| i as f64 / m as f64).collect()
}

fn trapezoid(values: &[f64], grid: &[f64]) -> f64 {
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(x, v)| 0.5 * (x[1] - x[0]) * (v[0] + v[1]))
        .sum()
}

/// `e^W / ∫e^W` on a uniform grid, normalized by the trapezoid rule.
pub fn de_density(u: &CoefVec, basis: &WaveletBasis, grid: &[f64]) -> Result<Vec<f64>> {
    if grid.len() < 2 {
        return Err(Error::Degenerate("density grid needs at least two points".into()));
    }
    let w = evaluate_function(u, basis, grid)?;
    let top = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut vals: Vec<f64> = w.iter().map(|v| (v - top).exp()).collect();
    let z = trapezoid(&vals, grid);
    vals.iter_mut().for_each(|v| *v /= z);
    Ok(vals)
}

pub const SIMULATION_GRID_BITS: u32 = 12;

/// `n` observations from `π_{w0}` by inverting the piecewise-linear CDF on a 2^12 grid.
pub fn de_simulate(w0: &CoefVec, basis: &WaveletBasis, n: usize, rng: &mut StreamRng) -> Result<DensitySample> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: 0.0,
            reason: "need at least one observation",
        });
    }
    let grid = uniform_grid(SIMULATION_GRID_BITS);
    let dens = de_density(w0, basis, &grid)?;
    let mut cdf = vec![0.0; grid.len()];
    for i in 1..grid.len() {
        cdf[i] = cdf[i - 1] + 0.5 * (grid[i] - grid[i - 1]) * (dens[i - 1] + dens[i]);
    }
    let total = cdf[grid.len() - 1];
    let points = (0..n)
        .map(|_| {
            let t = rng.random::<f64>() * total;
            let j = cdf.partition_point(|c| *c <= t).clamp(1, grid.len() - 1);
            let span = cdf[j] - cdf[j - 1];
            let frac = if span > 0.0 { (t - cdf[j - 1]) / span } else { 0.0 };
            (grid[j - 1] + frac * (grid[j] - grid[j - 1])).clamp(0.0, 1.0)
        })
        .collect();
    DensitySample::new(points)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainConfig {
    /// Sweeps kept after burn-in (before thinning).
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub initial_scale: f64,
    pub target_acceptance: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            iterations: 4000,
            burn_in: 2000,
            thin: 20,
            initial_scale: 0.5,
            target_acceptance: 0.234,
        }
    }
}

/// `ln ∫_0^1 e^W` for `W` linear between equispaced nodes, exact.
fn log_integral_piecewise_linear(w: &[f64]) -> f64 {
    let h = 1.0 / (w.len() - 1) as f64;
    let top = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = w
        .windows(2)
        .map(|ab| {
            let (a, b) = (ab[0] - top, ab[1] - top);
            let d = b - a;
            if d.abs() < 1e-6 {
                a.exp() * (1.0 + d / 2.0 + d * d / 6.0)
            } else {
                (b.exp() - a.exp()) / d
            }
        })
        .sum();
    top + (h * s).ln()
}

/// Log posterior of the density model in whitened coordinates.
///
/// `W` is linear between level-(K+1) nodes, so `Σᵢ W(Xᵢ)` reduces to a weighted
/// sum of node values and the normalizer integrates exactly.
#[derive(Debug, Clone)]
pub struct DensityPosterior {
    measure: PExpMeasure,
    basis: WaveletBasis,
    nodes: Vec<f64>,
    node_weights: Vec<f64>,
    n: f64,
}

impl DensityPosterior {
    pub fn new(sample: &DensitySample, m: &PExpMeasure) -> Result<Self> {
        let IndexScheme::Dyadic { max_level } = m.spec().scheme else {
            return Err(Error::SchemeMismatch {
                expected: "dyadic".into(),
                found: m.spec().scheme.to_string(),
            });
        };
        let basis = WaveletBasis::new(max_level);
        let nodes = basis.node_grid();
        let cells = nodes.len() - 1;
        let mut node_weights = vec![0.0; nodes.len()];
        for &x in &sample.points {
            let t = x * cells as f64;
            let j = (t.floor() as usize).min(cells - 1);
            let f = t - j as f64;
            node_weights[j] += 1.0 - f;
            node_weights[j + 1] += f;
        }
        Ok(Self {
            measure: m.clone(),
            basis,
            nodes,
            node_weights,
            n: sample.n() as f64,
        })
    }

    pub fn basis(&self) -> &WaveletBasis {
        &self.basis
    }

    pub fn log_likelihood(&self, xi: &[f64]) -> Result<f64> {
        let u = self.measure.color(xi);
        let w = evaluate_function(&u, &self.basis, &self.nodes)?;
        let fit: f64 = w.iter().zip(&self.node_weights).map(|(a, b)| a * b).sum();
        Ok(fit - self.n * log_integral_piecewise_linear(&w))
    }

    pub fn log_prior(&self, xi: &[f64]) -> f64 {
        let p = self.measure.spec().p;
        xi.iter().map(|x| -x.abs().powf(p) / p).sum()
    }

    pub fn log_posterior(&self, xi: &[f64]) -> Result<f64> {
        let v = self.log_likelihood(xi)? + self.log_prior(xi);
        if !v.is_finite() {
            let index = xi.iter().position(|x| !x.is_finite()).unwrap_or(0);
            return Err(Error::NonFiniteLogPosterior { index, value: v });
        }
        Ok(v)
    }
}

/// Metropolis acceptance log-probability for a symmetric proposal.
pub fn log_acceptance(from: f64, to: f64) -> f64 {
    (to - from).min(0.0)
}

/// Adaptive random-walk Metropolis, one block update per level per sweep.
///
/// Proposal scales adapt by Robbins–Monro towards the target acceptance during
/// burn-in and are frozen afterwards.
pub fn de_posterior_mcmc(
    sample: &DensitySample,
    m: &PExpMeasure,
    cfg: &ChainConfig,
    rng: &mut StreamRng,
) -> Result<PosteriorChain> {
    let post = DensityPosterior::new(sample, m)?;
    let levels = post.basis.max_level as usize + 1;
    if cfg.thin == 0 {
        return Err(Error::Config("thin must be at least 1".into()));
    }
    let mut xi = vec![0.0; m.len()];
    let mut lp = post.log_posterior(&xi)?;
    let mut log_scale = vec![cfg.initial_scale.ln(); levels];
    let mut accepted = vec![0usize; levels];
    let mut draws = Vec::with_capacity(cfg.iterations / cfg.thin);
    let scheme = m.spec().scheme;
    let mut proposal = xi.clone();
    for sweep in 0..cfg.burn_in + cfg.iterations {
        let adapting = sweep < cfg.burn_in;
        for k in 0..levels {
            let range = (1usize << k) - 1..(2usize << k) - 1;
            let dim = range.len() as f64;
            let s = log_scale[k].exp() / dim.sqrt();
            proposal.copy_from_slice(&xi);
            for x in &mut proposal[range] {
                *x += s * rng.sample::<f64, _>(StandardNormal);
            }
            let lp_new = post.log_posterior(&proposal)?;
            let la = log_acceptance(lp, lp_new);
            let accept = rng.random::<f64>().ln() < la;
            if accept {
                std::mem::swap(&mut xi, &mut proposal);
                lp = lp_new;
            }
            if adapting {
                let rate = ((sweep + 1) as f64).powf(-0.6);
                log_scale[k] += rate * (la.exp() - cfg.target_acceptance);
            } else if accept {
                accepted[k] += 1;
            }
        }
        if !adapting && (sweep - cfg.burn_in + 1) % cfg.thin == 0 {
            draws.push(CoefVec::from_parts(scheme, xi.clone())?);
        }
    }
    let iters = cfg.iterations.max(1) as f64;
    let level_acceptance: Vec<f64> = accepted.iter().map(|a| *a as f64 / iters).collect();
    let acceptance_rate = level_acceptance.iter().sum::<f64>() / levels as f64;
    let warnings = level_acceptance
        .iter()
        .enumerate()
        .filter(|(_, a)| !(0.1..=0.5).contains(*a))
        .map(|(k, a)| format!("level {k}: acceptance {a:.3} outside [0.1, 0.5]"))
        .collect();
    Ok(PosteriorChain {
        draws,
        acceptance_rate,
        step_log: log_scale.iter().map(|v| v.exp()).collect(),
        level_acceptance,
        warnings,
    })
}

/// Hellinger distance between two densities tabulated on the same grid.
pub fn hellinger(pi1: &[f64], pi2: &[f64], grid: &[f64]) -> Result<f64> {
    if pi1.len() != grid.len() || pi2.len() != grid.len() {
        return Err(Error::Degenerate("densities and grid differ in length".into()));
    }
    if let Some(v) = pi1.iter().chain(pi2).find(|v| !(**v >= 0.0)) {
        return Err(Error::InvalidParameter {
            name: "density",
            value: *v,
            reason: "densities must be nonnegative",
        });
    }
    let sq: Vec<f64> = pi1
        .iter()
        .zip(pi2)
        .map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2))
        .collect();
    Ok(trapezoid(&sq, grid).max(0.0).sqrt())
}

/// Hellinger distance of every posterior draw to the true density.
pub fn hellinger_errors(chain: &PosteriorChain, m: &PExpMeasure, w0: &CoefVec, grid: &[f64]) -> Result<Vec<f64>> {
    let IndexScheme::Dyadic { max_level } = m.spec().scheme else {
        return Err(Error::SchemeMismatch {
            expected: "dyadic".into(),
            found: m.spec().scheme.to_string(),
        });
    };
    let basis = WaveletBasis::new(max_level.max(match w0.scheme() {
        IndexScheme::Dyadic { max_level } => max_level,
        _ => 0,
    }));
    let truth = de_density(w0, &basis, grid)?;
    chain
        .colored(m)
        .iter()
        .map(|u| hellinger(&de_density(u, &basis, grid)?, &truth, grid))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::sequences::ScalingSpec;

    #[test]
    fn hellinger_reference_values() {
        let grid = uniform_grid(12);
        let one = vec![1.0; grid.len()];
        let ramp: Vec<f64> = grid.iter().map(|x| 2.0 * x).collect();
        let h = hellinger(&one, &ramp, &grid).unwrap();
        let exact = (2.0 - 4.0 / 3.0 * 2f64.sqrt()).sqrt();
        assert!((h - exact).abs() < 1e-3, "{h} vs {exact}");
        assert_eq!(hellinger(&one, &one, &grid).unwrap(), 0.0);
        assert!(hellinger(&[-1.0, 1.0], &[1.0, 1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn zero_function_gives_uniform_density() {
        let basis = WaveletBasis::new(3);
        let grid = uniform_grid(6);
        let d = de_density(&CoefVec::zeros(IndexScheme::Dyadic { max_level: 3 }), &basis, &grid).unwrap();
        assert!(d.iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn exact_normalizer_matches_fine_trapezoid() {
        let m = PExpMeasure::new(ScalingSpec::dyadic(1.0, 1.0, 5).unwrap()).unwrap();
        let mut rng = seeded(3);
        let u = m.sample_prior(&mut rng);
        let basis = WaveletBasis::new(5);
        let nodes = evaluate_function(&u, &basis, &basis.node_grid()).unwrap();
        let exact = log_integral_piecewise_linear(&nodes);
        let grid = uniform_grid(16);
        let w = evaluate_function(&u, &basis, &grid).unwrap();
        let e: Vec<f64> = w.iter().map(|v| v.exp()).collect();
        assert!((exact - trapezoid(&e, &grid).ln()).abs() < 1e-7);
    }

    #[test]
    fn conjugate_and_grid_paths_agree_on_moments() {
        let m = PExpMeasure::new(ScalingSpec::linear(2.0, 1.0, 1, 4).unwrap()).unwrap();
        let mut rng = seeded(1);
        let data = wn_simulate(&CoefVec::linear(vec![1.0, -0.5, 0.2, 0.0]), 100.0, &mut rng).unwrap();
        let grid = wn_posterior_sample(&data, &m, 20_000, 4, WnSampler::Grid).unwrap();
        for (i, y) in data.y.values().iter().enumerate() {
            let g = m.spec().gamma(i);
            let k = data.n * g * g;
            let mean = k / (1.0 + k) * y / g;
            let sd = (1.0 + k).sqrt().recip();
            let xs: Vec<f64> = grid.draws.iter().map(|d| d.values()[i]).collect();
            let mh = xs.iter().sum::<f64>() / xs.len() as f64;
            assert!((mh - mean).abs() < 4.0 * sd / (xs.len() as f64).sqrt());
        }
    }

    #[test]
    fn mcmc_detects_dyadic_requirement() {
        let m = PExpMeasure::new(ScalingSpec::linear(1.0, 1.0, 1, 4).unwrap()).unwrap();
        let s = DensitySample::new(vec![0.5]).unwrap();
        assert!(matches!(
            de_posterior_mcmc(&s, &m, &ChainConfig::default(), &mut seeded(0)),
            Err(Error::SchemeMismatch { .. })
        ));
    }
}
