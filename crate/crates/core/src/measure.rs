//! The p-exponential product measure: prior draws in sequence space and in
//! C[0,1] through the Faber–Schauder system, plus empirical checks of its
//! qualitative properties.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::rng::{substream, StreamRng};
use crate::sequences::{besov_norm, z_norm_p, BesovParams, CoefVec, IndexScheme, ScalingSpec};
use crate::univariate::PExpParams;

/// Law of `(γ_ℓ ξ_ℓ)` with `ξ_ℓ` i.i.d. p-exponential.
#[derive(Debug, Clone, PartialEq)]
pub struct PExpMeasure {
    params: PExpParams,
    spec: ScalingSpec,
}

impl PExpMeasure {
    pub fn new(spec: ScalingSpec) -> Result<Self> {
        let params = PExpParams::new(spec.p)?;
        Ok(Self { params, spec })
    }

    pub fn params(&self) -> &PExpParams {
        &self.params
    }

    pub fn spec(&self) -> &ScalingSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.spec.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spec.is_empty()
    }

    /// Whitened draw ξ.
    pub fn sample_xi(&self, rng: &mut StreamRng) -> Vec<f64> {
        (0..self.len()).map(|_| self.params.sample(rng)).collect()
    }

    pub fn sample_prior(&self, rng: &mut StreamRng) -> CoefVec {
        let values = (0..self.len())
            .map(|i| self.spec.gamma(i) * self.params.sample(rng))
            .collect();
        CoefVec::from_parts(self.spec.scheme, values).expect("length matches scheme")
    }

    /// Map whitened coordinates to coefficients.
    pub fn color(&self, xi: &[f64]) -> CoefVec {
        let values = xi
            .iter()
            .enumerate()
            .map(|(i, x)| self.spec.gamma(i) * x)
            .collect();
        CoefVec::from_parts(self.spec.scheme, values).expect("length matches scheme")
    }
}

/// Faber–Schauder hats `ψ_{kl}(x) = 2^{k/2} Λ(2^k x − (l−1))` up to level K,
/// with `Λ` the unit tent on [0, 1] peaking at 1 at 1/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WaveletBasis {
    pub max_level: u32,
}

impl WaveletBasis {
    /// Hölder constant for exponent 1 (the tent has slope ±2).
    pub const HOLDER_CONSTANT: f64 = 2.0;
    /// Level sup bound constant: hats within a level have disjoint supports.
    pub const LEVELSUP_CONSTANT: f64 = 1.0;

    pub fn new(max_level: u32) -> Self {
        Self { max_level }
    }

    fn check(&self, u: &CoefVec) -> Result<u32> {
        match u.scheme() {
            IndexScheme::Dyadic { max_level } if max_level <= self.max_level => Ok(max_level),
            other => Err(Error::SchemeMismatch {
                expected: format!("dyadic with K <= {}", self.max_level),
                found: other.to_string(),
            }),
        }
    }

    /// Grid of the level-(K+1) dyadic nodes `i / 2^{K+1}`.
    pub fn node_grid(&self) -> Vec<f64> {
        let m = 1usize << (self.max_level + 1);
        (0..=m).map(|i| i as f64 / m as f64).collect()
    }
}

#[inline]
fn tent(t: f64) -> f64 {
    (1.0 - (2.0 * t - 1.0).abs()).max(0.0)
}

fn eval_point(values: &[f64], levels: u32, x: f64) -> f64 {
    let mut acc = 0.0;
    for k in 0..=levels {
        let m = 1usize << k;
        let t = x * m as f64;
        let l0 = (t.floor() as usize).min(m - 1);
        let h = tent(t - l0 as f64);
        if h != 0.0 {
            acc += (m as f64).sqrt() * h * values[m - 1 + l0];
        }
    }
    acc
}

/// Pointwise value of `Σ_k Σ_l u_{kl} ψ_{kl}(x)` at every grid point.
pub fn evaluate_function(u: &CoefVec, basis: &WaveletBasis, xgrid: &[f64]) -> Result<Vec<f64>> {
    let levels = basis.check(u)?;
    if let Some(x) = xgrid.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::InvalidParameter {
            name: "x",
            value: *x,
            reason: "grid points must lie in [0, 1]",
        });
    }
    Ok(xgrid
        .iter()
        .map(|&x| eval_point(u.values(), levels, x))
        .collect())
}

/// Exact sup norm: the function is piecewise linear between level-(K+1) nodes.
pub fn sup_norm(u: &CoefVec, basis: &WaveletBasis) -> Result<f64> {
    let vals = evaluate_function(u, basis, &basis.node_grid())?;
    Ok(vals.iter().fold(0.0, |m, v| m.max(v.abs())))
}

/// `Σ_k 2^{k/2} max_l |u_{kl}|`, the level-wise bound on the sup norm.
pub fn levelwise_sup_bound(u: &CoefVec) -> Result<f64> {
    let IndexScheme::Dyadic { max_level } = u.scheme() else {
        return Err(Error::SchemeMismatch {
            expected: "dyadic".into(),
            found: u.scheme().to_string(),
        });
    };
    Ok((0..=max_level)
        .map(|k| {
            let m = u.level(k).iter().fold(0.0f64, |a, v| a.max(v.abs()));
            WaveletBasis::LEVELSUP_CONSTANT * 2f64.powf(k as f64 / 2.0) * m
        })
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GrowthVerdict {
    Converged,
    Diverging,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityRow {
    pub s: f64,
    /// `(N, median norm over trials)` for each truncation.
    pub norms: Vec<(usize, f64)>,
    pub growth_slope: f64,
    pub last_increment: f64,
    pub verdict: GrowthVerdict,
}

pub const REGULARITY_TRUNCATIONS: [usize; 9] = [
    1 << 6,
    1 << 7,
    1 << 8,
    1 << 9,
    1 << 10,
    1 << 11,
    1 << 12,
    1 << 13,
    1 << 14,
];

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Growth of `‖u‖_{B^s_q}` along nested truncations of the same prior draws.
///
/// A norm whose log-log slope against N exceeds 0.05 is reported as
/// diverging; one whose last relative increment is below 1% as converged.
pub fn regularity_scan(
    m: &PExpMeasure,
    s_grid: &[f64],
    q: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<RegularityRow>> {
    if trials < 30 {
        return Err(Error::InvalidParameter {
            name: "trials",
            value: trials as f64,
            reason: "need at least 30 trials",
        });
    }
    let n_max = *REGULARITY_TRUNCATIONS.last().unwrap();
    let spec = m.spec.with_scheme(IndexScheme::Linear { len: n_max });
    let measure = PExpMeasure::new(spec)?;
    let draws: Vec<CoefVec> = (0..trials)
        .into_par_iter()
        .map(|t| measure.sample_prior(&mut substream(seed, &[t as u64])))
        .collect();
    let d = spec.d;
    s_grid
        .iter()
        .map(|&s| {
            let bp = BesovParams::new(s, q, d);
            let mut norms = Vec::with_capacity(REGULARITY_TRUNCATIONS.len());
            for &n in &REGULARITY_TRUNCATIONS {
                let mut vals = draws
                    .iter()
                    .map(|u| besov_norm(&u.truncated_linear(n), bp))
                    .collect::<Result<Vec<_>>>()?;
                norms.push((n, median(&mut vals)));
            }
            let xs: Vec<f64> = norms.iter().map(|(n, _)| (*n as f64).ln()).collect();
            let ys: Vec<f64> = norms.iter().map(|(_, v)| v.ln()).collect();
            let growth_slope = ols_slope(&xs, &ys);
            let k = norms.len();
            let last_increment = (norms[k - 1].1 - norms[k - 2].1) / norms[k - 2].1;
            let verdict = if growth_slope > 0.05 {
                GrowthVerdict::Diverging
            } else if last_increment.abs() < 0.01 {
                GrowthVerdict::Converged
            } else {
                GrowthVerdict::Inconclusive
            };
            Ok(RegularityRow {
                s,
                norms,
                growth_slope,
                last_increment,
                verdict,
            })
        })
        .collect()
}

fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AndersonResult {
    pub p_centered: f64,
    pub p_shifted: f64,
    pub joint_stderr: f64,
    pub verdict: Verdict,
}

/// Monte Carlo comparison of `μ(εB)` and `μ(εB + x)` on common draws.
pub fn anderson_check(
    m: &PExpMeasure,
    eps: f64,
    shift: &[f64],
    mc_samples: usize,
    seed: u64,
) -> Result<AndersonResult> {
    let n = m.len();
    if n > 50 {
        return Err(Error::InvalidParameter {
            name: "dimension",
            value: n as f64,
            reason: "the Anderson check is limited to 50 coordinates",
        });
    }
    if shift.len() != n {
        return Err(Error::SchemeMismatch {
            expected: format!("{n} shift coordinates"),
            found: format!("{}", shift.len()),
        });
    }
    let blocks = 64usize;
    let per = mc_samples.div_ceil(blocks);
    let eps2 = eps * eps;
    let counts = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, &[b as u64]);
            let (mut c, mut s, mut only_s, mut only_c) = (0u64, 0u64, 0u64, 0u64);
            for _ in 0..per {
                let u = m.sample_prior(&mut rng);
                let r0: f64 = u.values().iter().map(|v| v * v).sum();
                let r1: f64 = u.values().iter().zip(shift).map(|(v, x)| (v - x).powi(2)).sum();
                let ic = r0 <= eps2;
                let is = r1 <= eps2;
                c += ic as u64;
                s += is as u64;
                only_s += (is && !ic) as u64;
                only_c += (ic && !is) as u64;
            }
            (c, s, only_s, only_c)
        })
        .reduce(
            || (0, 0, 0, 0),
            |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2, a.3 + b.3),
        );
    let total = (per * blocks) as f64;
    let pc = counts.0 as f64 / total;
    let ps = counts.1 as f64 / total;
    let mean_diff = ps - pc;
    let second = (counts.2 + counts.3) as f64 / total;
    let var = (second - mean_diff * mean_diff).max(0.0);
    let se = (var / total).sqrt();
    let verdict = if ps <= pc + 3.0 * se {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(AndersonResult {
        p_centered: pc,
        p_shifted: ps,
        joint_stderr: se,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecenteringResult {
    pub lhs: f64,
    pub rhs: f64,
    pub quadrature_error: f64,
    pub verdict: Verdict,
}

/// Breakpoints in θ ∈ [−π/2, π/2] for the substitution `t = r sin θ`.
fn theta_breaks(first: f64, rest: &[f64], r: f64) -> Vec<f64> {
    let h = std::f64::consts::FRAC_PI_2;
    let mut b = vec![-h, h];
    if first.abs() < r {
        b.push((-first / r).asin());
    }
    for c in rest {
        if c.abs() < r {
            let t = (c.abs() / r).acos();
            b.push(t);
            b.push(-t);
        }
    }
    b.sort_by(|a, c| a.total_cmp(c));
    b.dedup_by(|a, c| (*a - *c).abs() < 1e-15);
    b
}

/// `P(‖u − c‖₂ ≤ r)` for independent `u_i = γ_i ξ_i`, by nested Gauss–Legendre.
fn ball_mass(params: &PExpParams, gammas: &[f64], centre: &[f64], r: f64, gl: &GaussLegendre) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let g = gammas[0];
    let c = centre[0];
    if gammas.len() == 1 {
        return params.interval_prob((c - r) / g, (c + r) / g);
    }
    let breaks = theta_breaks(c, &centre[1..], r);
    let mut total = 0.0;
    for w in breaks.windows(2) {
        total += gl.integrate(w[0], w[1], |th| {
            let t = r * th.sin();
            let rho = r * th.cos();
            let dens = params.pdf((c + t) / g) / g;
            dens * r * th.cos() * ball_mass(params, &gammas[1..], &centre[1..], rho, gl)
        });
    }
    total
}

/// Deterministic check of `μ(εB + h) ≥ exp(−‖h‖_Z^p / p)·μ(εB)` in dimension ≤ 3.
pub fn decentering_check(m: &PExpMeasure, eps: f64, h: &CoefVec) -> Result<DecenteringResult> {
    let dim = m.len();
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidParameter {
            name: "dimension",
            value: dim as f64,
            reason: "the decentering quadrature supports 1 to 3 coordinates",
        });
    }
    crate::error::check_positive("eps", eps)?;
    let z = z_norm_p(h, &m.spec)?;
    let gammas = m.spec.sequence();
    let zero = vec![0.0; dim];
    let coarse = GaussLegendre::new(100);
    let fine = GaussLegendre::new(200);
    let lhs = ball_mass(&m.params, &gammas, h.values(), eps, &fine);
    let centred = ball_mass(&m.params, &gammas, &zero, eps, &fine);
    let err_l = (lhs - ball_mass(&m.params, &gammas, h.values(), eps, &coarse)).abs();
    let err_c = (centred - ball_mass(&m.params, &gammas, &zero, eps, &coarse)).abs();
    let rhs = (-z / m.spec.p).exp() * centred;
    let err = err_l + err_c;
    if err > 1e-9 + 1e-7 * lhs.max(rhs) {
        return Err(Error::NonConvergence {
            what: "decentering quadrature",
            residual: err,
        });
    }
    let verdict = if lhs >= rhs * (1.0 - 1e-6) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(DecenteringResult {
        lhs,
        rhs,
        quadrature_error: err,
        verdict,
    })
}
