//! Contraction-rate sweeps over `n`, slope fitting against the closed-form
//! exponents, the inequality battery, and result files.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha1::{Digest, Sha1};

use crate::error::{Error, Result};
use crate::measure::{anderson_check, decentering_check, PExpMeasure, Verdict, WaveletBasis};
use crate::models::{
    de_posterior_mcmc, de_simulate, hellinger_errors, l2_errors, uniform_grid, wn_posterior_sample, wn_simulate,
    ChainConfig, ErrorStats, WnSampler,
};
use crate::rates::{rate_l2, rate_l2_rescaled_at_alpha, rate_sup, RateQuery};
use crate::rng::{mix_seed, substream};
use crate::sequences::{
    make_holder_truth, make_truth, truth_length, BesovParams, CoefVec, IndexScheme, ScalingSpec, SignPattern,
    TruthProfile,
};
use crate::stats::{fit_loglog, median, SlopeFit};
use crate::univariate::PExpParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    WhiteNoise,
    Density,
}

/// `λ_n = coef · n^{-poly} · (ln n)^{log}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaRule {
    pub poly: f64,
    #[serde(default)]
    pub log: f64,
    #[serde(default = "one")]
    pub coef: f64,
}

fn one() -> f64 {
    1.0
}

impl LambdaRule {
    pub fn at(&self, n: f64) -> f64 {
        self.coef * n.powf(-self.poly) * n.ln().powf(self.log)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    pub p: f64,
    pub alpha: f64,
    #[serde(default = "one_u32")]
    pub d: u32,
    /// Finest level of the dyadic basis (density model).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_level: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<LambdaRule>,
}

fn one_u32() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TruthConfig {
    Besov {
        beta: f64,
        q: f64,
        delta: f64,
        #[serde(default)]
        profile: TruthProfile,
        #[serde(default)]
        signs: SignPattern,
    },
    Holder {
        beta: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    File {
        path: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub prior: PriorConfig,
    pub truth: TruthConfig,
    pub n_grid: Vec<u64>,
    pub replicates: usize,
    pub posterior_draws: usize,
    pub master_seed: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Overrides the exponent derived from the rate calculators.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theory_exponent: Option<f64>,
    /// Regularity and integrability used for the theory exponent and truncation
    /// rule when the truth is read from a file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_smoothness: Option<(f64, f64)>,
    #[serde(default)]
    pub chain: ChainConfig,
    #[serde(default)]
    pub sampler: WnSampler,
    #[serde(default = "default_max_truncation")]
    pub max_truncation: usize,
}

fn default_tol() -> f64 {
    0.1
}

fn default_max_truncation() -> usize {
    1 << 16
}

/// Fewer replicates cannot separate sampling noise from trend.
pub const MIN_REPLICATES: usize = 3;

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() || self.n_grid[0] == 0 {
            return Err(Error::Config("n_grid must hold positive integers".into()));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("n_grid must be strictly increasing".into()));
        }
        if self.replicates == 0 || self.posterior_draws == 0 {
            return Err(Error::Config("replicates and posterior_draws must be positive".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("tol must be positive".into()));
        }
        if self.model == ModelKind::Density {
            if self.prior.max_level.is_none() {
                return Err(Error::Config("the density model needs prior.max_level".into()));
            }
            if self.prior.d != 1 {
                return Err(Error::Config("the density model is one-dimensional".into()));
            }
        }
        ScalingSpec::linear(self.prior.p, self.prior.alpha, self.prior.d, 1)?;
        Ok(())
    }

    /// Canonical JSON used for the echo and the content hash.
    pub fn canonical_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn smoothness(&self) -> Result<(f64, f64)> {
        match (&self.truth, self.truth_smoothness) {
            (_, Some(bq)) => Ok(bq),
            (TruthConfig::Besov { beta, q, .. }, None) => Ok((*beta, *q)),
            (TruthConfig::Holder { beta, .. }, None) => Ok((*beta, f64::INFINITY)),
            (TruthConfig::File { .. }, None) => Err(Error::Config(
                "a truth read from file needs truth_smoothness [beta, q]".into(),
            )),
        }
    }

    fn lambda_at(&self, n: f64) -> f64 {
        self.prior.lambda.map_or(1.0, |r| r.at(n))
    }

    /// Decay exponent the fitted slope is compared with (`ε_n = n^{-e}`).
    pub fn theory_exponent(&self) -> Result<f64> {
        if let Some(e) = self.theory_exponent {
            return Ok(e);
        }
        let (beta, q) = self.smoothness()?;
        let pr = &self.prior;
        match self.model {
            ModelKind::WhiteNoise => {
                let rq = RateQuery::new(pr.alpha, beta, pr.p, q, pr.d);
                let r = if pr.lambda.is_some() {
                    rate_l2_rescaled_at_alpha(&rq)?
                } else {
                    rate_l2(&rq)?
                };
                Ok(r.poly_exponent.value)
            }
            ModelKind::Density => Ok(rate_sup(pr.alpha, beta, pr.p)?.combined.value),
        }
    }
}

/// `git hash-object` of a byte string.
pub fn git_blob_sha1(bytes: &[u8]) -> String {
    let mut h = Sha1::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Truncation length with prior tail `Σ_{ℓ>N} γ_ℓ² < (0.01 m_n)²`,
/// `m_n = n^{-β/(d+2β)}`, using `Σ_{ℓ>N} ℓ^{-1-2α/d} ≤ (d/2α) N^{-2α/d}`.
pub fn truncation_length(alpha: f64, d: u32, lambda: f64, beta: f64, n: f64, cap: usize) -> usize {
    let d = d as f64;
    let m_n = n.powf(-beta / (d + 2.0 * beta));
    let target = (0.01 * m_n).powi(2);
    let ratio = lambda * lambda * d / (2.0 * alpha) / target;
    let n_trunc = ratio.powf(d / (2.0 * alpha)).ceil();
    if !n_trunc.is_finite() || n_trunc >= cap as f64 {
        cap
    } else {
        (n_trunc as usize).max(1)
    }
}

/// One `(n, replicate)` cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellRow {
    pub n: u64,
    pub rep: usize,
    pub error_median: f64,
    pub q90: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone)]
pub struct CellDetail {
    pub row: CellRow,
    pub errors: Vec<f64>,
    pub truncation: usize,
    pub level_acceptance: Vec<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ExperimentVerdict {
    Consistent,
    Inconsistent,
    Underpowered,
}

impl std::fmt::Display for ExperimentVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ExperimentVerdict::Consistent => "CONSISTENT",
            ExperimentVerdict::Inconsistent => "INCONSISTENT",
            ExperimentVerdict::Underpowered => "UNDERPOWERED",
        })
    }
}

/// UNDERPOWERED when the fit cannot resolve `tol` or too few replicates were run;
/// otherwise CONSISTENT iff `|slope + exponent| ≤ tol`.
pub fn verdict(fit: &SlopeFit, theory_exponent: f64, tol: f64, replicates: usize) -> ExperimentVerdict {
    if replicates < MIN_REPLICATES || !(fit.stderr <= tol) {
        ExperimentVerdict::Underpowered
    } else if (fit.slope + theory_exponent).abs() <= tol {
        ExperimentVerdict::Consistent
    } else {
        ExperimentVerdict::Inconsistent
    }
}

/// Outcome of testing a slope against two competing exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Discrimination {
    First,
    Second,
    Neither,
    Underpowered,
}

/// A slope is attributed to one exponent only when it is within `tol` of it,
/// outside `tol` of the other, and the fit resolves `tol`.
pub fn discriminate(fit: &SlopeFit, first: f64, second: f64, tol: f64) -> Discrimination {
    if !(fit.stderr <= tol) {
        return Discrimination::Underpowered;
    }
    let near = |e: f64| (fit.slope + e).abs() <= tol;
    match (near(first), near(second)) {
        (true, true) => Discrimination::Underpowered,
        (true, false) => Discrimination::First,
        (false, true) => Discrimination::Second,
        (false, false) => Discrimination::Neither,
    }
}

/// Least squares of `log value` on `log n`.
pub fn fit_slope(n: &[f64], values: &[f64]) -> Result<SlopeFit> {
    if n.len() < 4 {
        return Err(Error::Degenerate(format!(
            "slope fitting needs at least 4 rows, got {}",
            n.len()
        )));
    }
    fit_loglog(n, values)
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub rows: Vec<CellRow>,
    /// `(n, median over replicates of q90)`.
    pub aggregate: Vec<(u64, f64)>,
    pub fitted_slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub theory_exponent: f64,
    pub verdict: ExperimentVerdict,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub details: Vec<CellDetail>,
}

enum Prepared {
    WhiteNoise { truth: CoefVec, beta: f64 },
    Density { truth: CoefVec, max_level: u32 },
}

fn read_truth(path: &str) -> Result<CoefVec> {
    CoefVec::read_csv(fs::File::open(path)?)
}

fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    let (beta, _) = cfg.smoothness()?;
    match cfg.model {
        ModelKind::WhiteNoise => {
            let truth = match &cfg.truth {
                TruthConfig::Besov {
                    beta,
                    q,
                    delta,
                    profile,
                    signs,
                } => {
                    let bp = BesovParams::new(*beta, *q, cfg.prior.d);
                    let len = truth_length(bp, *delta, *profile, 1e-12)?;
                    make_truth(bp, *delta, len, signs, *profile)?
                }
                TruthConfig::File { path } => read_truth(path)?,
                TruthConfig::Holder { .. } => {
                    return Err(Error::Config("the white noise model takes a besov or file truth".into()))
                }
            };
            if truth.scheme().is_dyadic() {
                return Err(Error::Config("the white noise truth must use a linear scheme".into()));
            }
            Ok(Prepared::WhiteNoise { truth, beta })
        }
        ModelKind::Density => {
            let max_level = cfg.prior.max_level.expect("validated");
            let truth = match &cfg.truth {
                TruthConfig::Holder { beta, amplitude } => make_holder_truth(*beta, max_level, *amplitude)?,
                TruthConfig::File { path } => read_truth(path)?,
                TruthConfig::Besov { .. } => {
                    return Err(Error::Config("the density model takes a holder or file truth".into()))
                }
            };
            match truth.scheme() {
                IndexScheme::Dyadic { max_level: k } if k <= max_level => {}
                other => {
                    return Err(Error::SchemeMismatch {
                        expected: format!("dyadic truth with K <= {max_level}"),
                        found: other.to_string(),
                    })
                }
            }
            Ok(Prepared::Density { truth, max_level })
        }
    }
}

fn pad_dyadic(truth: &CoefVec, max_level: u32) -> Result<CoefVec> {
    let mut v = truth.values().to_vec();
    v.resize(IndexScheme::Dyadic { max_level }.len(), 0.0);
    CoefVec::dyadic(max_level, v)
}

fn run_cell(cfg: &ExperimentConfig, prep: &Prepared, ni: usize, rep: usize) -> Result<CellDetail> {
    let n = cfg.n_grid[ni];
    let nf = n as f64;
    let lambda = cfg.lambda_at(nf);
    let keys = [ni as u64, rep as u64];
    let mut data_rng = substream(cfg.master_seed, &[keys[0], keys[1], 0]);
    let post_seed = mix_seed(cfg.master_seed, &[keys[0], keys[1], 1]);
    let pr = &cfg.prior;
    match prep {
        Prepared::WhiteNoise { truth, beta } => {
            let len = truncation_length(pr.alpha, pr.d, lambda, *beta, nf, cfg.max_truncation);
            let spec = ScalingSpec::linear(pr.p, pr.alpha, pr.d, len)?.with_lambda(lambda)?;
            let m = PExpMeasure::new(spec)?;
            let w0 = if truth.len() >= len {
                truth.clone()
            } else {
                let mut v = truth.values().to_vec();
                v.resize(len, 0.0);
                CoefVec::linear(v)
            };
            let data = wn_simulate(&w0.truncated_linear(len), nf, &mut data_rng)?;
            let chain = wn_posterior_sample(&data, &m, cfg.posterior_draws, post_seed, cfg.sampler)?;
            let errors = l2_errors(&chain.colored(&m), &w0)?;
            let st = ErrorStats::from_errors(&errors)?;
            Ok(CellDetail {
                row: CellRow {
                    n,
                    rep,
                    error_median: st.median,
                    q90: st.q90,
                    lo: st.lo,
                    hi: st.hi,
                },
                errors,
                truncation: len,
                level_acceptance: Vec::new(),
                warnings: Vec::new(),
            })
        }
        Prepared::Density { truth, max_level } => {
            let spec = ScalingSpec::dyadic(pr.p, pr.alpha, *max_level)?.with_lambda(lambda)?;
            let m = PExpMeasure::new(spec)?;
            let w0 = pad_dyadic(truth, *max_level)?;
            let basis = WaveletBasis::new(*max_level);
            let sample = de_simulate(&w0, &basis, n as usize, &mut data_rng)?;
            let mut chain_rng = substream(post_seed, &[]);
            let chain_cfg = ChainConfig {
                iterations: cfg.chain.iterations.max(cfg.posterior_draws * cfg.chain.thin),
                ..cfg.chain
            };
            let chain = de_posterior_mcmc(&sample, &m, &chain_cfg, &mut chain_rng)?;
            let errors = hellinger_errors(&chain, &m, &w0, &uniform_grid(12))?;
            let st = ErrorStats::from_errors(&errors)?;
            let warnings = chain
                .warnings
                .iter()
                .map(|w| format!("n={n} rep={rep}: {w}"))
                .collect();
            Ok(CellDetail {
                row: CellRow {
                    n,
                    rep,
                    error_median: st.median,
                    q90: st.q90,
                    lo: st.lo,
                    hi: st.hi,
                },
                errors,
                truncation: m.len(),
                level_acceptance: chain.level_acceptance,
                warnings,
            })
        }
    }
}

/// Run every `(n, replicate)` cell in parallel and fit the contraction slope.
///
/// Cells draw from streams keyed by `(master_seed, n-index, replicate)`, so the
/// result is identical for every thread count.  When `out` is given, rows of the
/// cells that finished are written even if another cell fails.
pub fn run_contraction(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<ExperimentResult> {
    cfg.validate()?;
    let prep = prepare(cfg)?;
    let cells: Vec<(usize, usize)> = (0..cfg.n_grid.len())
        .flat_map(|ni| (0..cfg.replicates).map(move |r| (ni, r)))
        .collect();
    let outcomes: Vec<Result<CellDetail>> = cells
        .par_iter()
        .map(|&(ni, rep)| run_cell(cfg, &prep, ni, rep))
        .collect();
    let mut details = Vec::with_capacity(outcomes.len());
    let mut first_err = None;
    for o in outcomes {
        match o {
            Ok(d) => details.push(d),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let rows: Vec<CellRow> = details.iter().map(|d| d.row).collect();
    if let Some(e) = first_err {
        if let Some(dir) = out {
            fs::create_dir_all(dir)?;
            write_results_csv(&rows, fs::File::create(dir.join("results.csv"))?)?;
        }
        return Err(e);
    }
    let aggregate: Vec<(u64, f64)> = cfg
        .n_grid
        .iter()
        .map(|&n| {
            let q: Vec<f64> = rows.iter().filter(|r| r.n == n).map(|r| r.q90).collect();
            (n, median(&q))
        })
        .collect();
    let xs: Vec<f64> = aggregate.iter().map(|a| a.0 as f64).collect();
    let ys: Vec<f64> = aggregate.iter().map(|a| a.1).collect();
    // short grids still report a slope, but never a verdict
    let (fit, gated) = if xs.len() >= 4 {
        (fit_slope(&xs, &ys)?, true)
    } else if xs.len() == 3 {
        (fit_loglog(&xs, &ys)?, false)
    } else {
        (
            SlopeFit {
                slope: f64::NAN,
                intercept: f64::NAN,
                stderr: f64::NAN,
            },
            false,
        )
    };
    let theory = cfg.theory_exponent()?;
    let result = ExperimentResult {
        verdict: if gated {
            verdict(&fit, theory, cfg.tol, cfg.replicates)
        } else {
            ExperimentVerdict::Underpowered
        },
        rows,
        aggregate,
        fitted_slope: fit.slope,
        stderr: fit.stderr,
        intercept: fit.intercept,
        theory_exponent: theory,
        warnings: details.iter().flat_map(|d| d.warnings.clone()).collect(),
        details,
    };
    if let Some(dir) = out {
        write_outputs(cfg, &result, dir)?;
    }
    Ok(result)
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_results_csv<W: std::io::Write>(rows: &[CellRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "rep", "error_median", "q90", "lo", "hi"])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.rep.to_string(),
            fmt17(r.error_median),
            fmt17(r.q90),
            fmt17(r.lo),
            fmt17(r.hi),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `summary.json` contents.
pub fn summary_json(cfg: &ExperimentConfig, res: &ExperimentResult) -> Result<serde_json::Value> {
    let canonical = cfg.canonical_json()?;
    Ok(serde_json::json!({
        "fitted_slope": res.fitted_slope,
        "stderr": res.stderr,
        "theory_exponent": res.theory_exponent,
        "verdict": res.verdict,
        "tol": cfg.tol,
        "aggregate": res.aggregate.iter().map(|(n, q)| serde_json::json!({"n": n, "median_q90": q})).collect::<Vec<_>>(),
        "warnings": res.warnings,
        "config": serde_json::from_str::<serde_json::Value>(&canonical)?,
        "config_hash": git_blob_sha1(canonical.as_bytes()),
    }))
}

/// Write `results.csv`, `summary.json`, `plotdata.csv` and `chains.csv` into `dir`.
pub fn write_outputs(cfg: &ExperimentConfig, res: &ExperimentResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_results_csv(&res.rows, fs::File::create(dir.join("results.csv"))?)?;
    fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(&summary_json(cfg, res)?)? + "\n",
    )?;
    let mut plot = csv::Writer::from_path(dir.join("plotdata.csv"))?;
    plot.write_record(["log_n", "log_q90"])?;
    for (n, q) in &res.aggregate {
        plot.write_record([fmt17((*n as f64).ln()), fmt17(q.ln())])?;
    }
    plot.flush()?;
    let mut chains = csv::Writer::from_path(dir.join("chains.csv"))?;
    chains.write_record(["n", "rep", "draw", "error"])?;
    for d in &res.details {
        for (i, e) in d.errors.iter().enumerate() {
            chains.write_record([d.row.n.to_string(), d.row.rep.to_string(), i.to_string(), fmt17(*e)])?;
        }
    }
    chains.flush()?;
    if cfg.model == ModelKind::Density {
        let mut acc = csv::Writer::from_path(dir.join("acceptance.csv"))?;
        acc.write_record(["n", "rep", "level", "acceptance"])?;
        for d in &res.details {
            for (k, a) in d.level_acceptance.iter().enumerate() {
                acc.write_record([d.row.n.to_string(), d.row.rep.to_string(), k.to_string(), fmt17(*a)])?;
            }
        }
        acc.flush()?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InequalityConfig {
    pub seed: u64,
    pub p_values: Vec<f64>,
    pub alpha: f64,
    pub anderson_shifts: usize,
    pub anderson_dim: usize,
    pub anderson_samples: usize,
    pub anderson_eps: f64,
    pub decentering_dims: Vec<usize>,
    pub decentering_shifts: usize,
    pub decentering_eps: f64,
    pub tail_p_values: Vec<f64>,
    pub tail_grid_points: usize,
}

impl Default for InequalityConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            p_values: vec![1.0, 1.5, 2.0],
            alpha: 1.0,
            anderson_shifts: 20,
            anderson_dim: 3,
            anderson_samples: 200_000,
            anderson_eps: 0.5,
            decentering_dims: vec![1, 2, 3],
            decentering_shifts: 3,
            decentering_eps: 0.5,
            tail_p_values: vec![1.0, 1.2, 1.5, 2.0],
            tail_grid_points: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityRow {
    pub check: &'static str,
    pub p: f64,
    pub dim: usize,
    pub case: usize,
    /// Slack of the inequality; nonnegative when it holds.
    pub margin: f64,
    pub verdict: Verdict,
}

/// Anderson, decentering and univariate small-ball checks over a parameter grid.
pub fn run_inequalities(cfg: &InequalityConfig) -> Result<Vec<InequalityRow>> {
    let mut rows = Vec::new();
    for (pi, &p) in cfg.p_values.iter().enumerate() {
        let m = PExpMeasure::new(ScalingSpec::linear(p, cfg.alpha, 1, cfg.anderson_dim)?)?;
        for case in 0..cfg.anderson_shifts {
            let mut rng = substream(cfg.seed, &[1, pi as u64, case as u64]);
            let shift: Vec<f64> = if case == 0 {
                vec![0.0; cfg.anderson_dim]
            } else {
                (0..cfg.anderson_dim)
                    .map(|_| 0.5 * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            };
            let r = anderson_check(
                &m,
                cfg.anderson_eps,
                &shift,
                cfg.anderson_samples,
                mix_seed(cfg.seed, &[2, pi as u64, case as u64]),
            )?;
            rows.push(InequalityRow {
                check: "anderson",
                p,
                dim: cfg.anderson_dim,
                case,
                margin: r.p_centered - r.p_shifted + 3.0 * r.joint_stderr,
                verdict: r.verdict,
            });
        }
        for &dim in &cfg.decentering_dims {
            let m = PExpMeasure::new(ScalingSpec::linear(p, cfg.alpha, 1, dim)?)?;
            for case in 0..=cfg.decentering_shifts {
                let mut rng = substream(cfg.seed, &[3, pi as u64, dim as u64, case as u64]);
                let h: Vec<f64> = if case == 0 {
                    vec![0.0; dim]
                } else {
                    (0..dim).map(|_| 0.4 * rng.sample::<f64, _>(StandardNormal)).collect()
                };
                let r = decentering_check(&m, cfg.decentering_eps, &CoefVec::linear(h))?;
                rows.push(InequalityRow {
                    check: "decentering",
                    p,
                    dim,
                    case,
                    margin: r.lhs - r.rhs,
                    verdict: r.verdict,
                });
            }
        }
    }
    for &p in &cfg.tail_p_values {
        let xi = PExpParams::new(p)?;
        let (r1, r2) = (xi.r1(), xi.r2());
        let k = cfg.tail_grid_points.max(1);
        let lower = (1..=k)
            .map(|i| {
                let x = i as f64 / k as f64;
                xi.prob_abs_le(x) - r1 * x
            })
            .fold(f64::INFINITY, f64::min);
        rows.push(InequalityRow {
            check: "smallball_lower",
            p,
            dim: 1,
            case: 0,
            margin: lower,
            verdict: if lower >= 0.0 { Verdict::Pass } else { Verdict::Fail },
        });
        let tail = (0..k)
            .map(|i| {
                let x = 1.0 + 9.0 * i as f64 / k as f64;
                xi.prob_abs_le(x) - (-r2 * (-x.powf(p) / p).exp()).exp()
            })
            .fold(f64::INFINITY, f64::min);
        rows.push(InequalityRow {
            check: "tail_lower",
            p,
            dim: 1,
            case: 0,
            margin: tail,
            verdict: if tail >= 0.0 { Verdict::Pass } else { Verdict::Fail },
        });
    }
    Ok(rows)
}

pub fn write_inequality_csv<W: std::io::Write>(rows: &[InequalityRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["check", "p", "dim", "case", "margin", "verdict"])?;
    for r in rows {
        w.write_record([
            r.check.to_string(),
            r.p.to_string(),
            r.dim.to_string(),
            r.case.to_string(),
            fmt17(r.margin),
            format!("{:?}", r.verdict).to_uppercase(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wn_config() -> ExperimentConfig {
        ExperimentConfig::from_json(
            r#"{
                "model": "white-noise",
                "prior": {"p": 2, "alpha": 1},
                "truth": {"kind": "besov", "beta": 1, "q": 2, "delta": 0.05},
                "n_grid": [64, 128, 256, 512],
                "replicates": 3,
                "posterior_draws": 50,
                "master_seed": 11
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn blob_hash_matches_git() {
        assert_eq!(git_blob_sha1(b""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
        assert_eq!(git_blob_sha1(b"hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = r#"{"model": "white-noise", "prior": {"p": 2, "alpha": 1, "typo": 1},
            "truth": {"kind": "besov", "beta": 1, "q": 2, "delta": 0.05},
            "n_grid": [1, 2, 3, 4], "replicates": 1, "posterior_draws": 1, "master_seed": 0}"#;
        assert!(ExperimentConfig::from_json(bad).is_err());
    }

    #[test]
    fn non_increasing_grid_is_rejected() {
        let mut c = wn_config();
        c.n_grid = vec![4, 4, 8, 16];
        assert!(c.validate().is_err());
    }

    #[test]
    fn theory_exponent_from_rates() {
        assert!((wn_config().theory_exponent().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn truncation_rule_tail_is_small_enough() {
        let n = 1000.0;
        let len = truncation_length(1.0, 1, 1.0, 1.0, n, 1 << 20);
        let tail: f64 = (len + 1..4_000_000).map(|l| (l as f64).powi(-3)).sum();
        assert!(tail < (0.01 * n.powf(-1.0 / 3.0)).powi(2));
    }

    #[test]
    fn verdict_rules() {
        let fit = SlopeFit {
            slope: -0.35,
            intercept: 0.0,
            stderr: 0.01,
        };
        assert_eq!(verdict(&fit, 1.0 / 3.0, 0.05, 20), ExperimentVerdict::Consistent);
        assert_eq!(verdict(&fit, 0.5, 0.05, 20), ExperimentVerdict::Inconsistent);
        assert_eq!(verdict(&fit, 1.0 / 3.0, 0.05, 2), ExperimentVerdict::Underpowered);
        let noisy = SlopeFit { stderr: 0.2, ..fit };
        assert_eq!(verdict(&noisy, 1.0 / 3.0, 0.05, 20), ExperimentVerdict::Underpowered);
        assert_eq!(discriminate(&fit, 0.375, 0.4, 0.02), Discrimination::Neither);
        assert_eq!(discriminate(&fit, 0.36, 0.4, 0.02), Discrimination::First);
        assert_eq!(discriminate(&fit, 0.34, 0.36, 0.02), Discrimination::Underpowered);
    }

    #[test]
    fn small_sweep_runs_and_decreases() {
        let res = run_contraction(&wn_config(), None).unwrap();
        assert_eq!(res.rows.len(), 12);
        assert!(res.fitted_slope < 0.0);
        assert!(res.aggregate.windows(2).all(|w| w[1].1 < w[0].1));
    }
}
