use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use pexp_core::concentration::{
    concentration_curve, estimate_from_norms, sample_norms, smallball_tilted, BallNorm, SmallBallMethod,
    SmallBallOptions,
};
use pexp_core::experiments::{
    run_contraction, run_inequalities, write_inequality_csv, ExperimentConfig, InequalityConfig, ModelKind,
};
use pexp_core::measure::{evaluate_function, Verdict, WaveletBasis};
use pexp_core::rates::{linear_minimax, minimax, rate_l2, rate_l2_rescaled, rate_sup, RateQuery, RateRegime};
use pexp_core::rng::substream;
use pexp_core::stats::fit_loglog;
use pexp_core::{CoefVec, IndexScheme, PExpMeasure, ScalingSpec};

#[derive(Parser)]
#[command(name = "pexp", version, about = "p-exponential priors: rates, concentration and contraction experiments")]
struct Cli {
    /// JSON configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (PEXP_THREADS takes precedence)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form contraction exponents
    Rate(RateArgs),
    /// Concentration function of a fixed truth on a grid of radii
    Conc(ConcArgs),
    /// Centered small-ball probabilities
    Smallball(SmallballArgs),
    /// Draws from the prior
    SamplePrior(SamplePriorArgs),
    /// Contraction sweep in the white noise model
    WnExperiment,
    /// Contraction sweep in the density model
    DeExperiment,
    /// Anderson, decentering and univariate small-ball checks
    CheckInequalities,
}

#[derive(Clone, Copy, ValueEnum)]
enum Setting {
    L2,
    L2Rescaled,
    Sup,
}

#[derive(Args)]
struct RateArgs {
    #[arg(long, value_enum, default_value = "l2")]
    setting: Setting,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    #[arg(long, default_value_t = 1)]
    d: u32,
    /// Sweep alpha over `lo:hi:step` and emit CSV
    #[arg(long)]
    grid: Option<String>,
}

#[derive(Args)]
struct PriorArgs {
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1)]
    d: u32,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    L2,
    Sup,
}

impl From<NormArg> for BallNorm {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::L2 => BallNorm::L2,
            NormArg::Sup => BallNorm::Sup,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Plain,
    Tilted,
    Auto,
}

impl From<MethodArg> for SmallBallMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Plain => SmallBallMethod::Plain,
            MethodArg::Tilted => SmallBallMethod::Tilted,
            MethodArg::Auto => SmallBallMethod::Auto,
        }
    }
}

#[derive(Args)]
struct BallArgs {
    /// Comma list, or `lo:hi:count` for a geometric grid
    #[arg(long, default_value = "0.3:1.5:9")]
    eps_grid: String,
    #[arg(long, value_enum, default_value = "l2")]
    norm: NormArg,
    #[arg(long, default_value_t = 1_000_000)]
    mc_samples: usize,
    #[arg(long, value_enum, default_value = "plain")]
    method: MethodArg,
    #[arg(long, default_value_t = 1e-4)]
    p_min: f64,
}

#[derive(Args)]
struct ConcArgs {
    /// Truth as CoefVec CSV
    #[arg(long)]
    w_file: PathBuf,
    #[command(flatten)]
    prior: PriorArgs,
    #[command(flatten)]
    ball: BallArgs,
}

#[derive(Args)]
struct SmallballArgs {
    #[command(flatten)]
    prior: PriorArgs,
    #[command(flatten)]
    ball: BallArgs,
    /// Truncation length (l2)
    #[arg(long, default_value_t = 512)]
    n: usize,
    /// Finest dyadic level (sup)
    #[arg(long, default_value_t = 7)]
    levels: u32,
    /// Emit the log-log slope instead of the table
    #[arg(long)]
    fit_slope: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Linear,
    Dyadic,
}

#[derive(Args)]
struct SamplePriorArgs {
    #[command(flatten)]
    prior: PriorArgs,
    #[arg(long, value_enum, default_value = "dyadic")]
    scheme: SchemeArg,
    #[arg(long, default_value_t = 10)]
    levels: u32,
    #[arg(long, default_value_t = 1024)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    count: usize,
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() == 3 {
        let lo: f64 = parts[0].parse()?;
        let hi: f64 = parts[1].parse()?;
        let count: usize = parts[2].parse()?;
        if !(lo > 0.0 && hi > lo && count >= 2) {
            bail!("geometric grid needs 0 < lo < hi and count >= 2");
        }
        let r = (hi / lo).ln() / (count - 1) as f64;
        return Ok((0..count).map(|i| lo * (r * i as f64).exp()).collect());
    }
    spec.split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("bad number `{t}`")))
        .collect()
}

fn parse_range(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = spec
        .split(':')
        .map(|t| t.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .context("grid must be lo:hi:step")?;
    let [lo, hi, step] = parts[..] else {
        bail!("grid must be lo:hi:step");
    };
    if !(step > 0.0 && hi >= lo) {
        bail!("grid needs hi >= lo and step > 0");
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| lo + step * i as f64).collect())
}

fn configure_threads(cli_threads: Option<usize>) -> Result<()> {
    let env = std::env::var("PEXP_THREADS").ok().and_then(|v| v.parse::<usize>().ok());
    if let Some(n) = env.or(cli_threads) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("thread pool")?;
    }
    Ok(())
}

/// Write to `dir/name` when an output directory is set, otherwise to stdout.
fn sink(out: Option<&Path>, name: &str) -> Result<Box<dyn Write>> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            Ok(Box::new(fs::File::create(dir.join(name))?))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn regime_json(r: &RateRegime, beta: f64, q: f64, d: u32) -> serde_json::Value {
    json!({
        "poly_exponent": r.poly_exponent,
        "log_exponent": r.log_exponent,
        "regime": r.regime,
        "switch_point": r.switch_point,
        "lambda_poly_exponent": r.lambda_poly_exponent,
        "lambda_log_exponent": r.lambda_log_exponent,
        "minimax": minimax(beta, d),
        "linear_minimax": linear_minimax(beta, q),
    })
}

fn rate_at(a: &RateArgs, alpha: f64) -> Result<(RateRegime, serde_json::Value)> {
    let rq = RateQuery::new(alpha, a.beta, a.p, a.q, a.d);
    Ok(match a.setting {
        Setting::L2 => {
            let r = rate_l2(&rq)?;
            (r, regime_json(&r, a.beta, a.q, a.d))
        }
        Setting::L2Rescaled => {
            let r = rate_l2_rescaled(&rq)?;
            let mut v = regime_json(&r, a.beta, a.q, a.d);
            v["alpha"] = json!(r.alpha);
            (r, v)
        }
        Setting::Sup => {
            let s = rate_sup(alpha, a.beta, a.p)?;
            let combined = RateRegime {
                poly_exponent: s.combined,
                ..s.rho
            };
            let mut v = regime_json(&combined, a.beta, a.q, a.d);
            v["rho"] = json!(s.rho.poly_exponent);
            v["rho_tilde"] = json!(s.rho_tilde.poly_exponent);
            (combined, v)
        }
    })
}

fn cmd_rate(a: &RateArgs, out: Option<&Path>) -> Result<()> {
    match &a.grid {
        None => {
            let (_, v) = rate_at(a, a.alpha)?;
            let mut w = sink(out, "rate.json")?;
            writeln!(w, "{}", serde_json::to_string_pretty(&v)?)?;
        }
        Some(g) => {
            let mut w = csv::Writer::from_writer(sink(out, "rate_grid.csv")?);
            w.write_record(["alpha", "poly_exponent", "log_exponent", "regime", "switch_point", "lambda_poly_exponent"])?;
            for alpha in parse_range(g)? {
                let (r, _) = rate_at(a, alpha)?;
                let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
                w.write_record([
                    alpha.to_string(),
                    r.poly_exponent.value.to_string(),
                    r.log_exponent.value.to_string(),
                    r.regime.to_string(),
                    opt(r.switch_point),
                    opt(r.lambda_poly_exponent.map(|e| e.value)),
                ])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn ball_options(b: &BallArgs, seed: u64) -> SmallBallOptions {
    SmallBallOptions {
        samples: b.mc_samples,
        p_min: b.p_min,
        seed,
        method: b.method.into(),
        ..Default::default()
    }
}

fn cmd_conc(a: &ConcArgs, seed: u64, out: Option<&Path>) -> Result<()> {
    let w = CoefVec::read_csv(fs::File::open(&a.w_file).with_context(|| format!("{}", a.w_file.display()))?)?;
    let pr = &a.prior;
    let spec = ScalingSpec::new(pr.p, pr.alpha, pr.d, pr.lambda, w.scheme())?;
    let m = PExpMeasure::new(spec)?;
    let basis = match w.scheme() {
        IndexScheme::Dyadic { max_level } => Some(WaveletBasis::new(max_level)),
        _ => None,
    };
    let eps = parse_grid(&a.ball.eps_grid)?;
    let rows = concentration_curve(&w, &eps, &m, a.ball.norm.into(), &ball_options(&a.ball, seed), basis.as_ref())?;
    let mut wr = csv::Writer::from_writer(sink(out, "conc.csv")?);
    wr.write_record(["eps", "inf_term", "inf_argmin_l2norm", "neglog", "neglog_lo", "neglog_hi", "phi"])?;
    for (e, row) in eps.iter().zip(rows) {
        match row {
            Ok(c) => wr.write_record([
                e.to_string(),
                c.inf_term.to_string(),
                c.argmin_l2norm().to_string(),
                c.neglog_smallball.to_string(),
                c.neglog_lo.to_string(),
                c.neglog_hi.to_string(),
                c.phi.to_string(),
            ])?,
            Err(err) => {
                eprintln!("eps={e}: {err}");
                wr.write_record([e.to_string(), String::new(), String::new(), String::new(), String::new(), String::new(), String::new()])?;
            }
        }
    }
    wr.flush()?;
    Ok(())
}

fn cmd_smallball(a: &SmallballArgs, seed: u64, out: Option<&Path>) -> Result<()> {
    let pr = &a.prior;
    let norm: BallNorm = a.ball.norm.into();
    let (spec, basis) = match norm {
        BallNorm::L2 => (ScalingSpec::linear(pr.p, pr.alpha, pr.d, a.n)?, None),
        BallNorm::Sup => (ScalingSpec::dyadic(pr.p, pr.alpha, a.levels)?, Some(WaveletBasis::new(a.levels))),
    };
    let m = PExpMeasure::new(spec.with_lambda(pr.lambda)?)?;
    let eps = parse_grid(&a.ball.eps_grid)?;
    let opts = ball_options(&a.ball, seed);
    let norms = match (opts.method, norm) {
        (SmallBallMethod::Tilted, BallNorm::L2) => None,
        _ => Some(sample_norms(&m, norm, opts.samples, seed, basis.as_ref())?),
    };
    let mut ok_eps = Vec::new();
    let mut ok_neglog = Vec::new();
    let mut table = Vec::new();
    for &e in &eps {
        let est = match &norms {
            None => smallball_tilted(&m, e, opts.tilted_samples, seed),
            Some(ns) => match estimate_from_norms(ns, e, opts.p_min) {
                Err(pexp_core::Error::ZeroHits { .. } | pexp_core::Error::BelowResolution { .. })
                    if opts.method == SmallBallMethod::Auto && norm == BallNorm::L2 =>
                {
                    smallball_tilted(&m, e, opts.tilted_samples, seed)
                }
                other => other,
            },
        };
        match est {
            Ok(s) => {
                if s.neglog > 0.0 {
                    ok_eps.push(e);
                    ok_neglog.push(s.neglog);
                }
                table.push(s);
            }
            Err(err) => eprintln!("eps={e}: {err}"),
        }
    }
    let mut w = csv::Writer::from_writer(sink(out, "smallball.csv")?);
    if a.fit_slope {
        let fit = fit_loglog(&ok_eps, &ok_neglog)?;
        let theory = match norm {
            BallNorm::L2 => -(pr.d as f64) / pr.alpha,
            BallNorm::Sup => -1.0 / pr.alpha,
        };
        w.write_record(["slope", "stderr", "theory_slope"])?;
        w.write_record([fit.slope.to_string(), fit.stderr.to_string(), theory.to_string()])?;
    } else {
        w.write_record(["eps", "p_hat", "hits", "samples", "neglog", "neglog_lo", "neglog_hi"])?;
        for s in table {
            w.write_record([
                s.eps.to_string(),
                s.p_hat.to_string(),
                s.hits.to_string(),
                s.samples.to_string(),
                s.neglog.to_string(),
                s.neglog_lo.to_string(),
                s.neglog_hi.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_sample_prior(a: &SamplePriorArgs, seed: u64, out: Option<&Path>) -> Result<()> {
    let pr = &a.prior;
    let spec = match a.scheme {
        SchemeArg::Linear => ScalingSpec::linear(pr.p, pr.alpha, pr.d, a.n)?,
        SchemeArg::Dyadic => ScalingSpec::dyadic(pr.p, pr.alpha, a.levels)?,
    }
    .with_lambda(pr.lambda)?;
    let m = PExpMeasure::new(spec)?;
    if a.count > 1 && out.is_none() {
        bail!("--count above 1 needs --out");
    }
    for i in 0..a.count {
        let mut rng = substream(seed, &[i as u64]);
        let u = m.sample_prior(&mut rng);
        let suffix = if a.count > 1 { format!("_{i:04}") } else { String::new() };
        u.write_csv(sink(out, &format!("prior{suffix}.csv"))?)?;
        if let IndexScheme::Dyadic { max_level } = spec.scheme {
            let grid: Vec<f64> = (0..=1024).map(|j| j as f64 / 1024.0).collect();
            let vals = evaluate_function(&u, &WaveletBasis::new(max_level), &grid)?;
            let target: Box<dyn Write> = match out {
                Some(_) => sink(out, &format!("function{suffix}.csv"))?,
                None => {
                    println!();
                    Box::new(io::stdout().lock())
                }
            };
            let mut w = csv::Writer::from_writer(target);
            w.write_record(["x", "value"])?;
            for (x, v) in grid.iter().zip(vals) {
                w.write_record([x.to_string(), format!("{v:.16e}")])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn cmd_experiment(cli: &Cli, expected: ModelKind) -> Result<()> {
    let path = cli.config.as_ref().context("--config FILE is required")?;
    let text = fs::read_to_string(path).with_context(|| format!("{}", path.display()))?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if cfg.model != expected {
        bail!("config model does not match the subcommand");
    }
    if let Some(s) = cli.seed {
        cfg.master_seed = s;
    }
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    let res = run_contraction(&cfg, Some(&out))?;
    for w in &res.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&pexp_core::experiments::summary_json(&cfg, &res)?)?
    );
    Ok(())
}

fn cmd_inequalities(cli: &Cli) -> Result<bool> {
    let mut cfg = match &cli.config {
        Some(p) => serde_json::from_str::<InequalityConfig>(&fs::read_to_string(p)?)?,
        None => InequalityConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let rows = run_inequalities(&cfg)?;
    write_inequality_csv(&rows, sink(cli.out.as_deref(), "inequalities.csv")?)?;
    Ok(rows.iter().all(|r| r.verdict == Verdict::Pass))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    configure_threads(cli.threads)?;
    let seed = cli.seed.unwrap_or(0);
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Rate(a) => cmd_rate(a, out)?,
        Command::Conc(a) => cmd_conc(a, seed, out)?,
        Command::Smallball(a) => cmd_smallball(a, seed, out)?,
        Command::SamplePrior(a) => cmd_sample_prior(a, seed, out)?,
        Command::WnExperiment => cmd_experiment(&cli, ModelKind::WhiteNoise)?,
        Command::DeExperiment => cmd_experiment(&cli, ModelKind::Density)?,
        Command::CheckInequalities => {
            if !cmd_inequalities(&cli)? {
                eprintln!("some inequality checks failed");
                std::process::exit(2);
            }
        }
    }
    Ok(())
}
