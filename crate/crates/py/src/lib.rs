use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use pexp_core::concentration::{inf_term_exact, smallball_mc, BallNorm, SmallBallOptions};
use pexp_core::experiments::{run_contraction, summary_json, ExperimentConfig};
use pexp_core::measure::WaveletBasis;
use pexp_core::models::hellinger as hellinger_core;
use pexp_core::rates::{self, RateQuery, RateRegime};
use pexp_core::rng::seeded;
use pexp_core::{CoefVec, PExpMeasure, PExpParams, ScalingSpec};

fn py_err(e: pexp_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// The univariate p-exponential law.
#[pyclass(name = "PExp", frozen)]
struct PyPExp {
    inner: PExpParams,
}

#[pymethods]
impl PyPExp {
    #[new]
    fn new(p: f64) -> PyResult<Self> {
        Ok(Self {
            inner: PExpParams::new(p).map_err(py_err)?,
        })
    }

    #[getter]
    fn p(&self) -> f64 {
        self.inner.p()
    }

    fn pdf(&self, x: f64) -> f64 {
        self.inner.pdf(x)
    }

    fn cdf(&self, x: f64) -> f64 {
        self.inner.cdf(x)
    }

    fn quantile(&self, u: f64) -> PyResult<f64> {
        self.inner.quantile(u).map_err(py_err)
    }

    fn moment(&self, k: u32) -> f64 {
        self.inner.moment(k)
    }

    #[pyo3(signature = (n, seed=0))]
    fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = seeded(seed);
        (0..n).map(|_| self.inner.sample(&mut rng)).collect()
    }

    fn __repr__(&self) -> String {
        format!("PExp(p={})", self.inner.p())
    }
}

fn regime_dict<'py>(py: Python<'py>, r: &RateRegime) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("poly_exponent", r.poly_exponent.value)?;
    d.set_item("log_exponent", r.log_exponent.value)?;
    d.set_item("regime", r.regime.to_string())?;
    d.set_item("switch_point", r.switch_point)?;
    d.set_item("lambda_poly_exponent", r.lambda_poly_exponent.map(|e| e.value))?;
    d.set_item("lambda_log_exponent", r.lambda_log_exponent.map(|e| e.value))?;
    d.set_item("alpha", r.alpha)?;
    Ok(d)
}

/// Contraction exponent in L2 for an alpha-regular prior and a B^beta_q truth.
#[pyfunction]
#[pyo3(signature = (alpha, beta, p, q, d=1, rescaled=false))]
fn rate_l2<'py>(
    py: Python<'py>,
    alpha: f64,
    beta: f64,
    p: f64,
    q: f64,
    d: u32,
    rescaled: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let rq = RateQuery::new(alpha, beta, p, q, d);
    let r = if rescaled {
        rates::rate_l2_rescaled(&rq)
    } else {
        rates::rate_l2(&rq)
    }
    .map_err(py_err)?;
    regime_dict(py, &r)
}

/// Sup-norm exponents `(rho, rho_tilde, combined)`.
#[pyfunction]
fn rate_sup(alpha: f64, beta: f64, p: f64) -> PyResult<(f64, f64, f64)> {
    let s = rates::rate_sup(alpha, beta, p).map_err(py_err)?;
    Ok((s.rho.poly_exponent.value, s.rho_tilde.poly_exponent.value, s.combined.value))
}

#[pyfunction]
#[pyo3(signature = (beta, d=1))]
fn minimax(beta: f64, d: u32) -> f64 {
    rates::minimax(beta, d).value
}

#[pyfunction]
fn linear_minimax(beta: f64, q: f64) -> f64 {
    rates::linear_minimax(beta, q).value
}

/// `inf ||h||_Z^p` over the L2 ball of radius eps around w, with the minimizer.
#[pyfunction]
#[pyo3(signature = (w, eps, p, alpha, d=1, lam=1.0))]
fn inf_term(w: Vec<f64>, eps: f64, p: f64, alpha: f64, d: u32, lam: f64) -> PyResult<(f64, Vec<f64>)> {
    let spec = ScalingSpec::linear(p, alpha, d, w.len())
        .and_then(|s| s.with_lambda(lam))
        .map_err(py_err)?;
    let sol = inf_term_exact(&CoefVec::linear(w), eps, &spec).map_err(py_err)?;
    Ok((sol.value, sol.argmin.into_values()))
}

/// Monte Carlo `-log mu(eps B)` with its 95% interval.
#[pyfunction]
#[pyo3(signature = (p, alpha, eps, n=512, samples=100_000, seed=0, norm="l2"))]
#[allow(clippy::too_many_arguments)]
fn smallball(
    p: f64,
    alpha: f64,
    eps: f64,
    n: usize,
    samples: usize,
    seed: u64,
    norm: &str,
) -> PyResult<(f64, f64, f64)> {
    let norm: BallNorm = norm.parse().map_err(py_err)?;
    let (spec, basis) = match norm {
        BallNorm::L2 => (ScalingSpec::linear(p, alpha, 1, n), None),
        BallNorm::Sup => {
            let levels = n.max(2).ilog2() - 1;
            (ScalingSpec::dyadic(p, alpha, levels), Some(WaveletBasis::new(levels)))
        }
    };
    let m = PExpMeasure::new(spec.map_err(py_err)?).map_err(py_err)?;
    let opts = SmallBallOptions {
        samples,
        seed,
        ..Default::default()
    };
    let e = smallball_mc(&m, eps, norm, &opts, basis.as_ref()).map_err(py_err)?;
    Ok((e.neglog, e.neglog_lo, e.neglog_hi))
}

/// One prior draw in the dyadic scheme up to level `levels`.
#[pyfunction]
#[pyo3(signature = (p, alpha, levels, seed=0, lam=1.0))]
fn sample_prior(p: f64, alpha: f64, levels: u32, seed: u64, lam: f64) -> PyResult<Vec<f64>> {
    let spec = ScalingSpec::dyadic(p, alpha, levels)
        .and_then(|s| s.with_lambda(lam))
        .map_err(py_err)?;
    let m = PExpMeasure::new(spec).map_err(py_err)?;
    Ok(m.sample_prior(&mut seeded(seed)).into_values())
}

#[pyfunction]
fn hellinger(pi1: Vec<f64>, pi2: Vec<f64>, grid: Vec<f64>) -> PyResult<f64> {
    hellinger_core(&pi1, &pi2, &grid).map_err(py_err)
}

/// Run a contraction sweep from a JSON config; returns the summary as JSON text.
#[pyfunction]
#[pyo3(signature = (config_json, out=None))]
fn run_experiment(py: Python<'_>, config_json: &str, out: Option<String>) -> PyResult<String> {
    let cfg = ExperimentConfig::from_json(config_json).map_err(py_err)?;
    let res = py
        .detach(|| run_contraction(&cfg, out.as_deref().map(std::path::Path::new)))
        .map_err(py_err)?;
    let summary = summary_json(&cfg, &res).map_err(py_err)?;
    Ok(summary.to_string())
}

#[pymodule]
fn pexp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPExp>()?;
    m.add_function(wrap_pyfunction!(rate_l2, m)?)?;
    m.add_function(wrap_pyfunction!(rate_sup, m)?)?;
    m.add_function(wrap_pyfunction!(minimax, m)?)?;
    m.add_function(wrap_pyfunction!(linear_minimax, m)?)?;
    m.add_function(wrap_pyfunction!(inf_term, m)?)?;
    m.add_function(wrap_pyfunction!(smallball, m)?)?;
    m.add_function(wrap_pyfunction!(sample_prior, m)?)?;
    m.add_function(wrap_pyfunction!(hellinger, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
