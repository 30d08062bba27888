//! Coefficient vectors, scaling sequences and the norms used throughout:
//! ℓ₂, the weighted-ℓ_q Besov sequence norm, the shift-space norm and the
//! weighted ℓ_p norm of the decentering space.
//!
//! Dyadic vectors are stored level by level; coefficient `(k, l)` with
//! `1 <= l <= 2^k` sits at linear index `ℓ = 2^k + l - 1` (1-based).

use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IndexScheme {
    Linear { len: usize },
    Dyadic { max_level: u32 },
}

impl IndexScheme {
    pub fn len(&self) -> usize {
        match *self {
            IndexScheme::Linear { len } => len,
            IndexScheme::Dyadic { max_level } => (1usize << (max_level + 1)) - 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn label(&self) -> &'static str {
        match self {
            IndexScheme::Linear { .. } => "linear",
            IndexScheme::Dyadic { .. } => "dyadic",
        }
    }

    pub fn is_dyadic(&self) -> bool {
        matches!(self, IndexScheme::Dyadic { .. })
    }
}

impl fmt::Display for IndexScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexScheme::Linear { len } => write!(f, "linear(N={len})"),
            IndexScheme::Dyadic { max_level } => write!(f, "dyadic(K={max_level})"),
        }
    }
}

/// 1-based linear index of dyadic coefficient `(k, l)`.
#[inline]
pub fn dyadic_to_linear(k: u32, l: usize) -> usize {
    (1usize << k) + l - 1
}

/// Inverse of [`dyadic_to_linear`].
#[inline]
pub fn linear_to_dyadic(ell: usize) -> (u32, usize) {
    debug_assert!(ell >= 1);
    let k = usize::BITS - 1 - ell.leading_zeros();
    (k, ell - (1usize << k) + 1)
}

/// A finite coefficient vector together with its index scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefVec {
    scheme: IndexScheme,
    values: Vec<f64>,
}

impl CoefVec {
    pub fn linear(values: Vec<f64>) -> Self {
        Self {
            scheme: IndexScheme::Linear { len: values.len() },
            values,
        }
    }

    pub fn dyadic(max_level: u32, values: Vec<f64>) -> Result<Self> {
        let scheme = IndexScheme::Dyadic { max_level };
        if values.len() != scheme.len() {
            return Err(Error::SchemeMismatch {
                expected: format!("{} values for {scheme}", scheme.len()),
                found: format!("{} values", values.len()),
            });
        }
        Ok(Self { scheme, values })
    }

    pub fn zeros(scheme: IndexScheme) -> Self {
        Self {
            scheme,
            values: vec![0.0; scheme.len()],
        }
    }

    pub fn from_parts(scheme: IndexScheme, values: Vec<f64>) -> Result<Self> {
        match scheme {
            IndexScheme::Linear { len } if len == values.len() => Ok(Self::linear(values)),
            IndexScheme::Linear { .. } => Err(Error::SchemeMismatch {
                expected: scheme.to_string(),
                found: format!("{} values", values.len()),
            }),
            IndexScheme::Dyadic { max_level } => Self::dyadic(max_level, values),
        }
    }

    pub fn scheme(&self) -> IndexScheme {
        self.scheme
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Coefficients of dyadic level `k`.
    pub fn level(&self, k: u32) -> &[f64] {
        let start = (1usize << k) - 1;
        &self.values[start..start + (1usize << k)]
    }

    pub fn l2_norm(&self) -> f64 {
        l2_norm(&self.values)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            scheme: self.scheme,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// Zero-pad or cut to `len` entries, keeping a linear scheme.
    pub fn truncated_linear(&self, len: usize) -> Self {
        let mut v: Vec<f64> = self.values.iter().copied().take(len).collect();
        v.resize(len, 0.0);
        Self::linear(v)
    }

    pub fn ensure_same_scheme(&self, other: IndexScheme) -> Result<()> {
        if self.scheme == other {
            Ok(())
        } else {
            Err(Error::SchemeMismatch {
                expected: other.to_string(),
                found: self.scheme.to_string(),
            })
        }
    }

    /// CSV with columns `scheme,k,l,ell,value`; values carry 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["scheme", "k", "l", "ell", "value"])?;
        for (i, v) in self.values.iter().enumerate() {
            let ell = i + 1;
            let (k, l) = match self.scheme {
                IndexScheme::Dyadic { .. } => {
                    let (k, l) = linear_to_dyadic(ell);
                    (k.to_string(), l.to_string())
                }
                IndexScheme::Linear { .. } => (String::new(), String::new()),
            };
            w.write_record([
                self.scheme.label(),
                &k,
                &l,
                &ell.to_string(),
                &format!("{v:.16e}"),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut values = Vec::new();
        let mut scheme_label: Option<String> = None;
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            if rec.len() != 5 {
                return Err(Error::Parse(format!("row {row}: expected 5 columns")));
            }
            let label = rec[0].trim().to_string();
            match &scheme_label {
                None => scheme_label = Some(label),
                Some(s) if *s != label => {
                    return Err(Error::Parse(format!("row {row}: mixed schemes")));
                }
                _ => {}
            }
            let ell: usize = rec[3]
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("row {row}: bad ell")))?;
            if ell != row + 1 {
                return Err(Error::Parse(format!("row {row}: ell {ell} out of order")));
            }
            let v: f64 = rec[4]
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("row {row}: bad value")))?;
            values.push(v);
        }
        match scheme_label.as_deref() {
            None | Some("linear") => Ok(Self::linear(values)),
            Some("dyadic") => {
                let n = values.len() + 1;
                if !n.is_power_of_two() || n < 2 {
                    return Err(Error::Parse(format!(
                        "dyadic vector with {} entries",
                        values.len()
                    )));
                }
                Self::dyadic(n.trailing_zeros() - 1, values)
            }
            Some(other) => Err(Error::Parse(format!("unknown scheme `{other}`"))),
        }
    }
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Prior hyperparameters defining the scaling sequence γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingSpec {
    pub p: f64,
    pub alpha: f64,
    pub d: u32,
    pub lambda: f64,
    pub scheme: IndexScheme,
}

impl ScalingSpec {
    pub fn new(p: f64, alpha: f64, d: u32, lambda: f64, scheme: IndexScheme) -> Result<Self> {
        if !(1.0..=2.0).contains(&p) {
            return Err(Error::InvalidParameter {
                name: "p",
                value: p,
                reason: "must lie in [1, 2]",
            });
        }
        check_positive("alpha", alpha)?;
        check_positive("lambda", lambda)?;
        if d == 0 {
            return Err(Error::InvalidParameter {
                name: "d",
                value: 0.0,
                reason: "dimension must be at least 1",
            });
        }
        if scheme.is_dyadic() && d != 1 {
            return Err(Error::InvalidParameter {
                name: "d",
                value: d as f64,
                reason: "the dyadic scheme is one-dimensional",
            });
        }
        Ok(Self {
            p,
            alpha,
            d,
            lambda,
            scheme,
        })
    }

    pub fn linear(p: f64, alpha: f64, d: u32, len: usize) -> Result<Self> {
        Self::new(p, alpha, d, 1.0, IndexScheme::Linear { len })
    }

    pub fn dyadic(p: f64, alpha: f64, max_level: u32) -> Result<Self> {
        Self::new(p, alpha, 1, 1.0, IndexScheme::Dyadic { max_level })
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        check_positive("lambda", lambda)?;
        self.lambda = lambda;
        Ok(self)
    }

    pub fn with_scheme(mut self, scheme: IndexScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn len(&self) -> usize {
        self.scheme.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scheme.is_empty()
    }

    /// Unscaled (λ = 1) γ at 0-based position `i`.
    #[inline]
    pub fn base_gamma(&self, i: usize) -> f64 {
        match self.scheme {
            IndexScheme::Linear { .. } => {
                ((i + 1) as f64).powf(-0.5 - self.alpha / self.d as f64)
            }
            IndexScheme::Dyadic { .. } => {
                let (k, _) = linear_to_dyadic(i + 1);
                2f64.powf(-(0.5 + self.alpha) * k as f64)
            }
        }
    }

    #[inline]
    pub fn gamma(&self, i: usize) -> f64 {
        self.lambda * self.base_gamma(i)
    }

    pub fn sequence(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.gamma(i)).collect()
    }

    pub fn as_coefvec(&self) -> CoefVec {
        CoefVec {
            scheme: self.scheme,
            values: self.sequence(),
        }
    }
}

/// Smoothness `s`, integrability `q` (may be infinite) and dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesovParams {
    pub s: f64,
    pub q: f64,
    pub d: u32,
}

impl BesovParams {
    pub fn new(s: f64, q: f64, d: u32) -> Self {
        Self { s, q, d }
    }
}

/// `(Σ ℓ^{q(s/d+1/2)-1} |u_ℓ|^q)^{1/q}`, or `sup ℓ^{s/d+1/2}|u_ℓ|` for q = ∞.
pub fn besov_norm(u: &CoefVec, bp: BesovParams) -> Result<f64> {
    if !(bp.q >= 1.0) {
        return Err(Error::InvalidParameter {
            name: "q",
            value: bp.q,
            reason: "Besov integrability must be at least 1",
        });
    }
    let d = bp.d as f64;
    let e = bp.s / d + 0.5;
    if bp.q.is_infinite() {
        return Ok(u
            .values()
            .iter()
            .enumerate()
            .map(|(i, v)| ((i + 1) as f64).powf(e) * v.abs())
            .fold(0.0, f64::max));
    }
    let q = bp.q;
    let w = q * e - 1.0;
    let sum: f64 = u
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| (w * ((i + 1) as f64).ln() + q * v.abs().ln()).exp())
        .sum();
    Ok(sum.powf(1.0 / q))
}

/// `‖h‖_Z^p = Σ |h_ℓ / γ_ℓ|^p`.
pub fn z_norm_p(h: &CoefVec, spec: &ScalingSpec) -> Result<f64> {
    h.ensure_same_scheme(spec.scheme)?;
    let p = spec.p;
    let s: f64 = h
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| (v.abs() / spec.base_gamma(i)).powf(p))
        .sum();
    Ok(spec.lambda.powf(-p) * s)
}

/// `‖h‖_Q = (Σ h_ℓ² / γ_ℓ²)^{1/2}`.
pub fn q_norm(h: &CoefVec, spec: &ScalingSpec) -> Result<f64> {
    h.ensure_same_scheme(spec.scheme)?;
    let s: f64 = h
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| (v / spec.base_gamma(i)).powi(2))
        .sum();
    Ok(s.sqrt() / spec.lambda)
}

/// Whether `B^β_q` embeds into ℓ₂: `β > d/q - d/2`.
pub fn embedding_check(bp: BesovParams) -> bool {
    let d = bp.d as f64;
    bp.s > d / bp.q - d / 2.0
}

/// How the coefficients of a test truth are laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthProfile {
    /// One coefficient of magnitude `ℓ^{-β/d-1/2+1/q-δ}` at the start of every
    /// resolution block `ℓ = 2^{jd}`, zeros elsewhere.
    #[default]
    Sparse,
    /// Every coefficient at `ℓ^{-β/d-1/2-δ}`.
    Dense,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignPattern {
    #[default]
    Alternating,
    Positive,
    Supplied(Vec<f64>),
}

fn sparse_exponent(bp: BesovParams, delta: f64) -> f64 {
    bp.s / bp.d as f64 + 0.5 - 1.0 / bp.q + delta
}

fn is_block_start(ell: usize, d: u32) -> Option<u32> {
    if !ell.is_power_of_two() {
        return None;
    }
    let t = ell.trailing_zeros();
    (t % d == 0).then_some(t / d)
}

/// Test truth inside `B^β_q` with margin `δ`, in a linear scheme of length `n`.
pub fn make_truth(
    bp: BesovParams,
    delta: f64,
    n: usize,
    signs: &SignPattern,
    profile: TruthProfile,
) -> Result<CoefVec> {
    check_positive("delta", delta)?;
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: 0.0,
            reason: "truth needs at least one coefficient",
        });
    }
    if bp.d == 0 || !(bp.q >= 1.0) {
        return Err(Error::InvalidParameter {
            name: "q",
            value: bp.q,
            reason: "need q >= 1 and d >= 1",
        });
    }
    if let SignPattern::Supplied(s) = signs {
        if s.len() < n {
            return Err(Error::SchemeMismatch {
                expected: format!("{n} signs"),
                found: format!("{} signs", s.len()),
            });
        }
    }
    let mut values = vec![0.0; n];
    for (i, slot) in values.iter_mut().enumerate() {
        let ell = i + 1;
        let (mag, ordinal) = match profile {
            TruthProfile::Sparse => match is_block_start(ell, bp.d) {
                Some(j) => ((ell as f64).powf(-sparse_exponent(bp, delta)), j as usize),
                None => continue,
            },
            TruthProfile::Dense => (
                (ell as f64).powf(-bp.s / bp.d as f64 - 0.5 - delta),
                i,
            ),
        };
        let sign = match signs {
            SignPattern::Alternating => {
                if ordinal % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            SignPattern::Positive => 1.0,
            SignPattern::Supplied(s) => {
                if s[i] < 0.0 {
                    -1.0
                } else {
                    1.0
                }
            }
        };
        *slot = sign * mag;
    }
    Ok(CoefVec::linear(values))
}

/// Smallest length at which the squared ℓ₂ tail of the truth drops below
/// `rel_tol` times its squared norm.
pub fn truth_length(bp: BesovParams, delta: f64, profile: TruthProfile, rel_tol: f64) -> Result<usize> {
    check_positive("delta", delta)?;
    check_positive("rel_tol", rel_tol)?;
    let d = bp.d as f64;
    match profile {
        TruthProfile::Sparse => {
            let b = sparse_exponent(bp, delta);
            if b <= 0.0 {
                return Err(Error::OutsideHypotheses(format!(
                    "truth is not square summable (exponent {b})"
                )));
            }
            // spikes at 2^{jd} with squared size r^j, r = 2^{-2db}
            let r = 2f64.powf(-2.0 * d * b);
            let mut j = 0u32;
            while r.powi(j as i32 + 1) > rel_tol {
                j += 1;
            }
            let shift = j * bp.d;
            if shift >= 62 {
                return Err(Error::Degenerate("truth length overflows".into()));
            }
            Ok(1usize << shift)
        }
        TruthProfile::Dense => {
            let a2 = 2.0 * (bp.s / d + 0.5 + delta);
            if a2 <= 1.0 {
                return Err(Error::OutsideHypotheses(format!(
                    "truth is not square summable (exponent {})",
                    a2 / 2.0
                )));
            }
            // tail ≤ N^{1-a2}/(a2-1) and total ≥ 1
            let n = ((rel_tol * (a2 - 1.0)).ln() / (1.0 - a2)).exp().ceil();
            if n > 1e9 {
                return Err(Error::Degenerate(format!("truth length {n:.3e} too large")));
            }
            Ok((n as usize).max(1))
        }
    }
}

/// Dyadic truth at the edge of the Hölder–Zygmund class: `w_{kl} = c·(±1)·2^{-k(1/2+β)}`.
pub fn make_holder_truth(beta: f64, max_level: u32, amplitude: f64) -> Result<CoefVec> {
    check_positive("beta", beta)?;
    let scheme = IndexScheme::Dyadic { max_level };
    let values = (1..=scheme.len())
        .map(|ell| {
            let (k, l) = linear_to_dyadic(ell);
            let sign = if (l + k as usize) % 2 == 0 { -1.0 } else { 1.0 };
            amplitude * sign * 2f64.powf(-(0.5 + beta) * k as f64)
        })
        .collect();
    CoefVec::dyadic(max_level, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_map_round_trips() {
        for ell in 1..5000 {
            let (k, l) = linear_to_dyadic(ell);
            assert!(l >= 1 && l <= 1 << k);
            assert_eq!(dyadic_to_linear(k, l), ell);
        }
        assert_eq!(IndexScheme::Dyadic { max_level: 3 }.len(), 15);
    }

    #[test]
    fn unit_vector_has_unit_besov_norm() {
        let mut v = vec![0.0; 10];
        v[0] = 1.0;
        let u = CoefVec::linear(v);
        for (s, q) in [(0.3, 1.0), (2.0, 2.0), (-1.0, 3.5), (1.0, f64::INFINITY)] {
            assert!((besov_norm(&u, BesovParams::new(s, q, 2)).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn besov_matches_direct_sum() {
        let n = 10_000;
        let u = CoefVec::linear((1..=n).map(|l| 1.0 / l as f64).collect());
        let direct: f64 = (1..=n).map(|l| (l as f64).powf(-1.2)).sum();
        let v = besov_norm(&u, BesovParams::new(0.4, 2.0, 1)).unwrap();
        assert!((v * v - direct).abs() < 1e-12 * direct);
        assert!(besov_norm(&u, BesovParams::new(0.4, 0.5, 1)).is_err());
    }

    #[test]
    fn z_norm_identities() {
        let spec = ScalingSpec::linear(1.5, 1.0, 1, 20).unwrap();
        let g = spec.as_coefvec();
        assert!((z_norm_p(&g, &spec).unwrap() - 20.0).abs() < 1e-12);
        assert!((q_norm(&g, &spec).unwrap() - 20f64.sqrt()).abs() < 1e-12);
        assert_eq!(z_norm_p(&CoefVec::zeros(spec.scheme), &spec).unwrap(), 0.0);
        let h = CoefVec::linear((0..20).map(|i| (i as f64).sin()).collect());
        let b = besov_norm(&h, BesovParams::new(1.0 + 1.0 / 1.5, 1.5, 1)).unwrap();
        assert!((z_norm_p(&h, &spec).unwrap() - b.powf(1.5)).abs() < 1e-10);
        let s2 = spec.with_lambda(2.0).unwrap();
        let ratio = z_norm_p(&h, &s2).unwrap() / z_norm_p(&h, &spec).unwrap();
        assert!((ratio - 2f64.powf(-1.5)).abs() < 1e-14);
    }

    #[test]
    fn dyadic_and_linear_scalings_are_equivalent() {
        let alpha = 0.7;
        let dy = ScalingSpec::dyadic(1.0, alpha, 8).unwrap();
        let li = ScalingSpec::linear(1.0, alpha, 1, dy.len()).unwrap();
        let bound = 2f64.powf(0.5 + alpha);
        for i in 0..dy.len() {
            let r = dy.gamma(i) / li.gamma(i);
            assert!(r <= bound * (1.0 + 1e-12) && r >= (1.0 - 1e-12) / bound);
        }
    }

    #[test]
    fn embedding_examples() {
        assert!(embedding_check(BesovParams::new(0.1, 2.0, 1)));
        assert!(!embedding_check(BesovParams::new(0.4, 1.0, 1)));
        assert!(embedding_check(BesovParams::new(-0.2, 4.0, 1)));
    }

    #[test]
    fn sparse_truth_has_expected_entries() {
        let bp = BesovParams::new(1.0, 2.0, 1);
        let w = make_truth(bp, 0.05, 64, &SignPattern::Alternating, TruthProfile::Sparse).unwrap();
        for (i, v) in w.values().iter().enumerate() {
            let ell = i + 1;
            if ell.is_power_of_two() {
                assert!((v.abs() - (ell as f64).powf(-1.05)).abs() < 1e-15);
            } else {
                assert_eq!(*v, 0.0);
            }
        }
        assert!(w.values()[0] > 0.0 && w.values()[1] < 0.0);
        assert!(make_truth(bp, 0.0, 4, &SignPattern::Positive, TruthProfile::Sparse).is_err());
    }

    #[test]
    fn large_margin_truth_is_almost_unit() {
        let bp = BesovParams::new(1.0, 2.0, 1);
        let w = make_truth(bp, 5.0, 128, &SignPattern::Alternating, TruthProfile::Sparse).unwrap();
        let b = besov_norm(&w, bp).unwrap();
        assert!((b - 1.0).abs() < 1e-3);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let u = CoefVec::dyadic(3, (0..15).map(|i| (i as f64 * 0.37).exp() / 3.0).collect()).unwrap();
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        let back = CoefVec::read_csv(buf.as_slice()).unwrap();
        assert_eq!(u, back);
        let lin = CoefVec::linear(vec![1e-300, -std::f64::consts::PI, 0.1]);
        let mut buf = Vec::new();
        lin.write_csv(&mut buf).unwrap();
        assert_eq!(CoefVec::read_csv(buf.as_slice()).unwrap(), lin);
    }
}
