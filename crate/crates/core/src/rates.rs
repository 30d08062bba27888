//! Closed-form contraction-rate exponents and regime boundaries.
//!
//! A rate is reported as `n^{-poly} · log^{log} n`.  Whenever every input is a
//! rational with a small denominator the exponent is also computed in exact
//! rational arithmetic, so regime boundaries and benchmark values can be
//! compared without rounding.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_rational::Ratio;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

pub type Rational = Ratio<i128>;

const MAX_DENOM: i128 = 10_000;

/// Best rational with denominator at most 10⁴ that reproduces `x` exactly in f64.
pub fn to_rational(x: f64) -> Option<Rational> {
    if !x.is_finite() || x.abs() > 1e9 {
        return None;
    }
    // continued fraction convergents
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut r = x;
    for _ in 0..40 {
        let a = r.floor();
        let ai = a as i128;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 > MAX_DENOM {
            return None;
        }
        if (h2 as f64) / (k2 as f64) == x {
            return Some(Rational::new(h2, k2));
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        let frac = r - a;
        if frac == 0.0 {
            return None;
        }
        r = 1.0 / frac;
    }
    None
}

fn rat_to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Field operations shared by f64 and exact rationals.
pub trait Scalar:
    Copy
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn int(v: i64) -> Self;
    fn value(self) -> f64;
}

impl Scalar for f64 {
    fn int(v: i64) -> Self {
        v as f64
    }
    fn value(self) -> f64 {
        self
    }
}

impl Scalar for Rational {
    fn int(v: i64) -> Self {
        Rational::from_integer(v as i128)
    }
    fn value(self) -> f64 {
        rat_to_f64(self)
    }
}

/// An exponent with its exact rational value when one is available.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponent {
    pub value: f64,
    pub exact: Option<Rational>,
}

impl Exponent {
    pub fn real(value: f64) -> Self {
        Self { value, exact: None }
    }

    pub fn exact(r: Rational) -> Self {
        Self {
            value: rat_to_f64(r),
            exact: Some(r),
        }
    }

    pub fn zero() -> Self {
        Self::exact(Rational::from_integer(0))
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exact {
            Some(r) => write!(f, "{r}"),
            None => write!(f, "{}", self.value),
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Prior at least as smooth as the switch point: approximation term dominates.
    Oversmoothing,
    /// Prior rougher than the switch point: rate limited by prior regularity.
    Undersmoothing,
    RescaledMinimax,
    RescaledLogLoss,
    RescaledLinearBest,
    RescaledGeneral,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok();
        let label = s.as_ref().and_then(|v| v.as_str()).unwrap_or("unknown");
        f.write_str(label)
    }
}

/// A closed-form rate `n^{-poly}·log^{log} n`, optionally with a rescaling schedule
/// `λ_n = n^{-lambda_poly}·log^{lambda_log} n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateRegime {
    pub poly_exponent: Exponent,
    pub log_exponent: Exponent,
    pub regime: Regime,
    pub switch_point: Option<f64>,
    pub lambda_poly_exponent: Option<Exponent>,
    pub lambda_log_exponent: Option<Exponent>,
    /// Prior regularity at which the reported rate is attained, when the result prescribes one.
    pub alpha: Option<f64>,
}

impl RateRegime {
    fn plain(poly: Exponent, regime: Regime, switch_point: Option<f64>) -> Self {
        Self {
            poly_exponent: poly,
            log_exponent: Exponent::zero(),
            regime,
            switch_point,
            lambda_poly_exponent: None,
            lambda_log_exponent: None,
            alpha: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct RateQuery {
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub q: f64,
    pub d: u32,
}

impl RateQuery {
    pub fn new(alpha: f64, beta: f64, p: f64, q: f64, d: u32) -> Self {
        Self {
            alpha,
            beta,
            p,
            q,
            d,
        }
    }

    fn basic_checks(&self, need_alpha: bool) -> Result<()> {
        if need_alpha && !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Degenerate(format!("alpha = {} must be positive", self.alpha)));
        }
        if !(1.0..=2.0).contains(&self.p) {
            return Err(Error::Degenerate(format!("p = {} outside [1, 2]", self.p)));
        }
        if !(self.q >= 1.0) {
            return Err(Error::Degenerate(format!("q = {} below 1", self.q)));
        }
        if self.d == 0 {
            return Err(Error::Degenerate("d must be at least 1".into()));
        }
        if !self.beta.is_finite() {
            return Err(Error::Degenerate(format!("beta = {}", self.beta)));
        }
        Ok(())
    }

    fn exact(&self) -> Option<[Rational; 5]> {
        Some([
            to_rational(self.alpha)?,
            to_rational(self.beta)?,
            to_rational(self.p)?,
            to_rational(self.q)?,
            Rational::from_integer(self.d as i128),
        ])
    }

    fn floats(&self) -> [f64; 5] {
        [self.alpha, self.beta, self.p, self.q, self.d as f64]
    }
}

/// Which leg of the ℓ₂ rate applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum L2Case {
    LargeQ,
    SmallQSmallP,
    SmallQLargeP,
}

fn l2_case(p: f64, q: f64) -> L2Case {
    if q >= 2.0 {
        L2Case::LargeQ
    } else if p <= q {
        L2Case::SmallQSmallP
    } else {
        L2Case::SmallQLargeP
    }
}

/// `a²` of the ℓ₂ rate (cases ii and iii).
fn a_squared<T: Scalar>(case: L2Case, beta: T, p: T, q: T, d: T) -> T {
    let two = T::int(2);
    let four = T::int(4);
    match case {
        L2Case::SmallQSmallP => {
            two * beta * d * p + beta * beta * p * p + d * d * (T::int(1) + two * p - four * p / q)
        }
        L2Case::SmallQLargeP => {
            (two * beta * d * q * (two * q - p) + beta * beta * p * q * q
                + d * d * (p + two * q * q - four * q))
                / p
        }
        L2Case::LargeQ => T::int(0),
    }
}

fn leg_approx<T: Scalar>(case: L2Case, alpha: T, beta: T, p: T, q: T, d: T) -> T {
    let two = T::int(2);
    let four = T::int(4);
    match case {
        L2Case::LargeQ => beta / (d + two * beta + p * (alpha - beta)),
        L2Case::SmallQSmallP => {
            (two * beta * q + d * (q - two))
                / (four * d * (q - T::int(1)) + four * beta * q + two * p * q * (alpha - beta))
        }
        L2Case::SmallQLargeP => {
            (two * beta * q + d * (q - two))
                / (two * d * (p + q - two) + four * beta * q + two * p * q * (alpha - beta))
        }
    }
}

fn leg_regularity<T: Scalar>(alpha: T, d: T) -> T {
    alpha / (d + T::int(2) * alpha)
}

/// True when α is at or above the switch point; exact for rationals.
fn at_or_above_switch<T: Scalar>(case: L2Case, alpha: T, beta: T, p: T, q: T, d: T) -> bool {
    let two = T::int(2);
    match case {
        L2Case::LargeQ => alpha >= beta,
        L2Case::SmallQSmallP => {
            // α ≥ (βp − d + a)/(2p)  ⟺  2pα − βp + d ≥ a
            let lhs = two * p * alpha - beta * p + d;
            lhs >= T::int(0) && lhs * lhs >= a_squared(case, beta, p, q, d)
        }
        L2Case::SmallQLargeP => {
            let lhs = two * q * alpha - beta * q + d;
            lhs >= T::int(0) && lhs * lhs >= a_squared(case, beta, p, q, d)
        }
    }
}

fn validate_l2(rq: &RateQuery) -> Result<()> {
    rq.basic_checks(true)?;
    let d = rq.d as f64;
    let floor = (d / rq.q - d / 2.0).max(0.0);
    if !(rq.beta > floor) {
        return Err(Error::OutsideHypotheses(format!(
            "the l2 rates need beta > max(0, d/q - d/2) = {floor}, got {}",
            rq.beta
        )));
    }
    Ok(())
}

/// The switch point of the ℓ₂ rate: the α at which both legs meet.
pub fn l2_switch_point(beta: f64, p: f64, q: f64, d: u32) -> f64 {
    let d = d as f64;
    let case = l2_case(p, q);
    match case {
        L2Case::LargeQ => beta,
        L2Case::SmallQSmallP => (beta * p - d + a_squared(case, beta, p, q, d).sqrt()) / (2.0 * p),
        L2Case::SmallQLargeP => (beta * q - d + a_squared(case, beta, p, q, d).sqrt()) / (2.0 * q),
    }
}

/// Both legs evaluated at `alpha` in floating point: (approximation leg, regularity leg).
pub fn l2_legs(rq: &RateQuery) -> (f64, f64) {
    let [a, b, p, q, d] = rq.floats();
    let case = l2_case(p, q);
    (leg_approx(case, a, b, p, q, d), leg_regularity(a, d))
}

/// ℓ₂ contraction rate for an α-regular p-exponential prior and a `B^β_q` truth.
pub fn rate_l2(rq: &RateQuery) -> Result<RateRegime> {
    validate_l2(rq)?;
    let case = l2_case(rq.p, rq.q);
    let above = match rq.exact() {
        Some([a, b, p, q, d]) => at_or_above_switch(case, a, b, p, q, d),
        None => {
            let [a, b, p, q, d] = rq.floats();
            at_or_above_switch(case, a, b, p, q, d)
        }
    };
    let switch = l2_switch_point(rq.beta, rq.p, rq.q, rq.d);
    let rate = if above {
        let e = match rq.exact() {
            Some([a, b, p, q, d]) => Exponent::exact(leg_approx(case, a, b, p, q, d)),
            None => {
                let [a, b, p, q, d] = rq.floats();
                Exponent::real(leg_approx(case, a, b, p, q, d))
            }
        };
        RateRegime::plain(e, Regime::Oversmoothing, Some(switch))
    } else {
        let e = match rq.exact() {
            Some([a, _, _, _, d]) => Exponent::exact(leg_regularity(a, d)),
            None => Exponent::real(leg_regularity(rq.alpha, rq.d as f64)),
        };
        RateRegime::plain(e, Regime::Undersmoothing, Some(switch))
    };
    Ok(rate)
}

/// Blow-up of the approximation term `inf ‖h‖_Z^p` over the ε-ball around a `B^β_q`
/// truth: `ε^{-power}·log^{log_power}(1/ε)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxExponent {
    pub power: f64,
    pub log_power: f64,
}

pub fn approximation_exponent(alpha: f64, beta: f64, p: f64, q: f64, d: u32) -> Result<ApproxExponent> {
    let rq = RateQuery::new(alpha, beta, p, q, d);
    validate_l2(&rq)?;
    let d = d as f64;
    let bounded = ApproxExponent {
        power: 0.0,
        log_power: 0.0,
    };
    let e = if q <= p {
        if beta >= alpha + d / q {
            bounded
        } else {
            ApproxExponent {
                power: -2.0 * p * ((beta - alpha) * q - d) / ((2.0 * beta + d) * q - 2.0 * d),
                log_power: 0.0,
            }
        }
    } else {
        let edge = alpha + d / p;
        if beta > edge {
            bounded
        } else if beta == edge {
            ApproxExponent {
                power: 0.0,
                log_power: (q - p) / q,
            }
        } else if q >= 2.0 {
            ApproxExponent {
                power: -(beta * p - alpha * p - d) / beta,
                log_power: 0.0,
            }
        } else {
            ApproxExponent {
                power: -2.0 * q * ((beta - alpha) * p - d) / ((2.0 * beta + d) * q - 2.0 * d),
                log_power: 0.0,
            }
        }
    };
    Ok(e)
}

/// Rate obtained by balancing the approximation exponent against the small-ball
/// exponent `d/α` directly: `ε_n = n^{-1/(2 + max(s, d/α))}`.
pub fn rate_l2_balanced(rq: &RateQuery) -> Result<f64> {
    let s = approximation_exponent(rq.alpha, rq.beta, rq.p, rq.q, rq.d)?;
    let d = rq.d as f64;
    Ok(1.0 / (2.0 + s.power.max(d / rq.alpha)))
}

/// Best rate over λ for a rescaled prior with fixed α:
/// `ε_n = n^{-1/(2 + d(p+s)/(d+αp))}` with `λ_n = ε_n^{(d-αs)/(d+αp)}`.
pub fn rate_l2_rescaled_at_alpha(rq: &RateQuery) -> Result<RateRegime> {
    validate_l2(rq)?;
    let s = approximation_exponent(rq.alpha, rq.beta, rq.p, rq.q, rq.d)?;
    let (a, p, d) = (rq.alpha, rq.p, rq.d as f64);
    let poly = 1.0 / (2.0 + d * (p + s.power) / (d + a * p));
    let lambda = poly * (d - a * s.power) / (d + a * p);
    Ok(RateRegime {
        poly_exponent: Exponent::real(poly),
        log_exponent: Exponent::real(0.0),
        regime: Regime::RescaledGeneral,
        switch_point: None,
        lambda_poly_exponent: Some(Exponent::real(lambda)),
        lambda_log_exponent: Some(Exponent::real(0.0)),
        alpha: Some(a),
    })
}

/// Rate and rescaling schedule for a rescaled prior, at the α it prescribes.
///
/// The α field of the query is ignored; the returned `alpha` is `β − d/p` for
/// `q ≥ p` and `β − d/q` for `q < p`.
pub fn rate_l2_rescaled(rq: &RateQuery) -> Result<RateRegime> {
    rq.basic_checks(false)?;
    if !(rq.q < 2.0) {
        return Err(Error::OutsideHypotheses(format!(
            "the rescaled rates need q in [1, 2), got {}",
            rq.q
        )));
    }
    let d = rq.d as f64;
    let floor = (d / rq.p).max(d / rq.q);
    if !(rq.beta > floor) {
        return Err(Error::OutsideHypotheses(format!(
            "the rescaled rates need beta > d/p ∨ d/q = {floor}, got {}",
            rq.beta
        )));
    }
    let exact = rq.exact();
    let pick = |fr: &dyn Fn([Rational; 5]) -> Rational, ff: &dyn Fn([f64; 5]) -> f64| match exact {
        Some(x) => Exponent::exact(fr(x)),
        None => Exponent::real(ff(rq.floats())),
    };
    let two_r = Rational::from_integer(2);
    let rate = if rq.q == rq.p {
        RateRegime {
            poly_exponent: pick(&|[_, b, _, _, d]| b / (d + two_r * b), &|[_, b, _, _, d]| {
                b / (d + 2.0 * b)
            }),
            log_exponent: Exponent::zero(),
            regime: Regime::RescaledMinimax,
            switch_point: None,
            lambda_poly_exponent: Some(pick(
                &|[_, b, p, _, d]| d / (p * (d + two_r * b)),
                &|[_, b, p, _, d]| d / (p * (d + 2.0 * b)),
            )),
            lambda_log_exponent: Some(Exponent::zero()),
            alpha: Some(rq.beta - d / rq.p),
        }
    } else if rq.q > rq.p {
        RateRegime {
            poly_exponent: pick(&|[_, b, _, _, d]| b / (d + two_r * b), &|[_, b, _, _, d]| {
                b / (d + 2.0 * b)
            }),
            log_exponent: pick(
                &|[_, b, p, q, d]| d * (q - p) / (p * q * (d + two_r * b)),
                &|[_, b, p, q, d]| d * (q - p) / (p * q * (d + 2.0 * b)),
            ),
            regime: Regime::RescaledLogLoss,
            switch_point: None,
            lambda_poly_exponent: Some(pick(
                &|[_, b, p, _, d]| d / (p * (d + two_r * b)),
                &|[_, b, p, _, d]| d / (p * (d + 2.0 * b)),
            )),
            lambda_log_exponent: Some(pick(
                &|[_, b, p, q, d]| (p - two_r * d / (d + two_r * b)) * (q - p) / (p * p * q),
                &|[_, b, p, q, d]| (p - 2.0 * d / (d + 2.0 * b)) * (q - p) / (p * p * q),
            )),
            alpha: Some(rq.beta - d / rq.p),
        }
    } else {
        RateRegime {
            poly_exponent: pick(
                &|[_, b, p, q, d]| {
                    (b * p * q - d * (p - q)) / (two_r * d * (q - p) + two_r * b * p * q + p * q * d)
                },
                &|[_, b, p, q, d]| {
                    (b * p * q - d * (p - q)) / (2.0 * d * (q - p) + 2.0 * b * p * q + p * q * d)
                },
            ),
            log_exponent: Exponent::zero(),
            regime: Regime::RescaledLinearBest,
            switch_point: None,
            lambda_poly_exponent: Some(pick(
                &|[_, b, p, q, d]| {
                    q * d / (two_r * q * d + two_r * b * p * q - two_r * p * d + p * q * d)
                },
                &|[_, b, p, q, d]| q * d / (2.0 * q * d + 2.0 * b * p * q - 2.0 * p * d + p * q * d),
            )),
            lambda_log_exponent: Some(Exponent::zero()),
            alpha: Some(rq.beta - d / rq.q),
        }
    };
    Ok(rate)
}

/// Sup-norm rates of the wavelet-prior section: `ρ` and the second sequence `ρ̃`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupRates {
    pub rho: RateRegime,
    pub rho_tilde: RateRegime,
    /// Decay exponent of `ρ ∨ ρ̃`; may be non-positive when ρ̃ does not decay.
    pub combined: Exponent,
}

fn rho_leg<T: Scalar>(alpha: T, beta: T, p: T) -> (T, T) {
    let one = T::int(1);
    let two = T::int(2);
    let eight = T::int(8);
    if beta <= alpha {
        let den = one + two * beta + p * (alpha - beta);
        let rho = beta / den;
        let tilde = p * beta / (two * den) - (two - p) * (one - two * alpha) / (eight * alpha);
        (rho, tilde)
    } else {
        let rho = alpha / (one + two * alpha);
        let tilde = (eight * alpha * alpha - two + p) / (eight * alpha * (one + two * alpha));
        (rho, tilde)
    }
}

pub fn rate_sup(alpha: f64, beta: f64, p: f64) -> Result<SupRates> {
    let rq = RateQuery::new(alpha, beta, p, 2.0, 1);
    rq.basic_checks(true)?;
    if !(beta > 0.0) {
        return Err(Error::OutsideHypotheses(format!(
            "the sup-norm rates need beta > 0, got {beta}"
        )));
    }
    let (rho, tilde) = match rq.exact() {
        Some([a, b, p, _, _]) => {
            let (r, t) = rho_leg(a, b, p);
            (Exponent::exact(r), Exponent::exact(t))
        }
        None => {
            let (r, mut t) = rho_leg(alpha, beta, p);
            if beta > alpha {
                // single rounding keeps the sign of 8α² − (2 − p) exact
                t = (8.0 * alpha).mul_add(alpha, p - 2.0) / (8.0 * alpha * (1.0 + 2.0 * alpha));
            }
            (Exponent::real(r), Exponent::real(t))
        }
    };
    let regime = if beta <= alpha {
        Regime::Oversmoothing
    } else {
        Regime::Undersmoothing
    };
    let combined = if tilde.value < rho.value { tilde } else { rho };
    Ok(SupRates {
        rho: RateRegime::plain(rho, regime, Some(beta)),
        rho_tilde: RateRegime::plain(tilde, regime, Some(beta)),
        combined,
    })
}

/// Minimax exponent `β/(d+2β)`.
pub fn minimax(beta: f64, d: u32) -> Exponent {
    match to_rational(beta) {
        Some(b) => {
            let d = Rational::from_integer(d as i128);
            Exponent::exact(b / (d + Rational::from_integer(2) * b))
        }
        None => Exponent::real(beta / (d as f64 + 2.0 * beta)),
    }
}

/// Linear-minimax exponent `(β − γ̄/2)/(1 + 2β − γ̄)` with `γ̄ = (2−q)/q`; equals the
/// minimax exponent (d = 1) for `q ≥ 2`.
pub fn linear_minimax(beta: f64, q: f64) -> Exponent {
    if q >= 2.0 {
        return minimax(beta, 1);
    }
    let f = |b: f64, q: f64| {
        let g = (2.0 - q) / q;
        (b - g / 2.0) / (1.0 + 2.0 * b - g)
    };
    match (to_rational(beta), to_rational(q)) {
        (Some(b), Some(q)) => {
            let two = Rational::from_integer(2);
            let one = Rational::from_integer(1);
            let g = (two - q) / q;
            Exponent::exact((b - g / two) / (one + two * b - g))
        }
        _ => Exponent::real(f(beta, q)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i128, d: i128) -> Option<Rational> {
        Some(Rational::new(n, d))
    }

    #[test]
    fn rational_conversion() {
        assert_eq!(to_rational(0.5), r(1, 2));
        assert_eq!(to_rational(1.5), r(3, 2));
        assert_eq!(to_rational(0.1), r(1, 10));
        assert_eq!(to_rational(-2.25), r(-9, 4));
        assert_eq!(to_rational(std::f64::consts::PI), None);
        assert_eq!(to_rational(2f64.sqrt()), None);
    }

    #[test]
    fn l2_reference_values() {
        let e = rate_l2(&RateQuery::new(1.0, 1.0, 2.0, 2.0, 1)).unwrap();
        assert_eq!(e.poly_exponent.exact, r(1, 3));
        for p in [1.0, 1.5, 2.0] {
            let e = rate_l2(&RateQuery::new(0.5, 1.0, p, 2.0, 1)).unwrap();
            assert_eq!(e.poly_exponent.exact, r(1, 4));
            assert_eq!(e.regime, Regime::Undersmoothing);
        }
    }

    #[test]
    fn switch_point_witness() {
        let sw = l2_switch_point(2.0, 1.0, 1.0, 1);
        assert!((sw - (1.0 + 7f64.sqrt()) / 2.0).abs() < 1e-15);
        assert!(sw > 1.5 && sw < 2.0);
        let (a, b) = l2_legs(&RateQuery::new(sw, 2.0, 1.0, 1.0, 1));
        assert!((a - b).abs() < 1e-12);
        assert!((a - 0.392375).abs() < 1e-6);
    }

    #[test]
    fn rescaled_reference_values() {
        let e = rate_l2_rescaled(&RateQuery::new(1.0, 2.0, 1.0, 1.0, 1)).unwrap();
        assert_eq!(e.poly_exponent.exact, r(2, 5));
        assert_eq!(e.log_exponent.exact, r(0, 1));
        assert_eq!(e.lambda_poly_exponent.unwrap().exact, r(1, 5));
        let e = rate_l2_rescaled(&RateQuery::new(1.0, 2.0, 1.0, 1.5, 1)).unwrap();
        assert_eq!(e.log_exponent.exact, r(1, 15));
        let e = rate_l2_rescaled(&RateQuery::new(1.0, 2.0, 2.0, 1.0, 1)).unwrap();
        assert_eq!(e.poly_exponent.exact, r(3, 8));
        assert_eq!(linear_minimax(2.0, 1.0).exact, r(3, 8));
        assert!(rate_l2_rescaled(&RateQuery::new(1.0, 2.0, 1.0, 2.0, 1)).is_err());
    }

    #[test]
    fn rescaled_general_route_matches_closed_form() {
        for (p, q, beta) in [(1.0, 1.0, 2.0), (1.5, 1.5, 3.0), (2.0, 1.0, 2.0), (1.5, 1.2, 2.5)] {
            let prop = rate_l2_rescaled(&RateQuery::new(1.0, beta, p, q, 1)).unwrap();
            let alpha = prop.alpha.unwrap();
            let gen = rate_l2_rescaled_at_alpha(&RateQuery::new(alpha, beta, p, q, 1)).unwrap();
            assert!((gen.poly_exponent.value - prop.poly_exponent.value).abs() < 1e-12);
            let lp = prop.lambda_poly_exponent.unwrap().value;
            assert!((gen.lambda_poly_exponent.unwrap().value - lp).abs() < 1e-12);
        }
    }

    #[test]
    fn sup_reference_values() {
        let s = rate_sup(1.0, 1.0, 1.0).unwrap();
        assert_eq!(s.rho.poly_exponent.exact, r(1, 3));
        assert_eq!(s.rho_tilde.poly_exponent.exact, r(7, 24));
        assert_eq!(s.combined.exact, r(7, 24));
    }

    #[test]
    fn minimax_values() {
        assert_eq!(minimax(1.0, 1).exact, r(1, 3));
        assert_eq!(linear_minimax(1.0, 2.0), minimax(1.0, 1));
        assert_eq!(linear_minimax(1.3, 3.0), minimax(1.3, 1));
    }

    #[test]
    fn hypotheses_are_enforced() {
        assert!(matches!(
            rate_l2(&RateQuery::new(1.0, 0.4, 1.0, 1.0, 1)),
            Err(Error::OutsideHypotheses(_))
        ));
        assert!(matches!(
            rate_l2(&RateQuery::new(0.0, 1.0, 1.0, 2.0, 1)),
            Err(Error::Degenerate(_))
        ));
    }
}
