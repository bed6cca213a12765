//! Non-recoverability conditions.
//!
//! Each condition compares a model statistic (`lhs`) with a bound depending
//! on `n` (`rhs`). Whenever `lhs <= rhs`, every estimator of the labels errs
//! with probability at least 1/2. All logarithms are natural.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{norm, ModelKind, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub model: ModelKind,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs <= rhs`: the proven non-recoverable regime.
    pub nonrecoverable: bool,
    /// `lhs < rhs`, for callers that need to tell equality apart.
    pub strictly_below: bool,
}

impl ThresholdReport {
    fn new(model: ModelKind, lhs: f64, rhs: f64) -> Self {
        ThresholdReport {
            model,
            lhs,
            rhs,
            nonrecoverable: lhs <= rhs,
            strictly_below: lhs < rhs,
        }
    }
}

fn check_n(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::range("n", format!("need at least 2 nodes, got {n}")));
    }
    Ok(n as f64)
}

fn check_unit(field: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::range(field, format!("{x} not in (0, 1)")))
    }
}

fn check_pq(p: f64, q: f64) -> Result<()> {
    check_unit("p", p)?;
    check_unit("q", q)?;
    if q >= p {
        return Err(Error::range("q", "q<p violated"));
    }
    Ok(())
}

/// `2 ln2 / n - 4 ln2 / n²`, shared by the static block model and the ERGM.
fn static_rhs(n: f64) -> f64 {
    2.0 * LN_2 / n - 4.0 * LN_2 / (n * n)
}

/// `(4σ² + 1)^{-1-d/2} |μ|²`, shared by both latent space conditions.
fn latent_lhs(d: usize, mu: &[f64], sigma: f64) -> Result<f64> {
    ModelSpec::Lsm {
        d,
        mu: mu.to_vec(),
        sigma,
    }
    .validate(2)?;
    let spread = 4.0 * sigma * sigma + 1.0;
    Ok(spread.powf(-1.0 - d as f64 / 2.0) * norm(mu).powi(2))
}

pub fn sbm_condition(p: f64, q: f64, n: usize) -> Result<ThresholdReport> {
    check_pq(p, q)?;
    let n = check_n(n)?;
    Ok(ThresholdReport::new(ModelKind::Sbm, chi2_bound(p, q)?, static_rhs(n)))
}

pub fn ergm_condition(beta: f64, n: usize) -> Result<ThresholdReport> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::range("beta", format!("{beta} must be > 0")));
    }
    let n = check_n(n)?;
    Ok(ThresholdReport::new(
        ModelKind::Ergm,
        2.0 * (beta.cosh() - 1.0),
        static_rhs(n),
    ))
}

pub fn lsm_condition(d: usize, mu: &[f64], sigma: f64, n: usize) -> Result<ThresholdReport> {
    let lhs = latent_lhs(d, mu, sigma)?;
    let n = check_n(n)?;
    Ok(ThresholdReport::new(
        ModelKind::Lsm,
        lhs,
        LN_2 / (2.0 * n) - LN_2 / (n * n),
    ))
}

pub fn dsbm_condition(p: f64, q: f64, n: usize) -> Result<ThresholdReport> {
    check_pq(p, q)?;
    let n = check_n(n)?;
    Ok(ThresholdReport::new(
        ModelKind::Dsbm,
        chi2_bound(p, q)?,
        (n - 2.0) * LN_2 / (n * n - n),
    ))
}

pub fn dlsm_condition(d: usize, mu: &[f64], sigma: f64, n: usize) -> Result<ThresholdReport> {
    let lhs = latent_lhs(d, mu, sigma)?;
    let n = check_n(n)?;
    Ok(ThresholdReport::new(
        ModelKind::Dlsm,
        lhs,
        (n - 2.0) * LN_2 / (4.0 * (n * n - n)),
    ))
}

pub fn dpam_condition(m: usize, s: f64, n: usize) -> Result<ThresholdReport> {
    if m == 0 {
        return Err(Error::range("m", "must be a positive integer"));
    }
    if !(s.is_finite() && s >= 0.0) {
        return Err(Error::range("s", format!("{s} must be ≥ 0")));
    }
    let n = check_n(n)?;
    Ok(ThresholdReport::new(
        ModelKind::Dpam,
        (s + 1.0) / (8.0 * m as f64),
        2f64.powf((n - 2.0) / (n * n - n)) / (n * n),
    ))
}

pub fn dswm_condition(m: usize, s: f64, p_mix: f64, n: usize) -> Result<ThresholdReport> {
    if m == 0 {
        return Err(Error::range("m", "must be a positive integer"));
    }
    if !(s.is_finite() && s >= 0.0) {
        return Err(Error::range("s", format!("{s} must be ≥ 0")));
    }
    check_unit("p_mix", p_mix)?;
    let n = check_n(n)?;
    Ok(ThresholdReport::new(
        ModelKind::Dswm,
        (s + 1.0).powi(2) / (m as f64 * p_mix * (1.0 - p_mix)),
        2f64.powf(2.0 * (n - 2.0) / (n * n)) / n,
    ))
}

/// Dispatches to the condition of `spec`'s model.
pub fn condition(spec: &ModelSpec, n: usize) -> Result<ThresholdReport> {
    match spec {
        ModelSpec::Sbm { p, q } => sbm_condition(*p, *q, n),
        ModelSpec::Ergm { beta } => ergm_condition(*beta, n),
        ModelSpec::Lsm { d, mu, sigma } => lsm_condition(*d, mu, *sigma, n),
        ModelSpec::Dsbm { p, q, .. } => dsbm_condition(*p, *q, n),
        ModelSpec::Dlsm { d, mu, sigma, .. } => dlsm_condition(*d, mu, *sigma, n),
        ModelSpec::Dpam { m, s } => dpam_condition(*m, *s, n),
        ModelSpec::Dswm { m, s, p_mix } => dswm_condition(*m, *s, *p_mix, n),
    }
}

/// `KL(Bern(p) ‖ Bern(q))` in nats.
pub fn kl_bernoulli(p: f64, q: f64) -> Result<f64> {
    check_unit("p", p)?;
    check_unit("q", q)?;
    Ok(kl_bernoulli_unchecked(p, q))
}

/// KL between Bernoulli laws on the closed interval, with `0·ln 0 = 0`;
/// infinite when `p` puts mass where `q` has none.
pub(crate) fn kl_bernoulli_unchecked(p: f64, q: f64) -> f64 {
    let term = |a: f64, b: f64| {
        if a <= 0.0 {
            0.0
        } else if b <= 0.0 {
            f64::INFINITY
        } else {
            a * (a / b).ln()
        }
    };
    term(p, q) + term(1.0 - p, 1.0 - q)
}

/// `(p - q)² / (q (1 - q))`, an upper bound on `KL(p ‖ q)`.
pub fn chi2_bound(p: f64, q: f64) -> Result<f64> {
    check_unit("p", p)?;
    check_unit("q", q)?;
    Ok((p - q).powi(2) / (q * (1.0 - q)))
}
