//! Poisson and NB2 log-likelihood kernels under a log link with offset.
//!
//! Per-observation terms may be computed in parallel (rayon, order-preserving
//! collect); every reduction then runs sequentially in observation order, so
//! results are bit-identical for any worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::data::DesignMatrix;
use crate::error::{Result, SpfError};
use crate::model::Family;

/// Bound on the absolute linear predictor; beyond it the mean is held at
/// `exp(±30)` and the evaluation is flagged.
pub const ETA_CAP: f64 = 30.0;

/// Below this dispersion the NB2 kernel evaluates its Poisson limit.
pub const ALPHA_POISSON_LIMIT: f64 = 1e-12;

/// Counts above this use log-gamma/digamma differences instead of the exact
/// finite sums in the NB2 kernel.
const NB_SUM_MAX_COUNT: u64 = 1000;

pub(crate) const PAR_MIN_LEN: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedParams {
    pub beta: Vec<f64>,
    /// Log of the NB2 dispersion; `None` for Poisson.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ln_alpha: Option<f64>,
}

impl FixedParams {
    pub fn alpha(&self) -> Option<f64> {
        self.ln_alpha.map(f64::exp)
    }

    /// `[beta..., ln_alpha]`, the optimizer layout.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.beta.clone();
        v.extend(self.ln_alpha);
        v
    }

    pub fn from_vec(family: Family, v: &[f64]) -> Self {
        match family {
            Family::Poisson => FixedParams {
                beta: v.to_vec(),
                ln_alpha: None,
            },
            Family::Nb => FixedParams {
                beta: v[..v.len() - 1].to_vec(),
                ln_alpha: Some(v[v.len() - 1]),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodValue {
    pub loglik: f64,
    /// Same layout as the parameter vector that produced it.
    pub gradient: Vec<f64>,
    pub per_obs_loglik: Vec<f64>,
    /// True when some linear predictor hit [`ETA_CAP`].
    pub capped: bool,
}

/// One observation's contribution and its derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ObsTerm {
    pub ll: f64,
    /// d ll / d eta (zero when eta was capped).
    pub d_eta: f64,
    /// d ll / d ln(alpha); zero for Poisson.
    pub d_ln_alpha: f64,
    pub capped: bool,
}

pub(crate) fn ln_factorial(y: u64) -> f64 {
    ln_gamma(y as f64 + 1.0)
}

fn cap(eta: f64) -> (f64, bool) {
    if eta > ETA_CAP {
        (ETA_CAP, true)
    } else if eta < -ETA_CAP {
        (-ETA_CAP, true)
    } else {
        (eta, false)
    }
}

pub(crate) fn poisson_term(y: u64, eta: f64, ln_y_fact: f64) -> ObsTerm {
    let (eta, capped) = cap(eta);
    let mu = eta.exp();
    let yf = y as f64;
    ObsTerm {
        ll: -mu + yf * eta - ln_y_fact,
        d_eta: if capped { 0.0 } else { yf - mu },
        d_ln_alpha: 0.0,
        capped,
    }
}

/// NB2 term written so that `alpha -> 0` is numerically smooth:
/// `sum_{k<y} ln(1 + k a) - ln y! - ln(1 + a mu)/a + y eta - y ln(1 + a mu)`.
pub(crate) fn nb_term(y: u64, eta: f64, ln_alpha: f64, ln_y_fact: f64) -> ObsTerm {
    let a = ln_alpha.exp();
    if a < ALPHA_POISSON_LIMIT {
        return poisson_term(y, eta, ln_y_fact);
    }
    let (eta, capped) = cap(eta);
    let mu = eta.exp();
    let yf = y as f64;
    let (s_ln, s_frac) = if y <= NB_SUM_MAX_COUNT {
        let mut s_ln = 0.0;
        let mut s_frac = 0.0;
        for k in 1..y {
            let ka = k as f64 * a;
            s_ln += ka.ln_1p();
            s_frac += ka / (1.0 + ka);
        }
        (s_ln, s_frac)
    } else {
        let theta = 1.0 / a;
        (
            ln_gamma(yf + theta) - ln_gamma(theta) + yf * ln_alpha,
            yf - theta * (digamma(yf + theta) - digamma(theta)),
        )
    };
    let amu = a * mu;
    let l1p = amu.ln_1p();
    let ll = s_ln - ln_y_fact - l1p / a + yf * eta - yf * l1p;
    let d_eta = if capped { 0.0 } else { (yf - mu) / (1.0 + amu) };
    let d_ln_alpha = s_frac + l1p / a - mu / (1.0 + amu) - yf * amu / (1.0 + amu);
    ObsTerm {
        ll,
        d_eta,
        d_ln_alpha,
        capped,
    }
}

pub(crate) fn family_term(family: Family, y: u64, eta: f64, ln_alpha: f64, ln_y_fact: f64) -> ObsTerm {
    match family {
        Family::Poisson => poisson_term(y, eta, ln_y_fact),
        Family::Nb => nb_term(y, eta, ln_alpha, ln_y_fact),
    }
}

fn check_beta(design: &DesignMatrix, beta: &[f64]) -> Result<()> {
    if beta.len() != design.fixed.n_cols() {
        return Err(SpfError::Argument(format!(
            "coefficient vector has {} entries, design has {} fixed columns",
            beta.len(),
            design.fixed.n_cols()
        )));
    }
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(SpfError::Argument("non-finite coefficient".into()));
    }
    Ok(())
}

/// `offset_i + x_i' beta` for every row (uncapped).
pub fn linear_predictor(design: &DesignMatrix, beta: &[f64]) -> Vec<f64> {
    (0..design.n_obs())
        .map(|i| design.offset[i] + dot(design.fixed.row(i), beta))
        .collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `lambda_i = exp(offset_i + x_i' beta)`, with the linear predictor held to
/// `±ETA_CAP` (logged when it happens).
pub fn poisson_mean(design: &DesignMatrix, beta: &[f64]) -> Result<Vec<f64>> {
    check_beta(design, beta)?;
    let mut capped = 0usize;
    let out = linear_predictor(design, beta)
        .into_iter()
        .map(|eta| {
            let (e, c) = cap(eta);
            capped += usize::from(c);
            e.exp()
        })
        .collect();
    if capped > 0 {
        log::warn!("linear predictor capped at ±{ETA_CAP} for {capped} observation(s)");
    }
    Ok(out)
}

fn evaluate(design: &DesignMatrix, family: Family, beta: &[f64], ln_alpha: f64) -> Result<LikelihoodValue> {
    check_beta(design, beta)?;
    let n = design.n_obs();
    let terms: Vec<ObsTerm> = (0..n)
        .into_par_iter()
        .with_min_len(PAR_MIN_LEN)
        .map(|i| {
            let y = design.response[i];
            let eta = design.offset[i] + dot(design.fixed.row(i), beta);
            family_term(family, y, eta, ln_alpha, ln_factorial(y))
        })
        .collect();
    let p = beta.len();
    let mut gradient = vec![0.0; p + usize::from(family == Family::Nb)];
    let mut loglik = 0.0;
    let mut capped = false;
    for (i, t) in terms.iter().enumerate() {
        loglik += t.ll;
        capped |= t.capped;
        for (g, x) in gradient[..p].iter_mut().zip(design.fixed.row(i)) {
            *g += x * t.d_eta;
        }
        if family == Family::Nb {
            gradient[p] += t.d_ln_alpha;
        }
    }
    Ok(LikelihoodValue {
        loglik,
        gradient,
        per_obs_loglik: terms.iter().map(|t| t.ll).collect(),
        capped,
    })
}

/// Poisson log-likelihood; gradient is `X'(y - lambda)`.
pub fn poisson_loglik(design: &DesignMatrix, beta: &[f64]) -> Result<LikelihoodValue> {
    evaluate(design, Family::Poisson, beta, 0.0)
}

/// NB2 log-likelihood; gradient layout `[beta..., ln_alpha]`.
pub fn nb_loglik(design: &DesignMatrix, beta: &[f64], ln_alpha: f64) -> Result<LikelihoodValue> {
    if !ln_alpha.is_finite() {
        return Err(SpfError::Argument("non-finite ln_alpha".into()));
    }
    evaluate(design, Family::Nb, beta, ln_alpha)
}

pub fn fixed_loglik(design: &DesignMatrix, family: Family, params: &FixedParams) -> Result<LikelihoodValue> {
    match (family, params.ln_alpha) {
        (Family::Poisson, _) => poisson_loglik(design, &params.beta),
        (Family::Nb, Some(la)) => nb_loglik(design, &params.beta, la),
        (Family::Nb, None) => Err(SpfError::Argument("NB parameters need ln_alpha".into())),
    }
}
