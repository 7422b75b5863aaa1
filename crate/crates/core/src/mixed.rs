//! Random-parameter Poisson/NB models estimated by maximum simulated
//! likelihood over Halton draws with normal mixing.
//!
//! Draw assignment: dimension `d` uses the `d`-th prime. After discarding the
//! first `skip` points of each one-dimensional Halton stream, observation `i`
//! receives points `i * R + 1 ..= (i + 1) * R` (contiguous blocks), each mapped
//! through the standard-normal quantile. No scrambling and no RNG are
//! involved, so draws are fully determined by `(n_obs, R, n_dims, skip)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{build_design, Dataset, DesignMatrix};
use crate::error::{Result, SpfError};
use crate::likelihood::{dot, family_term, ln_factorial, LikelihoodValue, PAR_MIN_LEN};
use crate::model::{Family, FunctionalForm, ModelSpec};
use crate::optimize::{
    accept_scaled, covariance_from_hessian, fit_fixed, maximize, null_fit, numeric_hessian, standard_errors, with_workers,
    FitResult, MaximizeOptions, MixedSummary, ModelParams, Optimum, RandomCoefficient, TraceEntry,
};

/// Halton bases, one per random dimension.
pub const PRIMES: [u64; 20] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71];

/// Minimum starting spread for a random coefficient.
const MIN_INITIAL_SIGMA: f64 = 0.05;

/// Critical value below which a spread's t-statistic marks the coefficient
/// as effectively fixed.
const SPREAD_T_CRITICAL: f64 = 1.96;

fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

/// Radical inverse of `index` in `base`, computed as one exact rational
/// `digits / base^k` and a single rounding division.
pub fn halton(base: u64, index: u64) -> Result<f64> {
    if !is_prime(base) {
        return Err(SpfError::Argument(format!("Halton base must be a prime >= 2, got {base}")));
    }
    if index == 0 {
        return Err(SpfError::Argument("Halton index must be >= 1".into()));
    }
    let b = u128::from(base);
    let mut i = u128::from(index);
    let mut num: u128 = 0;
    let mut den: u128 = 1;
    while i > 0 {
        num = num * b + i % b;
        den *= b;
        i /= b;
    }
    Ok(num as f64 / den as f64)
}

fn poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Standard-normal quantile by Wichura's AS241 (PPND16), relative accuracy
/// about 1e-16.
#[allow(clippy::excessive_precision)]
pub fn inv_normal_cdf(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(SpfError::Domain(format!("normal quantile needs 0 < u < 1, got {u}")));
    }
    const A: [f64; 8] = [
        3.387_132_872_796_366_608,
        1.331_416_678_917_843_774_5e2,
        1.971_590_950_306_551_442_7e3,
        1.373_169_376_550_946_112_5e4,
        4.592_195_393_154_987_145_7e4,
        6.726_577_092_700_870_085_3e4,
        3.343_057_558_358_812_810_5e4,
        2.509_080_928_730_122_672_7e3,
    ];
    const B: [f64; 8] = [
        1.0,
        4.231_333_070_160_091_125_2e1,
        6.871_870_074_920_579_083e2,
        5.394_196_021_424_751_107_7e3,
        2.121_379_430_158_659_586_7e4,
        3.930_789_580_009_271_061e4,
        2.872_908_573_572_194_267_4e4,
        5.226_495_278_852_854_561e3,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_577_34,
        4.630_337_846_156_545_295_9,
        5.769_497_221_460_691_405_5,
        3.647_848_324_763_204_605_04,
        1.270_458_252_452_368_382_58,
        2.417_807_251_774_506_117_7e-1,
        2.272_384_498_926_918_458_33e-2,
        7.745_450_142_783_414_076_4e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_758_821_87,
        1.676_384_830_183_803_849_4,
        6.897_673_349_851_000_045_5e-1,
        1.481_039_764_274_800_745_9e-1,
        1.519_866_656_361_645_719_66e-2,
        5.475_938_084_995_344_946e-4,
        1.050_750_071_644_416_843_24e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103_777_2,
        5.463_784_911_164_114_369_9,
        1.784_826_539_917_291_335_8,
        2.965_605_718_285_048_912_3e-1,
        2.653_218_952_657_612_309_3e-2,
        1.242_660_947_388_078_438_6e-3,
        2.711_555_568_743_487_578_15e-5,
        2.010_334_399_292_288_132_65e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        5.998_322_065_558_879_376_9e-1,
        1.369_298_809_227_358_053_1e-1,
        1.487_536_129_085_061_485_25e-2,
        7.868_691_311_456_132_591e-4,
        1.846_318_317_510_054_681_8e-5,
        1.421_511_758_316_445_888_7e-7,
        2.044_263_103_389_939_785_64e-15,
    ];
    let q = u - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return Ok(q * poly(&A, r) / poly(&B, r));
    }
    let tail = if q < 0.0 { u } else { 1.0 - u };
    let r = (-tail.ln()).sqrt();
    let z = if r <= 5.0 {
        let r = r - 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        let r = r - 5.0;
        poly(&E, r) / poly(&F, r)
    };
    Ok(if q < 0.0 { -z } else { z })
}

/// Standard-normal deviates indexed `[observation][draw][dimension]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawMatrix {
    pub n_obs: usize,
    pub n_draws: usize,
    pub n_dims: usize,
    pub skip: usize,
    pub bases: Vec<u64>,
    values: Vec<f64>,
}

impl DrawMatrix {
    /// Deviates of draw `r` for observation `i`, one per dimension.
    pub fn draw(&self, i: usize, r: usize) -> &[f64] {
        let start = (i * self.n_draws + r) * self.n_dims;
        &self.values[start..start + self.n_dims]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

pub fn make_draws(n_obs: usize, n_dims: usize, n_draws: usize, skip: usize) -> Result<DrawMatrix> {
    if n_draws == 0 {
        return Err(SpfError::Argument("at least one draw is required".into()));
    }
    if n_dims > PRIMES.len() {
        return Err(SpfError::Argument(format!(
            "{n_dims} random dimensions exceed the {}-prime Halton table",
            PRIMES.len()
        )));
    }
    let bases = PRIMES[..n_dims].to_vec();
    let mut values = vec![0.0; n_obs * n_draws * n_dims];
    for i in 0..n_obs {
        for r in 0..n_draws {
            let index = (skip + i * n_draws + r + 1) as u64;
            for (d, &b) in bases.iter().enumerate() {
                values[(i * n_draws + r) * n_dims + d] = inv_normal_cdf(halton(b, index)?)?;
            }
        }
    }
    Ok(DrawMatrix {
        n_obs,
        n_draws,
        n_dims,
        skip,
        bases,
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedParams {
    /// Coefficients of the fixed columns (intercept first).
    pub beta_fixed: Vec<f64>,
    /// Means of the random coefficients.
    pub mu_random: Vec<f64>,
    /// Spreads; enter the model as `|value|`.
    pub sigma_random: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ln_alpha: Option<f64>,
}

impl MixedParams {
    pub fn alpha(&self) -> Option<f64> {
        self.ln_alpha.map(f64::exp)
    }

    /// `[beta_fixed..., mu..., sigma..., ln_alpha]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.beta_fixed.clone();
        v.extend(&self.mu_random);
        v.extend(&self.sigma_random);
        v.extend(self.ln_alpha);
        v
    }

    pub fn from_vec(family: Family, n_fixed: usize, n_random: usize, v: &[f64]) -> Self {
        MixedParams {
            beta_fixed: v[..n_fixed].to_vec(),
            mu_random: v[n_fixed..n_fixed + n_random].to_vec(),
            sigma_random: v[n_fixed + n_random..n_fixed + 2 * n_random].to_vec(),
            ln_alpha: match family {
                Family::Poisson => None,
                Family::Nb => Some(v[n_fixed + 2 * n_random]),
            },
        }
    }

    fn check(&self, design: &DesignMatrix, family: Family) -> Result<()> {
        let kz = design.random.n_cols();
        if self.beta_fixed.len() != design.fixed.n_cols() || self.mu_random.len() != kz || self.sigma_random.len() != kz {
            return Err(SpfError::Argument("mixed parameters do not match the design".into()));
        }
        if family == Family::Nb && self.ln_alpha.is_none() {
            return Err(SpfError::Argument("NB parameters need ln_alpha".into()));
        }
        Ok(())
    }
}

struct ObsSim {
    ll: f64,
    /// sum_r w_r d_eta_r
    score: f64,
    /// sum_r w_r d_eta_r z_rk, per random dimension
    spread_score: Vec<f64>,
    /// sum_r w_r d_ln_alpha_r
    alpha_score: f64,
    capped: bool,
}

/// Simulated log-likelihood `sum_i ln( (1/R) sum_r P(y_i | beta_i^(r)) )`
/// with `beta_i^(r) = mu + |sigma| * z_i^(r)`, averaged by log-sum-exp.
/// Gradient layout matches [`MixedParams::to_vec`].
///
/// Draws are reduced in index order within each observation, and observations
/// in index order, independent of worker count.
pub fn simulated_loglik(
    design: &DesignMatrix,
    params: &MixedParams,
    draws: &DrawMatrix,
    family: Family,
) -> Result<LikelihoodValue> {
    params.check(design, family)?;
    let n = design.n_obs();
    let kx = design.fixed.n_cols();
    let kz = design.random.n_cols();
    if kz > 0 && (draws.n_dims != kz || draws.n_obs != n) {
        return Err(SpfError::Argument(format!(
            "draw matrix is {}x{} dims, design needs {}x{}",
            draws.n_obs, draws.n_dims, n, kz
        )));
    }
    let n_draws = if kz == 0 { 1 } else { draws.n_draws };
    let ln_r = (n_draws as f64).ln();
    let ln_alpha = params.ln_alpha.unwrap_or(0.0);
    let spread: Vec<f64> = params.sigma_random.iter().map(|s| s.abs()).collect();

    let sims: Vec<ObsSim> = (0..n)
        .into_par_iter()
        .with_min_len(PAR_MIN_LEN.max(1))
        .map(|i| {
            let y = design.response[i];
            let lf = ln_factorial(y);
            let z = design.random.row(i);
            let base = design.offset[i] + dot(design.fixed.row(i), &params.beta_fixed) + dot(z, &params.mu_random);
            let terms: Vec<_> = (0..n_draws)
                .map(|r| {
                    let eta = if kz == 0 {
                        base
                    } else {
                        let dev = draws.draw(i, r);
                        base + (0..kz).map(|k| z[k] * spread[k] * dev[k]).sum::<f64>()
                    };
                    family_term(family, y, eta, ln_alpha, lf)
                })
                .collect();
            let max = terms.iter().fold(f64::NEG_INFINITY, |m, t| m.max(t.ll));
            let sum_exp: f64 = terms.iter().map(|t| (t.ll - max).exp()).sum();
            let lse = max + sum_exp.ln();
            let mut out = ObsSim {
                ll: lse - ln_r,
                score: 0.0,
                spread_score: vec![0.0; kz],
                alpha_score: 0.0,
                capped: false,
            };
            for (r, t) in terms.iter().enumerate() {
                let w = (t.ll - lse).exp();
                out.score += w * t.d_eta;
                out.alpha_score += w * t.d_ln_alpha;
                out.capped |= t.capped;
                if kz > 0 {
                    let dev = draws.draw(i, r);
                    for k in 0..kz {
                        out.spread_score[k] += w * t.d_eta * dev[k];
                    }
                }
            }
            out
        })
        .collect();

    let n_params = kx + 2 * kz + usize::from(family == Family::Nb);
    let mut gradient = vec![0.0; n_params];
    let mut loglik = 0.0;
    let mut capped = false;
    for (i, s) in sims.iter().enumerate() {
        loglik += s.ll;
        capped |= s.capped;
        for (g, x) in gradient[..kx].iter_mut().zip(design.fixed.row(i)) {
            *g += x * s.score;
        }
        let z = design.random.row(i);
        for k in 0..kz {
            gradient[kx + k] += z[k] * s.score;
            let sign = if params.sigma_random[k] < 0.0 { -1.0 } else { 1.0 };
            gradient[kx + kz + k] += z[k] * sign * s.spread_score[k];
        }
        if family == Family::Nb {
            gradient[n_params - 1] += s.alpha_score;
        }
    }
    Ok(LikelihoodValue {
        loglik,
        gradient,
        per_obs_loglik: sims.iter().map(|s| s.ll).collect(),
        capped,
    })
}

/// Spreads below this magnitude are treated as zero.
const SPREAD_ZERO: f64 = 1e-6;

/// Spread components sitting at zero whose one-sided derivative in `|s|` is
/// non-positive. With `|s|` in the model the simulated likelihood has a kink
/// there (the block mean of the Halton deviates is not exactly zero), so the
/// gradient need not vanish at such a maximum.
fn kinked_spreads(opt: &Optimum, kx: usize, kz: usize) -> Vec<usize> {
    (kx + kz..kx + 2 * kz)
        .filter(|&j| {
            let sign = if opt.x[j] < 0.0 { -1.0 } else { 1.0 };
            opt.x[j].abs() < SPREAD_ZERO && opt.gradient[j] * sign <= 0.0
        })
        .collect()
}

/// Re-maximizes over all parameters except `pinned`, which are held at 0.
/// Convergence and the returned gradient refer to the free parameters; the
/// pinned gradient entries are zeroed.
fn refit_with_pinned<F>(start: &Optimum, pinned: &[usize], opts: MaximizeOptions, mut objective: F) -> Result<Optimum>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let n = start.x.len();
    let free: Vec<usize> = (0..n).filter(|j| !pinned.contains(j)).collect();
    let embed = |z: &[f64]| {
        let mut x = vec![0.0; n];
        for (&j, &v) in free.iter().zip(z) {
            x[j] = v;
        }
        x
    };
    let init: Vec<f64> = free.iter().map(|&j| start.x[j]).collect();
    let sub = maximize(
        |z| {
            let (v, g) = objective(&embed(z))?;
            Ok((v, free.iter().map(|&j| g[j]).collect()))
        },
        &init,
        opts,
    )?;
    let mut gradient = vec![0.0; n];
    for (&j, &g) in free.iter().zip(&sub.gradient) {
        gradient[j] = g;
    }
    let offset = start.iterations;
    let mut trace = start.trace.clone();
    trace.extend(sub.trace.iter().skip(1).map(|t| TraceEntry {
        iteration: t.iteration + offset,
        ..t.clone()
    }));
    Ok(Optimum {
        x: embed(&sub.x),
        value: sub.value,
        gradient,
        converged: sub.converged,
        iterations: offset + sub.iterations,
        trace,
    })
}

/// Fits a random-parameter model (form 4).
///
/// Starts from the form-3 fixed fit of the same family, with spreads at
/// `0.1 |mu|` (at least 0.05). Reported spreads are non-negative. A spread
/// whose maximum is at zero is held there while the rest converge.
pub fn fit_random(data: &Dataset, spec: &ModelSpec) -> Result<FitResult> {
    spec.validate()?;
    if spec.form != FunctionalForm::RandomParameters {
        return Err(SpfError::Spec("fit_random requires form 4".into()));
    }
    let design = build_design(data, spec)?;
    if design.n_obs() == 0 {
        return Err(SpfError::Argument("cannot fit an empty dataset".into()));
    }
    let family = spec.family;
    let kx = design.fixed.n_cols();
    let kz = design.random.n_cols();
    let opts = MaximizeOptions {
        tol: spec.tol,
        max_iter: spec.max_iter,
    };

    with_workers(spec.workers, || -> Result<FitResult> {
        let mut fixed_spec = spec.clone();
        fixed_spec.form = FunctionalForm::FullFixed;
        fixed_spec.random.clear();
        fixed_spec.workers = 0;
        let start = fit_fixed(data, &fixed_spec)?;
        let lookup = |name: &str| start.estimate(name).unwrap_or(0.0);
        let mut init: Vec<f64> = design.fixed.names.iter().map(|n| lookup(n)).collect();
        let mu: Vec<f64> = design.random.names.iter().map(|n| lookup(n)).collect();
        init.extend(&mu);
        init.extend(mu.iter().map(|m| (0.1 * m.abs()).max(MIN_INITIAL_SIGMA)));
        if family == Family::Nb {
            init.push(lookup("ln_alpha"));
        }

        let draws = make_draws(design.n_obs(), kz, spec.draws, spec.skip)?;
        let eval = |x: &[f64]| simulated_loglik(&design, &MixedParams::from_vec(family, kx, kz, x), &draws, family);
        let mut optimum = maximize(
            |x| {
                let v = eval(x)?;
                Ok((v.loglik, v.gradient))
            },
            &init,
            opts,
        )?;
        let pinned = kinked_spreads(&optimum, kx, kz);
        if !optimum.converged && !pinned.is_empty() {
            log::info!("spread(s) {pinned:?} at the zero boundary; refitting the remaining parameters");
            optimum = refit_with_pinned(&optimum, &pinned, opts, |x| {
                let v = eval(x)?;
                Ok((v.loglik, v.gradient))
            })?;
        }
        let hessian = numeric_hessian(|x| Ok(eval(x)?.gradient), &optimum.x)?;
        let cov = covariance_from_hessian(&hessian);
        if cov.is_none() {
            log::warn!("Hessian is not invertible; standard errors omitted");
        }
        accept_scaled(&mut optimum, cov.as_ref(), opts.tol);
        if !optimum.converged {
            log::warn!(
                "simulated-likelihood fit did not converge in {} iterations",
                optimum.iterations
            );
        }

        let mut estimates = optimum.x.clone();
        for s in &mut estimates[kx + kz..kx + 2 * kz] {
            *s = s.abs();
        }
        let (std_errors, t_stats, covariance) = standard_errors(&cov, &estimates);
        let at_optimum = eval(&optimum.x)?;

        let draw_sensitivity = if kz > 0 {
            let doubled = make_draws(design.n_obs(), kz, 2 * spec.draws, spec.skip)?;
            let ll2 = simulated_loglik(&design, &MixedParams::from_vec(family, kx, kz, &optimum.x), &doubled, family)?;
            (at_optimum.loglik - ll2.loglik).abs()
        } else {
            0.0
        };

        let random = (0..kz)
            .map(|k| {
                let se = |j: usize| std_errors.as_ref().map(|s| s[j]);
                let sd = estimates[kx + kz + k];
                let sd_se = se(kx + kz + k);
                let sd_t = sd_se.filter(|s| *s > 0.0).map(|s| sd / s);
                RandomCoefficient {
                    name: design.random.names[k].clone(),
                    mean: estimates[kx + k],
                    mean_se: se(kx + k),
                    sd,
                    sd_se,
                    sd_t,
                    effectively_fixed: sd_t.is_some_and(|t| t < SPREAD_T_CRITICAL),
                }
            })
            .collect();

        let (loglik_null, n_params_null) = null_fit(&design, family, opts)?;
        let mut names = design.fixed.names.clone();
        names.extend(design.random.names.iter().cloned());
        names.extend(design.random.names.iter().map(|n| format!("sd({n})")));
        if family == Family::Nb {
            names.push("ln_alpha".into());
        }
        Ok(FitResult {
            spec: spec.clone(),
            names,
            params: ModelParams::Mixed(MixedParams::from_vec(family, kx, kz, &estimates)),
            estimates,
            std_errors,
            t_stats,
            covariance,
            loglik_convergence: optimum.value,
            loglik_null,
            n_obs: design.n_obs(),
            n_params: optimum.x.len(),
            n_params_null,
            converged: optimum.converged,
            iterations: optimum.iterations,
            gradient_max_norm: optimum.gradient.iter().fold(0.0, |m: f64, g| m.max(g.abs())),
            capped: at_optimum.capped,
            mixed: Some(MixedSummary {
                draws: spec.draws,
                skip: spec.skip,
                random,
                draw_sensitivity,
            }),
            trace: optimum.trace,
        })
    })?
}
