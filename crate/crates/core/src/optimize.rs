//! Maximum-likelihood fitting of fixed-parameter models, standard errors from
//! a numeric Hessian, and likelihood-ratio tests.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

use crate::data::{build_design, Dataset, DesignMatrix};
use crate::error::{Result, SpfError};
use crate::likelihood::{fixed_loglik, FixedParams};
use crate::mixed::MixedParams;
use crate::model::{Family, FunctionalForm, ModelSpec};

/// Starting dispersion for NB fits.
pub const INITIAL_ALPHA: f64 = 0.5;

const ARMIJO_C1: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;
/// Consecutive rounding-level steps after which the search stops.
const MAX_STALLED: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaximizeOptions {
    /// Stop when the gradient max-norm falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MaximizeOptions {
    fn default() -> Self {
        MaximizeOptions {
            tol: 1e-6,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub value: f64,
    pub gradient_max_norm: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub trace: Vec<TraceEntry>,
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn finite_eval<F>(f: &mut F, x: &[f64]) -> Option<(f64, Vec<f64>)>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    match f(x) {
        Ok((v, g)) if v.is_finite() && g.iter().all(|x| x.is_finite()) => Some((v, g)),
        _ => None,
    }
}

/// Maximizes `objective` (value and gradient) by BFGS with a backtracking
/// Armijo line search.
///
/// Non-finite trial points halve the step. A step whose value change is at
/// rounding level is still accepted if it reduces the gradient max-norm;
/// five such steps in a row end the search.
pub fn maximize<F>(mut objective: F, init: &[f64], opts: MaximizeOptions) -> Result<Optimum>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let n = init.len();
    // minimize the negated objective
    let mut eval = |x: &[f64]| -> Option<(f64, Vec<f64>)> {
        finite_eval(&mut objective, x).map(|(v, g)| (-v, g.into_iter().map(|gi| -gi).collect()))
    };
    let (mut f, mut g) = eval(init).ok_or_else(|| SpfError::Optimization {
        message: "objective is not finite at the starting point".into(),
        iterations: 0,
    })?;
    let mut x = init.to_vec();
    let mut h_inv = DMatrix::<f64>::identity(n, n);
    let mut fresh = true;
    let mut trace = vec![TraceEntry {
        iteration: 0,
        value: -f,
        gradient_max_norm: max_norm(&g),
        step: 0.0,
    }];
    let mut iterations = 0;
    let mut stalled = 0;

    while iterations < opts.max_iter && max_norm(&g) >= opts.tol && stalled < MAX_STALLED {
        let gv = DVector::from_column_slice(&g);
        let mut d = -(&h_inv * &gv);
        if d.dot(&gv) >= 0.0 || !d.iter().all(|v| v.is_finite()) {
            h_inv = DMatrix::identity(n, n);
            fresh = true;
            d = -gv.clone();
        }
        if fresh {
            let m = d.amax();
            if m > 1.0 {
                d /= m;
            }
        }
        let slope = d.dot(&gv);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<f64> = x.iter().zip(d.iter()).map(|(xi, di)| xi + t * di).collect();
            if let Some((ft, gt)) = eval(&trial) {
                let armijo = ft <= f + ARMIJO_C1 * t * slope;
                let flat = ft - f <= 1e-13 * (1.0 + f.abs()) && max_norm(&gt) < max_norm(&g);
                if armijo || flat {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            if !fresh {
                h_inv = DMatrix::identity(n, n);
                fresh = true;
                continue;
            }
            log::debug!("line search failed at iteration {iterations}");
            break;
        };
        iterations += 1;
        if (f - f_new).abs() <= 1e-13 * (1.0 + f.abs()) {
            stalled += 1;
        } else {
            stalled = 0;
        }
        let s = DVector::from_iterator(n, x_new.iter().zip(&x).map(|(a, b)| a - b));
        let y = DVector::from_iterator(n, g_new.iter().zip(&g).map(|(a, b)| a - b));
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() && sy > 0.0 {
            if fresh {
                h_inv = DMatrix::identity(n, n) * (sy / y.dot(&y));
            }
            let rho = 1.0 / sy;
            let hy = &h_inv * &y;
            let yhy = y.dot(&hy);
            // H+ = H - rho (H y s' + s y' H) + (rho^2 y'Hy + rho) s s'
            h_inv += (&s * s.transpose()) * (rho * rho * yhy + rho) - (&hy * s.transpose() + &s * hy.transpose()) * rho;
            fresh = false;
        }
        x = x_new;
        f = f_new;
        g = g_new;
        trace.push(TraceEntry {
            iteration: iterations,
            value: -f,
            gradient_max_norm: max_norm(&g),
            step: t,
        });
    }

    Ok(Optimum {
        converged: max_norm(&g) < opts.tol,
        value: -f,
        gradient: g.into_iter().map(|v| -v).collect(),
        x,
        iterations,
        trace,
    })
}

/// Hessian of the objective by central differences of its analytic gradient,
/// symmetrized.
pub fn numeric_hessian<F>(mut gradient: F, x: &[f64]) -> Result<DMatrix<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let n = x.len();
    let mut h = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let step = 1e-5 * x[j].abs().max(1.0);
        let mut up = x.to_vec();
        let mut dn = x.to_vec();
        up[j] += step;
        dn[j] -= step;
        let gu = gradient(&up)?;
        let gd = gradient(&dn)?;
        for i in 0..n {
            h[(i, j)] = (gu[i] - gd[i]) / (2.0 * step);
        }
    }
    Ok((&h + h.transpose()) * 0.5)
}

/// Covariance `(-H)^-1` of a log-likelihood Hessian `H`, or `None` when `-H`
/// is not positive definite.
pub fn covariance_from_hessian(hessian: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let info = -hessian.clone();
    let chol = info.cholesky()?;
    let cov = chol.inverse();
    cov.iter().all(|v| v.is_finite()).then(|| (&cov + cov.transpose()) * 0.5)
}

/// Scaled gradient `g' (-H)^-1 g`: twice the log-likelihood gain a Newton
/// step would still deliver.
pub fn scaled_gradient(covariance: &DMatrix<f64>, gradient: &[f64]) -> f64 {
    let g = DVector::from_column_slice(gradient);
    g.dot(&(covariance * &g))
}

/// Marks `opt` converged when the gradient max-norm test failed only because
/// of poor scaling: the scaled gradient is below `tol`.
pub(crate) fn accept_scaled(opt: &mut Optimum, covariance: Option<&DMatrix<f64>>, tol: f64) {
    if let (false, Some(c)) = (opt.converged, covariance) {
        let sg = scaled_gradient(c, &opt.gradient);
        if sg.is_finite() && sg < tol {
            log::debug!("converged on scaled gradient {sg:.3e}");
            opt.converged = true;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelParams {
    Fixed(FixedParams),
    Mixed(MixedParams),
}

/// Summary of one random coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomCoefficient {
    pub name: String,
    pub mean: f64,
    pub mean_se: Option<f64>,
    pub sd: f64,
    pub sd_se: Option<f64>,
    pub sd_t: Option<f64>,
    /// The spread's t-statistic is below 1.96.
    pub effectively_fixed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedSummary {
    pub draws: usize,
    pub skip: usize,
    pub random: Vec<RandomCoefficient>,
    /// `|LL(draws) - LL(2 * draws)|` at the optimum.
    pub draw_sensitivity: f64,
}

/// Estimates, standard errors and log-likelihoods of a fitted model.
///
/// `estimates`, `std_errors` and `t_stats` share the layout of `names`:
/// fixed coefficients, then random means and spreads (mixed models), then
/// `ln_alpha` (NB).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub spec: ModelSpec,
    pub names: Vec<String>,
    pub estimates: Vec<f64>,
    pub params: ModelParams,
    pub std_errors: Option<Vec<f64>>,
    pub t_stats: Option<Vec<f64>>,
    pub covariance: Option<Vec<Vec<f64>>>,
    pub loglik_convergence: f64,
    pub loglik_null: f64,
    pub n_obs: usize,
    pub n_params: usize,
    pub n_params_null: usize,
    /// Gradient max-norm below `tol`, or scaled gradient `g'(-H)^-1 g`
    /// below `tol`.
    pub converged: bool,
    pub iterations: usize,
    pub gradient_max_norm: f64,
    /// Some linear predictor hit the cap at the optimum.
    pub capped: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixed: Option<MixedSummary>,
    pub trace: Vec<TraceEntry>,
}

impl FitResult {
    pub fn alpha(&self) -> Option<f64> {
        match &self.params {
            ModelParams::Fixed(p) => p.alpha(),
            ModelParams::Mixed(p) => p.alpha(),
        }
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        let j = self.names.iter().position(|n| n == name)?;
        self.std_errors.as_ref().map(|se| se[j])
    }

    pub fn estimate(&self, name: &str) -> Option<f64> {
        let j = self.names.iter().position(|n| n == name)?;
        Some(self.estimates[j])
    }

    /// Human-readable table: parameter, estimate, SE, t-stat. Spreads are
    /// shown as `|sd|`; NB dispersion as alpha with a delta-method SE.
    pub fn coefficient_table(&self) -> String {
        let mut out = format!(
            "{} | n = {} | LL = {:.3} | LL(null) = {:.3}{}\n",
            self.spec.label(),
            self.n_obs,
            self.loglik_convergence,
            self.loglik_null,
            if self.converged { "" } else { " | NOT CONVERGED" }
        );
        out.push_str(&format!("{:<28}{:>12}{:>12}{:>10}\n", "parameter", "beta", "SE", "t-stat"));
        let fmt_opt = |v: Option<f64>, prec: usize| v.map_or_else(|| "---".to_string(), |x| format!("{x:.prec$}"));
        for (j, name) in self.names.iter().enumerate() {
            let se = self.std_errors.as_ref().map(|s| s[j]);
            let (label, est, se, t) = if name == "ln_alpha" {
                let a = self.estimates[j].exp();
                let se_a = se.map(|s| a * s);
                ("over-dispersion (alpha)".to_string(), a, se_a, se_a.map(|s| a / s))
            } else if let Some(base) = name.strip_prefix("sd(").and_then(|s| s.strip_suffix(')')) {
                (format!("  standard deviation {base}"), self.estimates[j].abs(), se, se.map(|s| self.estimates[j].abs() / s))
            } else {
                (name.clone(), self.estimates[j], se, self.t_stats.as_ref().map(|t| t[j]))
            };
            out.push_str(&format!(
                "{:<28}{:>12.4}{:>12}{:>10}\n",
                label,
                est,
                fmt_opt(se, 4),
                fmt_opt(t, 2)
            ));
        }
        out
    }
}

/// Runs `f` on a dedicated pool of `workers` threads (0 = ambient pool).
pub(crate) fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| SpfError::Computation(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

pub(crate) fn standard_errors(
    cov: &Option<DMatrix<f64>>,
    estimates: &[f64],
) -> (Option<Vec<f64>>, Option<Vec<f64>>, Option<Vec<Vec<f64>>>) {
    match cov {
        None => (None, None, None),
        Some(c) => {
            let se: Vec<f64> = (0..c.nrows()).map(|i| c[(i, i)].max(0.0).sqrt()).collect();
            let t = estimates
                .iter()
                .zip(&se)
                .map(|(e, s)| if *s > 0.0 { e / s } else { f64::NAN })
                .collect();
            let rows = (0..c.nrows()).map(|i| c.row(i).iter().copied().collect()).collect();
            (Some(se), Some(t), Some(rows))
        }
    }
}

/// Starting values: zero slopes, intercept `ln(mean y) - mean(offset)`, and
/// `ln_alpha = ln 0.5` for NB.
pub fn initial_params(design: &DesignMatrix, family: Family) -> Vec<f64> {
    let n = design.n_obs().max(1) as f64;
    let ybar = design.response.iter().map(|&y| y as f64).sum::<f64>() / n;
    let obar = design.offset.iter().sum::<f64>() / n;
    let mut x = vec![0.0; design.fixed.n_cols()];
    x[0] = ybar.max(1e-8).ln() - obar;
    if family == Family::Nb {
        x.push(INITIAL_ALPHA.ln());
    }
    x
}

pub(crate) struct FixedEstimate {
    pub optimum: Optimum,
    pub covariance: Option<DMatrix<f64>>,
    pub capped: bool,
}

pub(crate) fn estimate_fixed(design: &DesignMatrix, family: Family, opts: MaximizeOptions) -> Result<FixedEstimate> {
    let objective = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
        let v = fixed_loglik(design, family, &FixedParams::from_vec(family, x))?;
        Ok((v.loglik, v.gradient))
    };
    let mut optimum = maximize(objective, &initial_params(design, family), opts)?;
    let hessian = numeric_hessian(
        |x| Ok(fixed_loglik(design, family, &FixedParams::from_vec(family, x))?.gradient),
        &optimum.x,
    )?;
    let covariance = covariance_from_hessian(&hessian);
    if covariance.is_none() {
        log::warn!("Hessian is not invertible; standard errors omitted");
    }
    accept_scaled(&mut optimum, covariance.as_ref(), opts.tol);
    if !optimum.converged {
        log::warn!(
            "fit did not converge in {} iterations (gradient max-norm {:.3e})",
            optimum.iterations,
            max_norm(&optimum.gradient)
        );
    }
    let capped = fixed_loglik(design, family, &FixedParams::from_vec(family, &optimum.x))?.capped;
    Ok(FixedEstimate {
        optimum,
        covariance,
        capped,
    })
}

/// Log-likelihood of the intercept-only model of the same family. The
/// offset is kept (form 1 exposure, or `ln(years)` for per-year response);
/// forms 2-3 under total response have a zero offset.
pub(crate) fn null_fit(design: &DesignMatrix, family: Family, opts: MaximizeOptions) -> Result<(f64, usize)> {
    let null = design.intercept_only(true);
    let est = estimate_fixed(&null, family, opts)?;
    Ok((est.optimum.value, est.optimum.x.len()))
}

pub fn null_loglik(data: &Dataset, spec: &ModelSpec) -> Result<f64> {
    let design = build_design(data, spec)?;
    let opts = MaximizeOptions {
        tol: spec.tol,
        max_iter: spec.max_iter,
    };
    with_workers(spec.workers, || null_fit(&design, spec.family, opts))?.map(|(ll, _)| ll)
}

fn param_names(design: &DesignMatrix, family: Family) -> Vec<String> {
    let mut names = design.fixed.names.clone();
    if family == Family::Nb {
        names.push("ln_alpha".into());
    }
    names
}

/// Fits a fixed-parameter model (forms 1-3).
pub fn fit_fixed(data: &Dataset, spec: &ModelSpec) -> Result<FitResult> {
    spec.validate()?;
    if spec.form == FunctionalForm::RandomParameters {
        return Err(SpfError::Spec("form 4 models are fitted with fit_random".into()));
    }
    let design = build_design(data, spec)?;
    if design.n_obs() == 0 {
        return Err(SpfError::Argument("cannot fit an empty dataset".into()));
    }
    let opts = MaximizeOptions {
        tol: spec.tol,
        max_iter: spec.max_iter,
    };
    let family = spec.family;
    with_workers(spec.workers, || -> Result<FitResult> {
        let est = estimate_fixed(&design, family, opts)?;
        let (loglik_null, n_params_null) = if spec.form == FunctionalForm::ExposureOffset {
            (est.optimum.value, est.optimum.x.len())
        } else {
            null_fit(&design, family, opts)?
        };
        let (std_errors, t_stats, covariance) = standard_errors(&est.covariance, &est.optimum.x);
        Ok(FitResult {
            spec: spec.clone(),
            names: param_names(&design, family),
            estimates: est.optimum.x.clone(),
            params: ModelParams::Fixed(FixedParams::from_vec(family, &est.optimum.x)),
            std_errors,
            t_stats,
            covariance,
            loglik_convergence: est.optimum.value,
            loglik_null,
            n_obs: design.n_obs(),
            n_params: est.optimum.x.len(),
            n_params_null,
            converged: est.optimum.converged,
            iterations: est.optimum.iterations,
            gradient_max_norm: max_norm(&est.optimum.gradient),
            capped: est.capped,
            mixed: None,
            trace: est.optimum.trace,
        })
    })?
}

/// Upper tail of the chi-square distribution.
pub fn chi2_sf(statistic: f64, df: f64) -> f64 {
    if statistic <= 0.0 {
        1.0
    } else {
        gamma_ur(df / 2.0, statistic / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrTest {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// `2 (ll_full - ll_restricted)` against chi-square with `df` degrees of freedom.
pub fn lr_test(ll_restricted: f64, ll_full: f64, df: usize) -> Result<LrTest> {
    if df == 0 {
        return Err(SpfError::Argument("likelihood-ratio test needs df >= 1".into()));
    }
    if !(ll_full.is_finite() && ll_restricted.is_finite()) {
        return Err(SpfError::Argument("log-likelihoods must be finite".into()));
    }
    if ll_full < ll_restricted - 1e-9 {
        return Err(SpfError::Argument(format!(
            "full model log-likelihood {ll_full} is below the restricted {ll_restricted}"
        )));
    }
    let statistic = (2.0 * (ll_full - ll_restricted)).max(0.0);
    Ok(LrTest {
        statistic,
        df,
        p_value: chi2_sf(statistic, df as f64),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preferred {
    Poisson,
    Nb,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverdispersionTest {
    pub statistic: f64,
    /// Boundary-corrected: half the chi-square(1) upper tail.
    pub p_value: f64,
    pub prefer: Preferred,
}

/// LR test of `alpha = 0` from the two log-likelihoods.
pub fn overdispersion_lr(ll_poisson: f64, ll_nb: f64) -> Result<OverdispersionTest> {
    let lr = lr_test(ll_poisson, ll_nb, 1)?;
    let p_value = if lr.statistic > 0.0 { 0.5 * lr.p_value } else { 1.0 };
    Ok(OverdispersionTest {
        statistic: lr.statistic,
        p_value,
        prefer: if p_value < 0.05 { Preferred::Nb } else { Preferred::Poisson },
    })
}

pub fn overdispersion_test(poisson_fit: &FitResult, nb_fit: &FitResult) -> Result<OverdispersionTest> {
    let (p, q) = (&poisson_fit.spec, &nb_fit.spec);
    if p.family != Family::Poisson || q.family != Family::Nb {
        return Err(SpfError::Argument("expected a Poisson fit and an NB fit".into()));
    }
    if p.form != q.form || p.covariates != q.covariates || p.random != q.random || poisson_fit.n_obs != nb_fit.n_obs {
        return Err(SpfError::Argument("fits do not share data and mean structure".into()));
    }
    overdispersion_lr(poisson_fit.loglik_convergence, nb_fit.loglik_convergence)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concave_quadratic() {
        let opt = maximize(|x| Ok((-(x[0] - 3.0).powi(2), vec![-2.0 * (x[0] - 3.0)])), &[0.0], MaximizeOptions::default())
            .unwrap();
        assert!(opt.converged);
        assert!((opt.x[0] - 3.0).abs() < 1e-8);
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
            Ok((-v, g.into_iter().map(|v: f64| -v).collect()))
        };
        let opt = maximize(f, &[-1.2, 1.0], MaximizeOptions { tol: 1e-8, max_iter: 500 }).unwrap();
        assert!(opt.converged, "{:?}", opt.trace.last());
        assert!((opt.x[0] - 1.0).abs() < 1e-6 && (opt.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn non_finite_region_is_avoided() {
        // log barrier: undefined for x <= 0, optimum at x = 1
        let f = |x: &[f64]| {
            if x[0] <= 0.0 {
                Ok((f64::NAN, vec![f64::NAN]))
            } else {
                Ok((x[0].ln() - x[0], vec![1.0 / x[0] - 1.0]))
            }
        };
        let opt = maximize(f, &[5.0], MaximizeOptions::default()).unwrap();
        assert!(opt.converged && (opt.x[0] - 1.0).abs() < 1e-6);
        assert!(maximize(f, &[-1.0], MaximizeOptions::default()).is_err());
    }

    #[test]
    fn lr_statistics() {
        let t = lr_test(-410.68, -227.4, 2).unwrap();
        assert!((t.statistic - 366.56).abs() < 1e-9);
        let t = lr_test(-325.37, -227.39, 3).unwrap();
        assert!((t.statistic - 195.96).abs() < 1e-9);
        let t = lr_test(-10.0, -10.0, 1).unwrap();
        assert_eq!((t.statistic, t.p_value), (0.0, 1.0));
        assert!(lr_test(-5.0, -6.0, 1).is_err());
        assert!(lr_test(-5.0, -4.0, 0).is_err());
    }

    #[test]
    fn chi2_tail_reference_values() {
        // scipy.stats.chi2.sf
        let cases = [
            (3.841458820694124, 1.0, 0.05),
            (1.0, 1.0, 0.31731050786291115),
            (0.02, 1.0, 0.887537083981715),
            (10.0, 3.0, 0.01856613546304325),
            (5.991464547107979, 2.0, 0.05),
            (20.0, 7.0, 0.005569683072945574),
        ];
        for (x, df, p) in cases {
            assert!((chi2_sf(x, df) - p).abs() < 1e-10, "x={x} df={df}: {}", chi2_sf(x, df));
        }
    }

    #[test]
    fn overdispersion_decisions() {
        let t = overdispersion_lr(-227.40, -227.39).unwrap();
        assert!((t.statistic - 0.02).abs() < 1e-9);
        assert_eq!(t.prefer, Preferred::Poisson);
        let t = overdispersion_lr(-100.0, -100.0).unwrap();
        assert_eq!((t.statistic, t.prefer), (0.0, Preferred::Poisson));
        let t = overdispersion_lr(-100.0, -90.0).unwrap();
        assert_eq!(t.prefer, Preferred::Nb);
    }

    #[test]
    fn singular_hessian_has_no_covariance() {
        let h = DMatrix::from_row_slice(2, 2, &[-1.0, -1.0, -1.0, -1.0]);
        assert!(covariance_from_hessian(&h).is_none());
        let h = DMatrix::from_row_slice(2, 2, &[-2.0, 0.5, 0.5, -1.0]);
        let c = covariance_from_hessian(&h).unwrap();
        assert!((c[(0, 1)] - c[(1, 0)]).abs() < 1e-15);
    }
}
