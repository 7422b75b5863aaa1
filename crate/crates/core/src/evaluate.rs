//! Goodness of fit, prediction, out-of-sample error metrics, model
//! comparison and synthetic data generation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::calibration::{apply_cmfs, hsm_base_prediction};
use crate::data::{build_design, Dataset, SegmentRecord};
use crate::error::{Result, SpfError};
use crate::likelihood::{dot, FixedParams};
use crate::mixed::{make_draws, MixedParams};
use crate::model::{Family, FunctionalForm, ModelSpec};
use crate::optimize::{chi2_sf, FitResult, ModelParams};

/// Version tag written into every model artifact.
pub const ARTIFACT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub loglik_null: f64,
    pub loglik_convergence: f64,
    pub df: usize,
    pub aic: f64,
    pub bic: f64,
    /// `1 - LL / LL_null`; absent when `LL_null >= 0`.
    pub mcfadden_r2: Option<f64>,
    /// `2 (LL - LL_null)`.
    pub chi2: f64,
    pub chi2_p: f64,
    pub n_obs: usize,
}

impl GofReport {
    /// Builds the report from raw values. `df_null` is the parameter count
    /// of the null model; the chi-square test has `df - df_null` degrees of
    /// freedom.
    pub fn from_values(loglik_null: f64, loglik: f64, df: usize, df_null: usize, n_obs: usize) -> Result<Self> {
        if n_obs < 2 {
            return Err(SpfError::Argument(format!("goodness of fit needs at least 2 observations, got {n_obs}")));
        }
        if !loglik.is_finite() || !loglik_null.is_finite() {
            return Err(SpfError::Argument("log-likelihoods must be finite".into()));
        }
        let chi2 = 2.0 * (loglik - loglik_null);
        let test_df = df.saturating_sub(df_null);
        Ok(GofReport {
            loglik_null,
            loglik_convergence: loglik,
            df,
            aic: -2.0 * loglik + 2.0 * df as f64,
            bic: -2.0 * loglik + df as f64 * (n_obs as f64).ln(),
            mcfadden_r2: (loglik_null < 0.0).then(|| 1.0 - loglik / loglik_null),
            chi2,
            chi2_p: if test_df == 0 { 1.0 } else { chi2_sf(chi2, test_df as f64) },
            n_obs,
        })
    }
}

pub fn gof(fit: &FitResult) -> Result<GofReport> {
    GofReport::from_values(
        fit.loglik_null,
        fit.loglik_convergence,
        fit.n_params,
        fit.n_params_null,
        fit.n_obs,
    )
}

fn check_pair(observed: &[f64], predicted: &[f64]) -> Result<()> {
    if observed.len() != predicted.len() {
        return Err(SpfError::Argument(format!(
            "observed has {} values, predicted {}",
            observed.len(),
            predicted.len()
        )));
    }
    if observed.is_empty() {
        return Err(SpfError::Argument("error metrics need at least one value".into()));
    }
    Ok(())
}

/// Mean absolute error.
pub fn mae(observed: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair(observed, predicted)?;
    Ok(observed.iter().zip(predicted).map(|(o, p)| (p - o).abs()).sum::<f64>() / observed.len() as f64)
}

/// Root mean square error.
pub fn rmse(observed: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair(observed, predicted)?;
    let mse = observed.iter().zip(predicted).map(|(o, p)| (p - o).powi(2)).sum::<f64>() / observed.len() as f64;
    Ok(mse.sqrt())
}

/// Mean prediction bias, `mean(p - o)`; positive means overestimation.
pub fn mpb(observed: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair(observed, predicted)?;
    Ok(observed.iter().zip(predicted).map(|(o, p)| p - o).sum::<f64>() / observed.len() as f64)
}

/// A fitted model in serializable form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub schema_version: u32,
    pub label: String,
    pub spec: ModelSpec,
    pub names: Vec<String>,
    pub params: ModelParams,
}

impl ModelArtifact {
    pub fn from_fit(fit: &FitResult, label: impl Into<String>) -> Self {
        ModelArtifact {
            schema_version: ARTIFACT_SCHEMA_VERSION,
            label: label.into(),
            spec: fit.spec.clone(),
            names: fit.names.clone(),
            params: fit.params.clone(),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| SpfError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| SpfError::io(path, e))?;
        let artifact: ModelArtifact = serde_json::from_str(&text)?;
        if artifact.schema_version != ARTIFACT_SCHEMA_VERSION {
            return Err(SpfError::Spec(format!(
                "{}: artifact schema version {} is not supported (expected {})",
                path.display(),
                artifact.schema_version,
                ARTIFACT_SCHEMA_VERSION
            )));
        }
        Ok(artifact)
    }
}

/// Anything that can score a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    /// HSM base SPF times CMFs (when `apply_cmfs`) times `factor`.
    Hsm {
        label: String,
        factor: f64,
        #[serde(default = "yes")]
        apply_cmfs: bool,
    },
    Fitted(ModelArtifact),
}

fn yes() -> bool {
    true
}

impl Model {
    pub fn hsm(label: impl Into<String>, factor: f64) -> Self {
        Model::Hsm {
            label: label.into(),
            factor,
            apply_cmfs: true,
        }
    }

    pub fn label(&self) -> &str {
        match self {
            Model::Hsm { label, .. } => label,
            Model::Fitted(a) => &a.label,
        }
    }
}

/// Expected crashes per segment, in the order of `data.records`.
///
/// Mixed models return the unconditional mean: the conditional mean averaged
/// over the model's own Halton draws (same `draws` and `skip`) regenerated
/// for `data`. Draw blocks are assigned by ascending `segment_id`, so the
/// prediction for a segment does not depend on record order.
pub fn predict(model: &Model, data: &Dataset) -> Result<Vec<f64>> {
    match model {
        Model::Hsm { factor, apply_cmfs: cmfs, .. } => {
            if !(factor.is_finite() && *factor > 0.0) {
                return Err(SpfError::Domain(format!("calibration factor must be positive, got {factor}")));
            }
            data.records
                .iter()
                .map(|r| {
                    let base = hsm_base_prediction(r.aadt, r.length_miles, f64::from(r.years))?;
                    let adjusted = if *cmfs { apply_cmfs(base, &r.cmfs)? } else { base };
                    Ok(factor * adjusted)
                })
                .collect()
        }
        Model::Fitted(a) => match &a.params {
            ModelParams::Fixed(p) => predict_fixed(&a.spec, p, data),
            ModelParams::Mixed(p) => predict_mixed(&a.spec, p, data),
        },
    }
}

fn predict_fixed(spec: &ModelSpec, params: &FixedParams, data: &Dataset) -> Result<Vec<f64>> {
    let mut spec = spec.clone();
    if spec.form == FunctionalForm::RandomParameters {
        spec.form = FunctionalForm::FullFixed;
        spec.random.clear();
    }
    let design = build_design(data, &spec)?;
    if params.beta.len() != design.fixed.n_cols() {
        return Err(SpfError::Spec(format!(
            "model has {} coefficients, design has {} columns",
            params.beta.len(),
            design.fixed.n_cols()
        )));
    }
    Ok((0..design.n_obs())
        .map(|i| (design.offset[i] + dot(design.fixed.row(i), &params.beta)).exp())
        .collect())
}

fn predict_mixed(spec: &ModelSpec, params: &MixedParams, data: &Dataset) -> Result<Vec<f64>> {
    let design = build_design(data, spec)?;
    let n = design.n_obs();
    let kz = design.random.n_cols();
    if params.beta_fixed.len() != design.fixed.n_cols() || params.mu_random.len() != kz || params.sigma_random.len() != kz {
        return Err(SpfError::Spec("mixed parameters do not match the model specification".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| data.records[a].segment_id.cmp(&data.records[b].segment_id));
    let mut rank = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        rank[i] = pos;
    }
    let draws = if kz > 0 { Some(make_draws(n, kz, spec.draws, spec.skip)?) } else { None };
    let spread: Vec<f64> = params.sigma_random.iter().map(|s| s.abs()).collect();
    Ok((0..n)
        .map(|i| {
            let z = design.random.row(i);
            let base = design.offset[i] + dot(design.fixed.row(i), &params.beta_fixed) + dot(z, &params.mu_random);
            let mixing = match &draws {
                None => 1.0,
                Some(d) => {
                    let total: f64 = (0..d.n_draws)
                        .map(|r| {
                            let dev = d.draw(rank[i], r);
                            (0..kz).map(|k| z[k] * spread[k] * dev[k]).sum::<f64>().exp()
                        })
                        .sum();
                    total / d.n_draws as f64
                }
            };
            base.exp() * mixing
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionPair {
    pub segment_id: String,
    pub observed: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub model_label: String,
    pub mae: f64,
    pub rmse: f64,
    pub mpb: f64,
    pub pairs: Vec<PredictionPair>,
}

pub fn validate(model: &Model, test: &Dataset) -> Result<ValidationReport> {
    let predicted = predict(model, test)?;
    let observed: Vec<f64> = test.records.iter().map(|r| r.crash_count as f64).collect();
    Ok(ValidationReport {
        model_label: model.label().to_string(),
        mae: mae(&observed, &predicted)?,
        rmse: rmse(&observed, &predicted)?,
        mpb: mpb(&observed, &predicted)?,
        pairs: test
            .records
            .iter()
            .zip(observed.iter().zip(&predicted))
            .map(|(r, (&o, &p))| PredictionPair {
                segment_id: r.segment_id.clone(),
                observed: o,
                predicted: p,
            })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedModel {
    pub model_label: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// Ascending by MAE, ties by RMSE, then input order.
    pub ranked: Vec<ValidationReport>,
    pub failed: Vec<FailedModel>,
}

impl Comparison {
    pub fn rank_of(&self, label: &str) -> Option<usize> {
        self.ranked.iter().position(|r| r.model_label == label).map(|p| p + 1)
    }

    pub fn report(&self, label: &str) -> Option<&ValidationReport> {
        self.ranked.iter().find(|r| r.model_label == label)
    }

    /// Rank, model, MAE, RMSE, MPB; values rounded to 3 decimals.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["Rank", "Model", "Mean Absolute Error", "Root Mean Square Error", "Mean Prediction Bias"])?;
        for (i, r) in self.ranked.iter().enumerate() {
            w.write_record([
                (i + 1).to_string(),
                r.model_label.clone(),
                format!("{:.3}", r.mae),
                format!("{:.3}", r.rmse),
                format!("{:.3}", r.mpb),
            ])?;
        }
        w.flush().map_err(|e| SpfError::io("<csv output>", e))?;
        Ok(())
    }
}

/// Scores every model on `test`. A model that fails to predict is listed in
/// `failed` and does not stop the others.
pub fn compare(models: &[Model], test: &Dataset) -> Result<Comparison> {
    if models.is_empty() {
        return Err(SpfError::Argument("compare needs at least one model".into()));
    }
    let mut ranked = Vec::new();
    let mut failed = Vec::new();
    for m in models {
        match validate(m, test) {
            Ok(r) => ranked.push(r),
            Err(e) => {
                log::warn!("model {} failed: {e}", m.label());
                failed.push(FailedModel {
                    model_label: m.label().to_string(),
                    error: e.to_string(),
                });
            }
        }
    }
    ranked.sort_by(|a, b| a.mae.total_cmp(&b.mae).then(a.rmse.total_cmp(&b.rmse)));
    Ok(Comparison { ranked, failed })
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Predicted-versus-observed scatter with the 45 degree equivalence line.
pub fn scatter_svg(report: &ValidationReport) -> String {
    const SIZE: f64 = 480.0;
    const PAD: f64 = 56.0;
    let top = report
        .pairs
        .iter()
        .map(|p| p.observed.max(p.predicted))
        .fold(1.0_f64, f64::max);
    let span = SIZE - 2.0 * PAD;
    let sx = |v: f64| PAD + v / top * span;
    let sy = |v: f64| SIZE - PAD - v / top * span;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{SIZE}" height="{SIZE}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        SIZE / 2.0,
        escape_xml(&report.model_label)
    );
    let _ = writeln!(
        s,
        r#"<path d="M{p} {b} H{e} M{p} {b} V{p}" stroke="black" fill="none"/>"#,
        p = PAD,
        b = SIZE - PAD,
        e = SIZE - PAD
    );
    for k in 0..=4 {
        let v = top * f64::from(k) / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{v:.1}</text>"#,
            sx(v),
            SIZE - PAD + 16.0
        );
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.1}</text>"#, PAD - 6.0, sy(v) + 4.0);
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">Observed crashes</text>"#,
        SIZE / 2.0,
        SIZE - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{y}" text-anchor="middle" transform="rotate(-90 16 {y})">Predicted crashes</text>"#,
        y = SIZE / 2.0
    );
    let _ = writeln!(
        s,
        r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="red" stroke-width="1.5"/>"#,
        sx(0.0),
        sy(0.0),
        sx(top),
        sy(top)
    );
    for p in &report.pairs {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="steelblue" fill-opacity="0.6"/>"#,
            sx(p.observed),
            sy(p.predicted)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Sampling rule for one synthetic covariate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum CovariateRange {
    Uniform { min: f64, max: f64 },
    Bernoulli { p: f64 },
}

impl CovariateRange {
    fn check(&self, name: &str) -> Result<()> {
        let ok = match *self {
            CovariateRange::Uniform { min, max } => min.is_finite() && max.is_finite() && min <= max,
            CovariateRange::Bernoulli { p } => (0.0..=1.0).contains(&p),
        };
        if ok {
            Ok(())
        } else {
            Err(SpfError::Argument(format!("invalid range for {name}: {self:?}")))
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            CovariateRange::Uniform { min, max } => min + (max - min) * rng.random::<f64>(),
            CovariateRange::Bernoulli { p } => f64::from(u8::from(rng.random::<f64>() < p)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_segments: usize,
    pub seed: u64,
    pub aadt: (f64, f64),
    pub length_miles: (f64, f64),
    pub years: u32,
    pub regions: Vec<String>,
    pub covariates: BTreeMap<String, CovariateRange>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let covariates = BTreeMap::from([
            ("shoulder_width".to_string(), CovariateRange::Uniform { min: 0.0, max: 12.0 }),
            ("speed_limit".to_string(), CovariateRange::Uniform { min: 20.0, max: 55.0 }),
            ("lane_width_ge_10".to_string(), CovariateRange::Bernoulli { p: 0.7 }),
            ("passing_lane".to_string(), CovariateRange::Bernoulli { p: 0.268 }),
        ]);
        SynthConfig {
            n_segments: 299,
            seed: 0,
            aadt: (60.0, 14_611.0),
            length_miles: (0.1, 7.2),
            years: 5,
            regions: ["East", "Middle", "West"].map(String::from).to_vec(),
            covariates,
        }
    }
}

impl SynthConfig {
    pub fn new(n_segments: usize, seed: u64) -> Self {
        SynthConfig {
            n_segments,
            seed,
            ..Self::default()
        }
    }

    /// Uniform ranges whose means equal the observed rural two-lane sample
    /// means (AADT 1828, length 1.149 mi, shoulder 3.348 ft, speed 39.87 mph).
    /// The default full-range design produces counts in the thousands.
    pub fn sample_means(n_segments: usize, seed: u64) -> Self {
        let mut cfg = Self::new(n_segments, seed);
        cfg.aadt = (60.0, 3596.0);
        cfg.length_miles = (0.1, 2.198);
        cfg.covariates.insert("shoulder_width".into(), CovariateRange::Uniform { min: 0.0, max: 6.696 });
        cfg.covariates.insert("speed_limit".into(), CovariateRange::Uniform { min: 24.732, max: 55.0 });
        cfg
    }
}

/// Data-generating model for [`synth_generate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub spec: ModelSpec,
    pub params: ModelParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticData {
    pub dataset: Dataset,
    pub truth: Truth,
    /// Conditional mean each count was sampled from.
    pub means: Vec<f64>,
}

fn positive_range(name: &str, (lo, hi): (f64, f64)) -> Result<()> {
    if lo > 0.0 && lo <= hi && hi.is_finite() {
        Ok(())
    } else {
        Err(SpfError::Argument(format!("{name} range must satisfy 0 < min <= max, got ({lo}, {hi})")))
    }
}

fn draw_count(rng: &mut ChaCha8Rng, mean: f64, alpha: Option<f64>) -> Result<u64> {
    let rate = match alpha {
        Some(a) if a > 0.0 => {
            let g = Gamma::new(1.0 / a, a).map_err(|e| SpfError::Argument(format!("gamma mixing: {e}")))?;
            mean * g.sample(rng)
        }
        _ => mean,
    };
    if rate <= 0.0 {
        return Ok(0);
    }
    let p = Poisson::new(rate).map_err(|e| SpfError::Domain(format!("Poisson mean {rate}: {e}")))?;
    Ok(p.sample(rng) as u64)
}

/// Samples a dataset from `truth`.
///
/// Covariates are uniform (or Bernoulli) over the configured ranges. For
/// mixed truths each segment gets its own coefficients `mu + sigma * e` with
/// `e` from the seeded generator, not from Halton draws. NB truths add
/// gamma heterogeneity with variance `alpha`.
pub fn synth_generate(truth: &Truth, cfg: &SynthConfig) -> Result<SyntheticData> {
    truth.spec.validate()?;
    positive_range("aadt", cfg.aadt)?;
    positive_range("length_miles", cfg.length_miles)?;
    if cfg.years == 0 {
        return Err(SpfError::Argument("years must be at least 1".into()));
    }
    for (name, range) in &cfg.covariates {
        range.check(name)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let width = cfg.n_segments.max(1).to_string().len();
    let mut records = Vec::with_capacity(cfg.n_segments);
    for i in 0..cfg.n_segments {
        let aadt = cfg.aadt.0 + (cfg.aadt.1 - cfg.aadt.0) * rng.random::<f64>();
        let length_miles = cfg.length_miles.0 + (cfg.length_miles.1 - cfg.length_miles.0) * rng.random::<f64>();
        let region = if cfg.regions.is_empty() {
            "All".to_string()
        } else {
            cfg.regions[rng.random_range(0..cfg.regions.len())].clone()
        };
        let covariates = cfg.covariates.iter().map(|(k, r)| (k.clone(), r.sample(&mut rng))).collect();
        records.push(SegmentRecord {
            segment_id: format!("S{:0width$}", i + 1),
            region,
            aadt,
            length_miles,
            years: cfg.years,
            crash_count: 0,
            covariates,
            cmfs: Vec::new(),
        });
    }
    let indicators: Vec<String> = cfg
        .covariates
        .iter()
        .filter(|(_, r)| matches!(r, CovariateRange::Bernoulli { .. }))
        .map(|(k, _)| k.clone())
        .collect();
    let skeleton = Dataset::new(records, "synthetic", &indicators)?;
    let design = build_design(&skeleton, &truth.spec)?;
    let normal = Normal::new(0.0, 1.0).expect("standard normal");

    let (means, alpha) = match &truth.params {
        ModelParams::Fixed(p) => {
            if p.beta.len() != design.fixed.n_cols() {
                return Err(SpfError::Spec("truth coefficients do not match the specification".into()));
            }
            let means = (0..design.n_obs())
                .map(|i| (design.offset[i] + dot(design.fixed.row(i), &p.beta)).exp())
                .collect::<Vec<_>>();
            (means, p.alpha())
        }
        ModelParams::Mixed(p) => {
            let kz = design.random.n_cols();
            if p.beta_fixed.len() != design.fixed.n_cols() || p.mu_random.len() != kz || p.sigma_random.len() != kz {
                return Err(SpfError::Spec("truth parameters do not match the specification".into()));
            }
            let means = (0..design.n_obs())
                .map(|i| {
                    let z = design.random.row(i);
                    let random: f64 = (0..kz)
                        .map(|k| z[k] * (p.mu_random[k] + p.sigma_random[k].abs() * normal.sample(&mut rng)))
                        .sum();
                    (design.offset[i] + dot(design.fixed.row(i), &p.beta_fixed) + random).exp()
                })
                .collect::<Vec<_>>();
            (means, p.alpha())
        }
    };
    let alpha = if truth.spec.family == Family::Nb { alpha } else { None };
    let mut records = skeleton.records;
    for (r, &m) in records.iter_mut().zip(&means) {
        r.crash_count = draw_count(&mut rng, m, alpha)?;
    }
    let dataset = Dataset::new(records, format!("synthetic(seed={})", cfg.seed), &indicators)?;
    Ok(SyntheticData {
        dataset,
        truth: truth.clone(),
        means,
    })
}

/// Dataset whose calibration factors are `c_base` (HSM base) and `c_adj`
/// (base times CMFs) up to rounding.
///
/// Counts are Poisson around `c_adj` times a provisional adjusted
/// prediction. The first CMF of every segment is then rescaled to fix the
/// adjusted-to-base ratio, and AADT is rescaled so the adjusted sum hits
/// the target.
pub fn synth_calibration(c_base: f64, c_adj: f64, n_segments: usize, seed: u64) -> Result<Dataset> {
    if !(c_base > 0.0 && c_adj > 0.0 && n_segments > 0) {
        return Err(SpfError::Argument("calibration targets and size must be positive".into()));
    }
    let cfg = SynthConfig {
        covariates: BTreeMap::new(),
        ..SynthConfig::new(n_segments, seed)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(n_segments);
    for i in 0..n_segments {
        let aadt = cfg.aadt.0 + (cfg.aadt.1 - cfg.aadt.0) * rng.random::<f64>();
        let length_miles = cfg.length_miles.0 + (cfg.length_miles.1 - cfg.length_miles.0) * rng.random::<f64>();
        let cmfs: Vec<f64> = (0..3).map(|_| 0.8 + 0.5 * rng.random::<f64>()).collect();
        let region = cfg.regions[i % cfg.regions.len()].clone();
        let adjusted = apply_cmfs(hsm_base_prediction(aadt, length_miles, f64::from(cfg.years))?, &cmfs)?;
        let crash_count = draw_count(&mut rng, c_adj * adjusted, None)?;
        records.push(SegmentRecord {
            segment_id: format!("C{:05}", i + 1),
            region,
            aadt,
            length_miles,
            years: cfg.years,
            crash_count,
            covariates: BTreeMap::new(),
            cmfs,
        });
    }
    let observed: f64 = records.iter().map(|r| r.crash_count as f64).sum();
    if observed == 0.0 {
        return Err(SpfError::Computation("synthetic calibration sample has no crashes".into()));
    }
    let predicted = |rs: &[SegmentRecord], adj: bool| -> Result<f64> {
        rs.iter().try_fold(0.0, |acc, r| {
            let b = hsm_base_prediction(r.aadt, r.length_miles, f64::from(r.years))?;
            Ok(acc + if adj { apply_cmfs(b, &r.cmfs)? } else { b })
        })
    };
    let g = (c_base / c_adj) * predicted(&records, false)? / predicted(&records, true)?;
    for r in &mut records {
        r.cmfs[0] *= g;
    }
    let k = observed / (c_adj * predicted(&records, true)?);
    for r in &mut records {
        r.aadt *= k;
    }
    Dataset::new(records, format!("synthetic-calibration(seed={seed})"), &[])
}
