//! Command-line front end.
//!
//! Every command reads an optional JSON run configuration, applies flag
//! overrides, writes its artifacts into the output directory and finishes
//! with `run_manifest.json` (effective-config hash, version, seeds, output
//! list). Exit codes: 0 success, 1 invalid input or configuration, 2 failed
//! computation, 64 usage error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calibration::{calibration_factor, rate_summary, write_rate_csv, GroupBy, RateKind};
use crate::data::{load_segments, split, write_segments, Dataset, Schema};
use crate::error::{Result, SpfError};
use crate::evaluate::{
    compare, gof, scatter_svg, synth_generate, validate, Comparison, FailedModel, Model, ModelArtifact, SynthConfig, Truth,
};
use crate::mixed::fit_random;
use crate::model::{Family, FunctionalForm, ModelSpec};
use crate::optimize::{fit_fixed, overdispersion_test, FitResult};

pub const EXIT_USAGE: i32 = 64;
pub const OUTPUT_DIR_ENV: &str = "SPFKIT_OUTPUT_DIR";
const DEFAULT_OUTPUT_DIR: &str = "spfkit-output";

#[derive(Debug, Parser)]
#[command(name = "spfkit", version, about = "Safety performance function estimation and validation")]
pub struct Cli {
    /// JSON run configuration
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Segment CSV (overrides the configured input)
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Seed for splits, synthetic data and model specs
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (falls back to $SPFKIT_OUTPUT_DIR)
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Halton draws per observation for random-parameter models
    #[arg(long, global = true)]
    pub draws: Option<usize>,
    /// Leading Halton points discarded
    #[arg(long, global = true)]
    pub skip: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GroupArg {
    Region,
    All,
}

impl From<GroupArg> for GroupBy {
    fn from(g: GroupArg) -> Self {
        match g {
            GroupArg::Region => GroupBy::Region,
            GroupArg::All => GroupBy::All,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RateArg {
    Vmt,
    PerMile,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Crash-rate summary table (CSV)
    Rates {
        #[arg(long, value_enum)]
        kind: Option<RateArg>,
        #[arg(long, value_enum)]
        group_by: Option<GroupArg>,
    },
    /// HSM calibration factors (JSON)
    Calibrate {
        #[arg(long, value_enum)]
        group_by: Option<GroupArg>,
        /// Ignore CMFs when computing predictions
        #[arg(long)]
        unadjusted: bool,
    },
    /// Fit one model specification
    Fit {
        /// ModelSpec JSON (overrides the configured `fit` block)
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Score saved models on the input (or its held-out split)
    Validate {
        /// Model artifact JSON files
        #[arg(long = "model")]
        models: Vec<PathBuf>,
    },
    /// Split, fit, calibrate and rank models out of sample
    Compare,
    /// Generate a synthetic dataset from a known truth
    Simulate {
        /// Number of segments
        #[arg(long)]
        n: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub fraction: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { fraction: 0.7, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatesConfig {
    pub kind: RateKind,
    pub group_by: GroupBy,
}

impl Default for RatesConfig {
    fn default() -> Self {
        RatesConfig {
            kind: RateKind::Vmt,
            group_by: GroupBy::Region,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrateConfig {
    pub group_by: GroupBy,
    pub adjusted: bool,
}

impl Default for CalibrateConfig {
    fn default() -> Self {
        CalibrateConfig {
            group_by: GroupBy::Region,
            adjusted: true,
        }
    }
}

/// A model for `validate`: an artifact path or an inline model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    Path(PathBuf),
    Inline(Model),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidateConfig {
    #[serde(default)]
    pub models: Vec<ModelRef>,
    /// Score the held-out part of this split instead of the whole input.
    #[serde(default)]
    pub split: Option<SplitConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSpec {
    #[serde(default)]
    pub label: Option<String>,
    pub spec: ModelSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompareConfig {
    pub split: SplitConfig,
    /// Include the uncalibrated HSM base SPF.
    pub hsm: bool,
    /// Include the HSM SPF times the training-set calibration factor.
    pub calibrated_hsm: bool,
    pub models: Vec<LabeledSpec>,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            split: SplitConfig::default(),
            hsm: true,
            calibrated_hsm: true,
            models: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub truth: Truth,
    #[serde(default)]
    pub synth: SynthConfig,
}

/// JSON run configuration. Relative paths resolve against the directory of
/// the configuration file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub schema: Schema,
    pub output_dir: Option<PathBuf>,
    pub rates: RatesConfig,
    pub calibrate: CalibrateConfig,
    pub fit: Option<LabeledSpec>,
    pub validate: ValidateConfig,
    pub compare: CompareConfig,
    pub simulate: Option<SimulateConfig>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| SpfError::io(path, e))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = cfg.input.as_mut() {
            resolve(p);
        }
        if let Some(p) = cfg.output_dir.as_mut() {
            resolve(p);
        }
        for m in &mut cfg.validate.models {
            if let ModelRef::Path(p) = m {
                resolve(p);
            }
        }
        Ok(cfg)
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    spfkit_version: &'a str,
    config_sha256: String,
    input: Option<String>,
    input_sha256: Option<String>,
    seeds: Vec<(String, u64)>,
    outputs: Vec<String>,
    effective_config: &'a RunConfig,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn new(dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir).map_err(|e| SpfError::io(&dir, e))?;
        Ok(Outputs { dir, written: Vec::new() })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| SpfError::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| SpfError::io(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }
}

/// File-name-safe form of a model label.
pub fn slug(label: &str) -> String {
    let mut s: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect();
    while s.contains("__") {
        s = s.replace("__", "_");
    }
    s.trim_matches('_').to_string()
}

fn load_input(cfg: &RunConfig) -> Result<Dataset> {
    let path = cfg
        .input
        .as_ref()
        .ok_or_else(|| SpfError::Argument("no input: pass --input or set `input` in the config".into()))?;
    load_segments(path, &cfg.schema)
}

fn fit_spec(data: &Dataset, spec: &ModelSpec) -> Result<FitResult> {
    if spec.form == FunctionalForm::RandomParameters {
        fit_random(data, spec)
    } else {
        fit_fixed(data, spec)
    }
}

fn apply_spec_overrides(spec: &mut ModelSpec, cli: &Cli) {
    if let Some(d) = cli.draws {
        spec.draws = d;
    }
    if let Some(s) = cli.skip {
        spec.skip = s;
    }
    if let Some(s) = cli.seed {
        spec.seed = s;
    }
}

fn write_scatters(out: &mut Outputs, reports: &Comparison) -> Result<()> {
    for r in &reports.ranked {
        out.write(&format!("scatter_{}.svg", slug(&r.model_label)), scatter_svg(r).as_bytes())?;
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(p) = &cli.input {
        cfg.input = Some(p.clone());
    }
    let output_dir = cli
        .output_dir
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    cfg.output_dir = Some(output_dir.clone());
    let mut seeds: Vec<(String, u64)> = Vec::new();
    let mut out = Outputs::new(output_dir)?;

    let name = match &cli.command {
        Command::Rates { kind, group_by } => {
            if let Some(k) = kind {
                cfg.rates.kind = match k {
                    RateArg::Vmt => RateKind::Vmt,
                    RateArg::PerMile => RateKind::PerMile,
                };
            }
            if let Some(g) = group_by {
                cfg.rates.group_by = (*g).into();
            }
            let data = load_input(&cfg)?;
            let rows = rate_summary(&data, cfg.rates.kind, cfg.rates.group_by)?;
            let mut buf = Vec::new();
            write_rate_csv(&mut buf, &rows)?;
            out.write("rates.csv", &buf)?;
            out.json("rates.json", &rows)?;
            "rates"
        }
        Command::Calibrate { group_by, unadjusted } => {
            if let Some(g) = group_by {
                cfg.calibrate.group_by = (*g).into();
            }
            if *unadjusted {
                cfg.calibrate.adjusted = false;
            }
            let data = load_input(&cfg)?;
            let res = calibration_factor(&data, cfg.calibrate.adjusted, cfg.calibrate.group_by)?;
            out.json("calibration.json", &res)?;
            "calibrate"
        }
        Command::Fit { spec } => {
            if let Some(p) = spec {
                let text = fs::read_to_string(p).map_err(|e| SpfError::io(p, e))?;
                cfg.fit = Some(LabeledSpec {
                    label: None,
                    spec: serde_json::from_str(&text)?,
                });
            }
            let labeled = cfg
                .fit
                .as_mut()
                .ok_or_else(|| SpfError::Argument("fit needs --spec or a `fit` block in the config".into()))?;
            apply_spec_overrides(&mut labeled.spec, cli);
            seeds.push(("spec".into(), labeled.spec.seed));
            let labeled = labeled.clone();
            let data = load_input(&cfg)?;
            let fit = fit_spec(&data, &labeled.spec)?;
            let label = labeled.label.clone().unwrap_or_else(|| labeled.spec.label());
            out.json("fit_result.json", &fit)?;
            out.write("coefficients.txt", fit.coefficient_table().as_bytes())?;
            #[derive(Serialize)]
            struct GofOut {
                gof: crate::evaluate::GofReport,
                #[serde(skip_serializing_if = "Option::is_none")]
                overdispersion: Option<crate::optimize::OverdispersionTest>,
            }
            let overdispersion = if labeled.spec.family == Family::Nb && labeled.spec.form != FunctionalForm::RandomParameters
            {
                let mut p = labeled.spec.clone();
                p.family = Family::Poisson;
                Some(overdispersion_test(&fit_fixed(&data, &p)?, &fit)?)
            } else {
                None
            };
            out.json(
                "gof.json",
                &GofOut {
                    gof: gof(&fit)?,
                    overdispersion,
                },
            )?;
            out.json("model.json", &ModelArtifact::from_fit(&fit, label))?;
            print!("{}", fit.coefficient_table());
            "fit"
        }
        Command::Validate { models } => {
            for m in models {
                cfg.validate.models.push(ModelRef::Path(m.clone()));
            }
            if let (Some(seed), Some(s)) = (cli.seed, cfg.validate.split.as_mut()) {
                s.seed = seed;
            }
            if cfg.validate.models.is_empty() {
                return Err(SpfError::Argument("validate needs at least one --model".into()));
            }
            let data = load_input(&cfg)?;
            let test = match cfg.validate.split {
                Some(s) => {
                    seeds.push(("split".into(), s.seed));
                    split(&data, s.fraction, s.seed)?.1
                }
                None => data,
            };
            let models = cfg
                .validate
                .models
                .iter()
                .map(|m| match m {
                    ModelRef::Path(p) => ModelArtifact::load(p).map(Model::Fitted),
                    ModelRef::Inline(m) => Ok(m.clone()),
                })
                .collect::<Result<Vec<_>>>()?;
            let mut reports = Vec::new();
            for m in &models {
                reports.push(validate(m, &test)?);
            }
            let cmp = Comparison {
                ranked: reports,
                failed: Vec::new(),
            };
            out.json("validation.json", &cmp.ranked)?;
            let mut buf = Vec::new();
            cmp.write_csv(&mut buf)?;
            out.write("validation.csv", &buf)?;
            write_scatters(&mut out, &cmp)?;
            "validate"
        }
        Command::Compare => {
            if let Some(seed) = cli.seed {
                cfg.compare.split.seed = seed;
            }
            for m in &mut cfg.compare.models {
                apply_spec_overrides(&mut m.spec, cli);
            }
            seeds.push(("split".into(), cfg.compare.split.seed));
            let data = load_input(&cfg)?;
            let (train, test) = split(&data, cfg.compare.split.fraction, cfg.compare.split.seed)?;
            let mut models = Vec::new();
            if cfg.compare.hsm {
                models.push(Model::hsm("HSM", 1.0));
            }
            if cfg.compare.calibrated_hsm {
                let c = calibration_factor(&train, true, GroupBy::All)?;
                out.json("calibration.json", &c)?;
                models.push(Model::hsm("HSM x C", c[0].c_adj));
            }
            let mut fits = Vec::new();
            let mut fit_failures = Vec::new();
            for m in &cfg.compare.models {
                let label = m.label.clone().unwrap_or_else(|| m.spec.label());
                let fit = match fit_spec(&train, &m.spec) {
                    Ok(f) => f,
                    Err(e) => {
                        log::warn!("model {label} failed to fit: {e}");
                        fit_failures.push(FailedModel {
                            model_label: label,
                            error: e.to_string(),
                        });
                        continue;
                    }
                };
                let artifact = ModelArtifact::from_fit(&fit, label.clone());
                out.json(&format!("models/{}.json", slug(&label)), &artifact)?;
                fits.push((label, gof(&fit)?));
                models.push(Model::Fitted(artifact));
            }
            if models.is_empty() {
                return Err(SpfError::Computation("no model could be fitted".into()));
            }
            let mut cmp = compare(&models, &test)?;
            fit_failures.append(&mut cmp.failed);
            cmp.failed = fit_failures;
            out.json("comparison.json", &cmp)?;
            out.json("in_sample_gof.json", &fits)?;
            let mut buf = Vec::new();
            cmp.write_csv(&mut buf)?;
            out.write("comparison.csv", &buf)?;
            write_scatters(&mut out, &cmp)?;
            print!("{}", String::from_utf8_lossy(&buf));
            "compare"
        }
        Command::Simulate { n } => {
            let sim = cfg
                .simulate
                .as_mut()
                .ok_or_else(|| SpfError::Argument("simulate needs a `simulate` block in the config".into()))?;
            if let Some(n) = n {
                sim.synth.n_segments = *n;
            }
            if let Some(seed) = cli.seed {
                sim.synth.seed = seed;
            }
            seeds.push(("synth".into(), sim.synth.seed));
            let sim = sim.clone();
            let data = synth_generate(&sim.truth, &sim.synth)?;
            let mut buf = Vec::new();
            write_segments(&mut buf, &data.dataset)?;
            out.write("synthetic.csv", &buf)?;
            out.json("truth.json", &data.truth)?;
            "simulate"
        }
    };

    let config_json = serde_json::to_vec(&cfg)?;
    let (input, input_sha256) = match (&cfg.input, name) {
        (Some(p), n) if n != "simulate" => {
            let bytes = fs::read(p).map_err(|e| SpfError::io(p, e))?;
            (Some(p.display().to_string()), Some(sha256_hex(&bytes)))
        }
        _ => (None, None),
    };
    let manifest = Manifest {
        command: name,
        spfkit_version: env!("CARGO_PKG_VERSION"),
        config_sha256: sha256_hex(&config_json),
        input,
        input_sha256,
        seeds,
        outputs: out.written.clone(),
        effective_config: &cfg,
    };
    out.json("run_manifest.json", &manifest)?;
    Ok(())
}

/// Parses `argv` and runs the command; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs() {
        assert_eq!(slug("HSM x C"), "hsm_x_c");
        assert_eq!(slug("form 4 random-parameter Poisson"), "form_4_random_parameter_poisson");
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run(["spfkit", "bogus"]), EXIT_USAGE);
        assert_eq!(run(["spfkit", "rates", "--nope"]), EXIT_USAGE);
        assert_eq!(run(["spfkit", "--help"]), 0);
    }

    #[test]
    fn config_round_trip() {
        let text = r#"{"input": "d.csv", "fit": {"spec": {"family": "poisson", "form": 2}},
                       "compare": {"split": {"fraction": 0.7, "seed": 3}}}"#;
        let cfg: RunConfig = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.compare.split.seed, 3);
        assert!(cfg.compare.hsm);
        assert_eq!(cfg.fit.unwrap().spec.form, FunctionalForm::LogLinear);
    }
}
