//! Out-of-sample comparison of HSM, calibrated HSM, and fitted SPFs on a 70/30
//! split, with the ranking table and a predicted-vs-observed scatter.
//!
//! cargo run --release --example validate_compare -- [output.svg]

use spfkit::calibration::{calibration_factor, GroupBy};
use spfkit::data::split;
use spfkit::evaluate::{compare, scatter_svg, synth_generate, Model, ModelArtifact, SynthConfig, Truth};
use spfkit::likelihood::FixedParams;
use spfkit::model::{Family, FunctionalForm, ModelSpec, ResponseScale};
use spfkit::optimize::{fit_fixed, ModelParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut truth_spec = ModelSpec::new(Family::Nb, FunctionalForm::LogLinear);
    truth_spec.response = ResponseScale::PerYear;
    let truth = Truth {
        spec: truth_spec,
        params: ModelParams::Fixed(FixedParams {
            beta: vec![-6.2, 0.9, 0.95],
            ln_alpha: Some(0.3_f64.ln()),
        }),
    };
    let data = synth_generate(&truth, &SynthConfig::new(1000, 5))?.dataset;
    let (train, test) = split(&data, 0.7, 5)?;

    let c = calibration_factor(&train, true, GroupBy::All)?[0].c_adj;
    let mut models = vec![Model::hsm("HSM", 1.0), Model::hsm("HSM x C", c)];
    for (label, family, form) in [
        ("Poisson form 1", Family::Poisson, FunctionalForm::ExposureOffset),
        ("NB2 form 2", Family::Nb, FunctionalForm::LogLinear),
    ] {
        let mut spec = ModelSpec::new(family, form);
        spec.response = ResponseScale::PerYear;
        models.push(Model::Fitted(ModelArtifact::from_fit(&fit_fixed(&train, &spec)?, label)));
    }

    let cmp = compare(&models, &test)?;
    println!("calibration factor from the training set: {c:.3}\n");
    cmp.write_csv(std::io::stdout().lock())?;
    if let Some(path) = std::env::args().nth(1) {
        let best = &cmp.ranked[0];
        std::fs::write(&path, scatter_svg(best))?;
        println!("\nscatter for {} written to {path}", best.model_label);
    }
    Ok(())
}
