//! Monte Carlo check of the Poisson estimator: simulate form-2 data at a known
//! truth many times and count how often the Wald intervals cover it.
//!
//! cargo run --release --example synthetic_recovery -- [replications]

use spfkit::evaluate::{synth_generate, SynthConfig, Truth};
use spfkit::likelihood::FixedParams;
use spfkit::model::{Family, FunctionalForm, ModelSpec};
use spfkit::optimize::{fit_fixed, ModelParams};

fn main() -> spfkit::Result<()> {
    let reps: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(200);
    let beta = [-5.456, 0.783, 0.904];
    let spec = ModelSpec::new(Family::Poisson, FunctionalForm::LogLinear);
    let truth = Truth {
        spec: spec.clone(),
        params: ModelParams::Fixed(FixedParams {
            beta: beta.to_vec(),
            ln_alpha: None,
        }),
    };

    let mut covered = [0u64; 3];
    let mut sum = [0.0; 3];
    for seed in 0..reps {
        let data = synth_generate(&truth, &SynthConfig::sample_means(2000, seed))?.dataset;
        let fit = fit_fixed(&data, &spec)?;
        let se = fit.std_errors.as_deref().unwrap_or(&[f64::NAN; 3]).to_vec();
        for j in 0..3 {
            sum[j] += fit.estimates[j];
            covered[j] += u64::from((fit.estimates[j] - beta[j]).abs() <= 1.96 * se[j]);
        }
    }
    println!("{:<12} {:>9} {:>11} {:>10}", "parameter", "truth", "mean est.", "coverage");
    for (j, name) in ["constant", "ln_aadt", "ln_length"].iter().enumerate() {
        println!(
            "{name:<12} {:>9.3} {:>11.4} {:>9.1}%",
            beta[j],
            sum[j] / reps as f64,
            100.0 * covered[j] as f64 / reps as f64
        );
    }
    Ok(())
}
