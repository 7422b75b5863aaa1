//! Fixed-parameter SPFs in all three functional forms, Poisson and NB2, with
//! goodness of fit and the likelihood-ratio test for overdispersion.
//!
//! cargo run --release --example fixed_fit

use spfkit::evaluate::{gof, synth_generate, SynthConfig, Truth};
use spfkit::likelihood::FixedParams;
use spfkit::model::{Family, FunctionalForm, ModelSpec};
use spfkit::optimize::{fit_fixed, lr_test, overdispersion_test, ModelParams};

fn main() -> spfkit::Result<()> {
    // NB2 truth for form 2: exp(b0) * AADT^b1 * L^b2, alpha = 0.4
    let truth = Truth {
        spec: ModelSpec::new(Family::Nb, FunctionalForm::LogLinear),
        params: ModelParams::Fixed(FixedParams {
            beta: vec![-5.456, 0.783, 0.904],
            ln_alpha: Some(0.4_f64.ln()),
        }),
    };
    let data = synth_generate(&truth, &SynthConfig::sample_means(1500, 3))?.dataset;

    let covariates = ["shoulder_width", "speed_limit", "lane_width_ge_10", "passing_lane", "ln_aadt", "ln_length"];
    let mut fits = Vec::new();
    for form in [FunctionalForm::ExposureOffset, FunctionalForm::LogLinear, FunctionalForm::FullFixed] {
        for family in [Family::Poisson, Family::Nb] {
            let mut spec = ModelSpec::new(family, form);
            if form == FunctionalForm::FullFixed {
                spec = spec.with_covariates(covariates);
            }
            let fit = fit_fixed(&data, &spec)?;
            let g = gof(&fit)?;
            println!(
                "form {} {:<7}  LL {:>9.2}  AIC {:>8.2}  BIC {:>8.2}  converged {}",
                form.number(),
                family.label(),
                g.loglik_convergence,
                g.aic,
                g.bic,
                fit.converged
            );
            fits.push(fit);
        }
    }

    println!("\nform 2 NB2:\n{}", fits[3].coefficient_table());
    let od = overdispersion_test(&fits[2], &fits[3])?;
    println!(
        "Poisson vs NB2 (form 2): LR {:.2}, p = {:.3e}, prefer {:?}",
        od.statistic, od.p_value, od.prefer
    );
    // covariates added by form 3 over form 2
    let extra = fits[5].n_params - fits[3].n_params;
    let lr = lr_test(fits[3].loglik_convergence, fits[5].loglik_convergence, extra)?;
    println!("form 3 vs form 2 (NB2): LR {:.3} on {} df, p = {:.4}", lr.statistic, lr.df, lr.p_value);
    Ok(())
}
