//! Model specification shared by the design builder, the estimators and the
//! CLI `fit` configuration block.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpfError};

/// Count distribution of the response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Poisson,
    /// Negative binomial with quadratic variance `mu + alpha * mu^2` (NB2).
    #[serde(alias = "negative_binomial", alias = "nb2")]
    Nb,
}

impl Family {
    pub fn label(self) -> &'static str {
        match self {
            Family::Poisson => "Poisson",
            Family::Nb => "NB",
        }
    }
}

/// The four SPF functional forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum FunctionalForm {
    /// Intercept only, with `ln(AADT * L * 365e-6 * years)` as an offset.
    ExposureOffset,
    /// `exp(b0) * AADT^b1 * L^b2`, i.e. regressors `ln AADT` and `ln L`.
    LogLinear,
    /// Intercept plus a list of covariates, all fixed.
    FullFixed,
    /// Same columns as [`FunctionalForm::FullFixed`], some with random coefficients.
    RandomParameters,
}

impl FunctionalForm {
    pub fn number(self) -> u8 {
        match self {
            FunctionalForm::ExposureOffset => 1,
            FunctionalForm::LogLinear => 2,
            FunctionalForm::FullFixed => 3,
            FunctionalForm::RandomParameters => 4,
        }
    }
}

impl TryFrom<u8> for FunctionalForm {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(FunctionalForm::ExposureOffset),
            2 => Ok(FunctionalForm::LogLinear),
            3 => Ok(FunctionalForm::FullFixed),
            4 => Ok(FunctionalForm::RandomParameters),
            other => Err(format!("functional form must be 1..=4, got {other}")),
        }
    }
}

impl From<FunctionalForm> for u8 {
    fn from(f: FunctionalForm) -> u8 {
        f.number()
    }
}

/// How the study period enters the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseScale {
    /// Total crashes over the study period; only form 1 carries `years` (in its offset).
    #[default]
    Total,
    /// Coefficients describe annual frequency: every form gets `ln(years)` in its offset.
    PerYear,
}

/// Mixing distribution of random coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mixing {
    #[default]
    Normal,
}

fn default_draws() -> usize {
    200
}
fn default_skip() -> usize {
    10
}
fn default_tol() -> f64 {
    1e-6
}
fn default_max_iter() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub form: FunctionalForm,
    /// Regressors for forms 3 and 4, in declaration order (intercept implied).
    #[serde(default)]
    pub covariates: Vec<String>,
    /// Covariates with normally distributed coefficients (form 4 only).
    #[serde(default)]
    pub random: Vec<String>,
    #[serde(default = "default_draws")]
    pub draws: usize,
    #[serde(default = "default_skip")]
    pub skip: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub response: ResponseScale,
    #[serde(default)]
    pub mixing: Mixing,
    /// Worker threads for likelihood evaluation; 0 uses the ambient rayon pool.
    /// Results do not depend on this value.
    #[serde(default)]
    pub workers: usize,
}

impl ModelSpec {
    pub fn new(family: Family, form: FunctionalForm) -> Self {
        ModelSpec {
            family,
            form,
            covariates: Vec::new(),
            random: Vec::new(),
            draws: default_draws(),
            skip: default_skip(),
            seed: 0,
            tol: default_tol(),
            max_iter: default_max_iter(),
            response: ResponseScale::Total,
            mixing: Mixing::Normal,
            workers: 0,
        }
    }

    pub fn with_covariates<S: Into<String>>(mut self, names: impl IntoIterator<Item = S>) -> Self {
        self.covariates = names.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_random<S: Into<String>>(mut self, names: impl IntoIterator<Item = S>) -> Self {
        self.random = names.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_draws(mut self, draws: usize) -> Self {
        self.draws = draws;
        self
    }

    /// A short label such as `form 2 Poisson`.
    pub fn label(&self) -> String {
        let kind = if self.form == FunctionalForm::RandomParameters {
            "random-parameter "
        } else {
            ""
        };
        format!("form {} {}{}", self.form.number(), kind, self.family.label())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(SpfError::Spec(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(SpfError::Spec("max_iter must be at least 1".into()));
        }
        if self.draws == 0 {
            return Err(SpfError::Spec("draws must be at least 1".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for c in &self.covariates {
            if !seen.insert(c.as_str()) {
                return Err(SpfError::Spec(format!("covariate `{c}` listed twice")));
            }
        }
        match self.form {
            FunctionalForm::ExposureOffset | FunctionalForm::LogLinear => {
                if !self.covariates.is_empty() {
                    return Err(SpfError::Spec(format!(
                        "form {} takes no covariate list",
                        self.form.number()
                    )));
                }
            }
            FunctionalForm::FullFixed => {}
            FunctionalForm::RandomParameters => {
                for r in &self.random {
                    if !self.covariates.contains(r) {
                        return Err(SpfError::Spec(format!(
                            "random covariate `{r}` is not among the declared covariates"
                        )));
                    }
                }
            }
        }
        if self.form != FunctionalForm::RandomParameters && !self.random.is_empty() {
            return Err(SpfError::Spec("random parameters require form 4".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_defaults() {
        let spec: ModelSpec =
            serde_json::from_str(r#"{"family":"poisson","form":4,"covariates":["a","b"],"random":["b"]}"#)
                .unwrap();
        assert_eq!(spec.form, FunctionalForm::RandomParameters);
        assert_eq!(spec.draws, 200);
        assert_eq!(spec.skip, 10);
        assert_eq!(spec.tol, 1e-6);
        spec.validate().unwrap();
    }

    #[test]
    fn bad_form_rejected() {
        let err = serde_json::from_str::<ModelSpec>(r#"{"family":"nb","form":5}"#).unwrap_err();
        assert!(err.to_string().contains("1..=4"));
    }

    #[test]
    fn random_must_be_declared() {
        let spec = ModelSpec::new(Family::Poisson, FunctionalForm::RandomParameters)
            .with_covariates(["a"])
            .with_random(["b"]);
        assert!(matches!(spec.validate(), Err(SpfError::Spec(_))));
    }
}
