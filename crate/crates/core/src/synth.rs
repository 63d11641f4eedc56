//! Synthetic cohorts with selection bias and known potential outcomes.
//!
//! Each record draws a covariate, a treatment decision from the selection
//! model, a potential session count from the dose distribution and an outcome
//! noise term, always in that order and always all four, so the random stream
//! layout does not depend on the scenario's parameter values.
//!
//! Observed outcomes are `y = y(arm) + noise` where `y(0) = mu0(x1)` and
//! `y(1) = y(0) + effect(x1, dose)`.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

use crate::dataset::{AuxCounts, Cohort, DatasetError, StudentRecord};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid scenario field `{field}`: {message}")]
    InvalidScenario { field: String, message: String },
    #[error("query outside scenario support: {0}")]
    OutOfSupport(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn invalid(field: &str, message: impl Into<String>) -> SynthError {
    SynthError::InvalidScenario {
        field: field.to_string(),
        message: message.into(),
    }
}

/// Probability of treatment as a function of the covariate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Selection {
    Constant {
        p: f64,
    },
    /// `sigmoid(intercept + slope * (x1 - x1_mean))`; a negative slope makes
    /// weaker students more likely to be treated.
    Logistic {
        intercept: f64,
        slope: f64,
    },
}

/// Distribution of the session count given treatment, on `1..=max_dose`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DoseDistribution {
    /// P(d) ∝ (1 − q)^(d − 1) with `q = sigmoid(logit(p) + slope * (x1 - x1_mean))`.
    /// A positive slope gives weaker students more sessions.
    Geometric {
        p: f64,
        slope: f64,
        max_dose: u32,
    },
    Uniform {
        max_dose: u32,
    },
}

impl DoseDistribution {
    pub fn max_dose(&self) -> u32 {
        match *self {
            Self::Geometric { max_dose, .. } | Self::Uniform { max_dose } => max_dose,
        }
    }

    /// Probability of each count `1..=max_dose` for a covariate `centered`
    /// units away from the covariate mean.
    pub fn pmf(&self, centered: f64) -> Vec<f64> {
        let weights: Vec<f64> = match *self {
            Self::Geometric { p, slope, max_dose } => {
                let q = if slope == 0.0 {
                    p
                } else {
                    1.0 / (1.0 + (-((p / (1.0 - p)).ln() + slope * centered)).exp())
                };
                (0..max_dose).map(|k| (1.0 - q).powi(k as i32)).collect()
            }
            Self::Uniform { max_dose } => vec![1.0; max_dose as usize],
        };
        let total: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / total).collect()
    }

    fn sample(&self, u: f64, centered: f64) -> u32 {
        let mut acc = 0.0;
        let pmf = self.pmf(centered);
        for (k, p) in pmf.iter().enumerate() {
            acc += p;
            if u < acc {
                return k as u32 + 1;
            }
        }
        self.max_dose()
    }
}

/// Untreated response y(0) as a function of the covariate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseResponse {
    Constant { level: f64 },
    Linear { intercept: f64, slope: f64 },
}

impl BaseResponse {
    pub fn eval(&self, x1: f64) -> f64 {
        match *self {
            Self::Constant { level } => level,
            Self::Linear { intercept, slope } => intercept + slope * x1,
        }
    }
}

/// True individual effect y(1) − y(0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Effect {
    Constant {
        c: f64,
    },
    /// `a + b * x1`
    LinearCovariate {
        a: f64,
        b: f64,
    },
    /// `a + b * dose`
    LinearDose {
        a: f64,
        b: f64,
    },
}

impl Effect {
    pub fn eval(&self, x1: f64, dose: u32) -> f64 {
        match *self {
            Self::Constant { c } => c,
            Self::LinearCovariate { a, b } => a + b * x1,
            Self::LinearDose { a, b } => a + b * f64::from(dose),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub n: usize,
    pub x1_mean: f64,
    pub x1_sd: f64,
    /// Generated covariates are rounded to this grid; 0 disables rounding.
    pub x1_precision: f64,
    pub selection: Selection,
    pub dose: DoseDistribution,
    pub mu0: BaseResponse,
    pub effect: Effect,
    pub noise_sd: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            n: 1389,
            x1_mean: 50.0,
            x1_sd: 10.0,
            x1_precision: 1.0,
            selection: Selection::Constant { p: 91.0 / 1389.0 },
            dose: DoseDistribution::Geometric {
                p: 0.3,
                slope: 0.0,
                max_dose: 14,
            },
            mu0: BaseResponse::Linear {
                intercept: 0.0,
                slope: 1.0,
            },
            effect: Effect::Constant { c: 3.0 },
            noise_sd: 5.0,
        }
    }
}

impl Scenario {
    /// Weaker students self-select into treatment; the true effect is +3 for
    /// everybody, yet the treated arm scores lower on average.
    pub fn standard_biased() -> Self {
        Self {
            n: 10_000,
            selection: Selection::Logistic {
                intercept: -2.0,
                slope: -0.1,
            },
            ..Self::default()
        }
    }

    /// Noiseless dose response `1 + 0.5 * dose` over a flat base response,
    /// with dense treated support on counts 1..=10.
    pub fn dose_recovery() -> Self {
        Self {
            n: 20_000,
            selection: Selection::Constant { p: 0.5 },
            dose: DoseDistribution::Uniform { max_dose: 10 },
            mu0: BaseResponse::Constant { level: 50.0 },
            effect: Effect::LinearDose { a: 1.0, b: 0.5 },
            noise_sd: 0.0,
            ..Self::default()
        }
    }

    /// Low-proficiency students are far more likely to enroll and attend
    /// more sessions; each session adds 2 points over a flat base response.
    pub fn dose_bias() -> Self {
        Self {
            n: 10_000,
            selection: Selection::Logistic {
                intercept: -2.5,
                slope: -0.5,
            },
            dose: DoseDistribution::Geometric {
                p: 0.3,
                slope: 0.2,
                max_dose: 14,
            },
            mu0: BaseResponse::Constant { level: 50.0 },
            effect: Effect::LinearDose { a: 1.0, b: 2.0 },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n == 0 {
            return Err(invalid("n", "must be >= 1"));
        }
        if !self.x1_mean.is_finite() {
            return Err(invalid("x1_mean", "must be finite"));
        }
        if !(self.x1_sd >= 0.0 && self.x1_sd.is_finite()) {
            return Err(invalid("x1_sd", "must be finite and >= 0"));
        }
        if !(self.x1_precision >= 0.0 && self.x1_precision.is_finite()) {
            return Err(invalid("x1_precision", "must be finite and >= 0"));
        }
        match self.selection {
            Selection::Constant { p } if !(0.0..=1.0).contains(&p) => {
                return Err(invalid("selection_p", "must lie in [0, 1]"));
            }
            Selection::Logistic { intercept, slope }
                if !intercept.is_finite() || !slope.is_finite() =>
            {
                return Err(invalid("selection_slope", "must be finite"));
            }
            _ => {}
        }
        if self.dose.max_dose() < 1 {
            return Err(invalid("max_dose", "must be >= 1"));
        }
        if let DoseDistribution::Geometric { p, slope, .. } = self.dose {
            if !(p > 0.0 && p <= 1.0) {
                return Err(invalid("dose_p", "must lie in (0, 1]"));
            }
            if !slope.is_finite() || (slope != 0.0 && p == 1.0) {
                return Err(invalid(
                    "dose_slope",
                    "must be finite, and zero when dose_p = 1",
                ));
            }
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(invalid("noise_sd", "must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn treatment_probability(&self, x1: f64) -> f64 {
        match self.selection {
            Selection::Constant { p } => p,
            Selection::Logistic { intercept, slope } => {
                1.0 / (1.0 + (-(intercept + slope * (x1 - self.x1_mean))).exp())
            }
        }
    }

    /// Builds a scenario from `key = value` pairs over the defaults.
    ///
    /// Keys: `n`, `x1_mean`, `x1_sd`, `x1_precision`, `selection`
    /// (`constant`|`logistic`), `selection_p`, `selection_intercept`,
    /// `selection_slope`, `dose` (`geometric`|`uniform`), `dose_p`,
    /// `dose_slope`, `max_dose`, `mu0` (`constant`|`linear`), `mu0_level`,
    /// `mu0_intercept`, `mu0_slope`, `effect`
    /// (`constant`|`linear_covariate`|`linear_dose`), `effect_c`, `effect_a`,
    /// `effect_b`, `noise_sd`.
    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self, SynthError> {
        const KNOWN: [&str; 21] = [
            "n",
            "x1_mean",
            "x1_sd",
            "x1_precision",
            "selection",
            "selection_p",
            "selection_intercept",
            "selection_slope",
            "dose",
            "dose_p",
            "dose_slope",
            "max_dose",
            "mu0",
            "mu0_level",
            "mu0_intercept",
            "mu0_slope",
            "effect",
            "effect_c",
            "effect_a",
            "effect_b",
            "noise_sd",
        ];
        if let Some(k) = pairs.keys().find(|k| !KNOWN.contains(&k.as_str())) {
            return Err(invalid(k, "unknown key"));
        }
        let real = |key: &str, default: f64| -> Result<f64, SynthError> {
            pairs.get(key).map_or(Ok(default), |v| {
                v.parse::<f64>()
                    .map_err(|_| invalid(key, format!("`{v}` is not a number")))
            })
        };
        let count = |key: &str, default: u64| -> Result<u64, SynthError> {
            pairs.get(key).map_or(Ok(default), |v| {
                v.parse::<u64>()
                    .map_err(|_| invalid(key, format!("`{v}` is not a nonnegative integer")))
            })
        };
        let d = Self::default();
        let kind =
            |key: &str, default: &str| pairs.get(key).map_or(default.to_string(), Clone::clone);

        let selection = match kind("selection", "constant").as_str() {
            "constant" => Selection::Constant {
                p: real("selection_p", 91.0 / 1389.0)?,
            },
            "logistic" => Selection::Logistic {
                intercept: real("selection_intercept", -2.0)?,
                slope: real("selection_slope", -0.1)?,
            },
            other => return Err(invalid("selection", format!("unknown kind `{other}`"))),
        };
        let max_dose =
            u32::try_from(count("max_dose", 14)?).map_err(|_| invalid("max_dose", "too large"))?;
        let dose = match kind("dose", "geometric").as_str() {
            "geometric" => DoseDistribution::Geometric {
                p: real("dose_p", 0.3)?,
                slope: real("dose_slope", 0.0)?,
                max_dose,
            },
            "uniform" => DoseDistribution::Uniform { max_dose },
            other => return Err(invalid("dose", format!("unknown kind `{other}`"))),
        };
        let mu0 = match kind("mu0", "linear").as_str() {
            "constant" => BaseResponse::Constant {
                level: real("mu0_level", 50.0)?,
            },
            "linear" => BaseResponse::Linear {
                intercept: real("mu0_intercept", 0.0)?,
                slope: real("mu0_slope", 1.0)?,
            },
            other => return Err(invalid("mu0", format!("unknown kind `{other}`"))),
        };
        let effect = match kind("effect", "constant").as_str() {
            "constant" => Effect::Constant {
                c: real("effect_c", 3.0)?,
            },
            "linear_covariate" => Effect::LinearCovariate {
                a: real("effect_a", 0.0)?,
                b: real("effect_b", 0.0)?,
            },
            "linear_dose" => Effect::LinearDose {
                a: real("effect_a", 0.0)?,
                b: real("effect_b", 0.0)?,
            },
            other => return Err(invalid("effect", format!("unknown kind `{other}`"))),
        };
        let scenario = Self {
            n: usize::try_from(count("n", d.n as u64)?).map_err(|_| invalid("n", "too large"))?,
            x1_mean: real("x1_mean", d.x1_mean)?,
            x1_sd: real("x1_sd", d.x1_sd)?,
            x1_precision: real("x1_precision", d.x1_precision)?,
            selection,
            dose,
            mu0,
            effect,
            noise_sd: real("noise_sd", d.noise_sd)?,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Parses a scenario file: a JSON object with the `from_pairs` keys, or
    /// `key = value` text.
    pub fn parse(text: &str) -> Result<Self, SynthError> {
        if text.trim_start().starts_with('{') {
            let value: serde_json::Value = serde_json::from_str(text)?;
            let obj = value
                .as_object()
                .ok_or_else(|| invalid("scenario", "expected a JSON object"))?;
            let pairs = obj
                .iter()
                .map(|(k, v)| {
                    let s = match v {
                        serde_json::Value::String(s) => s.clone(),
                        other => other.to_string(),
                    };
                    (k.clone(), s)
                })
                .collect();
            Self::from_pairs(&pairs)
        } else {
            let pairs = crate::kv::parse(text).map_err(|e| invalid("scenario", e.to_string()))?;
            Self::from_pairs(&pairs)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruthRecord {
    pub y0: f64,
    /// y(1) at the record's potential count.
    pub y1: f64,
    /// Count the record receives if treated; controls keep it as their
    /// counterfactual count.
    pub dose: u32,
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruth {
    pub scenario: Scenario,
    pub seed: u64,
    /// Sample average of the per-record true effects.
    pub ate: f64,
    /// Same over the treated records; absent when nobody is treated.
    pub att: Option<f64>,
    pub records: Vec<TruthRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruthQuery {
    Ate,
    Att,
    /// Effect at covariate `x1`, averaged over the dose distribution.
    TauX1(f64),
    TauX1X2(f64, u32),
}

pub fn generate(scenario: &Scenario, seed: u64) -> Result<(Cohort, GroundTruth), SynthError> {
    scenario.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = (scenario.n.max(1) as f64).log10().floor() as usize + 1;
    let mut records = Vec::with_capacity(scenario.n);
    let mut truth = Vec::with_capacity(scenario.n);
    let (mut effect_sum, mut treated_sum, mut n_treated) = (0.0, 0.0, 0usize);

    for k in 0..scenario.n {
        let z: f64 = rng.sample(StandardNormal);
        let u_treat: f64 = rng.random();
        let u_dose: f64 = rng.random();
        let e: f64 = rng.sample(StandardNormal);

        let mut x1 = scenario.x1_mean + scenario.x1_sd * z;
        if scenario.x1_precision > 0.0 {
            x1 = (x1 / scenario.x1_precision).round() * scenario.x1_precision;
        }
        let treated = u_treat < scenario.treatment_probability(x1);
        let dose = scenario.dose.sample(u_dose, x1 - scenario.x1_mean);
        let noise = scenario.noise_sd * e;
        let effect = scenario.effect.eval(x1, dose);
        let y0 = scenario.mu0.eval(x1);
        let y1 = y0 + effect;
        let y = if treated { y1 } else { y0 } + noise;

        effect_sum += effect;
        if treated {
            treated_sum += effect;
            n_treated += 1;
        }
        records.push(StudentRecord {
            id: format!("s{:0width$}", k + 1),
            x1,
            x2: if treated { dose } else { 0 },
            y,
            aux: AuxCounts::default(),
        });
        truth.push(TruthRecord {
            y0,
            y1,
            dose,
            noise,
        });
    }
    let cohort = Cohort::new(records, Cohort::DEFAULT_PRECISION)?;
    let gt = GroundTruth {
        scenario: scenario.clone(),
        seed,
        ate: effect_sum / scenario.n as f64,
        att: (n_treated > 0).then(|| treated_sum / n_treated as f64),
        records: truth,
    };
    Ok((cohort, gt))
}

pub fn true_effects(truth: &GroundTruth, query: TruthQuery) -> Result<f64, SynthError> {
    let s = &truth.scenario;
    match query {
        TruthQuery::Ate => Ok(truth.ate),
        TruthQuery::Att => truth
            .att
            .ok_or_else(|| SynthError::OutOfSupport("no treated records".into())),
        TruthQuery::TauX1(x1) => {
            if !x1.is_finite() {
                return Err(SynthError::OutOfSupport(format!("x1 = {x1}")));
            }
            Ok(s.dose
                .pmf(x1 - s.x1_mean)
                .iter()
                .enumerate()
                .map(|(k, p)| p * s.effect.eval(x1, k as u32 + 1))
                .sum())
        }
        TruthQuery::TauX1X2(x1, x2) => {
            if !x1.is_finite() || x2 < 1 || x2 > s.dose.max_dose() {
                return Err(SynthError::OutOfSupport(format!("(x1, x2) = ({x1}, {x2})")));
            }
            Ok(s.effect.eval(x1, x2))
        }
    }
}

impl GroundTruth {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("ground truth serializes")
    }
}

/// Path of the ground-truth file that accompanies a cohort CSV.
pub fn truth_path(cohort_csv: &Path) -> std::path::PathBuf {
    cohort_csv.with_extension("truth.json")
}
