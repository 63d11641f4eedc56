//! One-variable T-learner over the binned covariate.
//!
//! `mu1` is fitted on the treated arm only and `mu0` on the control arm only;
//! the CATE is their difference. Models are always fed the *binned* covariate
//! so that τ̂ is constant within every covariate group `S_{x1}`.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::dataset::Cohort;
use crate::forest::{fit_forest, ForestError, ForestParams, RegressionForest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Arm {
    /// `R1`: at least one session.
    Treated,
    /// `R0`: no sessions.
    Control,
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arm::Treated => "R1",
            Arm::Control => "R0",
        })
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EstimateError {
    #[error("arm {0} is empty")]
    EmptyArm(Arm),
    #[error("cohort is empty")]
    EmptyCohort,
    #[error("no records in covariate bin {0}")]
    EmptyBin(f64),
    #[error("treatment count must be >= 1, got {0}")]
    Domain(u32),
    #[error(transparent)]
    Forest(#[from] ForestError),
}

/// Seed for the forest of one arm, derived from the run seed.
///
/// Both the one- and two-variable learners use this derivation, which keeps
/// their control forests bootstrap-aligned under a shared run seed.
pub fn arm_seed(seed: u64, arm: Arm) -> u64 {
    let tag = match arm {
        Arm::Treated => 0x5452_4541_5445_4431,
        Arm::Control => 0x434f_4e54_524f_4c30,
    };
    splitmix64(seed ^ tag)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitMeta {
    pub params: ForestParams,
    pub seed: u64,
    pub n_treated: usize,
    pub n_control: usize,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TLearnerModel {
    pub mu1: RegressionForest,
    pub mu0: RegressionForest,
    pub meta: FitMeta,
}

pub fn fit_t_learner(
    cohort: &Cohort,
    params: &ForestParams,
    seed: u64,
) -> Result<TLearnerModel, EstimateError> {
    let arm = |idx: &[usize], which: Arm| -> Result<RegressionForest, EstimateError> {
        if idx.is_empty() {
            return Err(EstimateError::EmptyArm(which));
        }
        let x: Vec<Vec<f64>> = idx.iter().map(|&i| vec![cohort.binned_x1(i)]).collect();
        let y: Vec<f64> = idx.iter().map(|&i| cohort.records()[i].y).collect();
        Ok(fit_forest(&x, &y, params, arm_seed(seed, which))?)
    };
    let mu1 = arm(cohort.treated(), Arm::Treated)?;
    let mu0 = arm(cohort.control(), Arm::Control)?;
    Ok(TLearnerModel {
        mu1,
        mu0,
        meta: FitMeta {
            params: *params,
            seed,
            n_treated: cohort.treated().len(),
            n_control: cohort.control().len(),
            precision: cohort.groups().precision(),
        },
    })
}

impl TLearnerModel {
    pub fn mu1_at(&self, x1: f64) -> f64 {
        self.mu1.predict_unchecked(&[x1])
    }

    pub fn mu0_at(&self, x1: f64) -> f64 {
        self.mu0.predict_unchecked(&[x1])
    }

    /// τ̂(x1) = μ̂1(x1) − μ̂0(x1) at a bin value.
    pub fn tau(&self, x1: f64) -> f64 {
        self.mu1_at(x1) - self.mu0_at(x1)
    }
}

/// Average of fitted differences over every record.
pub fn ate(model: &TLearnerModel, cohort: &Cohort) -> Result<f64, EstimateError> {
    if cohort.is_empty() {
        return Err(EstimateError::EmptyCohort);
    }
    let sum: f64 = (0..cohort.len())
        .map(|k| model.tau(cohort.binned_x1(k)))
        .sum();
    Ok(sum / cohort.len() as f64)
}

/// Mean over treated records of observed outcome minus μ̂0.
pub fn att(model: &TLearnerModel, cohort: &Cohort) -> Result<f64, EstimateError> {
    let r1 = cohort.treated();
    if r1.is_empty() {
        return Err(EstimateError::EmptyArm(Arm::Treated));
    }
    let sum: f64 = r1
        .iter()
        .map(|&i| cohort.records()[i].y - model.mu0_at(cohort.binned_x1(i)))
        .sum();
    Ok(sum / r1.len() as f64)
}

/// Mean over control records of μ̂1 minus observed outcome.
pub fn atu(model: &TLearnerModel, cohort: &Cohort) -> Result<f64, EstimateError> {
    let r0 = cohort.control();
    if r0.is_empty() {
        return Err(EstimateError::EmptyArm(Arm::Control));
    }
    let sum: f64 = r0
        .iter()
        .map(|&j| model.mu1_at(cohort.binned_x1(j)) - cohort.records()[j].y)
        .sum();
    Ok(sum / r0.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectRow {
    pub x1: f64,
    /// |S_{x1}|
    pub n: usize,
    pub mu0: f64,
    pub mu1: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectSummary {
    pub ate: f64,
    pub att: f64,
    pub atu: f64,
    pub n: usize,
    pub n_treated: usize,
    pub n_control: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectReport {
    pub summary: EffectSummary,
    pub params: ForestParams,
    pub rows: Vec<EffectRow>,
}

pub fn effect_report(
    model: &TLearnerModel,
    cohort: &Cohort,
) -> Result<EffectReport, EstimateError> {
    let rows = cohort
        .groups()
        .iter()
        .map(|(x1, members)| {
            let mu0 = model.mu0_at(x1);
            let mu1 = model.mu1_at(x1);
            EffectRow {
                x1,
                n: members.len(),
                mu0,
                mu1,
                tau: mu1 - mu0,
            }
        })
        .collect();
    Ok(EffectReport {
        summary: EffectSummary {
            ate: ate(model, cohort)?,
            att: att(model, cohort)?,
            atu: atu(model, cohort)?,
            n: cohort.len(),
            n_treated: cohort.treated().len(),
            n_control: cohort.control().len(),
            seed: model.meta.seed,
        },
        params: model.meta.params,
        rows,
    })
}

impl EffectReport {
    /// `x1,mu0,mu1,tau`, one row per covariate bin.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x1,mu0,mu1,tau\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.x1, r.mu0, r.mu1, r.tau));
        }
        out
    }
}
