//! Two-variable T-learner over (covariate, treatment count) and the
//! treatment-count-dependent CATE φ(x1, x2).
//!
//! `mu0` is trained on controls whose count column is identically zero, so
//! the forest can never split on it and μ̂0(x1, v) = μ̂0(x1, 0) for every `v`.
//! φ substitutes a hypothetical count `x2 >= 1` into μ̂1 for every student of
//! a covariate group, including students who never attended, and subtracts
//! the control response at the observed count.

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::Cohort;
use crate::forest::{fit_forest, ForestParams, RegressionForest};
use crate::tlearner::{arm_seed, Arm, EstimateError, FitMeta};

/// Counts plotted as separate series in the dose-response figure.
pub const PLOTTED_COUNTS: [u32; 6] = [1, 2, 3, 5, 10, 14];

#[derive(Debug, Clone, PartialEq)]
pub struct TLearner2Model {
    pub mu1: RegressionForest,
    pub mu0: RegressionForest,
    pub meta: FitMeta,
    /// Smallest and largest count seen among the treated.
    pub treated_dose_range: (u32, u32),
}

pub fn fit_t_learner2(
    cohort: &Cohort,
    params: &ForestParams,
    seed: u64,
) -> Result<TLearner2Model, EstimateError> {
    let records = cohort.records();
    let (r1, r0) = (cohort.treated(), cohort.control());
    if r1.is_empty() {
        return Err(EstimateError::EmptyArm(Arm::Treated));
    }
    if r0.is_empty() {
        return Err(EstimateError::EmptyArm(Arm::Control));
    }
    let x1: Vec<Vec<f64>> = r1
        .iter()
        .map(|&i| vec![cohort.binned_x1(i), f64::from(records[i].x2)])
        .collect();
    let y1: Vec<f64> = r1.iter().map(|&i| records[i].y).collect();
    // Controls carry x2 = 0 by the partition; written out explicitly so the
    // column is zero by construction.
    let x0: Vec<Vec<f64>> = r0.iter().map(|&j| vec![cohort.binned_x1(j), 0.0]).collect();
    let y0: Vec<f64> = r0.iter().map(|&j| records[j].y).collect();

    let mu1 = fit_forest(&x1, &y1, params, arm_seed(seed, Arm::Treated))?;
    let mu0 = fit_forest(&x0, &y0, params, arm_seed(seed, Arm::Control))?;
    Ok(TLearner2Model {
        mu1,
        mu0,
        meta: FitMeta {
            params: *params,
            seed,
            n_treated: r1.len(),
            n_control: r0.len(),
            precision: cohort.groups().precision(),
        },
        treated_dose_range: cohort.treated_dose_range().unwrap_or((1, 1)),
    })
}

impl TLearner2Model {
    /// Assembles a model from already-fitted forests.
    pub fn from_forests(
        mu1: RegressionForest,
        mu0: RegressionForest,
        cohort: &Cohort,
        params: ForestParams,
        seed: u64,
    ) -> Result<Self, EstimateError> {
        for f in [&mu1, &mu0] {
            if f.feature_count() != 2 {
                return Err(crate::forest::ForestError::DimensionMismatch {
                    expected: 2,
                    got: f.feature_count(),
                }
                .into());
            }
        }
        Ok(Self {
            mu1,
            mu0,
            meta: FitMeta {
                params,
                seed,
                n_treated: cohort.treated().len(),
                n_control: cohort.control().len(),
                precision: cohort.groups().precision(),
            },
            treated_dose_range: cohort.treated_dose_range().unwrap_or((1, 1)),
        })
    }

    pub fn mu1_at(&self, x1: f64, x2: u32) -> f64 {
        self.mu1.predict_unchecked(&[x1, f64::from(x2)])
    }

    pub fn mu0_at(&self, x1: f64, x2: u32) -> f64 {
        self.mu0.predict_unchecked(&[x1, f64::from(x2)])
    }

    /// Single-summand form μ̂1(x1, x2) − μ̂0(x1, 0).
    pub fn phi_summand(&self, x1: f64, x2: u32) -> Result<f64, EstimateError> {
        if x2 < 1 {
            return Err(EstimateError::Domain(x2));
        }
        Ok(self.mu1_at(x1, x2) - self.mu0_at(x1, 0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub record: usize,
    pub probe_x2: u32,
    pub at_probe: f64,
    pub at_zero: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndependenceReport {
    pub checked: usize,
    pub violations: Vec<Violation>,
}

impl IndependenceReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks μ̂0(x1_k, v) == μ̂0(x1_k, 0) bitwise for every record and probe.
pub fn check_base_independence(
    model: &TLearner2Model,
    cohort: &Cohort,
    probe_x2: &[u32],
) -> IndependenceReport {
    let mut violations = Vec::new();
    let mut checked = 0;
    for k in 0..cohort.len() {
        let x1 = cohort.binned_x1(k);
        let at_zero = model.mu0_at(x1, 0);
        for &v in probe_x2 {
            checked += 1;
            let at_probe = model.mu0_at(x1, v);
            if at_probe.to_bits() != at_zero.to_bits() {
                violations.push(Violation {
                    record: k,
                    probe_x2: v,
                    at_probe,
                    at_zero,
                });
            }
        }
    }
    IndependenceReport {
        checked,
        violations,
    }
}

/// φ(x1, x2): average over the covariate group of μ̂1 at the hypothetical
/// count minus μ̂0 at the observed count.
pub fn phi(
    model: &TLearner2Model,
    cohort: &Cohort,
    x1: f64,
    x2: u32,
) -> Result<f64, EstimateError> {
    if x2 < 1 {
        return Err(EstimateError::Domain(x2));
    }
    let members = cohort.groups().members(x1);
    if members.is_empty() {
        return Err(EstimateError::EmptyBin(x1));
    }
    let records = cohort.records();
    let sum: f64 = members
        .iter()
        .map(|&k| {
            let xk = cohort.binned_x1(k);
            model.mu1_at(xk, x2) - model.mu0_at(xk, records[k].x2)
        })
        .sum();
    Ok(sum / members.len() as f64)
}

/// ATT under the two-variable model.
pub fn att2(model: &TLearner2Model, cohort: &Cohort) -> Result<f64, EstimateError> {
    let r1 = cohort.treated();
    if r1.is_empty() {
        return Err(EstimateError::EmptyArm(Arm::Treated));
    }
    let records = cohort.records();
    let sum: f64 = r1
        .iter()
        .map(|&i| records[i].y - model.mu0_at(cohort.binned_x1(i), records[i].x2))
        .sum();
    Ok(sum / r1.len() as f64)
}

/// ATT from the one-variable learner and ATT₂ from the two-variable learner,
/// both fitted with the same seed and parameters so their control forests see
/// identical bootstrap samples.
pub fn aligned_att_pair(
    cohort: &Cohort,
    params: &ForestParams,
    seed: u64,
) -> Result<(f64, f64), EstimateError> {
    let one = crate::tlearner::fit_t_learner(cohort, params, seed)?;
    let two = fit_t_learner2(cohort, params, seed)?;
    Ok((crate::tlearner::att(&one, cohort)?, att2(&two, cohort)?))
}

/// Default count probes: every count from 1 to the largest treated count,
/// plus the plotted series.
pub fn default_probe_counts(cohort: &Cohort) -> Vec<u32> {
    let max = cohort.treated_dose_range().map_or(1, |(_, hi)| hi);
    let mut v: Vec<u32> = (1..=max).chain(PLOTTED_COUNTS).collect();
    v.sort_unstable();
    v.dedup();
    v
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CateSurface {
    pub x1_values: Vec<f64>,
    pub x2_values: Vec<u32>,
    /// `phi[i][j]` = φ(x1_values[i], x2_values[j]); `None` where undefined.
    pub phi: Vec<Vec<Option<f64>>>,
    pub missing: usize,
    /// Per column: the count lies outside the observed treated range.
    pub extrapolation_flags: Vec<bool>,
    pub observed_dose_min: u32,
    pub observed_dose_max: u32,
}

/// φ over a grid. Rows and columns are sorted ascending and deduplicated;
/// cells where φ is undefined are left empty and counted.
pub fn phi_surface(
    model: &TLearner2Model,
    cohort: &Cohort,
    x1_bins: &[f64],
    x2_values: &[u32],
) -> Result<CateSurface, EstimateError> {
    if let Some(&bad) = x2_values.iter().find(|&&v| v < 1) {
        return Err(EstimateError::Domain(bad));
    }
    let mut x1_values = x1_bins.to_vec();
    x1_values.sort_by(f64::total_cmp);
    x1_values.dedup();
    let mut x2_values = x2_values.to_vec();
    x2_values.sort_unstable();
    x2_values.dedup();

    let phi: Vec<Vec<Option<f64>>> = x1_values
        .par_iter()
        .map(|&x1| {
            x2_values
                .iter()
                .map(|&x2| phi(model, cohort, x1, x2).ok())
                .collect()
        })
        .collect();
    let missing = phi.iter().flatten().filter(|c| c.is_none()).count();
    let (lo, hi) = model.treated_dose_range;
    let extrapolation_flags = x2_values.iter().map(|&v| v < lo || v > hi).collect();
    Ok(CateSurface {
        x1_values,
        x2_values,
        phi,
        missing,
        extrapolation_flags,
        observed_dose_min: lo,
        observed_dose_max: hi,
    })
}

impl CateSurface {
    /// Long form `x1,x2,phi`, x1-major; undefined cells are written empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x1,x2,phi\n");
        for (x1, row) in self.x1_values.iter().zip(&self.phi) {
            for (x2, cell) in self.x2_values.iter().zip(row) {
                match cell {
                    Some(v) => out.push_str(&format!("{x1},{x2},{v}\n")),
                    None => out.push_str(&format!("{x1},{x2},\n")),
                }
            }
        }
        out
    }

    /// The φ series over x1 for one count, as plotted per count.
    pub fn series(&self, x2: u32) -> Option<Vec<(f64, Option<f64>)>> {
        let j = self.x2_values.iter().position(|&v| v == x2)?;
        Some(
            self.x1_values
                .iter()
                .zip(&self.phi)
                .map(|(&x1, row)| (x1, row[j]))
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{AuxCounts, StudentRecord};
    use crate::forest::{Split, TreeNode, TreeParams};

    fn rec(x1: f64, x2: u32, y: f64) -> StudentRecord {
        StudentRecord {
            id: String::new(),
            x1,
            x2,
            y,
            aux: AuxCounts::default(),
        }
    }

    fn small_cohort() -> Cohort {
        let mut r = Vec::new();
        for i in 0..30 {
            let x1 = 35.0 + (i % 10) as f64;
            let x2 = if i % 3 == 0 { 1 + (i % 4) as u32 } else { 0 };
            r.push(rec(
                x1,
                x2,
                40.0 + x1 * 0.2 + f64::from(x2) + (i % 5) as f64,
            ));
        }
        Cohort::new(r, 1.0).unwrap()
    }

    #[test]
    fn fitted_model_is_independent_of_count() {
        let c = small_cohort();
        let m = fit_t_learner2(&c, &ForestParams::new(3, 10), 1).unwrap();
        let report = check_base_independence(&m, &c, &(0..=14).collect::<Vec<_>>());
        assert!(report.passed());
        assert_eq!(report.checked, c.len() * 15);
    }

    #[test]
    fn adversarial_mu0_is_detected() {
        let c = small_cohort();
        let fitted = fit_t_learner2(&c, &ForestParams::new(2, 3), 1).unwrap();
        let split_on_count = TreeNode::internal(
            Split {
                feature: 1,
                threshold: 2.5,
            },
            TreeNode::leaf(5, 40.0),
            TreeNode::leaf(5, 45.0),
        );
        let mu0 = RegressionForest::from_trees(vec![split_on_count], 2).unwrap();
        let m = TLearner2Model::from_forests(fitted.mu1, mu0, &c, fitted.meta.params, 1).unwrap();
        let report = check_base_independence(&m, &c, &[1, 2, 3, 4]);
        assert!(!report.passed());
        // Probes 3 and 4 cross the threshold for every record.
        assert_eq!(report.violations.len(), 2 * c.len());
        assert!(report.violations.iter().all(|v| v.probe_x2 >= 3));
        assert_eq!(report.violations[0].record, 0);
    }

    #[test]
    fn single_treated_record_fits() {
        let c = Cohort::new(
            vec![rec(40.0, 2, 55.0), rec(41.0, 0, 50.0), rec(42.0, 0, 52.0)],
            1.0,
        )
        .unwrap();
        let m = fit_t_learner2(&c, &ForestParams::default(), 0).unwrap();
        assert_eq!(m.mu1_at(40.0, 2), 55.0);
        assert_eq!(m.mu1_at(10.0, 9), 55.0);
    }

    #[test]
    fn phi_rejects_zero_count_and_empty_bin() {
        let c = small_cohort();
        let m = fit_t_learner2(&c, &ForestParams::new(2, 3), 0).unwrap();
        assert_eq!(phi(&m, &c, 36.0, 0), Err(EstimateError::Domain(0)));
        assert_eq!(m.phi_summand(36.0, 0), Err(EstimateError::Domain(0)));
        assert_eq!(phi(&m, &c, 99.0, 1), Err(EstimateError::EmptyBin(99.0)));
    }

    #[test]
    fn phi_zero_when_arms_coincide() {
        let tree = TreeNode::internal(
            Split {
                feature: 0,
                threshold: 40.5,
            },
            TreeNode::leaf(3, 45.0),
            TreeNode::leaf(3, 50.0),
        );
        let c = small_cohort();
        let f = RegressionForest::from_trees(vec![tree], 2).unwrap();
        let m = TLearner2Model::from_forests(f.clone(), f, &c, ForestParams::default(), 0).unwrap();
        for x1 in c.groups().values() {
            for x2 in 1..=5 {
                assert_eq!(phi(&m, &c, x1, x2).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn surface_matches_cellwise_phi() {
        let c = small_cohort();
        let m = fit_t_learner2(&c, &ForestParams::new(2, 8), 4).unwrap();
        let bins = c.groups().values();
        let s = phi_surface(&m, &c, &bins, &PLOTTED_COUNTS).unwrap();
        assert_eq!(s.phi.len(), bins.len());
        assert_eq!(s.missing, 0);
        for (i, &x1) in s.x1_values.iter().enumerate() {
            for (j, &x2) in s.x2_values.iter().enumerate() {
                assert_eq!(s.phi[i][j], Some(phi(&m, &c, x1, x2).unwrap()));
            }
        }
        assert_eq!((s.observed_dose_min, s.observed_dose_max), (1, 4));
        assert_eq!(
            s.extrapolation_flags,
            vec![false, false, false, true, true, true]
        );
        assert_eq!(s.series(3).unwrap().len(), bins.len());
        assert!(s.series(4).is_none());
    }

    #[test]
    fn surface_one_by_one_and_missing_bins() {
        let c = small_cohort();
        let m = fit_t_learner2(&c, &ForestParams::new(2, 3), 0).unwrap();
        let s = phi_surface(&m, &c, &[36.0], &[1]).unwrap();
        assert_eq!(s.to_csv().lines().count(), 2);
        let s = phi_surface(&m, &c, &[37.0, 120.0], &[2, 1, 2]).unwrap();
        assert_eq!(s.x2_values, vec![1, 2]);
        assert_eq!(s.missing, 2);
        assert!(s.to_csv().contains("120,1,\n"));
        assert!(phi_surface(&m, &c, &[36.0], &[0, 1]).is_err());
    }

    #[test]
    fn att2_zero_when_outcomes_match_mu0() {
        let c = Cohort::new(
            vec![
                rec(40.0, 1, 50.0),
                rec(40.0, 3, 50.0),
                rec(40.0, 0, 50.0),
                rec(41.0, 0, 50.0),
            ],
            1.0,
        )
        .unwrap();
        let m = fit_t_learner2(&c, &ForestParams::new(2, 4), 0).unwrap();
        assert_eq!(att2(&m, &c).unwrap(), 0.0);
    }

    #[test]
    fn aligned_pair_agrees() {
        let c = small_cohort();
        let (a, b) = aligned_att_pair(&c, &ForestParams::new(2, 20), 9).unwrap();
        assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        let tree = ForestParams::single_tree(TreeParams::default());
        let (a, b) = aligned_att_pair(&c, &tree, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn default_probes_include_plotted_counts() {
        let c = small_cohort();
        assert_eq!(default_probe_counts(&c), vec![1, 2, 3, 4, 5, 10, 14]);
    }
}
