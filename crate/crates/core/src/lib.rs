//! Conditional average treatment effect estimation with T-learners.
//!
//! The crate is organised bottom-up:
//!
//! * [`dataset`] ingests cohorts of student records, derives the treated/control
//!   partition from the session count and bins the covariate.
//! * [`forest`] provides CART regression trees and bagged forests, the base
//!   learners for every response function.
//! * [`tlearner`] fits the one-variable T-learner and computes τ̂, ATE, ATT and ATU.
//! * [`treatcount`] fits the two-variable T-learner over (covariate, session count)
//!   and evaluates the treatment-count-dependent CATE φ(x1, x2) and ATT₂.
//! * [`linreg`] is the least-squares diagnostic regressing τ̂ on (x1, x2).
//! * [`synth`] generates biased synthetic cohorts with known potential outcomes.

pub mod dataset;
pub mod forest;
pub mod kv;
pub mod linreg;
pub mod synth;
pub mod tlearner;
pub mod treatcount;

pub use dataset::{Cohort, CovariateGroups, GroupSummary, StudentRecord};
pub use forest::{ForestParams, RegressionForest, TreeNode, TreeParams};

pub use tlearner::{EffectReport, TLearnerModel};
pub use treatcount::{CateSurface, TLearner2Model};
