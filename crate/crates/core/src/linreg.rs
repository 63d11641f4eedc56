//! Ordinary least squares with an intercept, and the τ̂-on-(x1, x2) diagnostic.
//!
//! The regressors are centered and scaled to unit norm, then the normal
//! equations are solved by Cholesky. If the scaled Gram matrix has condition
//! number above [`GRAM_CONDITION_LIMIT`] the solve falls back to a
//! column-pivoted Householder QR of the scaled design; a design whose
//! estimated condition number still exceeds [`DESIGN_CONDITION_LIMIT`] is
//! rejected as rank deficient.

use serde::Serialize;
use thiserror::Error;

use crate::dataset::Cohort;
use crate::tlearner::TLearnerModel;

pub const GRAM_CONDITION_LIMIT: f64 = 1e12;
pub const DESIGN_CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Error, PartialEq)]
pub enum OlsError {
    #[error("{n} rows cannot determine {params} parameters")]
    Underdetermined { n: usize, params: usize },
    #[error("design matrix is rank deficient (column {column})")]
    RankDeficient { column: usize },
    #[error("row {row} has {got} features, expected {expected}")]
    DimensionMismatch {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("{rows} rows but {targets} targets")]
    LengthMismatch { rows: usize, targets: usize },
    #[error("non-finite value in regression data")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub r_squared: f64,
    pub n: usize,
}

impl OlsFit {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(x)
                .map(|(b, v)| b * v)
                .sum::<f64>()
    }
}

pub fn ols_fit(design: &[Vec<f64>], targets: &[f64]) -> Result<OlsFit, OlsError> {
    let n = design.len();
    if n != targets.len() {
        return Err(OlsError::LengthMismatch {
            rows: n,
            targets: targets.len(),
        });
    }
    let p = design.first().map_or(0, Vec::len);
    if n <= p + 1 {
        return Err(OlsError::Underdetermined { n, params: p + 1 });
    }
    for (row, x) in design.iter().enumerate() {
        if x.len() != p {
            return Err(OlsError::DimensionMismatch {
                row,
                expected: p,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(OlsError::NonFinite);
        }
    }
    if targets.iter().any(|v| !v.is_finite()) {
        return Err(OlsError::NonFinite);
    }

    let nf = n as f64;
    let y_mean = targets.iter().sum::<f64>() / nf;
    let yc: Vec<f64> = targets.iter().map(|y| y - y_mean).collect();

    // Centered, unit-norm columns.
    let mut means = vec![0.0; p];
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut scales = vec![0.0; p];
    for j in 0..p {
        let mean = design.iter().map(|x| x[j]).sum::<f64>() / nf;
        let col: Vec<f64> = design.iter().map(|x| x[j] - mean).collect();
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        // A column indistinguishable from a constant is collinear with the intercept.
        let magnitude = mean.abs() + norm / nf.sqrt();
        if norm.is_nan() || norm <= 0.0 || norm / nf.sqrt() <= magnitude / DESIGN_CONDITION_LIMIT {
            return Err(OlsError::RankDeficient { column: j });
        }
        means[j] = mean;
        scales[j] = norm;
        cols.push(col.into_iter().map(|v| v / norm).collect());
    }

    let scaled = match cholesky_solve(&cols, &yc) {
        Some(beta) => beta,
        None => pivoted_qr_solve(&cols, &yc)?,
    };
    let coefficients: Vec<f64> = scaled.iter().zip(&scales).map(|(b, s)| b / s).collect();
    let intercept = y_mean
        - coefficients
            .iter()
            .zip(&means)
            .map(|(b, m)| b * m)
            .sum::<f64>();

    let sst: f64 = yc.iter().map(|v| v * v).sum();
    let sse: f64 = design
        .iter()
        .zip(targets)
        .map(|(x, y)| {
            let fitted = intercept + coefficients.iter().zip(x).map(|(b, v)| b * v).sum::<f64>();
            (y - fitted).powi(2)
        })
        .sum();
    let r_squared = if sst == 0.0 {
        1.0
    } else {
        (1.0 - sse / sst).clamp(0.0, 1.0)
    };
    Ok(OlsFit {
        coefficients,
        intercept,
        r_squared,
        n,
    })
}

/// Solves (ZᵀZ) b = Zᵀy. `None` when the factorisation breaks down or the
/// Gram matrix is too ill-conditioned to trust.
#[allow(clippy::needless_range_loop)]
fn cholesky_solve(cols: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    let p = cols.len();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
    let mut l = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..=i {
            let mut s = dot(&cols[i], &cols[j]);
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s.is_nan() || s <= 0.0 {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let diag = (0..p).map(|i| l[i][i]);
    let (lo, hi) = diag.fold((f64::INFINITY, 0.0_f64), |(lo, hi), d| {
        (lo.min(d), hi.max(d))
    });
    if p > 0 && (hi / lo).powi(2) > GRAM_CONDITION_LIMIT {
        return None;
    }
    let rhs: Vec<f64> = cols.iter().map(|c| dot(c, y)).collect();
    let mut z = vec![0.0; p];
    for i in 0..p {
        let s = rhs[i] - (0..i).map(|k| l[i][k] * z[k]).sum::<f64>();
        z[i] = s / l[i][i];
    }
    let mut b = vec![0.0; p];
    for i in (0..p).rev() {
        let s = z[i] - (i + 1..p).map(|k| l[k][i] * b[k]).sum::<f64>();
        b[i] = s / l[i][i];
    }
    Some(b)
}

/// Least squares by Householder QR with column pivoting.
fn pivoted_qr_solve(cols: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>, OlsError> {
    let p = cols.len();
    let n = y.len();
    let mut a: Vec<Vec<f64>> = cols.to_vec();
    let mut qty = y.to_vec();
    let mut perm: Vec<usize> = (0..p).collect();
    let mut r00 = 0.0;

    for k in 0..p {
        // Pivot on the largest remaining column norm below row k.
        let norm_below = |c: &Vec<f64>| c[k..].iter().map(|v| v * v).sum::<f64>();
        let piv = (k..p)
            .max_by(|&i, &j| {
                norm_below(&a[i])
                    .total_cmp(&norm_below(&a[j]))
                    .then(j.cmp(&i))
            })
            .unwrap_or(k);
        a.swap(k, piv);
        perm.swap(k, piv);

        let alpha = norm_below(&a[k]).sqrt();
        if k == 0 {
            r00 = alpha;
        }
        if alpha.is_nan() || alpha <= 0.0 || alpha * DESIGN_CONDITION_LIMIT < r00 {
            return Err(OlsError::RankDeficient { column: perm[k] });
        }
        let sign = if a[k][k] >= 0.0 { 1.0 } else { -1.0 };
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] += sign * alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        let reflect = |c: &mut [f64]| {
            let proj = v.iter().zip(c.iter()).map(|(a, b)| a * b).sum::<f64>() * 2.0 / vnorm2;
            for (ci, vi) in c.iter_mut().zip(&v) {
                *ci -= proj * vi;
            }
        };
        for col in a.iter_mut().skip(k) {
            reflect(&mut col[k..n]);
        }
        reflect(&mut qty[k..n]);
    }

    let mut b = vec![0.0; p];
    for i in (0..p).rev() {
        let s = qty[i] - (i + 1..p).map(|j| a[j][i] * b[j]).sum::<f64>();
        b[i] = s / a[i][i];
    }
    let mut out = vec![0.0; p];
    for (k, &orig) in perm.iter().enumerate() {
        out[orig] = b[k];
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatterPoint {
    pub x2: u32,
    pub tau: f64,
    pub x1_bin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoseRegression {
    pub fit: OlsFit,
    pub scatter: Vec<ScatterPoint>,
}

impl DoseRegression {
    /// `x2,tau,x1_bin`, one row per student.
    pub fn scatter_csv(&self) -> String {
        let mut out = String::from("x2,tau,x1_bin\n");
        for p in &self.scatter {
            out.push_str(&format!("{},{},{}\n", p.x2, p.tau, p.x1_bin));
        }
        out
    }
}

/// Fails with `RankDeficient` when every student has the same treatment
/// count, in which case the dose regression is not identifiable.
pub fn check_dose_variation(cohort: &Cohort) -> Result<(), OlsError> {
    let mut doses = cohort.records().iter().map(|r| r.x2);
    match doses.next() {
        Some(first) if doses.any(|d| d != first) => Ok(()),
        _ => Err(OlsError::RankDeficient { column: 1 }),
    }
}

/// Regresses each student's τ̂(x1) on their (x1, x2).
pub fn tau_dose_regression(
    cohort: &Cohort,
    model: &TLearnerModel,
) -> Result<DoseRegression, OlsError> {
    let records = cohort.records();
    let scatter: Vec<ScatterPoint> = (0..cohort.len())
        .map(|k| {
            let x1_bin = cohort.binned_x1(k);
            ScatterPoint {
                x2: records[k].x2,
                tau: model.tau(x1_bin),
                x1_bin,
            }
        })
        .collect();
    let design: Vec<Vec<f64>> = scatter
        .iter()
        .map(|p| vec![p.x1_bin, f64::from(p.x2)])
        .collect();
    let targets: Vec<f64> = scatter.iter().map(|p| p.tau).collect();
    let fit = ols_fit(&design, &targets)?;
    Ok(DoseRegression { fit, scatter })
}
