//! Cohort ingestion, validation and partitioning.
//!
//! A [`Cohort`] owns its [`StudentRecord`]s together with the treated/control
//! partition (derived from the session count, never stored) and the covariate
//! grouping `S_{x1}`. Cohorts are immutable once built.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("at least two scores are required, got {0}")]
    EmptyOrSingleton(usize),
    #[error("scores have zero variance")]
    ZeroVariance,
    #[error("missing required column `{0}`")]
    Schema(String),
    #[error("row {row}, column `{column}`: {message}")]
    Parse {
        row: u64,
        column: String,
        message: String,
    },
    #[error("record `{id}`: {message}")]
    InvalidRecord { id: String, message: String },
    #[error("bin precision must be positive and finite, got {0}")]
    InvalidPrecision(f64),
    #[error("cohort is empty")]
    EmptyCohort,
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Session counts for the auxiliary learning resources.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuxCounts {
    pub remote: u32,
    pub basic_class: u32,
    pub exercises: u32,
    pub videos: u32,
    pub references: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentRecord {
    pub id: String,
    /// Proficiency-test deviation at admission (the covariate).
    pub x1: f64,
    /// Number of face-to-face sessions attended (the treatment count).
    pub x2: u32,
    /// Outcome deviation score.
    pub y: f64,
    pub aux: AuxCounts,
}

impl StudentRecord {
    pub fn treated(&self) -> bool {
        self.x2 >= 1
    }
}

/// Deviation scores: `10 * (raw - mean) / sd + 50` with the population sd.
pub fn to_deviation(raw: &[f64]) -> Result<Vec<f64>, DatasetError> {
    if raw.len() < 2 {
        return Err(DatasetError::EmptyOrSingleton(raw.len()));
    }
    if raw.iter().all(|&v| v == raw[0]) {
        return Err(DatasetError::ZeroVariance);
    }
    let n = raw.len() as f64;
    let mean = raw.iter().sum::<f64>() / n;
    // Corrected two-pass: remove the rounding error left in `mean`.
    let mut centered: Vec<f64> = raw.iter().map(|v| v - mean).collect();
    let residual = centered.iter().sum::<f64>() / n;
    for d in &mut centered {
        *d -= residual;
    }
    let sd = (centered.iter().map(|d| d * d).sum::<f64>() / n).sqrt();
    if sd.is_nan() || sd <= 0.0 {
        return Err(DatasetError::ZeroVariance);
    }
    Ok(centered.into_iter().map(|d| 10.0 * d / sd + 50.0).collect())
}

/// Partition of record indices by binned covariate.
///
/// The bin of a value `v` is `round(v / precision) * precision`. Bins are keyed
/// by their integer index so that ordering and equality are exact.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariateGroups {
    precision: f64,
    bins: BTreeMap<i64, Vec<usize>>,
}

impl CovariateGroups {
    pub fn precision(&self) -> f64 {
        self.precision
    }

    pub fn bin_index(&self, v: f64) -> i64 {
        bin_index(v, self.precision)
    }

    pub fn bin_value(&self, index: i64) -> f64 {
        index as f64 * self.precision
    }

    /// Binned value of `v`.
    pub fn bin(&self, v: f64) -> f64 {
        self.bin_value(self.bin_index(v))
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Bins in ascending order as `(bin value, member indices)`.
    pub fn iter(&self) -> impl Iterator<Item = (f64, &[usize])> + '_ {
        self.bins
            .iter()
            .map(|(&k, v)| (self.bin_value(k), v.as_slice()))
    }

    pub fn values(&self) -> Vec<f64> {
        self.bins.keys().map(|&k| self.bin_value(k)).collect()
    }

    /// Members of the bin containing `x1`; empty when nobody falls in it.
    pub fn members(&self, x1: f64) -> &[usize] {
        self.bins
            .get(&self.bin_index(x1))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

fn bin_index(v: f64, precision: f64) -> i64 {
    (v / precision).round() as i64
}

fn validate_precision(precision: f64) -> Result<(), DatasetError> {
    if precision > 0.0 && precision.is_finite() {
        Ok(())
    } else {
        Err(DatasetError::InvalidPrecision(precision))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    records: Vec<StudentRecord>,
    treated: Vec<usize>,
    control: Vec<usize>,
    groups: CovariateGroups,
}

impl Cohort {
    pub const DEFAULT_PRECISION: f64 = 1.0;

    pub fn new(records: Vec<StudentRecord>, precision: f64) -> Result<Self, DatasetError> {
        validate_precision(precision)?;
        for r in &records {
            if !r.x1.is_finite() || !r.y.is_finite() {
                return Err(DatasetError::InvalidRecord {
                    id: r.id.clone(),
                    message: "covariate and outcome must be finite".into(),
                });
            }
        }
        let (treated, control): (Vec<usize>, Vec<usize>) =
            (0..records.len()).partition(|&i| records[i].treated());
        let groups = group_by_covariate(&records, precision)?;
        Ok(Self {
            records,
            treated,
            control,
            groups,
        })
    }

    pub fn records(&self) -> &[StudentRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Indices of treated records (`R1`).
    pub fn treated(&self) -> &[usize] {
        &self.treated
    }

    /// Indices of control records (`R0`).
    pub fn control(&self) -> &[usize] {
        &self.control
    }

    pub fn groups(&self) -> &CovariateGroups {
        &self.groups
    }

    /// Binned covariate of record `k`; the value estimators feed to the models.
    pub fn binned_x1(&self, k: usize) -> f64 {
        self.groups.bin(self.records[k].x1)
    }

    /// Same records regrouped at another bin width.
    pub fn with_precision(&self, precision: f64) -> Result<Self, DatasetError> {
        Self::new(self.records.clone(), precision)
    }

    /// Largest and smallest session count among the treated, if any.
    pub fn treated_dose_range(&self) -> Option<(u32, u32)> {
        let doses = self.treated.iter().map(|&i| self.records[i].x2);
        let min = doses.clone().min()?;
        let max = doses.max()?;
        Some((min, max))
    }
}

/// Groups records by binned covariate.
pub fn group_by_covariate(
    records: &[StudentRecord],
    precision: f64,
) -> Result<CovariateGroups, DatasetError> {
    validate_precision(precision)?;
    let mut bins: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        bins.entry(bin_index(r.x1, precision)).or_default().push(i);
    }
    Ok(CovariateGroups { precision, bins })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub n_treated: usize,
    pub n_control: usize,
    pub mean_y_treated: Option<f64>,
    pub mean_y_control: Option<f64>,
    pub mean_x1_treated: Option<f64>,
    pub mean_x1_control: Option<f64>,
}

impl GroupSummary {
    /// Naive treated-minus-control outcome difference, when both arms exist.
    pub fn naive_difference(&self) -> Option<f64> {
        Some(self.mean_y_treated? - self.mean_y_control?)
    }

    pub fn to_text(&self) -> String {
        fn fmt(v: Option<f64>) -> String {
            v.map_or_else(|| "n/a".to_string(), |m| format!("{m:.2}"))
        }
        let mut s = String::new();
        s.push_str(&format!(
            "{:<10}{:>8}{:>14}{:>14}\n",
            "group", "n", "mean outcome", "mean covar."
        ));
        s.push_str(&format!(
            "{:<10}{:>8}{:>14}{:>14}\n",
            "treated",
            self.n_treated,
            fmt(self.mean_y_treated),
            fmt(self.mean_x1_treated)
        ));
        s.push_str(&format!(
            "{:<10}{:>8}{:>14}{:>14}\n",
            "control",
            self.n_control,
            fmt(self.mean_y_control),
            fmt(self.mean_x1_control)
        ));
        if let Some(d) = self.naive_difference() {
            s.push_str(&format!("naive difference (treated - control): {d:.2}\n"));
        }
        s
    }
}

pub fn summarize(cohort: &Cohort) -> Result<GroupSummary, DatasetError> {
    if cohort.is_empty() {
        return Err(DatasetError::EmptyCohort);
    }
    let mean = |idx: &[usize], f: fn(&StudentRecord) -> f64| {
        (!idx.is_empty())
            .then(|| idx.iter().map(|&i| f(&cohort.records[i])).sum::<f64>() / idx.len() as f64)
    };
    Ok(GroupSummary {
        n_treated: cohort.treated.len(),
        n_control: cohort.control.len(),
        mean_y_treated: mean(&cohort.treated, |r| r.y),
        mean_y_control: mean(&cohort.control, |r| r.y),
        mean_x1_treated: mean(&cohort.treated, |r| r.x1),
        mean_x1_control: mean(&cohort.control, |r| r.x1),
    })
}

// ---------------------------------------------------------------------------
// CSV schema
// ---------------------------------------------------------------------------

/// Column names of the cohort CSV. Defaults follow the canonical header
/// `id,proficiency,f2f,remote,basic_class,exercises,videos,references,diff_deviation`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMap {
    pub id: String,
    pub proficiency: String,
    pub f2f: String,
    pub remote: String,
    pub basic_class: String,
    pub exercises: String,
    pub videos: String,
    pub references: String,
    pub diff_deviation: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            id: "id".into(),
            proficiency: "proficiency".into(),
            f2f: "f2f".into(),
            remote: "remote".into(),
            basic_class: "basic_class".into(),
            exercises: "exercises".into(),
            videos: "videos".into(),
            references: "references".into(),
            diff_deviation: "diff_deviation".into(),
        }
    }
}

impl ColumnMap {
    pub const CANONICAL: [&'static str; 9] = [
        "id",
        "proficiency",
        "f2f",
        "remote",
        "basic_class",
        "exercises",
        "videos",
        "references",
        "diff_deviation",
    ];

    /// Applies renames of the form `canonical = actual` (optionally prefixed
    /// `column.`). Keys that are not column names are ignored.
    pub fn with_renames<'a>(
        mut self,
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self, DatasetError> {
        for (key, value) in pairs {
            let key = key.strip_prefix("column.").unwrap_or(key);
            let Some(slot) = self.slot_mut(key) else {
                continue;
            };
            if value.is_empty() {
                return Err(DatasetError::Config(format!(
                    "empty name for column `{key}`"
                )));
            }
            *slot = value.to_string();
        }
        Ok(self)
    }

    fn slot_mut(&mut self, canonical: &str) -> Option<&mut String> {
        Some(match canonical {
            "id" => &mut self.id,
            "proficiency" => &mut self.proficiency,
            "f2f" => &mut self.f2f,
            "remote" => &mut self.remote,
            "basic_class" => &mut self.basic_class,
            "exercises" => &mut self.exercises,
            "videos" => &mut self.videos,
            "references" => &mut self.references,
            "diff_deviation" => &mut self.diff_deviation,
            _ => return None,
        })
    }

    fn header(&self) -> [&str; 9] {
        [
            &self.id,
            &self.proficiency,
            &self.f2f,
            &self.remote,
            &self.basic_class,
            &self.exercises,
            &self.videos,
            &self.references,
            &self.diff_deviation,
        ]
    }

    /// Display names of the seven tree-diagnostic features, in feature order.
    pub fn feature_names(&self) -> Vec<String> {
        [
            &self.proficiency,
            &self.f2f,
            &self.remote,
            &self.basic_class,
            &self.exercises,
            &self.videos,
            &self.references,
        ]
        .into_iter()
        .cloned()
        .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedCohort {
    pub cohort: Cohort,
    /// Rows dropped for a missing covariate or outcome.
    pub dropped: usize,
}

pub fn load_cohort(
    path: impl AsRef<Path>,
    columns: &ColumnMap,
    precision: f64,
) -> Result<LoadedCohort, DatasetError> {
    read_cohort(File::open(path)?, columns, precision)
}

pub fn read_cohort(
    reader: impl Read,
    columns: &ColumnMap,
    precision: f64,
) -> Result<LoadedCohort, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let require = |name: &str| find(name).ok_or_else(|| DatasetError::Schema(name.to_string()));

    let id_col = require(&columns.id)?;
    let x1_col = require(&columns.proficiency)?;
    let x2_col = require(&columns.f2f)?;
    let y_col = require(&columns.diff_deviation)?;
    let aux_cols = [
        find(&columns.remote),
        find(&columns.basic_class),
        find(&columns.exercises),
        find(&columns.videos),
        find(&columns.references),
    ];

    let mut records = Vec::new();
    let mut dropped = 0;
    for result in rdr.records() {
        let row = result?;
        let line = row.position().map_or(0, |p| p.line());
        let cell = |c: usize| row.get(c).unwrap_or("");
        let real = |c: usize| -> Result<Option<f64>, DatasetError> {
            let s = cell(c);
            if s.is_empty() {
                return Ok(None);
            }
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(Some(v)),
                _ => Err(DatasetError::Parse {
                    row: line,
                    column: headers[c].to_string(),
                    message: format!("`{s}` is not a finite decimal"),
                }),
            }
        };
        let count = |c: Option<usize>| -> Result<u32, DatasetError> {
            let Some(c) = c else { return Ok(0) };
            let s = cell(c);
            if s.is_empty() {
                return Ok(0);
            }
            s.parse::<u32>().map_err(|_| DatasetError::Parse {
                row: line,
                column: headers[c].to_string(),
                message: format!("`{s}` is not a nonnegative integer"),
            })
        };

        let x1 = real(x1_col)?;
        let y = real(y_col)?;
        let x2 = count(Some(x2_col))?;
        let aux = AuxCounts {
            remote: count(aux_cols[0])?,
            basic_class: count(aux_cols[1])?,
            exercises: count(aux_cols[2])?,
            videos: count(aux_cols[3])?,
            references: count(aux_cols[4])?,
        };
        match (x1, y) {
            (Some(x1), Some(y)) => records.push(StudentRecord {
                id: cell(id_col).to_string(),
                x1,
                x2,
                y,
                aux,
            }),
            _ => dropped += 1,
        }
    }
    Ok(LoadedCohort {
        cohort: Cohort::new(records, precision)?,
        dropped,
    })
}

pub fn save_cohort(
    path: impl AsRef<Path>,
    cohort: &Cohort,
    columns: &ColumnMap,
) -> Result<(), DatasetError> {
    write_cohort(File::create(path)?, cohort, columns)
}

pub fn write_cohort(
    writer: impl Write,
    cohort: &Cohort,
    columns: &ColumnMap,
) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(columns.header())?;
    for r in cohort.records() {
        w.write_record([
            r.id.clone(),
            r.x1.to_string(),
            r.x2.to_string(),
            r.aux.remote.to_string(),
            r.aux.basic_class.to_string(),
            r.aux.exercises.to_string(),
            r.aux.videos.to_string(),
            r.aux.references.to_string(),
            r.y.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, x1: f64, x2: u32, y: f64) -> StudentRecord {
        StudentRecord {
            id: id.into(),
            x1,
            x2,
            y,
            aux: AuxCounts::default(),
        }
    }

    /// Two-pass mean / population sd, kept apart from `to_deviation`.
    fn mean_sd(v: &[f64]) -> (f64, f64) {
        let mut sum = 0.0;
        for x in v {
            sum += x;
        }
        let mean = sum / v.len() as f64;
        let mut ss = 0.0;
        for x in v {
            ss += (x - mean) * (x - mean);
        }
        (mean, (ss / v.len() as f64).sqrt())
    }

    #[test]
    fn deviation_of_mean_is_fifty() {
        let d = to_deviation(&[50.0, 50.0, 80.0, 20.0]).unwrap();
        assert_eq!(d[0], 50.0);
        assert_eq!(d[1], 50.0);
        let (_, sd) = mean_sd(&[50.0, 50.0, 80.0, 20.0]);
        assert!((sd - 450f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn deviation_symmetric_pair() {
        assert_eq!(to_deviation(&[40.0, 60.0]).unwrap(), vec![40.0, 60.0]);
    }

    #[test]
    fn deviation_matches_two_pass_oracle() {
        let raw = [10.0, 20.0, 30.0, 40.0];
        let (mean, sd) = mean_sd(&raw);
        assert_eq!(mean, 25.0);
        assert!((sd - 125f64.sqrt()).abs() < 1e-12);
        let d = to_deviation(&raw).unwrap();
        for (got, x) in d.iter().zip(raw) {
            assert!((got - (10.0 * (x - mean) / sd + 50.0)).abs() < 1e-12);
        }
        assert!((d[3] - (10.0 * 15.0 / 125f64.sqrt() + 50.0)).abs() < 1e-12);
    }

    #[test]
    fn deviation_errors() {
        assert!(matches!(
            to_deviation(&[]),
            Err(DatasetError::EmptyOrSingleton(0))
        ));
        assert!(matches!(
            to_deviation(&[3.0]),
            Err(DatasetError::EmptyOrSingleton(1))
        ));
        assert!(matches!(
            to_deviation(&[3.0, 3.0, 3.0]),
            Err(DatasetError::ZeroVariance)
        ));
    }

    #[test]
    fn binning_rounds_to_nearest() {
        let records = vec![
            rec("a", 35.0, 0, 1.0),
            rec("b", 35.4, 0, 1.0),
            rec("c", 36.0, 0, 1.0),
        ];
        let g = group_by_covariate(&records, 1.0).unwrap();
        let bins: Vec<(f64, usize)> = g.iter().map(|(v, m)| (v, m.len())).collect();
        assert_eq!(bins, vec![(35.0, 2), (36.0, 1)]);
        assert_eq!(g.members(35.2), &[0, 1]);
        assert!(g.members(90.0).is_empty());
    }

    #[test]
    fn binning_with_coarser_precision() {
        let records = vec![
            rec("a", 41.0, 0, 1.0),
            rec("b", 44.0, 0, 1.0),
            rec("c", 46.0, 0, 1.0),
        ];
        let g = group_by_covariate(&records, 5.0).unwrap();
        assert_eq!(g.values(), vec![40.0, 45.0]);
        assert!(group_by_covariate(&records, 0.0).is_err());
        assert!(group_by_covariate(&records, -1.0).is_err());
    }

    #[test]
    fn single_record_single_bin() {
        let c = Cohort::new(vec![rec("a", 50.3, 0, 1.0)], 1.0).unwrap();
        assert_eq!(c.groups().len(), 1);
        assert_eq!(c.groups().iter().next().unwrap().1, &[0]);
    }

    #[test]
    fn partition_follows_session_count() {
        let c = Cohort::new(
            vec![
                rec("a", 40.0, 0, 1.0),
                rec("b", 40.0, 2, 1.0),
                rec("c", 40.0, 1, 1.0),
            ],
            1.0,
        )
        .unwrap();
        assert_eq!(c.treated(), &[1, 2]);
        assert_eq!(c.control(), &[0]);
        assert_eq!(c.treated_dose_range(), Some((1, 2)));
    }

    #[test]
    fn rejects_non_finite() {
        assert!(Cohort::new(vec![rec("a", f64::NAN, 0, 1.0)], 1.0).is_err());
    }

    #[test]
    fn summary_all_treated() {
        let c = Cohort::new(vec![rec("a", 40.0, 1, 50.0), rec("b", 45.0, 3, 54.0)], 1.0).unwrap();
        let s = summarize(&c).unwrap();
        assert_eq!(s.n_control, 0);
        assert_eq!(s.mean_y_control, None);
        assert_eq!(s.mean_x1_control, None);
        assert_eq!(s.mean_y_treated, Some(52.0));
        assert_eq!(s.naive_difference(), None);
    }

    #[test]
    fn summary_two_records() {
        let c = Cohort::new(vec![rec("a", 40.0, 1, 40.0), rec("b", 45.0, 0, 60.0)], 1.0).unwrap();
        let s = summarize(&c).unwrap();
        assert_eq!(s.mean_y_treated, Some(40.0));
        assert_eq!(s.mean_y_control, Some(60.0));
        assert_eq!(s.naive_difference(), Some(-20.0));
        assert!(s.to_text().contains("treated"));
    }

    #[test]
    fn summary_of_empty_cohort_fails() {
        let c = Cohort::new(vec![], 1.0).unwrap();
        assert!(matches!(summarize(&c), Err(DatasetError::EmptyCohort)));
    }

    const HEADER: &str =
        "id,proficiency,f2f,remote,basic_class,exercises,videos,references,diff_deviation";

    #[test]
    fn load_drops_missing_outcome() {
        let csv = format!(
            "{HEADER}\ns1,40,0,0,0,1,2,0,45.5\ns2,41,1,0,0,0,0,0,\ns3,55,2,1,0,0,0,0,60\ns4,,0,0,0,0,0,0,50\ns5,50,,,,,,,49\n"
        );
        let loaded = read_cohort(csv.as_bytes(), &ColumnMap::default(), 1.0).unwrap();
        assert_eq!(loaded.cohort.len(), 3);
        assert_eq!(loaded.dropped, 2);
        let r = &loaded.cohort.records()[1];
        assert_eq!(r.id, "s3");
        assert!(r.treated());
        assert_eq!(r.aux.remote, 1);
        assert_eq!(loaded.cohort.records()[2].x2, 0);
        assert_eq!(loaded.cohort.records()[0].aux.videos, 2);
    }

    #[test]
    fn load_reports_missing_column() {
        let csv = "id,proficiency,f2f\ns1,40,0\n";
        match read_cohort(csv.as_bytes(), &ColumnMap::default(), 1.0) {
            Err(DatasetError::Schema(col)) => assert_eq!(col, "diff_deviation"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn load_reports_parse_location() {
        let csv = format!("{HEADER}\ns1,40,0,0,0,0,0,0,50\ns2,41,-1,0,0,0,0,0,50\n");
        match read_cohort(csv.as_bytes(), &ColumnMap::default(), 1.0) {
            Err(DatasetError::Parse { row, column, .. }) => {
                assert_eq!(row, 3);
                assert_eq!(column, "f2f");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn renamed_columns() {
        let columns = ColumnMap::default()
            .with_renames([
                ("proficiency", "prof"),
                ("column.diff_deviation", "exam"),
                ("seed", "3"),
            ])
            .unwrap();
        let csv = "id,prof,f2f,exam\ns1,40,1,50\n";
        let loaded = read_cohort(csv.as_bytes(), &columns, 1.0).unwrap();
        assert_eq!(loaded.cohort.records()[0].y, 50.0);
        assert_eq!(columns.feature_names()[0], "prof");
    }

    #[test]
    fn save_then_load_is_identity() {
        let c = Cohort::new(
            vec![
                rec("a", 41.123456789, 0, 0.1 + 0.2),
                StudentRecord {
                    aux: AuxCounts {
                        remote: 1,
                        basic_class: 2,
                        exercises: 3,
                        videos: 4,
                        references: 5,
                    },
                    ..rec("b", 1e-7, 7, -3.25)
                },
            ],
            1.0,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_cohort(&mut buf, &c, &ColumnMap::default()).unwrap();
        let back = read_cohort(buf.as_slice(), &ColumnMap::default(), 1.0).unwrap();
        assert_eq!(back.dropped, 0);
        assert_eq!(back.cohort, c);
    }
}
