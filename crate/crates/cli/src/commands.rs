use std::fs;
use std::path::Path;

use serde::Serialize;

use catebench_core::dataset::{self, Cohort, ColumnMap};
use catebench_core::forest::{export_tree, fit_tree, ForestParams};
use catebench_core::synth::{self, Scenario};
use catebench_core::{linreg, tlearner, treatcount};

use crate::config::RunConfig;
use crate::error::CliError;

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(CliError::Output)?;
    fs::write(dir.join(name), contents).map_err(CliError::Output)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable output");
    text.push('\n');
    write(dir, name, &text)
}

fn mirror(cfg: &RunConfig, text: &str) {
    if !cfg.quiet {
        print!("{text}");
    }
}

fn load(cfg: &RunConfig) -> Result<Cohort, CliError> {
    let loaded = dataset::load_cohort(cfg.input()?, &cfg.columns, cfg.bin)?;
    if loaded.dropped > 0 && !cfg.quiet {
        eprintln!(
            "dropped {} rows with a missing covariate or outcome",
            loaded.dropped
        );
    }
    Ok(loaded.cohort)
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    #[serde(flatten)]
    summary: &'a dataset::GroupSummary,
    n: usize,
    naive_difference: Option<f64>,
}

pub fn summarize(cfg: &RunConfig) -> Result<(), CliError> {
    let cohort = load(cfg)?;
    let summary = dataset::summarize(&cohort)?;
    write_json(
        &cfg.out,
        "summary.json",
        &SummaryFile {
            summary: &summary,
            n: cohort.len(),
            naive_difference: summary.naive_difference(),
        },
    )?;
    let text = summary.to_text();
    write(&cfg.out, "summary.txt", &text)?;
    mirror(cfg, &text);
    Ok(())
}

pub fn cate(cfg: &RunConfig) -> Result<(), CliError> {
    let cohort = load(cfg)?;
    let model = tlearner::fit_t_learner(&cohort, &cfg.forest, cfg.seed)?;
    let report = tlearner::effect_report(&model, &cohort)?;
    write(&cfg.out, "effect_report.csv", &report.to_csv())?;
    write_json(&cfg.out, "effect_report.json", &report)?;
    write_json(&cfg.out, "summary.json", &report.summary)?;
    let s = &report.summary;
    mirror(
        cfg,
        &format!(
            "ATE {:.4}  ATT {:.4}  ATU {:.4}  (n={}, treated={}, control={}, seed={})\n",
            s.ate, s.att, s.atu, s.n, s.n_treated, s.n_control, s.seed
        ),
    );
    Ok(())
}

#[derive(Serialize)]
struct PhiSummary<'a> {
    att2: f64,
    n: usize,
    n_treated: usize,
    n_control: usize,
    seed: u64,
    params: ForestParams,
    x2_values: &'a [u32],
    independence_checked: usize,
    independence_violations: usize,
    missing_cells: usize,
}

pub fn phi(cfg: &RunConfig) -> Result<(), CliError> {
    let cohort = load(cfg)?;
    let model = treatcount::fit_t_learner2(&cohort, &cfg.forest, cfg.seed)?;
    let probes = cfg
        .x2
        .clone()
        .unwrap_or_else(|| treatcount::default_probe_counts(&cohort));
    if let Some(&bad) = probes.iter().find(|&&v| v < 1) {
        return Err(tlearner::EstimateError::Domain(bad).into());
    }

    let mut independence_probes = vec![0];
    independence_probes.extend(&probes);
    let independence = treatcount::check_base_independence(&model, &cohort, &independence_probes);
    if !independence.passed() {
        let v = &independence.violations[0];
        return Err(CliError::Consistency(format!(
            "control response depends on the treatment count: {} violations, first at record {} with x2 = {}",
            independence.violations.len(),
            v.record,
            v.probe_x2
        )));
    }

    let surface = treatcount::phi_surface(&model, &cohort, &cohort.groups().values(), &probes)?;
    let att2 = treatcount::att2(&model, &cohort)?;
    write(&cfg.out, "phi_surface.csv", &surface.to_csv())?;
    write_json(&cfg.out, "phi_matrix.json", &surface)?;
    write_json(
        &cfg.out,
        "summary.json",
        &PhiSummary {
            att2,
            n: cohort.len(),
            n_treated: cohort.treated().len(),
            n_control: cohort.control().len(),
            seed: cfg.seed,
            params: cfg.forest,
            x2_values: &surface.x2_values,
            independence_checked: independence.checked,
            independence_violations: 0,
            missing_cells: surface.missing,
        },
    )?;
    mirror(
        cfg,
        &format!(
            "ATT2 {att2:.4}  grid {}x{}  base-response independence: {} checks passed\n",
            surface.x1_values.len(),
            surface.x2_values.len(),
            independence.checked
        ),
    );
    Ok(())
}

/// The seven tree features of one record, in `ColumnMap::feature_names` order.
fn tree_features(r: &dataset::StudentRecord) -> Vec<f64> {
    vec![
        r.x1,
        f64::from(r.x2),
        f64::from(r.aux.remote),
        f64::from(r.aux.basic_class),
        f64::from(r.aux.exercises),
        f64::from(r.aux.videos),
        f64::from(r.aux.references),
    ]
}

pub fn tree(cfg: &RunConfig) -> Result<(), CliError> {
    let cohort = load(cfg)?;
    if cohort.is_empty() {
        return Err(dataset::DatasetError::EmptyCohort.into());
    }
    let x: Vec<Vec<f64>> = cohort.records().iter().map(tree_features).collect();
    let y: Vec<f64> = cohort.records().iter().map(|r| r.y).collect();
    let tree = fit_tree(&x, &y, &cfg.forest.tree).map_err(tlearner::EstimateError::from)?;
    let report = export_tree(&tree, &cfg.columns.feature_names());
    let text = report.to_text();
    write(&cfg.out, "tree.txt", &text)?;
    write_json(&cfg.out, "tree.json", &report.to_json())?;
    mirror(cfg, &text);
    Ok(())
}

pub fn dose_reg(cfg: &RunConfig) -> Result<(), CliError> {
    let cohort = load(cfg)?;
    linreg::check_dose_variation(&cohort)?;
    let model = tlearner::fit_t_learner(&cohort, &cfg.forest, cfg.seed)?;
    let reg = linreg::tau_dose_regression(&cohort, &model)?;
    write_json(&cfg.out, "ols.json", &reg.fit)?;
    write(&cfg.out, "tau_scatter.csv", &reg.scatter_csv())?;
    let f = &reg.fit;
    mirror(
        cfg,
        &format!(
            "tau = {:.4} * x1 + {:.4} * x2 + {:.4}  (r2 = {:.4}, n = {})\n",
            f.coefficients[0], f.coefficients[1], f.intercept, f.r_squared, f.n
        ),
    );
    Ok(())
}

pub fn synth(cfg: &RunConfig, scenario_file: Option<&Path>, preset: &str) -> Result<(), CliError> {
    let scenario = match scenario_file {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Input(e.into()))?;
            Scenario::parse(&text)?
        }
        None => match preset {
            "default" => Scenario::default(),
            "standard-biased" => Scenario::standard_biased(),
            "dose-recovery" => Scenario::dose_recovery(),
            "dose-bias" => Scenario::dose_bias(),
            other => {
                return Err(CliError::Scenario(synth::SynthError::InvalidScenario {
                    field: "preset".into(),
                    message: format!("unknown preset `{other}`"),
                }))
            }
        },
    };
    let (cohort, truth) = synth::generate(&scenario, cfg.seed)?;
    fs::create_dir_all(&cfg.out).map_err(CliError::Output)?;
    let csv_path = cfg.out.join("cohort.csv");
    dataset::save_cohort(&csv_path, &cohort, &ColumnMap::default())?;
    let truth_path = synth::truth_path(&csv_path);
    let mut text = serde_json::to_string_pretty(&truth.to_json()).expect("serializable output");
    text.push('\n');
    fs::write(&truth_path, text).map_err(CliError::Output)?;
    mirror(
        cfg,
        &format!(
            "wrote {} records ({} treated) to {}; true ATE {:.4}\n",
            cohort.len(),
            cohort.treated().len(),
            csv_path.display(),
            truth.ate
        ),
    );
    Ok(())
}
