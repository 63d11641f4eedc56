//! Run configuration: command-line flags layered over an optional
//! `key = value` config file, over `CATEBENCH_SEED`, over defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use catebench_core::dataset::{ColumnMap, DatasetError};
use catebench_core::forest::{ForestParams, TreeParams};
use catebench_core::kv;

use crate::error::CliError;

pub const SEED_ENV: &str = "CATEBENCH_SEED";

const RUN_KEYS: [&str; 8] = [
    "seed",
    "depth",
    "trees",
    "bootstrap",
    "x2",
    "bin",
    "min_samples_split",
    "min_samples_leaf",
];

#[derive(Debug, Clone, Default, clap::Args)]
pub struct CommonArgs {
    /// Cohort CSV.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Maximum tree depth.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Trees per forest.
    #[arg(long)]
    pub trees: Option<usize>,
    /// Comma-separated treatment counts to evaluate.
    #[arg(long, value_delimiter = ',')]
    pub x2: Option<Vec<u32>>,
    /// Covariate bin width.
    #[arg(long)]
    pub bin: Option<f64>,
    /// `key = value` file with run settings and column renames
    /// (for `synth`: the scenario file, JSON or `key = value`).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Do not mirror text reports to stdout.
    #[arg(long)]
    pub quiet: bool,
    /// Worker threads; defaults to the rayon default.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub forest: ForestParams,
    pub x2: Option<Vec<u32>>,
    pub bin: f64,
    pub columns: ColumnMap,
    pub quiet: bool,
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| {
        CliError::Input(DatasetError::Config(format!(
            "`{key}`: cannot parse `{value}`"
        )))
    })
}

fn parse_list(key: &str, value: &str) -> Result<Vec<u32>, CliError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

pub fn read_file_pairs(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(e.into()))?;
    kv::parse(&text).map_err(|e| CliError::Input(DatasetError::Config(e.to_string())))
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs, env_seed: Option<&str>) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => read_file_pairs(path)?,
            None => BTreeMap::new(),
        };
        for key in file.keys() {
            let column = key.strip_prefix("column.").unwrap_or(key);
            if !RUN_KEYS.contains(&key.as_str()) && !ColumnMap::CANONICAL.contains(&column) {
                return Err(CliError::Input(DatasetError::Config(format!(
                    "unknown key `{key}`"
                ))));
            }
        }
        let from_file = |key: &str| file.get(key).map(String::as_str);

        let env_seed = env_seed
            .map(|s| parse_value::<u64>(SEED_ENV, s.trim()))
            .transpose()?;
        let seed = match (args.seed, from_file("seed")) {
            (Some(s), _) => s,
            (None, Some(v)) => parse_value("seed", v)?,
            (None, None) => env_seed.unwrap_or(0),
        };
        let defaults = TreeParams::default();
        let tree = TreeParams {
            max_depth: match (args.depth, from_file("depth")) {
                (Some(d), _) => d,
                (None, Some(v)) => parse_value("depth", v)?,
                (None, None) => defaults.max_depth,
            },
            min_samples_split: from_file("min_samples_split")
                .map(|v| parse_value("min_samples_split", v))
                .transpose()?
                .unwrap_or(defaults.min_samples_split),
            min_samples_leaf: from_file("min_samples_leaf")
                .map(|v| parse_value("min_samples_leaf", v))
                .transpose()?
                .unwrap_or(defaults.min_samples_leaf),
        };
        let n_trees = match (args.trees, from_file("trees")) {
            (Some(t), _) => t,
            (None, Some(v)) => parse_value("trees", v)?,
            (None, None) => ForestParams::default().n_trees,
        };
        let bootstrap = from_file("bootstrap")
            .map(|v| parse_value("bootstrap", v))
            .transpose()?
            .unwrap_or(ForestParams::default().bootstrap);
        let x2 = match (&args.x2, from_file("x2")) {
            (Some(list), _) => Some(list.clone()),
            (None, Some(v)) => Some(parse_list("x2", v)?),
            (None, None) => None,
        };
        let bin = match (args.bin, from_file("bin")) {
            (Some(b), _) => b,
            (None, Some(v)) => parse_value("bin", v)?,
            (None, None) => 1.0,
        };
        if !(bin > 0.0 && bin.is_finite()) {
            return Err(CliError::Input(DatasetError::InvalidPrecision(bin)));
        }
        if tree.max_depth == 0 || n_trees == 0 {
            return Err(CliError::Input(DatasetError::Config(
                "depth and trees must be >= 1".into(),
            )));
        }
        let columns = ColumnMap::default()
            .with_renames(file.iter().map(|(k, v)| (k.as_str(), v.as_str())))
            .map_err(CliError::Input)?;
        Ok(Self {
            input: args.input.clone(),
            out: args.out.clone(),
            seed,
            forest: ForestParams {
                tree,
                n_trees,
                bootstrap,
                ..ForestParams::default()
            },
            x2,
            bin,
            columns,
            quiet: args.quiet,
        })
    }

    pub fn input(&self) -> Result<&Path, CliError> {
        self.input
            .as_deref()
            .ok_or_else(|| CliError::Input(DatasetError::Config("--input is required".into())))
    }
}
