//! Run configuration: command-line flags layered over an optional
//! `key = value` file layered over the built-in defaults.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use edumine::models::artifact::TrainingParams;
use edumine::pipeline::PipelineConfig;
use edumine::select::MapeDenominator;
use edumine::Error;

const KNOWN_KEYS: &[&str] = &[
    "target",
    "seed",
    "train_fraction",
    "tree_max_depth",
    "tree_min_leaf",
    "tree_min_split_improvement",
    "tree_prune",
    "nn_hidden",
    "nn_lr",
    "nn_epochs",
    "nn_batch_size",
    "nn_patience",
    "mape_denominator",
    "format",
    "top",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Both,
}

impl Format {
    pub fn text(self) -> bool {
        matches!(self, Format::Text | Format::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        <Format as ValueEnum>::from_str(s, true)
    }
}

/// Values read from a run-configuration file.
#[derive(Debug, Default)]
pub struct FileConfig {
    values: BTreeMap<String, (usize, String)>,
}

impl FileConfig {
    pub fn parse(text: &str) -> edumine::Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(Error::Config {
                    line,
                    message: format!("expected `key = value`, got `{content}`"),
                });
            };
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::Config {
                    line,
                    message: format!("unknown key `{key}`"),
                });
            }
            values.insert(key.to_string(), (line, value.trim().to_string()));
        }
        Ok(Self { values })
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> edumine::Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some((line, raw)) => raw.parse().map(Some).map_err(|e| Error::Config {
                line: *line,
                message: format!("`{key}`: {e}"),
            }),
        }
    }
}

/// Picks the flag, then the file value, then the default.
fn layered<T: FromStr>(
    flag: Option<T>,
    file: &FileConfig,
    key: &str,
    default: T,
) -> edumine::Result<T>
where
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(v),
        None => Ok(file.get(key)?.unwrap_or(default)),
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Interval variable to predict
    #[arg(long)]
    pub target: Option<String>,
    /// Seed for partitioning and network initialization
    #[arg(long)]
    pub seed: Option<u64>,
    /// Share of rows used for training; the rest validate
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Maximum tree depth [default: 6]
    #[arg(long)]
    pub tree_max_depth: Option<usize>,
    /// Minimum training rows per leaf [default: 5]
    #[arg(long)]
    pub tree_min_leaf: Option<usize>,
    /// Smallest variance reduction worth a split [default: 1e-7]
    #[arg(long)]
    pub tree_min_split_improvement: Option<f64>,
    /// Skip cost-complexity pruning of the tree
    #[arg(long)]
    pub no_prune: bool,
    /// Hidden tanh units [default: 3]
    #[arg(long)]
    pub nn_hidden: Option<usize>,
    /// SGD learning rate [default: 0.01]
    #[arg(long)]
    pub nn_lr: Option<f64>,
    /// Maximum training epochs [default: 2000]
    #[arg(long, visible_alias = "max-epochs")]
    pub nn_epochs: Option<usize>,
    /// Mini-batch size [default: 32]
    #[arg(long)]
    pub nn_batch_size: Option<usize>,
    /// Epochs without validation improvement before stopping [default: 50]
    #[arg(long)]
    pub nn_patience: Option<usize>,
    /// MAPE divides by `prediction` or `actual` [default: prediction]
    #[arg(long, value_parser = parse_denominator)]
    pub mape_denominator: Option<MapeDenominator>,
}

pub fn parse_denominator(s: &str) -> std::result::Result<MapeDenominator, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Clone)]
pub struct Resolved {
    pub target: String,
    pub config: PipelineConfig,
}

impl ModelArgs {
    pub fn resolve(&self, file: &FileConfig) -> Result<Resolved> {
        let Some(target) = self.target.clone().or(file.get::<String>("target")?) else {
            bail!(Error::InvalidParam(
                "no target given (use --target or `target =` in the config)".into()
            ));
        };
        let d = TrainingParams::default();
        let mut params = TrainingParams {
            train_fraction: layered(
                self.train_fraction,
                file,
                "train_fraction",
                d.train_fraction,
            )?,
            tree: d.tree.clone(),
            nn: d.nn.clone(),
        };
        params.tree.max_depth = layered(
            self.tree_max_depth,
            file,
            "tree_max_depth",
            d.tree.max_depth,
        )?;
        params.tree.min_leaf = layered(self.tree_min_leaf, file, "tree_min_leaf", d.tree.min_leaf)?;
        params.tree.min_split_improvement = layered(
            self.tree_min_split_improvement,
            file,
            "tree_min_split_improvement",
            d.tree.min_split_improvement,
        )?;
        params.tree.prune = if self.no_prune {
            false
        } else {
            file.get("tree_prune")?.unwrap_or(d.tree.prune)
        };
        params.nn.hidden_units = layered(self.nn_hidden, file, "nn_hidden", d.nn.hidden_units)?;
        params.nn.learning_rate = layered(self.nn_lr, file, "nn_lr", d.nn.learning_rate)?;
        params.nn.max_epochs = layered(self.nn_epochs, file, "nn_epochs", d.nn.max_epochs)?;
        params.nn.batch_size = layered(self.nn_batch_size, file, "nn_batch_size", d.nn.batch_size)?;
        params.nn.patience = layered(self.nn_patience, file, "nn_patience", d.nn.patience)?;
        let seed = layered(self.seed, file, "seed", 0)?;
        let mape_denominator = layered(
            self.mape_denominator,
            file,
            "mape_denominator",
            MapeDenominator::Prediction,
        )?;
        Ok(Resolved {
            target,
            config: PipelineConfig {
                seed,
                params,
                mape_denominator,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args() -> ModelArgs {
        ModelArgs {
            target: None,
            seed: None,
            train_fraction: None,
            tree_max_depth: None,
            tree_min_leaf: None,
            tree_min_split_improvement: None,
            no_prune: false,
            nn_hidden: None,
            nn_lr: None,
            nn_epochs: None,
            nn_batch_size: None,
            nn_patience: None,
            mape_denominator: None,
        }
    }

    #[test]
    fn flag_beats_file_beats_default() {
        let file = FileConfig::parse("target = aggregate\nseed = 9\ntree_min_leaf = 3\n").unwrap();
        let mut a = args();
        a.seed = Some(4);
        let r = a.resolve(&file).unwrap();
        assert_eq!(r.target, "aggregate");
        assert_eq!(r.config.seed, 4);
        assert_eq!(r.config.params.tree.min_leaf, 3);
        assert_eq!(r.config.params.tree.max_depth, 6);
        assert_eq!(r.config.params.train_fraction, 0.8);
    }

    #[test]
    fn bad_files_name_the_line() {
        assert!(matches!(
            FileConfig::parse("x = 1"),
            Err(Error::Config { line: 1, .. })
        ));
        let file = FileConfig::parse("\nseed = many\n").unwrap();
        let mut a = args();
        a.target = Some("y".into());
        let err = a.resolve(&file).unwrap_err();
        assert!(matches!(
            err.downcast_ref::<Error>(),
            Some(Error::Config { line: 2, .. })
        ));
    }

    #[test]
    fn missing_target_is_an_error() {
        assert!(args().resolve(&FileConfig::default()).is_err());
    }
}
