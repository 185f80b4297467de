//! Turns a [`Dataset`] into a dense design matrix for the matrix-based
//! learners: mean imputation and standardization for interval inputs, full
//! one-hot encoding (plus a missing-level column when needed) for the rest.
//!
//! Everything is fitted on training rows and replayed unchanged on new data.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataio::{Column, Dataset, Level, Role, VariableSpec};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Feature-name suffix for the missing-level indicator.
pub const MISSING_LEVEL: &str = "<missing>";

/// Input variables for a target: role `input`, excluding the target itself.
pub fn input_variables<'a>(data: &'a Dataset, target: &str) -> Vec<&'a VariableSpec> {
    data.schema()
        .iter()
        .filter(|s| s.role == Role::Input && s.name != target)
        .collect()
}

/// Target values and the indices of rows where the target is present.
pub fn target_rows(data: &Dataset, target: &str) -> Result<(Vec<usize>, Vec<f64>)> {
    let col = data.interval(target)?;
    Ok(col
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .unzip())
}

/// Stable hex digest of a target plus the (name, level) list a model reads.
pub fn schema_fingerprint<'a>(
    target: &str,
    vars: impl IntoIterator<Item = (&'a str, Level)>,
) -> String {
    let mut hasher = Sha256::new();
    hasher.update(target.as_bytes());
    for (name, level) in vars {
        hasher.update(b"\x1f");
        hasher.update(name.as_bytes());
        hasher.update(b":");
        hasher.update(level.to_string().as_bytes());
    }
    hasher.finalize()[..16]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureEncoding {
    Interval {
        name: String,
        /// Training mean, used for missing cells.
        fill: f64,
        mean: f64,
        scale: f64,
    },
    Categorical {
        name: String,
        level: Level,
        levels: Vec<String>,
        missing_indicator: bool,
    },
}

impl FeatureEncoding {
    pub fn name(&self) -> &str {
        match self {
            FeatureEncoding::Interval { name, .. } | FeatureEncoding::Categorical { name, .. } => {
                name
            }
        }
    }

    pub fn level(&self) -> Level {
        match self {
            FeatureEncoding::Interval { .. } => Level::Interval,
            FeatureEncoding::Categorical { level, .. } => *level,
        }
    }

    pub fn width(&self) -> usize {
        match self {
            FeatureEncoding::Interval { .. } => 1,
            FeatureEncoding::Categorical {
                levels,
                missing_indicator,
                ..
            } => levels.len() + usize::from(*missing_indicator),
        }
    }
}

/// Fitted preprocessing, reusable on validation and scoring data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transformer {
    pub target: String,
    pub encodings: Vec<FeatureEncoding>,
    /// Inputs dropped because every training cell was missing.
    pub dropped: Vec<String>,
}

/// Design matrix plus targets for the rows whose target is present.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedMatrix {
    pub feature_names: Vec<String>,
    pub x: Matrix,
    pub y: Vec<f64>,
    /// Source row of each matrix row.
    pub rows: Vec<usize>,
}

impl Transformer {
    pub fn fit(train: &Dataset, target: &str) -> Result<Self> {
        let (rows, _) = target_rows(train, target)?;
        if rows.is_empty() {
            return Err(Error::TargetAllMissing(target.to_string()));
        }
        let mut encodings = Vec::new();
        let mut dropped = Vec::new();
        for spec in input_variables(train, target) {
            let column = train.column(&spec.name)?;
            match column {
                Column::Interval(cells) => {
                    let present: Vec<f64> = rows.iter().filter_map(|&r| cells[r]).collect();
                    if present.is_empty() {
                        log::warn!("dropping input `{}`: no training values", spec.name);
                        dropped.push(spec.name.clone());
                        continue;
                    }
                    let fill = present.iter().sum::<f64>() / present.len() as f64;
                    let n = rows.len() as f64;
                    let imputed = rows.iter().map(|&r| cells[r].unwrap_or(fill));
                    let mean = imputed.clone().sum::<f64>() / n;
                    let var = imputed.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                    let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
                    encodings.push(FeatureEncoding::Interval {
                        name: spec.name.clone(),
                        fill,
                        mean,
                        scale,
                    });
                }
                Column::Categorical(cells) => {
                    let mut levels: Vec<String> =
                        rows.iter().filter_map(|&r| cells[r].clone()).collect();
                    if levels.is_empty() {
                        log::warn!("dropping input `{}`: no training values", spec.name);
                        dropped.push(spec.name.clone());
                        continue;
                    }
                    levels.sort();
                    levels.dedup();
                    let missing_indicator = rows.iter().any(|&r| cells[r].is_none());
                    encodings.push(FeatureEncoding::Categorical {
                        name: spec.name.clone(),
                        level: spec.level,
                        levels,
                        missing_indicator,
                    });
                }
            }
        }
        if encodings.is_empty() {
            return Err(Error::NoInputs);
        }
        Ok(Self {
            target: target.to_string(),
            encodings,
            dropped,
        })
    }

    pub fn n_features(&self) -> usize {
        self.encodings.iter().map(FeatureEncoding::width).sum()
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.n_features());
        for enc in &self.encodings {
            match enc {
                FeatureEncoding::Interval { name, .. } => names.push(name.clone()),
                FeatureEncoding::Categorical {
                    name,
                    levels,
                    missing_indicator,
                    ..
                } => {
                    names.extend(levels.iter().map(|l| format!("{name}={l}")));
                    if *missing_indicator {
                        names.push(format!("{name}={MISSING_LEVEL}"));
                    }
                }
            }
        }
        names
    }

    pub fn fingerprint(&self) -> String {
        schema_fingerprint(
            &self.target,
            self.encodings.iter().map(|e| (e.name(), e.level())),
        )
    }

    /// Checks `data` carries every encoded variable with a compatible kind.
    pub fn check_schema(&self, data: &Dataset) -> Result<()> {
        let missing: Vec<String> = self
            .encodings
            .iter()
            .filter(|e| data.index_of(e.name()).is_none())
            .map(|e| e.name().to_string())
            .collect();
        if !missing.is_empty() {
            return Err(Error::SchemaMismatch(missing));
        }
        for enc in &self.encodings {
            match enc {
                FeatureEncoding::Interval { name, .. } => {
                    data.interval(name)?;
                }
                FeatureEncoding::Categorical { name, .. } => {
                    data.categorical(name)?;
                }
            }
        }
        Ok(())
    }

    /// Encodes every row of `data`.
    ///
    /// Unseen category labels encode as all-zero indicators; missing cells
    /// take the missing-level column when one was fitted, else all zeros.
    pub fn transform(&self, data: &Dataset) -> Result<Matrix> {
        self.check_schema(data)?;
        let rows: Vec<usize> = (0..data.n_rows()).collect();
        self.transform_rows(data, &rows, true)
    }

    /// Like [`Transformer::transform`] but interval columns are only imputed,
    /// left in their original units.
    pub fn transform_unscaled(&self, data: &Dataset) -> Result<Matrix> {
        self.check_schema(data)?;
        let rows: Vec<usize> = (0..data.n_rows()).collect();
        self.transform_rows(data, &rows, false)
    }

    fn transform_rows(&self, data: &Dataset, rows: &[usize], standardize: bool) -> Result<Matrix> {
        let width = self.n_features();
        let mut x = Matrix::zeros(rows.len(), width);
        let mut offset = 0;
        for enc in &self.encodings {
            match enc {
                FeatureEncoding::Interval {
                    name,
                    fill,
                    mean,
                    scale,
                } => {
                    let cells = data.interval(name)?;
                    for (i, &r) in rows.iter().enumerate() {
                        let v = cells[r].unwrap_or(*fill);
                        x.set(i, offset, if standardize { (v - mean) / scale } else { v });
                    }
                }
                FeatureEncoding::Categorical {
                    name,
                    levels,
                    missing_indicator,
                    ..
                } => {
                    let cells = data.categorical(name)?;
                    for (i, &r) in rows.iter().enumerate() {
                        match &cells[r] {
                            Some(label) => {
                                if let Ok(k) = levels.binary_search(label) {
                                    x.set(i, offset + k, 1.0);
                                }
                            }
                            None if *missing_indicator => x.set(i, offset + levels.len(), 1.0),
                            None => {}
                        }
                    }
                }
            }
            offset += enc.width();
        }
        Ok(x)
    }

    /// Design matrix and targets for the rows of `data` whose target is present.
    pub fn prepared(&self, data: &Dataset) -> Result<PreparedMatrix> {
        self.check_schema(data)?;
        let (rows, y) = target_rows(data, &self.target)?;
        Ok(PreparedMatrix {
            feature_names: self.feature_names(),
            x: self.transform_rows(data, &rows, true)?,
            y,
            rows,
        })
    }
}

/// Fits a transformer on `train` and returns it with the training matrix.
pub fn prepare(train: &Dataset, target: &str) -> Result<(PreparedMatrix, Transformer)> {
    let transformer = Transformer::fit(train, target)?;
    let matrix = transformer.prepared(train)?;
    Ok((matrix, transformer))
}
