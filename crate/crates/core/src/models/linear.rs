//! Multiple linear regression by pivoted QR least squares.

use serde::{Deserialize, Serialize};

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{lstsq_qr, Matrix};
use crate::models::prepare::{FeatureEncoding, Transformer};

/// Relative pivot tolerance for declaring a column dependent.
pub const RANK_TOL: f64 = 1e-10;

/// Least-squares fit with an intercept on a raw design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    /// Rank of `[1 | x]`.
    pub rank: usize,
    pub r_squared: f64,
}

/// Fits `y ~ 1 + x`. A constant `y` gives the intercept-only model with
/// `r_squared = 0`.
pub fn ols_fit(x: &Matrix, y: &[f64]) -> Result<LinearFit> {
    let n = y.len();
    if x.rows() != n {
        return Err(Error::LengthMismatch(x.rows(), n));
    }
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, got: n });
    }
    let p = x.cols();
    if n <= p + 1 {
        log::warn!("regression has {n} rows for {} parameters", p + 1);
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if sst == 0.0 {
        return Ok(LinearFit {
            intercept: mean,
            coefficients: vec![0.0; p],
            rank: 1,
            r_squared: 0.0,
        });
    }
    let mut design = Matrix::zeros(n, p + 1);
    for r in 0..n {
        design.set(r, 0, 1.0);
        for (c, &v) in x.row(r).iter().enumerate() {
            design.set(r, c + 1, v);
        }
    }
    let sol = lstsq_qr(&design, y, RANK_TOL);
    let sse: f64 = (0..n)
        .map(|r| {
            let fit: f64 = design
                .row(r)
                .iter()
                .zip(&sol.beta)
                .map(|(a, b)| a * b)
                .sum();
            (y[r] - fit).powi(2)
        })
        .sum();
    Ok(LinearFit {
        intercept: sol.beta[0],
        coefficients: sol.beta[1..].to_vec(),
        rank: sol.rank,
        r_squared: (1.0 - sse / sst).clamp(0.0, 1.0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub transformer: Transformer,
    pub feature_names: Vec<String>,
    /// Intercept and coefficients in original units: interval inputs after
    /// mean imputation, indicators as 0/1.
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
    pub rank: usize,
}

impl LinearModel {
    pub fn predict(&self, data: &Dataset) -> Result<Vec<f64>> {
        let x = self.transformer.transform_unscaled(data)?;
        Ok((0..x.rows())
            .map(|r| {
                self.intercept
                    + x.row(r)
                        .iter()
                        .zip(&self.coefficients)
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
            })
            .collect())
    }
}

/// Fits OLS on the prepared (standardized) training matrix and reports the
/// coefficients back in original units.
pub fn train_ols(train: &Dataset, target: &str) -> Result<LinearModel> {
    let transformer = Transformer::fit(train, target)?;
    let prepared = transformer.prepared(train)?;
    let fit = ols_fit(&prepared.x, &prepared.y)?;
    let mut intercept = fit.intercept;
    let mut coefficients = fit.coefficients;
    let mut offset = 0;
    for enc in &transformer.encodings {
        if let FeatureEncoding::Interval { mean, scale, .. } = enc {
            let b = coefficients[offset] / scale;
            coefficients[offset] = b;
            intercept -= b * mean;
        }
        offset += enc.width();
    }
    Ok(LinearModel {
        feature_names: prepared.feature_names,
        transformer,
        intercept,
        coefficients,
        r_squared: fit.r_squared,
        rank: fit.rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{read_table, Level, Role, VariableSpec};

    fn xy(text: &str) -> Dataset {
        let schema = vec![
            VariableSpec::new("id", Role::Id, Level::Nominal),
            VariableSpec::new("x", Role::Input, Level::Interval),
            VariableSpec::new("y", Role::Target, Level::Interval),
        ];
        read_table(text.as_bytes(), &schema, "t").unwrap()
    }

    #[test]
    fn exact_line() {
        let d = xy("id,x,y\na,1,3\nb,2,5\nc,3,7\nd,4,9\n");
        let m = train_ols(&d, "y").unwrap();
        assert!((m.intercept - 1.0).abs() < 1e-9);
        assert!((m.coefficients[0] - 2.0).abs() < 1e-9);
        assert!((m.r_squared - 1.0).abs() < 1e-9);
        let probe = xy("id,x,y\nq,3,\n");
        assert!((m.predict(&probe).unwrap()[0] - 7.0).abs() < 1e-9);
    }

    #[test]
    fn constant_target_is_intercept_only() {
        let d = xy("id,x,y\na,1,4\nb,2,4\nc,5,4\n");
        let m = train_ols(&d, "y").unwrap();
        assert_eq!(m.coefficients, [0.0]);
        assert_eq!(m.intercept, 4.0);
        assert_eq!(m.r_squared, 0.0);
    }

    #[test]
    fn too_few_rows() {
        let d = xy("id,x,y\na,1,4\n");
        assert!(matches!(
            train_ols(&d, "y"),
            Err(Error::TooFewRows { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn full_one_hot_absorbs_rank_deficiency() {
        let schema = vec![
            VariableSpec::new("id", Role::Id, Level::Nominal),
            VariableSpec::new("g", Role::Input, Level::Nominal),
            VariableSpec::new("y", Role::Target, Level::Interval),
        ];
        let d = read_table(
            "id,g,y\na,A,1\nb,A,3\nc,B,10\nd,B,12\n".as_bytes(),
            &schema,
            "t",
        )
        .unwrap();
        let m = train_ols(&d, "y").unwrap();
        assert_eq!(m.rank, 2);
        let p = m.predict(&d).unwrap();
        for (a, b) in p.iter().zip([2.0, 2.0, 11.0, 11.0]) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn predict_is_deterministic_and_checks_schema() {
        let d = xy("id,x,y\na,1,3\nb,2,4\nc,3,7\n");
        let m = train_ols(&d, "y").unwrap();
        assert_eq!(m.predict(&d).unwrap(), m.predict(&d).unwrap());
        let schema = vec![VariableSpec::new("id", Role::Id, Level::Nominal)];
        let bare = read_table("id\nz\n".as_bytes(), &schema, "t").unwrap();
        assert!(matches!(m.predict(&bare), Err(Error::SchemaMismatch(_))));
    }
}
