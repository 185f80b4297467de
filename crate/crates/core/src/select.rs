//! Champion selection, MAPE and tree-based variable worth.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::artifact::ModelKind;
use crate::models::tree::TreeModel;

/// Label of the selection rule carried in reports.
pub const SELECTION_CRITERION: &str = "Validation: Average Squared Error";

/// Mean of squared differences.
pub fn ase(pred: &[f64], actual: &[f64]) -> Result<f64> {
    if pred.len() != actual.len() {
        return Err(Error::LengthMismatch(pred.len(), actual.len()));
    }
    if pred.is_empty() {
        return Err(Error::Empty);
    }
    Ok(pred
        .iter()
        .zip(actual)
        .map(|(p, a)| (p - a).powi(2))
        .sum::<f64>()
        / pred.len() as f64)
}

/// ASE over the rows whose actual value is present.
pub fn ase_present(pred: &[f64], actual: &[Option<f64>]) -> Result<f64> {
    if pred.len() != actual.len() {
        return Err(Error::LengthMismatch(pred.len(), actual.len()));
    }
    let (p, a): (Vec<f64>, Vec<f64>) = pred
        .iter()
        .zip(actual)
        .filter_map(|(p, a)| a.map(|a| (*p, a)))
        .unzip();
    ase(&p, &a)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateAse {
    pub kind: ModelKind,
    pub validation_ase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChampionReport {
    pub target: String,
    /// In tie-break order.
    pub candidates: Vec<CandidateAse>,
    pub champion: ModelKind,
    pub criterion: String,
}

/// Lowest validation ASE wins; exact ties go to the earlier kind in
/// tree < regression < neural order.
pub fn select_champion(
    target: &str,
    candidates: &BTreeMap<ModelKind, f64>,
) -> Result<ChampionReport> {
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }
    if let Some((k, _)) = candidates.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFiniteAse(k.to_string()));
    }
    // BTreeMap iterates in kind order, so strict `<` keeps the earlier kind on ties.
    let mut champion = None;
    for (&k, &v) in candidates {
        if champion.is_none_or(|(_, best)| v < best) {
            champion = Some((k, v));
        }
    }
    Ok(ChampionReport {
        target: target.to_string(),
        candidates: candidates
            .iter()
            .map(|(&kind, &validation_ase)| CandidateAse {
                kind,
                validation_ase,
            })
            .collect(),
        champion: champion.expect("non-empty").0,
        criterion: SELECTION_CRITERION.to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapeDenominator {
    /// |pred - actual| / pred, as in the reference formula.
    #[default]
    Prediction,
    /// Conventional |pred - actual| / actual.
    Actual,
}

impl fmt::Display for MapeDenominator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MapeDenominator::Prediction => "prediction",
            MapeDenominator::Actual => "actual",
        })
    }
}

impl FromStr for MapeDenominator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prediction" => Ok(MapeDenominator::Prediction),
            "actual" => Ok(MapeDenominator::Actual),
            _ => Err(Error::InvalidParam(format!(
                "MAPE denominator must be `prediction` or `actual`, got `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mape {
    /// Percent.
    pub mape: f64,
    pub n_scored: usize,
    /// Rows whose actual value is not positive.
    pub excluded: usize,
}

/// Mean absolute percentage error over rows with a positive actual value.
pub fn mape(pred: &[f64], actual: &[f64], denominator: MapeDenominator) -> Result<Mape> {
    if pred.len() != actual.len() {
        return Err(Error::LengthMismatch(pred.len(), actual.len()));
    }
    let mut sum = 0.0;
    let mut n = 0;
    let mut excluded = 0;
    for (row, (&p, &a)) in pred.iter().zip(actual).enumerate() {
        if a <= 0.0 {
            excluded += 1;
            continue;
        }
        let denom = match denominator {
            MapeDenominator::Prediction => {
                if p <= 0.0 {
                    return Err(Error::NonPositivePrediction { row, prediction: p });
                }
                p
            }
            MapeDenominator::Actual => a,
        };
        sum += (p - a).abs() / denom * 100.0;
        n += 1;
    }
    if n == 0 {
        return Err(Error::NothingToScore);
    }
    Ok(Mape {
        mape: sum / n as f64,
        n_scored: n,
        excluded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableWorth {
    pub variable: String,
    pub worth: f64,
}

/// Split-weighted variance reduction per variable, scaled so the top
/// variable has worth 1. Empty for a tree without splits.
pub fn variable_worth(tree: &TreeModel) -> Vec<VariableWorth> {
    let mut raw: BTreeMap<&str, f64> = tree
        .features
        .iter()
        .map(|f| (f.name.as_str(), 0.0))
        .collect();
    let mut any = false;
    for node in &tree.nodes {
        if let Some(split) = &node.split {
            *raw.entry(split.variable.as_str()).or_default() +=
                node.n as f64 * node.variance_reduction;
            any = true;
        }
    }
    let max = raw.values().copied().fold(0.0, f64::max);
    if !any || max <= 0.0 {
        return Vec::new();
    }
    let mut out: Vec<VariableWorth> = raw
        .into_iter()
        .map(|(v, w)| VariableWorth {
            variable: v.to_string(),
            worth: if w == max { 1.0 } else { w / max },
        })
        .collect();
    out.sort_by(|a, b| {
        b.worth
            .total_cmp(&a.worth)
            .then_with(|| a.variable.cmp(&b.variable))
    });
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub target: String,
    pub model_kind: ModelKind,
    pub mape_denominator: MapeDenominator,
    /// Rows contributing to MAPE.
    pub n_scored: usize,
    /// Rows with an actual value that is not positive.
    pub excluded_rows: usize,
    /// Rows scored without an actual value; not part of either metric.
    pub rows_without_actual: usize,
    pub mape: f64,
    /// Over every row with an actual value.
    pub ase: f64,
    /// From the tree candidate.
    pub variable_worth: Vec<VariableWorth>,
}

/// Scores predictions against the actual column (missing actuals skipped).
pub fn evaluate(
    target: &str,
    model_kind: ModelKind,
    pred: &[f64],
    actual: &[Option<f64>],
    denominator: MapeDenominator,
    variable_worth: Vec<VariableWorth>,
) -> Result<EvaluationReport> {
    if pred.len() != actual.len() {
        return Err(Error::LengthMismatch(pred.len(), actual.len()));
    }
    let (p, a): (Vec<f64>, Vec<f64>) = pred
        .iter()
        .zip(actual)
        .filter_map(|(p, a)| a.map(|a| (*p, a)))
        .unzip();
    if p.is_empty() {
        return Err(Error::NothingToScore);
    }
    let m = mape(&p, &a, denominator)?;
    Ok(EvaluationReport {
        target: target.to_string(),
        model_kind,
        mape_denominator: denominator,
        n_scored: m.n_scored,
        excluded_rows: m.excluded,
        rows_without_actual: pred.len() - p.len(),
        mape: m.mape,
        ase: ase(&p, &a)?,
        variable_worth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ase_examples() {
        assert_eq!(ase(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(ase(&[1.0, 2.0], &[3.0, 2.0]).unwrap(), 2.0);
        assert_eq!(ase(&[101.0, 102.0], &[103.0, 102.0]).unwrap(), 2.0);
        assert!(matches!(
            ase(&[1.0], &[1.0, 2.0]),
            Err(Error::LengthMismatch(1, 2))
        ));
        assert!(matches!(ase(&[], &[]), Err(Error::Empty)));
    }

    #[test]
    fn champion_ties_and_errors() {
        let m = BTreeMap::from([(ModelKind::Regression, 5.0), (ModelKind::Tree, 5.0)]);
        assert_eq!(select_champion("y", &m).unwrap().champion, ModelKind::Tree);
        let m = BTreeMap::from([(ModelKind::Neural, 1.0), (ModelKind::Regression, 1.0)]);
        assert_eq!(
            select_champion("y", &m).unwrap().champion,
            ModelKind::Regression
        );
        assert!(matches!(
            select_champion("y", &BTreeMap::new()),
            Err(Error::NoCandidates)
        ));
        let m = BTreeMap::from([(ModelKind::Neural, f64::NAN)]);
        assert!(matches!(
            select_champion("y", &m),
            Err(Error::NonFiniteAse(_))
        ));
    }

    #[test]
    fn mape_examples() {
        let p = MapeDenominator::Prediction;
        assert_eq!(mape(&[100.0], &[80.0], p).unwrap().mape, 20.0);
        assert_eq!(
            mape(&[80.0], &[100.0], MapeDenominator::Actual)
                .unwrap()
                .mape,
            20.0
        );
        assert_eq!(mape(&[5.0, 7.0], &[5.0, 7.0], p).unwrap().mape, 0.0);
        let r = mape(&[40.0, 50.0], &[0.0, 50.0], p).unwrap();
        assert_eq!((r.mape, r.excluded, r.n_scored), (0.0, 1, 1));
        assert!(matches!(
            mape(&[-1.0], &[3.0], p),
            Err(Error::NonPositivePrediction { row: 0, .. })
        ));
        // excluded rows may carry any prediction
        assert_eq!(mape(&[-1.0, 2.0], &[-4.0, 2.0], p).unwrap().excluded, 1);
        assert!(matches!(
            mape(&[1.0], &[0.0], p),
            Err(Error::NothingToScore)
        ));
    }

    #[test]
    fn evaluate_counts_rows() {
        let r = evaluate(
            "y",
            ModelKind::Tree,
            &[10.0, 20.0, 30.0, 40.0],
            &[Some(0.0), Some(20.0), None, Some(50.0)],
            MapeDenominator::Prediction,
            Vec::new(),
        )
        .unwrap();
        assert_eq!(
            (r.n_scored, r.excluded_rows, r.rows_without_actual),
            (2, 1, 1)
        );
        assert!((r.mape - 12.5).abs() < 1e-12);
        assert!((r.ase - 200.0 / 3.0).abs() < 1e-12);
    }
}
