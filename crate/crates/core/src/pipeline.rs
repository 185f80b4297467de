//! Partition, train the three candidates, pick the champion, score a cohort.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataio::{partition, Dataset};
use crate::error::{Error, Result};
use crate::models::artifact::{ModelArtifact, ModelKind, TrainedModel, TrainingParams};
use crate::models::linear::train_ols;
use crate::models::neural::train_nn;
use crate::models::prepare::target_rows;
use crate::models::tree::{train_tree, TreeModel};
use crate::select::{
    ase_present, evaluate, select_champion, variable_worth, ChampionReport, EvaluationReport,
    MapeDenominator,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub seed: u64,
    pub params: TrainingParams,
    pub mape_denominator: MapeDenominator,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            params: TrainingParams::default(),
            mape_denominator: MapeDenominator::Prediction,
        }
    }
}

/// One trained candidate with its partition ASEs.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub model: TrainedModel,
    pub train_ase: f64,
    pub validation_ase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub candidates: BTreeMap<ModelKind, Candidate>,
    pub champion: ChampionReport,
    pub artifact: ModelArtifact,
    pub n_train: usize,
    pub n_validation: usize,
}

impl TrainOutcome {
    pub fn tree(&self) -> &TreeModel {
        match &self.candidates[&ModelKind::Tree].model {
            TrainedModel::Tree(t) => t,
            _ => unreachable!("tree slot holds a tree"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutcome {
    pub training: TrainOutcome,
    pub evaluation: EvaluationReport,
    pub predictions: Vec<f64>,
}

fn candidate(
    model: Result<TrainedModel>,
    train: &Dataset,
    valid: &Dataset,
    target: &str,
) -> Result<Candidate> {
    let model = model?;
    let train_ase = ase_present(&model.predict(train)?, train.interval(target)?)?;
    let validation_ase = ase_present(&model.predict(valid)?, valid.interval(target)?)?;
    Ok(Candidate {
        model,
        train_ase,
        validation_ase,
    })
}

/// Partitions `source` (rows with a target value only), trains the tree,
/// regression and network concurrently and selects the champion.
pub fn train_candidates(
    source: &Dataset,
    target: &str,
    config: &PipelineConfig,
) -> Result<TrainOutcome> {
    let (rows, _) = target_rows(source, target)?;
    if rows.is_empty() {
        return Err(Error::TargetAllMissing(target.to_string()));
    }
    let usable = source.select_rows(&rows);
    let part = partition(&usable, config.params.train_fraction, config.seed)?;
    let (train, valid) = (&part.train, &part.validation);
    let mut params = config.params.clone();
    params.nn.seed = config.seed;

    let (tree, ols, nn) = std::thread::scope(|s| {
        let tree = s.spawn(|| {
            let m = train_tree(train, valid, target, &params.tree).map(TrainedModel::Tree);
            candidate(m, train, valid, target)
        });
        let ols = s.spawn(|| {
            let m = train_ols(train, target).map(TrainedModel::Regression);
            candidate(m, train, valid, target)
        });
        let nn = s.spawn(|| {
            let m = train_nn(train, valid, target, &params.nn).map(TrainedModel::Neural);
            candidate(m, train, valid, target)
        });
        (
            tree.join().expect("tree worker"),
            ols.join().expect("regression worker"),
            nn.join().expect("network worker"),
        )
    });
    let candidates = BTreeMap::from([
        (ModelKind::Tree, tree?),
        (ModelKind::Regression, ols?),
        (ModelKind::Neural, nn?),
    ]);
    let ases: BTreeMap<ModelKind, f64> = candidates
        .iter()
        .map(|(k, c)| (*k, c.validation_ase))
        .collect();
    let champion = select_champion(target, &ases)?;
    let best = &candidates[&champion.champion];
    let artifact = ModelArtifact::new(
        best.model.clone(),
        config.seed,
        params,
        best.train_ase,
        Some(best.validation_ase),
    );
    Ok(TrainOutcome {
        candidates,
        champion,
        artifact,
        n_train: train.n_rows(),
        n_validation: valid.n_rows(),
    })
}

/// End to end: train on `train_source`, score `score_source` with the
/// champion and evaluate against its actual target values.
pub fn run_pipeline(
    train_source: &Dataset,
    score_source: &Dataset,
    target: &str,
    config: &PipelineConfig,
) -> Result<PipelineOutcome> {
    let training = train_candidates(train_source, target, config)?;
    let predictions = training.artifact.predict(score_source)?;
    let evaluation = evaluate(
        target,
        training.champion.champion,
        &predictions,
        score_source.interval(target)?,
        config.mape_denominator,
        variable_worth(training.tree()),
    )?;
    Ok(PipelineOutcome {
        training,
        evaluation,
        predictions,
    })
}
