use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use edumine::dataio::{
    load_schema, load_table, merge_by_id, write_schema, write_table, Column, Dataset, Level, Role,
    VariableSpec,
};
use edumine::eda::eda_report;
use edumine::models::artifact::{ModelArtifact, ModelKind, TrainedModel};
use edumine::pipeline::{run_pipeline, train_candidates, TrainOutcome};
use edumine::report::{eda_text, evaluation_text, json_document, training_text};
use edumine::scoring::{load_credits, score_table, write_credits};
use edumine::select::{
    evaluate as evaluate_predictions, variable_worth, MapeDenominator, VariableWorth,
};
use edumine::synth::{generate, SynthSpec};
use edumine::Error;

use crate::settings::{FileConfig, Format, ModelArgs};

/// File name of the tree candidate saved next to the champion.
const TREE_ARTIFACT: &str = "tree_model.json";
const CHAMPION_ARTIFACT: &str = "model.json";

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

fn load(data: &Path, schema: &Path) -> Result<Dataset> {
    let schema = load_schema(schema)?;
    Ok(load_table(data, &schema)?)
}

/// Prints and optionally stores a report in the requested formats.
fn emit(format: Format, stem: &str, text: &str, json: &str, out: Option<&Path>) -> Result<()> {
    if format.text() {
        print!("{text}");
    }
    if format.json() {
        if format.text() {
            println!();
        }
        print!("{json}");
    }
    if let Some(dir) = out {
        create_dir(dir)?;
        if format.text() {
            write_file(&dir.join(format!("{stem}.txt")), text)?;
        }
        if format.json() {
            write_file(&dir.join(format!("{stem}.json")), json)?;
        }
    }
    Ok(())
}

pub fn synth(
    config: Option<&Path>,
    seed: Option<u64>,
    n_students: Option<usize>,
    n_schools: Option<usize>,
    out: &Path,
) -> Result<()> {
    let mut spec = match config {
        Some(path) => SynthSpec::load_config(path)?,
        None => SynthSpec::default(),
    };
    if let Some(s) = seed {
        spec.seed = s;
    }
    if let Some(n) = n_students {
        spec.n_students = n;
    }
    if let Some(n) = n_schools {
        spec.n_schools = n;
    }
    let cohort = generate(&spec)?;
    create_dir(out)?;
    write_table(out.join("students.csv"), &cohort.students)?;
    write_schema(out.join("students.schema"), cohort.students.schema())?;
    write_table(out.join("schools.csv"), &cohort.schools)?;
    write_schema(out.join("schools.schema"), cohort.schools.schema())?;
    write_credits(out.join("credits.csv"), &cohort.credits)?;
    println!(
        "wrote {} students, {} schools, {} credit records to {}",
        cohort.students.n_rows(),
        cohort.schools.n_rows(),
        cohort.credits.len(),
        out.display()
    );
    Ok(())
}

pub fn prepare(
    roster: &Path,
    schema: &Path,
    credits: &Path,
    out: &Path,
    out_schema: Option<&Path>,
) -> Result<()> {
    let roster = load(roster, schema)?;
    let records = load_credits(credits)?;
    let scores = score_table(&records)?;
    let merged = merge_by_id(&roster, &scores)?;
    write_table(out, &merged)?;
    let schema_path = out_schema.map_or_else(|| out.with_extension("schema"), Path::to_path_buf);
    write_schema(&schema_path, merged.schema())?;
    println!(
        "{} rows x {} columns ({} roster rows, {} scored students)",
        merged.n_rows(),
        merged.n_cols(),
        roster.n_rows(),
        scores.n_rows()
    );
    println!("{:<32}  {:>8}", "column", "missing");
    for spec in merged.schema() {
        println!(
            "{:<32}  {:>8}",
            spec.name,
            merged.missing_count(&spec.name)?
        );
    }
    println!(
        "table: {}\nschema: {}",
        out.display(),
        schema_path.display()
    );
    Ok(())
}

pub fn eda(
    data: &Path,
    schema: &Path,
    columns: &[String],
    group_by: Option<&str>,
    format: Option<Format>,
    out: Option<&Path>,
) -> Result<()> {
    let table = load(data, schema)?;
    let columns: Vec<&str> = if columns.is_empty() {
        let targets: Vec<&str> = table
            .schema()
            .iter()
            .filter(|s| s.role == Role::Target && s.level.is_interval())
            .map(|s| s.name.as_str())
            .collect();
        if targets.is_empty() {
            table
                .schema()
                .iter()
                .filter(|s| s.is_numeric())
                .map(|s| s.name.as_str())
                .collect()
        } else {
            targets
        }
    } else {
        columns.iter().map(String::as_str).collect()
    };
    if columns.is_empty() {
        bail!(Error::InvalidParam(
            "no interval columns to summarize".into()
        ));
    }
    let report = eda_report(&table, &columns, group_by)?;
    emit(
        format.unwrap_or(Format::Text),
        "eda",
        &eda_text(&report),
        &json_document("eda", &report)?,
        out,
    )
}

fn training_json(outcome: &TrainOutcome) -> Result<String> {
    let candidates: Vec<serde_json::Value> = outcome
        .candidates
        .iter()
        .map(|(kind, c)| {
            serde_json::json!({
                "kind": kind,
                "train_ase": c.train_ase,
                "validation_ase": c.validation_ase,
            })
        })
        .collect();
    let body = serde_json::json!({
        "target": outcome.champion.target,
        "criterion": outcome.champion.criterion,
        "champion": outcome.champion.champion,
        "candidates": candidates,
        "n_train": outcome.n_train,
        "n_validation": outcome.n_validation,
    });
    Ok(json_document("champion", &body)?)
}

fn save_artifacts(outcome: &TrainOutcome, out: &Path) -> Result<()> {
    create_dir(out)?;
    outcome.artifact.save(out.join(CHAMPION_ARTIFACT))?;
    let tree = &outcome.candidates[&ModelKind::Tree];
    let tree_artifact = ModelArtifact::new(
        tree.model.clone(),
        outcome.artifact.seed,
        outcome.artifact.training_params.clone(),
        tree.train_ase,
        Some(tree.validation_ase),
    );
    tree_artifact.save(out.join(TREE_ARTIFACT))?;
    Ok(())
}

fn resolve_format(flag: Option<Format>, file: &FileConfig) -> Result<Format> {
    Ok(match flag {
        Some(f) => f,
        None => file.get("format")?.unwrap_or(Format::Text),
    })
}

pub fn train(
    data: &Path,
    schema: &Path,
    config: Option<&Path>,
    model: &ModelArgs,
    format: Option<Format>,
    out: &Path,
) -> Result<()> {
    let file = FileConfig::load(config)?;
    let resolved = model.resolve(&file)?;
    let format = resolve_format(format, &file)?;
    let table = load(data, schema)?;
    let outcome = train_candidates(&table, &resolved.target, &resolved.config)?;
    save_artifacts(&outcome, out)?;
    emit(
        format,
        "champion",
        &training_text(&outcome),
        &training_json(&outcome)?,
        Some(out),
    )
}

fn predictions_table(data: &Dataset, predictions: &[f64]) -> Result<Dataset> {
    let id = data.id_spec().clone();
    let schema = vec![
        VariableSpec::new(id.name.clone(), Role::Id, Level::Nominal),
        VariableSpec::new("prediction", Role::Target, Level::Interval),
    ];
    Ok(Dataset::new(
        schema,
        vec![
            Column::Categorical(data.ids().map(|s| Some(s.to_string())).collect()),
            Column::Interval(predictions.iter().copied().map(Some).collect()),
        ],
    )?)
}

pub fn score(model: &Path, data: &Path, schema: &Path, out: &Path) -> Result<()> {
    let artifact = ModelArtifact::load(model)?;
    let table = load(data, schema)?;
    let predictions = artifact.predict(&table)?;
    write_table(out, &predictions_table(&table, &predictions)?)?;
    println!(
        "scored {} rows with the {} model -> {}",
        predictions.len(),
        artifact.model_kind,
        out.display()
    );
    Ok(())
}

pub struct EvaluateArgs<'a> {
    pub model: &'a Path,
    pub data: &'a Path,
    pub schema: &'a Path,
    pub worth_model: Option<&'a Path>,
    pub denominator: MapeDenominator,
    pub top: usize,
    pub format: Format,
    pub out: Option<&'a Path>,
}

fn worth_from(
    artifact: &ModelArtifact,
    model_path: &Path,
    explicit: Option<&Path>,
) -> Result<Vec<VariableWorth>> {
    if explicit.is_none() {
        if let TrainedModel::Tree(t) = &artifact.model {
            return Ok(variable_worth(t));
        }
    }
    let path: PathBuf = match explicit {
        Some(p) => p.to_path_buf(),
        None => model_path.with_file_name(TREE_ARTIFACT),
    };
    if explicit.is_none() && !path.exists() {
        log::warn!(
            "no tree artifact at {}; variable worth omitted",
            path.display()
        );
        return Ok(Vec::new());
    }
    let tree = ModelArtifact::load(&path)?;
    match &tree.model {
        TrainedModel::Tree(t) => Ok(variable_worth(t)),
        _ => bail!(Error::InvalidParam(format!(
            "{} does not hold a tree",
            path.display()
        ))),
    }
}

pub fn evaluate(args: EvaluateArgs) -> Result<()> {
    let artifact = ModelArtifact::load(args.model)?;
    let table = load(args.data, args.schema)?;
    let predictions = artifact.predict(&table)?;
    let actual = table
        .interval(&artifact.target)
        .with_context(|| format!("score table needs the target `{}`", artifact.target))?;
    let worth = worth_from(&artifact, args.model, args.worth_model)?;
    let report = evaluate_predictions(
        &artifact.target,
        artifact.model_kind,
        &predictions,
        actual,
        args.denominator,
        worth,
    )?;
    emit(
        args.format,
        "evaluation",
        &evaluation_text(&report, args.top),
        &json_document("evaluation", &report)?,
        args.out,
    )
}

pub struct PipelineArgs<'a> {
    pub train_data: &'a Path,
    pub score_data: &'a Path,
    pub schema: &'a Path,
    pub score_schema: Option<&'a Path>,
    pub config: Option<&'a Path>,
    pub model: &'a ModelArgs,
    pub format: Option<Format>,
    pub top: usize,
    pub out: &'a Path,
}

pub fn pipeline(args: PipelineArgs) -> Result<()> {
    let file = FileConfig::load(args.config)?;
    let resolved = args.model.resolve(&file)?;
    let format = resolve_format(args.format, &file)?;
    let train = load(args.train_data, args.schema)?;
    let score = load(args.score_data, args.score_schema.unwrap_or(args.schema))?;
    let outcome = run_pipeline(&train, &score, &resolved.target, &resolved.config)?;
    save_artifacts(&outcome.training, args.out)?;
    write_table(
        args.out.join("predictions.csv"),
        &predictions_table(&score, &outcome.predictions)?,
    )?;
    emit(
        format,
        "champion",
        &training_text(&outcome.training),
        &training_json(&outcome.training)?,
        Some(args.out),
    )?;
    if format.text() {
        println!();
    }
    emit(
        format,
        "evaluation",
        &evaluation_text(&outcome.evaluation, args.top),
        &json_document("evaluation", &outcome.evaluation)?,
        Some(args.out),
    )?;
    Ok(())
}
