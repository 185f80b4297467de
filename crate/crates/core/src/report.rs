//! Fixed-width text tables and versioned JSON documents for every report.

use std::fmt::Write as _;

use serde::Serialize;

use crate::eda::EdaReport;
use crate::error::Result;
use crate::pipeline::TrainOutcome;
use crate::select::{ChampionReport, EvaluationReport, MapeDenominator};
use crate::TOOL_VERSION;

/// Wraps a serializable report as `{"tool_version", "report", ...fields}`.
pub fn json_document<T: Serialize>(kind: &str, body: &T) -> Result<String> {
    let mut value = serde_json::to_value(body)?;
    let obj = match value.as_object_mut() {
        Some(obj) => obj,
        None => {
            value = serde_json::json!({ "data": value });
            value.as_object_mut().expect("object")
        }
    };
    obj.insert("tool_version".into(), TOOL_VERSION.into());
    obj.insert("report".into(), kind.into());
    let mut s = serde_json::to_string_pretty(&value)?;
    s.push('\n');
    Ok(s)
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(out, "{title}");
    let _ = writeln!(out, "{}", "=".repeat(title.len()));
}

/// Candidate comparison, champion first then by ascending validation ASE.
pub fn champion_text(report: &ChampionReport) -> String {
    let mut out = String::new();
    header(
        &mut out,
        &format!("Model comparison for target `{}`", report.target),
    );
    let _ = writeln!(out, "Selection criteria: {}", report.criterion);
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<8}  {:<16}  {:>16}",
        "Selected", "Model", "Validation ASE"
    );
    let _ = writeln!(out, "{:-<8}  {:-<16}  {:->16}", "", "", "");
    let mut rows = report.candidates.clone();
    rows.sort_by(|a, b| {
        (b.kind == report.champion)
            .cmp(&(a.kind == report.champion))
            .then(a.validation_ase.total_cmp(&b.validation_ase))
            .then(a.kind.cmp(&b.kind))
    });
    for c in rows {
        let mark = if c.kind == report.champion { "Yes" } else { "" };
        let _ = writeln!(
            out,
            "{:<8}  {:<16}  {:>16.4}",
            mark,
            c.kind.label(),
            c.validation_ase
        );
    }
    out
}

/// Champion table plus training/validation sizes and per-candidate train ASE.
pub fn training_text(outcome: &TrainOutcome) -> String {
    let mut out = champion_text(&outcome.champion);
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "Partition: {} training rows, {} validation rows",
        outcome.n_train, outcome.n_validation
    );
    let _ = writeln!(
        out,
        "{:<16}  {:>16}  {:>16}",
        "Model", "Train ASE", "Validation ASE"
    );
    let _ = writeln!(out, "{:-<16}  {:->16}  {:->16}", "", "", "");
    for (kind, c) in &outcome.candidates {
        let _ = writeln!(
            out,
            "{:<16}  {:>16.4}  {:>16.4}",
            kind.label(),
            c.train_ase,
            c.validation_ase
        );
    }
    out
}

/// MAPE block followed by the top `top` variables by worth.
pub fn evaluation_text(report: &EvaluationReport, top: usize) -> String {
    let mut out = String::new();
    header(
        &mut out,
        "Mean Absolute Percentage Errors (MAPE) using Predicted vs Actual",
    );
    let denominator = match report.mape_denominator {
        MapeDenominator::Prediction => "prediction (reference formula)",
        MapeDenominator::Actual => "actual (conventional, not the reference formula)",
    };
    let rows = [
        ("Target", report.target.clone()),
        ("Model", report.model_kind.label().to_string()),
        ("Rows scored", report.n_scored.to_string()),
        ("Excluded (actual <= 0)", report.excluded_rows.to_string()),
        (
            "Rows without actual",
            report.rows_without_actual.to_string(),
        ),
        ("MAPE (%)", format!("{:.4}", report.mape)),
        ("ASE", format!("{:.4}", report.ase)),
        ("MAPE denominator", denominator.to_string()),
    ];
    for (k, v) in rows {
        let _ = writeln!(out, "{k:<24}  {v}");
    }
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "Variable worth (decision tree, weighted variance reduction)"
    );
    if report.variable_worth.is_empty() {
        let _ = writeln!(out, "  (tree has no splits)");
        return out;
    }
    let _ = writeln!(out, "{:>4}  {:<32}  {:>8}", "Rank", "Variable", "Worth");
    let _ = writeln!(out, "{:->4}  {:-<32}  {:->8}", "", "", "");
    for (i, w) in report.variable_worth.iter().take(top).enumerate() {
        let _ = writeln!(out, "{:>4}  {:<32}  {:>8.4}", i + 1, w.variable, w.worth);
    }
    out
}

/// Descriptives (with group rows and ANOVA) and banded correlations.
pub fn eda_text(report: &EdaReport) -> String {
    let mut out = String::new();
    header(&mut out, "Descriptive statistics");
    let _ = writeln!(
        out,
        "{:<20}  {:<16}  {:>8}  {:>10}  {:>10}",
        "Variable", "Group", "N", "Mean", "Std Dev"
    );
    let _ = writeln!(
        out,
        "{:-<20}  {:-<16}  {:->8}  {:->10}  {:->10}",
        "", "", "", "", ""
    );
    for col in &report.columns {
        let o = &col.overall;
        let _ = writeln!(
            out,
            "{:<20}  {:<16}  {:>8}  {:>10.4}  {:>10.4}",
            col.column, "(all)", o.n, o.mean, o.std_dev
        );
        for g in &col.groups {
            let _ = writeln!(
                out,
                "{:<20}  {:<16}  {:>8}  {:>10.4}  {:>10.4}",
                "",
                g.group.as_deref().unwrap_or("(missing)"),
                g.stats.n,
                g.stats.mean,
                g.stats.std_dev
            );
        }
    }
    if let Some(group) = &report.group_by {
        let _ = writeln!(out);
        header(&mut out, &format!("One-way ANOVA by `{group}`"));
        let _ = writeln!(
            out,
            "{:<20}  {:>12}  {:>6}  {:>8}  {:>12}",
            "Variable", "F", "df1", "df2", "p-value"
        );
        let _ = writeln!(
            out,
            "{:-<20}  {:->12}  {:->6}  {:->8}  {:->12}",
            "", "", "", "", ""
        );
        for col in &report.columns {
            match &col.anova {
                Some(a) => {
                    let _ = writeln!(
                        out,
                        "{:<20}  {:>12.4}  {:>6}  {:>8}  {:>12.6}",
                        col.column, a.f_stat, a.df_between, a.df_within, a.p_value
                    );
                }
                None => {
                    let _ = writeln!(out, "{:<20}  {:>12}", col.column, "n/a");
                }
            }
        }
    }
    let _ = writeln!(out);
    header(&mut out, "Correlation analysis");
    let _ = writeln!(
        out,
        "{:<20}  {:<20}  {:>8}  {:>8}  {:<10}",
        "Variable A", "Variable B", "N", "R", "Band"
    );
    let _ = writeln!(
        out,
        "{:-<20}  {:-<20}  {:->8}  {:->8}  {:-<10}",
        "", "", "", "", ""
    );
    for p in &report.correlations {
        match &p.result {
            Some(r) => {
                let _ = writeln!(
                    out,
                    "{:<20}  {:<20}  {:>8}  {:>8.4}  {:<10}",
                    p.a, p.b, r.n_pairs, r.r, r.band
                );
            }
            None => {
                let _ = writeln!(
                    out,
                    "{:<20}  {:<20}  {:>8}  {:>8}  {:<10}",
                    p.a, p.b, "", "n/a", ""
                );
            }
        }
    }
    out
}
