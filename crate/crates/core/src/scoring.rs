//! Item credits to percentage scores.
//!
//! Full credit counts 1, partial credit 0.5 and no credit 0. A score is the
//! credit earned over the number of items taken, times 100.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataio::{Column, Dataset, Level, Role, VariableSpec};
use crate::error::{Error, Result};

/// Reserved column name for the pooled all-subject score.
pub const AGGREGATE: &str = "aggregate";

/// Column name used for the student identifier in score tables.
pub const STUDENT_ID: &str = "student_id";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subject {
    Reading,
    Maths,
    Science,
    ProblemSolving,
}

impl Subject {
    pub const ALL: [Subject; 4] = [
        Subject::Reading,
        Subject::Maths,
        Subject::Science,
        Subject::ProblemSolving,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Subject::Reading => "reading",
            Subject::Maths => "maths",
            Subject::Science => "science",
            Subject::ProblemSolving => "problem_solving",
        }
    }
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Subject {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "reading" => Ok(Subject::Reading),
            "maths" | "math" | "mathematics" => Ok(Subject::Maths),
            "science" => Ok(Subject::Science),
            "problem_solving" | "problem-solving" => Ok(Subject::ProblemSolving),
            other => Err(Error::Credit(format!("unknown subject `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Credit {
    #[serde(rename = "none")]
    NoCredit,
    Partial,
    Full,
}

impl Credit {
    pub fn value(self) -> f64 {
        credit_value(self)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Credit::Full => "full",
            Credit::Partial => "partial",
            Credit::NoCredit => "none",
        }
    }
}

impl FromStr for Credit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "full" => Ok(Credit::Full),
            "partial" => Ok(Credit::Partial),
            "none" => Ok(Credit::NoCredit),
            other => Err(Error::Credit(format!("unknown credit `{other}`"))),
        }
    }
}

pub fn credit_value(credit: Credit) -> f64 {
    match credit {
        Credit::Full => 1.0,
        Credit::Partial => 0.5,
        Credit::NoCredit => 0.0,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CreditRecord {
    pub student_id: String,
    pub subject: Subject,
    pub item_id: String,
    pub credit: Credit,
}

impl CreditRecord {
    pub fn new(
        student_id: impl Into<String>,
        subject: Subject,
        item_id: impl Into<String>,
        credit: Credit,
    ) -> Self {
        Self {
            student_id: student_id.into(),
            subject,
            item_id: item_id.into(),
            credit,
        }
    }
}

/// What a score covers: one subject or the pooled aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreScope {
    Subject(Subject),
    Aggregate,
}

impl ScoreScope {
    pub fn column_name(self) -> &'static str {
        match self {
            ScoreScope::Subject(s) => s.as_str(),
            ScoreScope::Aggregate => AGGREGATE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectScore {
    pub student_id: String,
    pub scope: ScoreScope,
    pub sum_of_scores: f64,
    pub total_credit_taken: u32,
    pub percent: f64,
}

fn pooled_score(records: &[CreditRecord], scope: ScoreScope) -> SubjectScore {
    let sum_of_scores: f64 = records.iter().map(|r| credit_value(r.credit)).sum();
    let total = records.len() as u32;
    SubjectScore {
        student_id: records[0].student_id.clone(),
        scope,
        sum_of_scores,
        total_credit_taken: total,
        percent: sum_of_scores / total as f64 * 100.0,
    }
}

fn check_one_student(records: &[CreditRecord]) -> Result<&str> {
    let first = records.first().ok_or(Error::EmptyRecords)?;
    if let Some(other) = records.iter().find(|r| r.student_id != first.student_id) {
        return Err(Error::Credit(format!(
            "records mix students `{}` and `{}`",
            first.student_id, other.student_id
        )));
    }
    Ok(&first.student_id)
}

/// Score for one student on one subject.
pub fn subject_score(records: &[CreditRecord]) -> Result<SubjectScore> {
    check_one_student(records)?;
    let subject = records[0].subject;
    if records.iter().any(|r| r.subject != subject) {
        return Err(Error::Credit("records mix subjects".into()));
    }
    Ok(pooled_score(records, ScoreScope::Subject(subject)))
}

/// Score pooled over all of one student's items, whatever the subject.
pub fn aggregate_score(records: &[CreditRecord]) -> Result<SubjectScore> {
    check_one_student(records)?;
    Ok(pooled_score(records, ScoreScope::Aggregate))
}

/// Schema of the table produced by [`score_table`].
pub fn score_schema() -> Vec<VariableSpec> {
    let mut schema = vec![VariableSpec::new(STUDENT_ID, Role::Id, Level::Nominal)];
    schema.extend(
        Subject::ALL
            .iter()
            .map(|s| VariableSpec::new(s.as_str(), Role::Target, Level::Interval)),
    );
    schema.push(VariableSpec::new(AGGREGATE, Role::Target, Level::Interval));
    schema
}

fn check_unique(records: &[CreditRecord]) -> Result<()> {
    let mut seen = HashSet::with_capacity(records.len());
    for r in records {
        if !seen.insert((&r.student_id, r.subject, &r.item_id)) {
            return Err(Error::Credit(format!(
                "item `{}` graded twice for student `{}` in {}",
                r.item_id, r.student_id, r.subject
            )));
        }
    }
    Ok(())
}

/// One row per student (in order of first appearance) with a percent column
/// per subject plus the aggregate. Subjects a student never sat are missing.
pub fn score_table(records: &[CreditRecord]) -> Result<Dataset> {
    check_unique(records)?;
    let mut order: Vec<&str> = Vec::new();
    let mut by_student: HashMap<&str, Vec<&CreditRecord>> = HashMap::new();
    for r in records {
        by_student
            .entry(r.student_id.as_str())
            .or_insert_with(|| {
                order.push(r.student_id.as_str());
                Vec::new()
            })
            .push(r);
    }

    let mut ids = Vec::with_capacity(order.len());
    let mut subject_cols: Vec<Vec<Option<f64>>> =
        (0..4).map(|_| Vec::with_capacity(order.len())).collect();
    let mut aggregate = Vec::with_capacity(order.len());
    for student in order {
        let recs = &by_student[student];
        ids.push(Some(student.to_string()));
        for (k, subject) in Subject::ALL.iter().enumerate() {
            let mut earned = 0.0;
            let mut taken = 0u32;
            for r in recs.iter().filter(|r| r.subject == *subject) {
                earned += credit_value(r.credit);
                taken += 1;
            }
            subject_cols[k].push((taken > 0).then(|| earned / taken as f64 * 100.0));
        }
        let earned: f64 = recs.iter().map(|r| credit_value(r.credit)).sum();
        aggregate.push(Some(earned / recs.len() as f64 * 100.0));
    }

    let mut columns = vec![Column::Categorical(ids)];
    columns.extend(subject_cols.into_iter().map(Column::Interval));
    columns.push(Column::Interval(aggregate));
    Dataset::new(score_schema(), columns)
}

/// Reads `student_id,subject,item_id,credit` rows.
pub fn read_credits<R: Read>(reader: R, context: &str) -> Result<Vec<CreditRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::csv(context, e))?.clone();
    let pos = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingHeaderColumn(name.to_string()))
    };
    let (si, sj, ii, ci) = (
        pos("student_id")?,
        pos("subject")?,
        pos("item_id")?,
        pos("credit")?,
    );
    let mut out = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::csv(context, e))?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let student = field(si);
        if student.is_empty() {
            return Err(Error::Credit(format!(
                "{context}: row {} has no student_id",
                line + 1
            )));
        }
        out.push(CreditRecord {
            student_id: student.to_string(),
            subject: field(sj).parse()?,
            item_id: field(ii).to_string(),
            credit: field(ci).parse()?,
        });
    }
    Ok(out)
}

pub fn load_credits(path: impl AsRef<Path>) -> Result<Vec<CreditRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_credits(file, &path.display().to_string())
}

pub fn write_credits_to<W: Write>(writer: W, records: &[CreditRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let ctx = "credit output";
    wtr.write_record(["student_id", "subject", "item_id", "credit"])
        .map_err(|e| Error::csv(ctx, e))?;
    for r in records {
        wtr.write_record([
            r.student_id.as_str(),
            r.subject.as_str(),
            r.item_id.as_str(),
            r.credit.as_str(),
        ])
        .map_err(|e| Error::csv(ctx, e))?;
    }
    wtr.flush().map_err(|e| Error::io(ctx, e))?;
    Ok(())
}

pub fn write_credits(path: impl AsRef<Path>, records: &[CreditRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_credits_to(std::io::BufWriter::new(file), records)
}
