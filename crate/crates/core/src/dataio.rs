//! Typed survey tables: loading, merging, filtering, and partitioning.
//!
//! A [`Dataset`] is an immutable rectangular table whose columns are typed by
//! the [`Level`] of their [`VariableSpec`]. Missing cells are explicit
//! (`None`); the encodings `""`, `"NA"` and `"."` all read as missing.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cell texts that read as missing.
pub const MISSING_TOKENS: [&str; 3] = ["", "NA", "."];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Id,
    Input,
    Target,
    Ignored,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Interval,
    Ordinal,
    Nominal,
    Binary,
}

impl Level {
    pub fn is_interval(self) -> bool {
        self == Level::Interval
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Id => "id",
            Role::Input => "input",
            Role::Target => "target",
            Role::Ignored => "ignored",
        })
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Interval => "interval",
            Level::Ordinal => "ordinal",
            Level::Nominal => "nominal",
            Level::Binary => "binary",
        })
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "id" => Ok(Role::Id),
            "input" => Ok(Role::Input),
            "target" => Ok(Role::Target),
            "ignored" | "rejected" => Ok(Role::Ignored),
            other => Err(Error::Schema(format!("unknown role `{other}`"))),
        }
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "interval" => Ok(Level::Interval),
            "ordinal" => Ok(Level::Ordinal),
            "nominal" => Ok(Level::Nominal),
            "binary" => Ok(Level::Binary),
            other => Err(Error::Schema(format!("unknown level `{other}`"))),
        }
    }
}

/// Name, role and measurement level of one variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub role: Role,
    pub level: Level,
}

impl VariableSpec {
    pub fn new(name: impl Into<String>, role: Role, level: Level) -> Self {
        Self {
            name: name.into(),
            role,
            level,
        }
    }

    /// Whether cells of this variable are stored as numbers.
    ///
    /// The id variable is always kept as a text label, whatever its level.
    pub fn is_numeric(&self) -> bool {
        self.role != Role::Id && self.level.is_interval()
    }
}

/// One column of cells; `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Interval(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Interval(v) => v.len(),
            Column::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_missing(&self, row: usize) -> bool {
        match self {
            Column::Interval(v) => v[row].is_none(),
            Column::Categorical(v) => v[row].is_none(),
        }
    }

    pub fn missing_count(&self) -> usize {
        (0..self.len()).filter(|&i| self.is_missing(i)).count()
    }

    pub fn as_interval(&self) -> Option<&[Option<f64>]> {
        match self {
            Column::Interval(v) => Some(v),
            Column::Categorical(_) => None,
        }
    }

    pub fn as_categorical(&self) -> Option<&[Option<String>]> {
        match self {
            Column::Categorical(v) => Some(v),
            Column::Interval(_) => None,
        }
    }

    fn select(&self, rows: &[usize]) -> Column {
        match self {
            Column::Interval(v) => Column::Interval(rows.iter().map(|&r| v[r]).collect()),
            Column::Categorical(v) => {
                Column::Categorical(rows.iter().map(|&r| v[r].clone()).collect())
            }
        }
    }

    fn cell_text(&self, row: usize) -> String {
        match self {
            Column::Interval(v) => v[row].map(|x| x.to_string()).unwrap_or_default(),
            Column::Categorical(v) => v[row].clone().unwrap_or_default(),
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Column::Interval(_) => "interval",
            Column::Categorical(_) => "categorical",
        }
    }
}

/// An immutable rectangular table with exactly one id variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Vec<VariableSpec>,
    columns: Vec<Column>,
    id_index: usize,
    n_rows: usize,
}

impl Dataset {
    /// Builds a dataset, checking every table invariant.
    pub fn new(schema: Vec<VariableSpec>, columns: Vec<Column>) -> Result<Self> {
        if schema.len() != columns.len() {
            return Err(Error::Schema(format!(
                "{} variables but {} columns",
                schema.len(),
                columns.len()
            )));
        }
        let mut seen = HashSet::new();
        for spec in &schema {
            if !seen.insert(spec.name.as_str()) {
                return Err(Error::Schema(format!(
                    "variable `{}` declared twice",
                    spec.name
                )));
            }
        }
        let ids: Vec<usize> = schema
            .iter()
            .enumerate()
            .filter(|(_, s)| s.role == Role::Id)
            .map(|(i, _)| i)
            .collect();
        let id_index = match ids.as_slice() {
            [one] => *one,
            [] => return Err(Error::Schema("no variable has role `id`".into())),
            _ => return Err(Error::Schema("more than one variable has role `id`".into())),
        };
        let n_rows = columns[id_index].len();
        for (spec, col) in schema.iter().zip(&columns) {
            if col.len() != n_rows {
                return Err(Error::Schema(format!(
                    "column `{}` has {} rows, expected {}",
                    spec.name,
                    col.len(),
                    n_rows
                )));
            }
            let expected = if spec.is_numeric() {
                "interval"
            } else {
                "categorical"
            };
            if col.kind() != expected {
                return Err(Error::LevelMismatch {
                    column: spec.name.clone(),
                    expected: expected.into(),
                    found: col.kind().into(),
                });
            }
        }
        let id_col = columns[id_index]
            .as_categorical()
            .expect("id column kind checked above");
        let mut seen_ids = HashSet::with_capacity(n_rows);
        for (row, id) in id_col.iter().enumerate() {
            let id = id.as_deref().ok_or(Error::MissingId(row))?;
            if !seen_ids.insert(id) {
                return Err(Error::DuplicateId(id.to_string()));
            }
        }
        Ok(Self {
            schema,
            columns,
            id_index,
            n_rows,
        })
    }

    /// A zero-row dataset with the given schema.
    pub fn empty(schema: Vec<VariableSpec>) -> Result<Self> {
        let columns = schema
            .iter()
            .map(|s| {
                if s.is_numeric() {
                    Column::Interval(Vec::new())
                } else {
                    Column::Categorical(Vec::new())
                }
            })
            .collect();
        Self::new(schema, columns)
    }

    pub fn schema(&self) -> &[VariableSpec] {
        &self.schema
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.schema.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|s| s.name == name)
    }

    pub fn spec(&self, name: &str) -> Result<&VariableSpec> {
        self.index_of(name)
            .map(|i| &self.schema[i])
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.index_of(name)
            .map(|i| &self.columns[i])
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    /// Cells of an interval column.
    pub fn interval(&self, name: &str) -> Result<&[Option<f64>]> {
        let col = self.column(name)?;
        col.as_interval().ok_or_else(|| Error::LevelMismatch {
            column: name.to_string(),
            expected: "interval".into(),
            found: self
                .spec(name)
                .map(|s| s.level.to_string())
                .unwrap_or_default(),
        })
    }

    /// Cells of a non-interval column.
    pub fn categorical(&self, name: &str) -> Result<&[Option<String>]> {
        let col = self.column(name)?;
        col.as_categorical().ok_or_else(|| Error::LevelMismatch {
            column: name.to_string(),
            expected: "nominal, ordinal or binary".into(),
            found: "interval".into(),
        })
    }

    pub fn id_spec(&self) -> &VariableSpec {
        &self.schema[self.id_index]
    }

    pub fn id(&self, row: usize) -> &str {
        self.columns[self.id_index].as_categorical().unwrap()[row]
            .as_deref()
            .unwrap()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> + '_ {
        (0..self.n_rows).map(move |r| self.id(r))
    }

    /// Rows picked by index, in the given order.
    ///
    /// Panics if an index is out of range. Repeated indices would break id
    /// uniqueness and also panic.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let columns = self.columns.iter().map(|c| c.select(rows)).collect();
        Dataset::new(self.schema.clone(), columns).expect("row subset keeps table invariants")
    }

    pub fn missing_count(&self, name: &str) -> Result<usize> {
        Ok(self.column(name)?.missing_count())
    }
}

/// Result of an 80/20-style split.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub train: Dataset,
    pub validation: Dataset,
    pub seed: u64,
    pub train_fraction: f64,
}

fn parse_cell(spec: &VariableSpec, raw: &str) -> CellValue {
    let text = raw.trim();
    if MISSING_TOKENS.contains(&text) {
        return CellValue::Missing;
    }
    if spec.is_numeric() {
        match text.parse::<f64>() {
            Ok(x) if x.is_finite() => CellValue::Number(x),
            _ => CellValue::Missing,
        }
    } else {
        CellValue::Label(text.to_string())
    }
}

enum CellValue {
    Missing,
    Number(f64),
    Label(String),
}

/// Reads a comma-separated table with a header row.
///
/// Header columns not named by `schema` are ignored; cells that fail to
/// parse for their level become missing.
pub fn read_table<R: Read>(reader: R, schema: &[VariableSpec], context: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::csv(context, e))?.clone();
    let mut positions = Vec::with_capacity(schema.len());
    for spec in schema {
        let pos = header
            .iter()
            .position(|h| h.trim() == spec.name)
            .ok_or_else(|| Error::MissingHeaderColumn(spec.name.clone()))?;
        positions.push(pos);
    }
    let mut columns: Vec<Column> = schema
        .iter()
        .map(|s| {
            if s.is_numeric() {
                Column::Interval(Vec::new())
            } else {
                Column::Categorical(Vec::new())
            }
        })
        .collect();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::csv(context, e))?;
        for ((spec, &pos), col) in schema.iter().zip(&positions).zip(columns.iter_mut()) {
            let raw = record.get(pos).unwrap_or("");
            match (parse_cell(spec, raw), col) {
                (CellValue::Number(x), Column::Interval(v)) => v.push(Some(x)),
                (CellValue::Label(s), Column::Categorical(v)) => v.push(Some(s)),
                (CellValue::Missing, Column::Interval(v)) => v.push(None),
                (CellValue::Missing, Column::Categorical(v)) => v.push(None),
                _ => unreachable!("cell kind follows column kind"),
            }
        }
    }
    Dataset::new(schema.to_vec(), columns)
}

pub fn load_table(path: impl AsRef<Path>, schema: &[VariableSpec]) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_table(file, schema, &path.display().to_string())
}

pub fn write_table_to<W: Write>(writer: W, data: &Dataset) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let ctx = "output table";
    wtr.write_record(data.schema().iter().map(|s| s.name.as_str()))
        .map_err(|e| Error::csv(ctx, e))?;
    for row in 0..data.n_rows() {
        wtr.write_record(data.columns().iter().map(|c| c.cell_text(row)))
            .map_err(|e| Error::csv(ctx, e))?;
    }
    wtr.flush().map_err(|e| Error::io(ctx, e))?;
    Ok(())
}

pub fn write_table(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_table_to(std::io::BufWriter::new(file), data)
}

/// Parses a schema document: one `name,role,level` line per variable.
///
/// Blank lines, `#` comments and a literal `name,role,level` header are skipped.
pub fn parse_schema(text: &str) -> Result<Vec<VariableSpec>> {
    let mut specs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::Schema(format!(
                "line {}: expected `name,role,level`, got `{line}`",
                lineno + 1
            )));
        }
        if parts[0].eq_ignore_ascii_case("name") && parts[1].eq_ignore_ascii_case("role") {
            continue;
        }
        specs.push(VariableSpec::new(
            parts[0],
            parts[1].parse()?,
            parts[2].parse()?,
        ));
    }
    Ok(specs)
}

pub fn load_schema(path: impl AsRef<Path>) -> Result<Vec<VariableSpec>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_schema(&text)
}

pub fn format_schema(schema: &[VariableSpec]) -> String {
    let mut out = String::from("name,role,level\n");
    for s in schema {
        out.push_str(&format!("{},{},{}\n", s.name, s.role, s.level));
    }
    out
}

pub fn write_schema(path: impl AsRef<Path>, schema: &[VariableSpec]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_schema(schema)).map_err(|e| Error::io(path, e))
}

/// Inner join on the id variable. Left's columns come first, then right's
/// non-id columns; row order follows `left`.
pub fn merge_by_id(left: &Dataset, right: &Dataset) -> Result<Dataset> {
    let left_names: HashSet<&str> = left.schema().iter().map(|s| s.name.as_str()).collect();
    let right_cols: Vec<usize> = (0..right.n_cols())
        .filter(|&i| right.schema()[i].role != Role::Id)
        .collect();
    for &i in &right_cols {
        let name = &right.schema()[i].name;
        if left_names.contains(name.as_str()) {
            return Err(Error::ColumnCollision(name.clone()));
        }
    }

    let right_index: HashMap<&str, usize> =
        right.ids().enumerate().map(|(i, id)| (id, i)).collect();
    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = left
        .ids()
        .enumerate()
        .filter_map(|(l, id)| right_index.get(id).map(|&r| (l, r)))
        .unzip();

    let mut schema = left.schema().to_vec();
    let mut columns: Vec<Column> = left
        .columns()
        .iter()
        .map(|c| c.select(&left_rows))
        .collect();
    for &i in &right_cols {
        schema.push(right.schema()[i].clone());
        columns.push(right.columns()[i].select(&right_rows));
    }
    Dataset::new(schema, columns)
}

/// Number of training rows for a split: `round_half_up(fraction * n)`,
/// kept within `1..n` so neither side is empty.
pub fn train_size(n: usize, fraction: f64) -> usize {
    let raw = (fraction * n as f64 + 0.5).floor() as usize;
    raw.clamp(1, n.saturating_sub(1).max(1))
}

/// Seeded uniform split without replacement: shuffle row indices, take a prefix.
///
/// Each side keeps the source row order.
pub fn partition(data: &Dataset, train_fraction: f64, seed: u64) -> Result<Partition> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidFraction(train_fraction));
    }
    let n = data.n_rows();
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, got: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let n_train = train_size(n, train_fraction);
    let mut train_rows = order[..n_train].to_vec();
    let mut valid_rows = order[n_train..].to_vec();
    train_rows.sort_unstable();
    valid_rows.sort_unstable();
    Ok(Partition {
        train: data.select_rows(&train_rows),
        validation: data.select_rows(&valid_rows),
        seed,
        train_fraction,
    })
}

/// Rows with no missing cell in any of `columns`, in source order.
pub fn complete_cases(data: &Dataset, columns: &[&str]) -> Result<Dataset> {
    let cols: Vec<&Column> = columns
        .iter()
        .map(|name| data.column(name))
        .collect::<Result<_>>()?;
    let rows: Vec<usize> = (0..data.n_rows())
        .filter(|&r| cols.iter().all(|c| !c.is_missing(r)))
        .collect();
    Ok(data.select_rows(&rows))
}
