//! Seeded generator for assessment-shaped student and school tables plus the
//! credit records behind their scores.
//!
//! Each student gets a latent ability built from weighted survey variables,
//! a school effect and noise. Subject scores mix that ability with
//! correlated subject-specific noise and are mapped onto Beta marginals
//! matching the requested means and standard deviations. The latent
//! correlations are calibrated so the final scores hit the requested
//! Pearson correlations. Scores are then written out as item credits.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataio::{merge_by_id, Column, Dataset, Level, Role, VariableSpec};
use crate::error::{Error, Result};
use crate::scoring::{score_table, Credit, CreditRecord, Subject, AGGREGATE, STUDENT_ID};
use crate::special::{beta_quantile, normal_cdf};

pub const SCHOOL_ID: &str = "school_id";
/// Column in the school table holding its student count.
pub const SCHOOL_SIZE: &str = "n_students";

/// Eigenvalue floor of the nearest-PSD repair.
pub const PSD_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Linear,
    /// A single threshold: the effect only depends on which side of the
    /// variable's median the value falls.
    Step,
}

impl std::str::FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(Shape::Linear),
            "step" => Ok(Shape::Step),
            other => Err(Error::InvalidParam(format!("unknown shape `{other}`"))),
        }
    }
}

/// A generated survey variable and its effect on latent ability.
///
/// Every effect is scaled to unit variance, so `weight` is in ability
/// standard-deviation units before normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableBlueprint {
    pub name: String,
    pub level: Level,
    pub weight: f64,
    pub shape: Shape,
}

impl VariableBlueprint {
    pub fn new(name: &str, level: Level, weight: f64, shape: Shape) -> Self {
        Self {
            name: name.to_string(),
            level,
            weight,
            shape,
        }
    }

    fn parse(text: &str, line: usize) -> Result<Self> {
        let err = |message: String| Error::Config { line, message };
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if !(3..=4).contains(&parts.len()) || parts[0].is_empty() {
            return Err(err(format!(
                "expected `name,level,weight[,shape]`, got `{text}`"
            )));
        }
        let level = parts[1].parse().map_err(|e: Error| err(e.to_string()))?;
        let weight = parts[2]
            .parse()
            .map_err(|_| err(format!("weight `{}` is not a number", parts[2])))?;
        let shape = match parts.get(3) {
            Some(s) => s.parse().map_err(|e: Error| err(e.to_string()))?,
            None => Shape::Linear,
        };
        Ok(Self::new(parts[0], level, weight, shape))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Marginal {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_students: usize,
    pub n_schools: usize,
    pub seed: u64,
    pub items_per_subject: usize,
    /// Per-cell missing probability for survey variables.
    pub missing_rate: f64,
    /// Share of each subject's latent variance that comes from ability.
    pub ability_share: f64,
    /// Standard deviation of the unexplained part of ability.
    pub noise_sd: f64,
    /// Percent-scale targets in [`Subject::ALL`] order.
    pub marginals: [Marginal; 4],
    /// Target Pearson correlations between subject scores.
    pub correlations: [[f64; 4]; 4],
    pub student_vars: Vec<VariableBlueprint>,
    pub school_vars: Vec<VariableBlueprint>,
}

fn default_correlations() -> [[f64; 4]; 4] {
    // reading, maths, science, problem_solving
    [
        [1.0, 0.65, 0.75, 0.55],
        [0.65, 1.0, 0.75, 0.55],
        [0.75, 0.75, 1.0, 0.65],
        [0.55, 0.55, 0.65, 1.0],
    ]
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_students: 1000,
            n_schools: 50,
            seed: 0,
            items_per_subject: 20,
            missing_rate: 0.05,
            ability_share: 0.5,
            noise_sd: 1.0,
            marginals: [
                Marginal {
                    mean: 66.6,
                    sd: 20.0,
                },
                Marginal {
                    mean: 60.8,
                    sd: 22.1,
                },
                Marginal {
                    mean: 58.5,
                    sd: 21.6,
                },
                Marginal {
                    mean: 64.8,
                    sd: 16.2,
                },
            ],
            correlations: default_correlations(),
            student_vars: vec![
                VariableBlueprint::new("science_minutes", Level::Interval, 0.8, Shape::Step),
                VariableBlueprint::new("use_usb_at_school", Level::Binary, -0.6, Shape::Linear),
                VariableBlueprint::new("books_at_home", Level::Ordinal, 0.5, Shape::Linear),
                VariableBlueprint::new("home_language", Level::Nominal, 0.4, Shape::Linear),
                VariableBlueprint::new("shoe_size", Level::Interval, 0.0, Shape::Linear),
            ],
            school_vars: vec![
                VariableBlueprint::new("school_size", Level::Interval, 0.3, Shape::Linear),
                VariableBlueprint::new("school_type", Level::Nominal, 0.5, Shape::Linear),
            ],
        }
    }
}

fn subject_index(name: &str) -> Option<usize> {
    Subject::ALL.iter().position(|s| s.as_str() == name)
}

impl SynthSpec {
    /// Reads `key = value` lines over the defaults. Repeated `student_var`
    /// or `school_var` lines replace the default blueprint of that kind.
    pub fn parse_config(text: &str) -> Result<Self> {
        let mut spec = SynthSpec::default();
        let mut student_vars = None::<Vec<VariableBlueprint>>;
        let mut school_vars = None::<Vec<VariableBlueprint>>;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| Error::Config { line, message };
            let (key, value) = content
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(format!("expected `key = value`, got `{content}`")))?;
            let num = |v: &str| -> Result<f64> {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| err(format!("`{key}` needs a number, got `{v}`")))
            };
            let count = |v: &str| -> Result<usize> {
                v.parse::<usize>()
                    .map_err(|_| err(format!("`{key}` needs a non-negative integer, got `{v}`")))
            };
            match key {
                "n_students" => spec.n_students = count(value)?,
                "n_schools" => spec.n_schools = count(value)?,
                "seed" => {
                    spec.seed = value.parse().map_err(|_| {
                        err(format!("`seed` needs an unsigned integer, got `{value}`"))
                    })?
                }
                "items_per_subject" => spec.items_per_subject = count(value)?,
                "missing_rate" => spec.missing_rate = num(value)?,
                "ability_share" => spec.ability_share = num(value)?,
                "noise_sd" => spec.noise_sd = num(value)?,
                "student_var" => student_vars
                    .get_or_insert_with(Vec::new)
                    .push(VariableBlueprint::parse(value, line)?),
                "school_var" => school_vars
                    .get_or_insert_with(Vec::new)
                    .push(VariableBlueprint::parse(value, line)?),
                _ => {
                    let parts: Vec<&str> = key.split('.').collect();
                    match parts.as_slice() {
                        ["corr", a, b] => {
                            let (Some(a), Some(b)) = (subject_index(a), subject_index(b)) else {
                                return Err(err(format!("unknown subject pair in `{key}`")));
                            };
                            if a == b {
                                return Err(err(
                                    "a subject's self-correlation is fixed at 1".into()
                                ));
                            }
                            let r = num(value)?;
                            spec.correlations[a][b] = r;
                            spec.correlations[b][a] = r;
                        }
                        [s, "mean"] if subject_index(s).is_some() => {
                            spec.marginals[subject_index(s).unwrap()].mean = num(value)?
                        }
                        [s, "sd"] if subject_index(s).is_some() => {
                            spec.marginals[subject_index(s).unwrap()].sd = num(value)?
                        }
                        _ => return Err(err(format!("unknown key `{key}`"))),
                    }
                }
            }
        }
        if let Some(v) = student_vars {
            spec.student_vars = v;
        }
        if let Some(v) = school_vars {
            spec.school_vars = v;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn load_config(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_config(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParam(m));
        if self.items_per_subject == 0 {
            return bad("items_per_subject must be at least 1".into());
        }
        if self.n_students > 0 && self.n_schools == 0 {
            return bad("students need at least one school".into());
        }
        if !(0.0..1.0).contains(&self.missing_rate) {
            return bad(format!("missing_rate {} outside [0, 1)", self.missing_rate));
        }
        if !(0.0..1.0).contains(&self.ability_share) {
            return bad(format!(
                "ability_share {} outside [0, 1)",
                self.ability_share
            ));
        }
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return bad(format!("noise_sd {} must be non-negative", self.noise_sd));
        }
        for (s, m) in Subject::ALL.iter().zip(&self.marginals) {
            if !(m.mean > 0.0 && m.mean < 100.0 && m.sd > 0.0 && m.sd.is_finite()) {
                return bad(format!("{s}: mean must lie in (0, 100) and sd be positive"));
            }
        }
        let mut names: BTreeSet<&str> = [STUDENT_ID, SCHOOL_ID, SCHOOL_SIZE, AGGREGATE].into();
        names.extend(Subject::ALL.iter().map(|s| s.as_str()));
        for v in self.student_vars.iter().chain(&self.school_vars) {
            if !v.weight.is_finite() {
                return bad(format!("variable `{}` has a non-finite weight", v.name));
            }
            if !names.insert(&v.name) {
                return bad(format!(
                    "variable name `{}` is reserved or repeated",
                    v.name
                ));
            }
        }
        let total = self.effect_variance();
        if self.ability_share > 0.0 && total <= 0.0 {
            return bad("ability has zero variance; add noise_sd or weighted variables".into());
        }
        Ok(())
    }

    fn effect_variance(&self) -> f64 {
        self.student_vars
            .iter()
            .chain(&self.school_vars)
            .map(|v| v.weight * v.weight)
            .sum::<f64>()
            + self.noise_sd * self.noise_sd
    }

    pub fn students_schema(&self) -> Vec<VariableSpec> {
        let mut schema = vec![
            VariableSpec::new(STUDENT_ID, Role::Id, Level::Nominal),
            VariableSpec::new(SCHOOL_ID, Role::Ignored, Level::Nominal),
        ];
        schema.extend(
            self.student_vars
                .iter()
                .chain(&self.school_vars)
                .map(|v| VariableSpec::new(v.name.clone(), Role::Input, v.level)),
        );
        schema
    }

    pub fn schools_schema(&self) -> Vec<VariableSpec> {
        let mut schema = vec![VariableSpec::new(SCHOOL_ID, Role::Id, Level::Nominal)];
        schema.extend(
            self.school_vars
                .iter()
                .map(|v| VariableSpec::new(v.name.clone(), Role::Input, v.level)),
        );
        schema.push(VariableSpec::new(
            SCHOOL_SIZE,
            Role::Ignored,
            Level::Interval,
        ));
        schema.push(VariableSpec::new(AGGREGATE, Role::Target, Level::Interval));
        schema
    }
}

// ---------------------------------------------------------------------------
// variable draws

const ORDINAL_LEVELS: usize = 5;
const NOMINAL_LABELS: [&str; 4] = ["A", "B", "C", "D"];

/// Stable value in [-1, 1] for a (variable, level) pair, independent of the seed.
fn hashed_effect(name: &str, level: &str) -> f64 {
    let digest = Sha256::digest(format!("{name}\u{1f}{level}").as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    (u64::from_le_bytes(bytes) >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
}

/// Unit-variance, zero-mean effects of the equally likely nominal levels.
fn nominal_effects(name: &str) -> Vec<f64> {
    let raw: Vec<f64> = NOMINAL_LABELS
        .iter()
        .map(|l| hashed_effect(name, l))
        .collect();
    let k = raw.len() as f64;
    let mean = raw.iter().sum::<f64>() / k;
    let sd = (raw.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k).sqrt();
    raw.iter()
        .map(|v| if sd > 0.0 { (v - mean) / sd } else { 0.0 })
        .collect()
}

enum Cell {
    Number(f64),
    Label(String),
}

/// Draws one value and its unit-variance effect.
fn draw(v: &VariableBlueprint, rng: &mut ChaCha8Rng) -> (Cell, f64) {
    match v.level {
        Level::Interval => {
            let z: f64 = rng.sample(StandardNormal);
            let value = ((50.0 + 15.0 * z) * 100.0).round() / 100.0;
            let effect = match v.shape {
                Shape::Linear => z,
                Shape::Step => {
                    if z > 0.0 {
                        1.0
                    } else {
                        -1.0
                    }
                }
            };
            (Cell::Number(value), effect)
        }
        Level::Binary => {
            let yes = rng.random_bool(0.5);
            let label = if yes { "yes" } else { "no" };
            (Cell::Label(label.into()), if yes { 1.0 } else { -1.0 })
        }
        Level::Ordinal => {
            let k = rng.random_range(1..=ORDINAL_LEVELS);
            let effect = match v.shape {
                Shape::Linear => (k as f64 - 3.0) / 2f64.sqrt(),
                Shape::Step => {
                    let p = 0.4;
                    (f64::from(u8::from(k >= 4)) - p) / (p * (1.0 - p)).sqrt()
                }
            };
            (Cell::Label(k.to_string()), effect)
        }
        Level::Nominal => {
            let k = rng.random_range(0..NOMINAL_LABELS.len());
            (
                Cell::Label(NOMINAL_LABELS[k].into()),
                nominal_effects(&v.name)[k],
            )
        }
    }
}

fn cells_to_column(level: Level, cells: Vec<Option<Cell>>) -> Column {
    if level.is_interval() {
        Column::Interval(
            cells
                .into_iter()
                .map(|c| match c {
                    Some(Cell::Number(x)) => Some(x),
                    _ => None,
                })
                .collect(),
        )
    } else {
        Column::Categorical(
            cells
                .into_iter()
                .map(|c| match c {
                    Some(Cell::Label(s)) => Some(s),
                    _ => None,
                })
                .collect(),
        )
    }
}

// ---------------------------------------------------------------------------
// correlation structure

/// Eigenvalue-clipped projection onto the PSD cone, rescaled to unit diagonal.
pub fn nearest_psd_correlation(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::InfeasibleCorrelation("matrix is not square".into()));
    }
    for i in 0..n {
        for j in 0..n {
            let v = m[(i, j)];
            if !v.is_finite() || v.abs() > 1.0 {
                return Err(Error::InfeasibleCorrelation(format!(
                    "entry ({i}, {j}) = {v}"
                )));
            }
            if (v - m[(j, i)]).abs() > 1e-12 {
                return Err(Error::InfeasibleCorrelation(
                    "matrix is not symmetric".into(),
                ));
            }
        }
    }
    let eig = SymmetricEigen::new(m.clone());
    if eig.eigenvalues.iter().all(|&l| l >= PSD_FLOOR) {
        return Ok(m.clone());
    }
    let clipped = eig.eigenvalues.map(|l| l.max(PSD_FLOOR));
    let a = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    let d: Vec<f64> = (0..n).map(|i| a[(i, i)].sqrt()).collect();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            0.5 * (a[(i, j)] + a[(j, i)]) / (d[i] * d[j])
        }
    }))
}

/// Probabilists' Gauss-Hermite nodes and weights (weights sum to 1).
fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Monotone map from a standard normal latent to a score fraction in [0, 1].
#[derive(Debug, Clone)]
struct MarginalMap {
    table: Vec<f64>,
}

const GRID_LO: f64 = -7.0;
const GRID_STEP: f64 = 0.01;
const GRID_POINTS: usize = 1401;

impl MarginalMap {
    /// Beta distribution with the target moments, or a clamped normal when
    /// no Beta on [0, 1] has them.
    fn new(m: Marginal) -> Self {
        let mu = m.mean / 100.0;
        let var = (m.sd / 100.0).powi(2);
        let spread = mu * (1.0 - mu);
        let table = if var < spread {
            let total = spread / var - 1.0;
            let (a, b) = (mu * total, (1.0 - mu) * total);
            (0..GRID_POINTS)
                .map(|k| beta_quantile(normal_cdf(GRID_LO + k as f64 * GRID_STEP), a, b))
                .collect()
        } else {
            log::warn!(
                "no Beta marginal with mean {} and sd {}; clamping a normal",
                m.mean,
                m.sd
            );
            (0..GRID_POINTS)
                .map(|k| (mu + var.sqrt() * (GRID_LO + k as f64 * GRID_STEP)).clamp(0.0, 1.0))
                .collect()
        };
        Self { table }
    }

    fn apply(&self, z: f64) -> f64 {
        let t = (z - GRID_LO) / GRID_STEP;
        if t <= 0.0 {
            return self.table[0];
        }
        let last = GRID_POINTS - 1;
        if t >= last as f64 {
            return self.table[last];
        }
        let k = t.floor() as usize;
        let f = t - k as f64;
        self.table[k] + f * (self.table[k + 1] - self.table[k])
    }
}

/// Latent normal correlation that yields score correlation `target` under
/// the two marginal maps.
fn calibrate_pair(
    a: &MarginalMap,
    b: &MarginalMap,
    target: f64,
    nodes: &(Vec<f64>, Vec<f64>),
) -> f64 {
    let (x, w) = nodes;
    let moments = |m: &MarginalMap| {
        let mean: f64 = x.iter().zip(w).map(|(z, w)| w * m.apply(*z)).sum();
        let var: f64 = x
            .iter()
            .zip(w)
            .map(|(z, w)| w * (m.apply(*z) - mean).powi(2))
            .sum();
        (mean, var.sqrt())
    };
    let (ma, sa) = moments(a);
    let (mb, sb) = moments(b);
    let ta: Vec<f64> = x.iter().map(|z| a.apply(*z) - ma).collect();
    let corr = |rho: f64| {
        let c = (1.0 - rho * rho).sqrt();
        let mut acc = 0.0;
        for (i, u) in x.iter().enumerate() {
            for (j, v) in x.iter().enumerate() {
                acc += w[i] * w[j] * ta[i] * (b.apply(rho * u + c * v) - mb);
            }
        }
        acc / (sa * sb)
    };
    let (mut lo, mut hi) = (-0.9999, 0.9999);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if corr(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

struct SubjectModel {
    maps: Vec<MarginalMap>,
    /// Lower Cholesky factor of the subject-specific noise correlation.
    chol: DMatrix<f64>,
}

impl SubjectModel {
    fn new(spec: &SynthSpec) -> Result<Self> {
        let target = DMatrix::from_fn(4, 4, |i, j| spec.correlations[i][j]);
        let target = nearest_psd_correlation(&target)?;
        let maps: Vec<MarginalMap> = spec
            .marginals
            .iter()
            .map(|m| MarginalMap::new(*m))
            .collect();
        let nodes = gauss_hermite(40);
        let mut latent = DMatrix::identity(4, 4);
        for i in 0..4 {
            for j in i + 1..4 {
                let r = calibrate_pair(&maps[i], &maps[j], target[(i, j)], &nodes);
                latent[(i, j)] = r;
                latent[(j, i)] = r;
            }
        }
        let h = spec.ability_share;
        let residual = DMatrix::from_fn(4, 4, |i, j| {
            if i == j {
                1.0
            } else {
                ((latent[(i, j)] - h) / (1.0 - h)).clamp(-1.0, 1.0)
            }
        });
        let residual = nearest_psd_correlation(&residual)?;
        let chol = residual
            .clone()
            .cholesky()
            .or_else(|| (residual + DMatrix::identity(4, 4) * 1e-9).cholesky())
            .ok_or_else(|| {
                Error::InfeasibleCorrelation("residual correlation not factorable".into())
            })?;
        Ok(Self {
            maps,
            chol: chol.l(),
        })
    }
}

// ---------------------------------------------------------------------------
// generation

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub students: Dataset,
    pub schools: Dataset,
    pub credits: Vec<CreditRecord>,
}

impl SynthOutput {
    /// Student table joined with the scores computed from the credits.
    pub fn scored_students(&self) -> Result<Dataset> {
        if self.students.n_rows() == 0 {
            let mut schema = self.students.schema().to_vec();
            schema.extend(crate::scoring::score_schema().into_iter().skip(1));
            return Dataset::empty(schema);
        }
        merge_by_id(&self.students, &score_table(&self.credits)?)
    }
}

fn item_id(subject: Subject, k: usize) -> String {
    let prefix = match subject {
        Subject::Reading => "R",
        Subject::Maths => "M",
        Subject::Science => "S",
        Subject::ProblemSolving => "P",
    };
    format!("{prefix}{:02}", k + 1)
}

pub fn generate(spec: &SynthSpec) -> Result<SynthOutput> {
    spec.validate()?;
    let subjects = SubjectModel::new(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let miss = |rng: &mut ChaCha8Rng| rng.random::<f64>() < spec.missing_rate;

    // schools
    let mut school_cells: Vec<Vec<Option<Cell>>> =
        spec.school_vars.iter().map(|_| Vec::new()).collect();
    let mut school_effect = vec![0.0; spec.n_schools];
    let mut school_raw: Vec<Vec<(Cell, f64)>> = Vec::with_capacity(spec.n_schools);
    for effect in school_effect.iter_mut() {
        let draws: Vec<(Cell, f64)> = spec.school_vars.iter().map(|v| draw(v, &mut rng)).collect();
        *effect = spec
            .school_vars
            .iter()
            .zip(&draws)
            .map(|(v, d)| v.weight * d.1)
            .sum();
        school_raw.push(draws);
    }

    // students
    let scale = spec.effect_variance().sqrt();
    let h = spec.ability_share;
    let n = spec.n_students;
    let mut student_cells: Vec<Vec<Option<Cell>>> = spec
        .student_vars
        .iter()
        .map(|_| Vec::with_capacity(n))
        .collect();
    let mut school_of = Vec::with_capacity(n);
    let mut half_units: Vec<[usize; 4]> = Vec::with_capacity(n);
    let max_units = 2 * spec.items_per_subject;
    for _ in 0..n {
        let school = rng.random_range(0..spec.n_schools);
        school_of.push(school);
        let mut raw = school_effect[school];
        for (v, col) in spec.student_vars.iter().zip(student_cells.iter_mut()) {
            let (cell, effect) = draw(v, &mut rng);
            raw += v.weight * effect;
            col.push(Some(cell));
        }
        let noise: f64 = rng.sample(StandardNormal);
        raw += spec.noise_sd * noise;
        let ability = if scale > 0.0 { raw / scale } else { 0.0 };
        let e: Vec<f64> = (0..4).map(|_| rng.sample(StandardNormal)).collect();
        let mut units = [0usize; 4];
        for (s, unit) in units.iter_mut().enumerate() {
            let mixed: f64 = (0..=s).map(|k| subjects.chol[(s, k)] * e[k]).sum();
            let z = h.sqrt() * ability + (1.0 - h).sqrt() * mixed;
            let frac = subjects.maps[s].apply(z);
            *unit = ((frac * max_units as f64).round() as usize).min(max_units);
        }
        half_units.push(units);
    }
    // missingness after the ground truth so it never shifts scores
    for col in student_cells.iter_mut() {
        for cell in col.iter_mut() {
            if miss(&mut rng) {
                *cell = None;
            }
        }
    }
    for draws in school_raw {
        for (col, (cell, _)) in school_cells.iter_mut().zip(draws) {
            col.push(if miss(&mut rng) { None } else { Some(cell) });
        }
    }

    let student_ids: Vec<String> = (0..n).map(|i| format!("s{}_{i:05}", spec.seed)).collect();
    let school_ids: Vec<String> = (0..spec.n_schools)
        .map(|j| format!("sch{}_{j:03}", spec.seed))
        .collect();

    // credits: full credits then at most one partial, on shuffled items
    let mut credits = Vec::with_capacity(n * 4 * spec.items_per_subject);
    let mut order: Vec<usize> = (0..spec.items_per_subject).collect();
    for (id, units) in student_ids.iter().zip(&half_units) {
        for (s, subject) in Subject::ALL.iter().enumerate() {
            order.shuffle(&mut rng);
            let full = units[s] / 2;
            let partial = units[s] % 2;
            for (rank, &item) in order.iter().enumerate() {
                let credit = if rank < full {
                    Credit::Full
                } else if rank < full + partial {
                    Credit::Partial
                } else {
                    Credit::NoCredit
                };
                credits.push(CreditRecord::new(
                    id.clone(),
                    *subject,
                    item_id(*subject, item),
                    credit,
                ));
            }
        }
    }

    // student table: own variables, then the school's
    let mut columns = vec![
        Column::Categorical(student_ids.iter().cloned().map(Some).collect()),
        Column::Categorical(
            school_of
                .iter()
                .map(|&j| Some(school_ids[j].clone()))
                .collect(),
        ),
    ];
    for (v, cells) in spec.student_vars.iter().zip(student_cells) {
        columns.push(cells_to_column(v.level, cells));
    }
    for (k, v) in spec.school_vars.iter().enumerate() {
        let cells = school_of
            .iter()
            .map(|&j| {
                school_cells[k][j].as_ref().map(|c| match c {
                    Cell::Number(x) => Cell::Number(*x),
                    Cell::Label(s) => Cell::Label(s.clone()),
                })
            })
            .collect();
        columns.push(cells_to_column(v.level, cells));
    }
    let students = Dataset::new(spec.students_schema(), columns)?;

    // school table with the mean aggregate of its students
    let mut sums = vec![(0usize, 0usize); spec.n_schools];
    for (&j, units) in school_of.iter().zip(&half_units) {
        sums[j].0 += units.iter().sum::<usize>();
        sums[j].1 += 1;
    }
    let per_student = (4 * max_units) as f64;
    let mut columns = vec![Column::Categorical(
        school_ids.into_iter().map(Some).collect(),
    )];
    for (v, cells) in spec.school_vars.iter().zip(school_cells) {
        columns.push(cells_to_column(v.level, cells));
    }
    columns.push(Column::Interval(
        sums.iter().map(|s| Some(s.1 as f64)).collect(),
    ));
    columns.push(Column::Interval(
        sums.iter()
            .map(|&(u, c)| (c > 0).then(|| u as f64 / (per_student * c as f64) * 100.0))
            .collect(),
    ));
    let schools = Dataset::new(spec.schools_schema(), columns)?;

    Ok(SynthOutput {
        students,
        schools,
        credits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eda::pearson;

    #[test]
    fn empty_cohort_has_valid_schemas() {
        let spec = SynthSpec {
            n_students: 0,
            n_schools: 0,
            ..SynthSpec::default()
        };
        let out = generate(&spec).unwrap();
        assert_eq!(out.students.n_rows(), 0);
        assert_eq!(out.schools.n_rows(), 0);
        assert!(out.credits.is_empty());
        assert_eq!(out.students.schema(), spec.students_schema());
        assert_eq!(out.scored_students().unwrap().n_rows(), 0);
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = SynthSpec {
            n_students: 60,
            n_schools: 4,
            seed: 11,
            ..SynthSpec::default()
        };
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = SynthSpec { seed: 12, ..spec };
        assert_ne!(
            generate(&other).unwrap().credits,
            generate(&SynthSpec {
                seed: 11,
                ..other.clone()
            })
            .unwrap()
            .credits
        );
    }

    #[test]
    fn psd_repair() {
        let bad = DMatrix::from_row_slice(3, 3, &[1.0, 0.9, -0.9, 0.9, 1.0, 0.9, -0.9, 0.9, 1.0]);
        let fixed = nearest_psd_correlation(&bad).unwrap();
        let eig = SymmetricEigen::new(fixed.clone());
        assert!(eig.eigenvalues.iter().all(|&l| l > -1e-12));
        for i in 0..3 {
            assert!((fixed[(i, i)] - 1.0).abs() < 1e-15);
            for j in 0..3 {
                assert_eq!(fixed[(i, j)], fixed[(j, i)]);
            }
        }
        let out_of_range = DMatrix::from_row_slice(2, 2, &[1.0, 1.5, 1.5, 1.0]);
        assert!(matches!(
            nearest_psd_correlation(&out_of_range),
            Err(Error::InfeasibleCorrelation(_))
        ));
    }

    #[test]
    fn gauss_hermite_moments() {
        let (x, w) = gauss_hermite(20);
        let m = |p: i32| x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum::<f64>();
        assert!((m(0) - 1.0).abs() < 1e-12);
        assert!(m(1).abs() < 1e-12);
        assert!((m(2) - 1.0).abs() < 1e-12);
        assert!((m(4) - 3.0).abs() < 1e-10);
    }

    #[test]
    fn config_parsing() {
        let spec = SynthSpec::parse_config(
            "# cohort\nn_students = 12\nseed=4\nreading.mean = 70\ncorr.maths.reading = 0.72\n\
             student_var = grit, interval, 0.9, step\nstudent_var = club,binary,0.2\n",
        )
        .unwrap();
        assert_eq!(spec.n_students, 12);
        assert_eq!(spec.marginals[0].mean, 70.0);
        assert_eq!(spec.correlations[0][1], 0.72);
        assert_eq!(spec.correlations[1][0], 0.72);
        assert_eq!(spec.student_vars.len(), 2);
        assert_eq!(spec.student_vars[0].shape, Shape::Step);
        assert_eq!(spec.school_vars, SynthSpec::default().school_vars);
        for bad in [
            "oops",
            "n_students = -1",
            "colour = 3",
            "student_var = a,interval",
            "corr.reading.reading = 0.5",
        ] {
            assert!(
                matches!(
                    SynthSpec::parse_config(bad),
                    Err(Error::Config { line: 1, .. })
                ),
                "{bad}"
            );
        }
        assert!(SynthSpec::parse_config("missing_rate = 1.0").is_err());
    }

    #[test]
    fn credits_reproduce_scores_and_schools_average_students() {
        let spec = SynthSpec {
            n_students: 200,
            n_schools: 5,
            missing_rate: 0.0,
            seed: 3,
            ..SynthSpec::default()
        };
        let out = generate(&spec).unwrap();
        assert_eq!(out.credits.len(), 200 * 4 * 20);
        let scored = out.scored_students().unwrap();
        for s in Subject::ALL {
            let col = scored.interval(s.as_str()).unwrap();
            assert!(col
                .iter()
                .all(|v| v.is_some_and(|p| (0.0..=100.0).contains(&p))));
        }
        let agg = scored.interval(AGGREGATE).unwrap();
        let schools = out.schools.categorical(SCHOOL_ID).unwrap();
        let school_of = scored.categorical(SCHOOL_ID).unwrap();
        let school_agg = out.schools.interval(AGGREGATE).unwrap();
        for (j, id) in schools.iter().enumerate() {
            let mine: Vec<f64> = (0..scored.n_rows())
                .filter(|&i| school_of[i] == *id)
                .map(|i| agg[i].unwrap())
                .collect();
            let mean = mine.iter().sum::<f64>() / mine.len() as f64;
            assert!((school_agg[j].unwrap() - mean).abs() < 1e-9);
        }
    }

    #[test]
    fn requested_correlation_is_met() {
        let mut spec = SynthSpec {
            n_students: 5000,
            n_schools: 40,
            seed: 21,
            ..SynthSpec::default()
        };
        spec.correlations[0][1] = 0.72;
        spec.correlations[1][0] = 0.72;
        let scored = generate(&spec).unwrap().scored_students().unwrap();
        let r = pearson(&scored, "reading", "maths").unwrap().r;
        assert!((r - 0.72).abs() <= 0.04, "r = {r}");
    }
}
