//! CART-style regression tree.
//!
//! Splits maximize the drop in sum of squared errors. Interval variables
//! split on midpoints between sorted distinct values; nominal variables split
//! on level subsets found by ordering levels by mean target. Missing cells are
//! routed natively: during the search the node's missing rows are tried on
//! each side (acting like an extra level for categorical variables) and the
//! chosen side is recorded for prediction. When a node has no missing rows
//! the larger child takes them.
//!
//! After growth the tree is pruned along its cost-complexity sequence to the
//! subtree with the smallest validation ASE.

use serde::{Deserialize, Serialize};

use crate::dataio::{Column, Dataset, Level};
use crate::error::{Error, Result};
use crate::models::prepare::{input_variables, schema_fingerprint, target_rows};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    pub min_split_improvement: f64,
    pub prune: bool,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 6,
            min_leaf: 5,
            min_split_improvement: 1e-7,
            prune: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Left,
    Right,
}

impl Direction {
    fn flip(self) -> Self {
        match self {
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitRule {
    /// Present values `<= threshold` go left.
    Threshold { threshold: f64 },
    /// Levels seen at the node, by side (both sorted). Levels on neither
    /// list follow the missing-value route.
    Levels {
        left: Vec<String>,
        right: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    /// Index into [`TreeModel::features`].
    pub feature: usize,
    pub variable: String,
    pub rule: SplitRule,
    pub missing: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub depth: usize,
    /// Training rows reaching the node.
    pub n: usize,
    /// Mean training target of the node.
    pub prediction: f64,
    /// Training sum of squared errors around `prediction`.
    pub sse: f64,
    /// Drop in weighted variance from splitting: (sse - children sse) / n.
    pub variance_reduction: f64,
    pub split: Option<Split>,
    pub children: Option<[usize; 2]>,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeFeature {
    pub name: String,
    pub level: Level,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub target: String,
    pub features: Vec<TreeFeature>,
    /// Preorder arena; node 0 is the root.
    pub nodes: Vec<TreeNode>,
    pub params: TreeParams,
}

// ---------------------------------------------------------------------------
// training view

enum FeatureCells<'a> {
    Numeric(&'a [Option<f64>]),
    Categorical {
        codes: Vec<Option<u32>>,
        levels: Vec<String>,
    },
}

struct TrainingView<'a> {
    features: Vec<FeatureCells<'a>>,
    /// Target by source row; only rows listed at the root are read.
    y: Vec<f64>,
}

impl<'a> TrainingView<'a> {
    fn new(
        data: &'a Dataset,
        names: &[TreeFeature],
        target_rows: &[usize],
        target: &[f64],
    ) -> Result<Self> {
        let mut features = Vec::with_capacity(names.len());
        for f in names {
            match data.column(&f.name)? {
                Column::Interval(cells) => features.push(FeatureCells::Numeric(cells)),
                Column::Categorical(cells) => {
                    let mut levels: Vec<String> = target_rows
                        .iter()
                        .filter_map(|&r| cells[r].clone())
                        .collect();
                    levels.sort();
                    levels.dedup();
                    let codes = cells
                        .iter()
                        .map(|c| {
                            c.as_ref()
                                .and_then(|s| levels.binary_search(s).ok())
                                .map(|k| k as u32)
                        })
                        .collect();
                    features.push(FeatureCells::Categorical { codes, levels });
                }
            }
        }
        let mut y = vec![0.0; data.n_rows()];
        for (&r, &v) in target_rows.iter().zip(target) {
            y[r] = v;
        }
        Ok(Self { features, y })
    }
}

#[derive(Debug, Clone)]
enum CandidateRule {
    Threshold(f64),
    Levels { left: Vec<u32>, right: Vec<u32> },
}

#[derive(Debug, Clone)]
struct Candidate {
    feature: usize,
    rule: CandidateRule,
    missing: Direction,
    gain: f64,
}

fn split_gain(sum_left: f64, n_left: usize, sum_total: f64, n_total: usize) -> f64 {
    let n_right = n_total - n_left;
    let sum_right = sum_total - sum_left;
    sum_left * sum_left / n_left as f64 + sum_right * sum_right / n_right as f64
        - sum_total * sum_total / n_total as f64
}

/// Gains within this relative margin count as ties, which keep the earlier
/// candidate (feature order, then threshold or prefix order).
const TIE_MARGIN: f64 = 1e-10;

fn beats(gain: f64, best: Option<f64>) -> bool {
    best.is_none_or(|b| gain > b + TIE_MARGIN * b.abs())
}

fn larger_side(n_left: usize, n_right: usize) -> Direction {
    if n_left >= n_right {
        Direction::Left
    } else {
        Direction::Right
    }
}

struct Searcher<'v, 'a> {
    view: &'v TrainingView<'a>,
    min_leaf: usize,
}

impl Searcher<'_, '_> {
    /// Best split of `rows`, or `None` when no admissible split has positive gain.
    fn best(&self, rows: &[usize]) -> Option<Candidate> {
        let n = rows.len();
        let mean = rows.iter().map(|&r| self.view.y[r]).sum::<f64>() / n as f64;
        let mut best: Option<Candidate> = None;
        for (f, cells) in self.view.features.iter().enumerate() {
            let cand = match cells {
                FeatureCells::Numeric(x) => self.numeric(f, x, rows, mean),
                FeatureCells::Categorical { codes, .. } => self.categorical(f, codes, rows, mean),
            };
            if let Some(c) = cand {
                if beats(c.gain, best.as_ref().map(|b| b.gain)) {
                    best = Some(c);
                }
            }
        }
        best.filter(|b| b.gain > 0.0)
    }

    fn admissible(&self, n_left: usize, n_total: usize) -> bool {
        n_left >= self.min_leaf
            && n_total - n_left >= self.min_leaf
            && n_left > 0
            && n_left < n_total
    }

    fn numeric(&self, f: usize, x: &[Option<f64>], rows: &[usize], mean: f64) -> Option<Candidate> {
        let n = rows.len();
        let mut present: Vec<(f64, f64)> = Vec::with_capacity(n);
        let (mut miss_sum, mut miss_n) = (0.0, 0usize);
        for &r in rows {
            let yc = self.view.y[r] - mean;
            match x[r] {
                Some(v) => present.push((v, yc)),
                None => {
                    miss_sum += yc;
                    miss_n += 1;
                }
            }
        }
        present.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = present.iter().map(|p| p.1).sum::<f64>() + miss_sum;
        let mut best: Option<Candidate> = None;
        let mut cum = 0.0;
        for i in 0..present.len().saturating_sub(1) {
            cum += present[i].1;
            let (lo, hi) = (present[i].0, present[i + 1].0);
            if lo == hi {
                continue;
            }
            let mut threshold = 0.5 * (lo + hi);
            if threshold >= hi {
                threshold = lo;
            }
            let n_below = i + 1;
            let options: &[Direction] = if miss_n == 0 {
                &[Direction::Left]
            } else {
                &[Direction::Left, Direction::Right]
            };
            for &dir in options {
                let (n_left, s_left) = match dir {
                    Direction::Left if miss_n > 0 => (n_below + miss_n, cum + miss_sum),
                    _ => (n_below, cum),
                };
                if !self.admissible(n_left, n) {
                    continue;
                }
                let gain = split_gain(s_left, n_left, total, n);
                let missing = if miss_n == 0 {
                    larger_side(n_left, n - n_left)
                } else {
                    dir
                };
                if beats(gain, best.as_ref().map(|b| b.gain)) {
                    best = Some(Candidate {
                        feature: f,
                        rule: CandidateRule::Threshold(threshold),
                        missing,
                        gain,
                    });
                }
            }
        }
        best
    }

    fn categorical(
        &self,
        f: usize,
        codes: &[Option<u32>],
        rows: &[usize],
        mean: f64,
    ) -> Option<Candidate> {
        let n = rows.len();
        // groups: Some(code) per level, None for the missing rows
        let mut stats: Vec<(Option<u32>, f64, usize)> = Vec::new();
        {
            let mut by_code: std::collections::BTreeMap<Option<u32>, (f64, usize)> =
                Default::default();
            for &r in rows {
                let e = by_code.entry(codes[r]).or_default();
                e.0 += self.view.y[r] - mean;
                e.1 += 1;
            }
            // BTreeMap orders None first; keep levels first and missing last.
            let missing = by_code.remove(&None);
            stats.extend(by_code.into_iter().map(|(k, (s, c))| (k, s, c)));
            if let Some((s, c)) = missing {
                stats.push((None, s, c));
            }
        }
        if stats.len() < 2 {
            return None;
        }
        let total: f64 = stats.iter().map(|g| g.1).sum();
        let key = |g: &(Option<u32>, f64, usize)| g.0.unwrap_or(u32::MAX);
        stats.sort_by(|a, b| {
            let ma = a.1 / a.2 as f64;
            let mb = b.1 / b.2 as f64;
            ma.total_cmp(&mb).then_with(|| key(a).cmp(&key(b)))
        });
        let mut best: Option<(usize, f64)> = None;
        let (mut cum, mut cum_n) = (0.0, 0usize);
        for (k, group) in stats.iter().enumerate().take(stats.len() - 1) {
            cum += group.1;
            cum_n += group.2;
            if !self.admissible(cum_n, n) {
                continue;
            }
            let gain = split_gain(cum, cum_n, total, n);
            if beats(gain, best.map(|b| b.1)) {
                best = Some((k, gain));
            }
        }
        let (k, gain) = best?;
        let side_n: usize = stats[..=k].iter().map(|g| g.2).sum();
        let (rule, missing) = canonical_levels(
            stats[..=k].iter().map(|g| g.0),
            stats[k + 1..].iter().map(|g| g.0),
            side_n,
            n - side_n,
        );
        Some(Candidate {
            feature: f,
            rule,
            missing,
            gain,
        })
    }
}

/// Orders a two-sided level partition so the left side holds the smallest
/// level code; the missing pseudo-level (`None`) fixes the missing route, or
/// the larger side takes it when the node had no missing rows.
fn canonical_levels(
    left: impl Iterator<Item = Option<u32>>,
    right: impl Iterator<Item = Option<u32>>,
    n_left: usize,
    n_right: usize,
) -> (CandidateRule, Direction) {
    let mut missing = None;
    let mut l = Vec::new();
    let mut r = Vec::new();
    for c in left {
        match c {
            Some(c) => l.push(c),
            None => missing = Some(Direction::Left),
        }
    }
    for c in right {
        match c {
            Some(c) => r.push(c),
            None => missing = Some(Direction::Right),
        }
    }
    l.sort_unstable();
    r.sort_unstable();
    let swap = match (l.first(), r.first()) {
        (Some(a), Some(b)) => b < a,
        (None, Some(_)) => true,
        _ => false,
    };
    let (mut n_left, mut n_right) = (n_left, n_right);
    if swap {
        std::mem::swap(&mut l, &mut r);
        std::mem::swap(&mut n_left, &mut n_right);
        missing = missing.map(Direction::flip);
    }
    let missing = missing.unwrap_or_else(|| larger_side(n_left, n_right));
    (CandidateRule::Levels { left: l, right: r }, missing)
}

fn candidate_to_split(c: &Candidate, view: &TrainingView, features: &[TreeFeature]) -> Split {
    let rule = match (&c.rule, &view.features[c.feature]) {
        (CandidateRule::Threshold(t), _) => SplitRule::Threshold { threshold: *t },
        (CandidateRule::Levels { left, right }, FeatureCells::Categorical { levels, .. }) => {
            SplitRule::Levels {
                left: left.iter().map(|&k| levels[k as usize].clone()).collect(),
                right: right.iter().map(|&k| levels[k as usize].clone()).collect(),
            }
        }
        _ => unreachable!("level rule on numeric feature"),
    };
    Split {
        feature: c.feature,
        variable: features[c.feature].name.clone(),
        rule,
        missing: c.missing,
    }
}

fn route_training_row(c: &Candidate, view: &TrainingView, row: usize) -> Direction {
    match (&c.rule, &view.features[c.feature]) {
        (CandidateRule::Threshold(t), FeatureCells::Numeric(x)) => match x[row] {
            Some(v) if v <= *t => Direction::Left,
            Some(_) => Direction::Right,
            None => c.missing,
        },
        (CandidateRule::Levels { left, right }, FeatureCells::Categorical { codes, .. }) => {
            match codes[row] {
                Some(k) if left.binary_search(&k).is_ok() => Direction::Left,
                Some(k) if right.binary_search(&k).is_ok() => Direction::Right,
                _ => c.missing,
            }
        }
        _ => unreachable!("rule kind follows feature kind"),
    }
}

struct Grower<'v, 'a> {
    view: &'v TrainingView<'a>,
    features: &'v [TreeFeature],
    params: &'v TreeParams,
    nodes: Vec<TreeNode>,
}

impl Grower<'_, '_> {
    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let n = rows.len();
        let mean = rows.iter().map(|&r| self.view.y[r]).sum::<f64>() / n as f64;
        let sse: f64 = rows.iter().map(|&r| (self.view.y[r] - mean).powi(2)).sum();
        let id = self.nodes.len();
        self.nodes.push(TreeNode {
            depth,
            n,
            prediction: mean,
            sse,
            variance_reduction: 0.0,
            split: None,
            children: None,
        });
        if depth >= self.params.max_depth || n < 2 * self.params.min_leaf.max(1) || sse <= 0.0 {
            return id;
        }
        let searcher = Searcher {
            view: self.view,
            min_leaf: self.params.min_leaf.max(1),
        };
        let Some(best) = searcher.best(&rows) else {
            return id;
        };
        let improvement = best.gain / n as f64;
        if improvement < self.params.min_split_improvement {
            return id;
        }
        let (left, right): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| route_training_row(&best, self.view, r) == Direction::Left);
        let split = candidate_to_split(&best, self.view, self.features);
        let l = self.grow(left, depth + 1);
        let r = self.grow(right, depth + 1);
        let node = &mut self.nodes[id];
        node.variance_reduction = improvement;
        node.split = Some(split);
        node.children = Some([l, r]);
        id
    }
}

// ---------------------------------------------------------------------------
// prediction

enum BoundCells<'a> {
    Numeric(&'a [Option<f64>]),
    Categorical(&'a [Option<String>]),
}

/// Columns of a dataset resolved against the model's feature list.
struct Bound<'a> {
    cells: Vec<Option<BoundCells<'a>>>,
}

impl TreeModel {
    fn bind<'a>(&self, data: &'a Dataset) -> Result<Bound<'a>> {
        let mut used = vec![false; self.features.len()];
        for node in &self.nodes {
            if let Some(s) = &node.split {
                used[s.feature] = true;
            }
        }
        let absent: Vec<String> = self
            .features
            .iter()
            .zip(&used)
            .filter(|(f, u)| **u && data.index_of(&f.name).is_none())
            .map(|(f, _)| f.name.clone())
            .collect();
        if !absent.is_empty() {
            return Err(Error::SchemaMismatch(absent));
        }
        let mut cells = Vec::with_capacity(self.features.len());
        for (f, &u) in self.features.iter().zip(&used) {
            if !u {
                cells.push(None);
                continue;
            }
            cells.push(Some(if f.level.is_interval() {
                BoundCells::Numeric(data.interval(&f.name)?)
            } else {
                BoundCells::Categorical(data.categorical(&f.name)?)
            }));
        }
        Ok(Bound { cells })
    }

    fn route(split: &Split, bound: &Bound, row: usize) -> Direction {
        match (
            &split.rule,
            bound.cells[split.feature]
                .as_ref()
                .expect("bound split feature"),
        ) {
            (SplitRule::Threshold { threshold }, BoundCells::Numeric(x)) => match x[row] {
                Some(v) if v <= *threshold => Direction::Left,
                Some(_) => Direction::Right,
                None => split.missing,
            },
            (SplitRule::Levels { left, right }, BoundCells::Categorical(x)) => match &x[row] {
                Some(s) if left.binary_search(s).is_ok() => Direction::Left,
                Some(s) if right.binary_search(s).is_ok() => Direction::Right,
                _ => split.missing,
            },
            _ => unreachable!("bind checks levels"),
        }
    }

    /// Node where `row` stops; `collapsed` marks internal nodes treated as leaves.
    fn terminal(&self, bound: &Bound, row: usize, collapsed: Option<&[bool]>) -> usize {
        let mut id = 0;
        loop {
            let node = &self.nodes[id];
            let stop = collapsed.is_some_and(|c| c[id]);
            match (&node.split, node.children) {
                (Some(split), Some([l, r])) if !stop => {
                    id = match Self::route(split, bound, row) {
                        Direction::Left => l,
                        Direction::Right => r,
                    };
                }
                _ => return id,
            }
        }
    }

    pub fn predict(&self, data: &Dataset) -> Result<Vec<f64>> {
        let bound = self.bind(data)?;
        Ok((0..data.n_rows())
            .map(|r| self.nodes[self.terminal(&bound, r, None)].prediction)
            .collect())
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn root_split(&self) -> Option<&Split> {
        self.nodes[0].split.as_ref()
    }

    pub fn fingerprint(&self) -> String {
        schema_fingerprint(
            &self.target,
            self.features.iter().map(|f| (f.name.as_str(), f.level)),
        )
    }

    /// Leaf rows sum of squared errors and leaf count of each subtree under a
    /// collapse mask, indexed by node.
    fn subtree_stats(&self, collapsed: &[bool]) -> Vec<(f64, usize)> {
        let mut out = vec![(0.0, 0); self.nodes.len()];
        // preorder arena: children always have larger ids
        for id in (0..self.nodes.len()).rev() {
            let node = &self.nodes[id];
            out[id] = match node.children {
                Some([l, r]) if !collapsed[id] => (out[l].0 + out[r].0, out[l].1 + out[r].1),
                _ => (node.sse, 1),
            };
        }
        out
    }

    fn reachable_internal(&self, collapsed: &[bool]) -> Vec<usize> {
        let mut stack = vec![0];
        let mut out = Vec::new();
        while let Some(id) = stack.pop() {
            if let Some([l, r]) = self.nodes[id].children {
                if !collapsed[id] {
                    out.push(id);
                    stack.push(r);
                    stack.push(l);
                }
            }
        }
        out
    }

    /// Collapse masks of the weakest-link (cost-complexity) sequence, from
    /// the full tree down to the root alone.
    fn pruning_sequence(&self) -> Vec<Vec<bool>> {
        let mut collapsed = vec![false; self.nodes.len()];
        let mut seq = vec![collapsed.clone()];
        loop {
            let internal = self.reachable_internal(&collapsed);
            if internal.is_empty() {
                break;
            }
            let stats = self.subtree_stats(&collapsed);
            let link = |id: usize| {
                let (r_sub, leaves) = stats[id];
                (self.nodes[id].sse - r_sub) / (leaves - 1) as f64
            };
            let alpha = internal
                .iter()
                .map(|&id| link(id))
                .fold(f64::INFINITY, f64::min);
            let tol = 1e-12 * alpha.abs().max(1e-12);
            for &id in &internal {
                if link(id) <= alpha + tol {
                    collapsed[id] = true;
                }
            }
            seq.push(collapsed.clone());
        }
        seq
    }

    /// Copy of the tree with masked internal nodes turned into leaves.
    fn materialize(&self, collapsed: &[bool]) -> TreeModel {
        fn copy(src: &TreeModel, collapsed: &[bool], id: usize, out: &mut Vec<TreeNode>) -> usize {
            let node = &src.nodes[id];
            let new_id = out.len();
            out.push(TreeNode {
                split: None,
                children: None,
                variance_reduction: 0.0,
                ..node.clone()
            });
            if let (Some([l, r]), false) = (node.children, collapsed[id]) {
                let nl = copy(src, collapsed, l, out);
                let nr = copy(src, collapsed, r, out);
                out[new_id].children = Some([nl, nr]);
                out[new_id].split = node.split.clone();
                out[new_id].variance_reduction = node.variance_reduction;
            }
            new_id
        }
        let mut nodes = Vec::with_capacity(self.nodes.len());
        copy(self, collapsed, 0, &mut nodes);
        TreeModel {
            nodes,
            ..self.clone()
        }
    }

    fn ase_under(&self, bound: &Bound, rows: &[usize], y: &[f64], collapsed: &[bool]) -> f64 {
        let sse: f64 = rows
            .iter()
            .zip(y)
            .map(|(&r, v)| {
                (self.nodes[self.terminal(bound, r, Some(collapsed))].prediction - v).powi(2)
            })
            .sum();
        sse / rows.len() as f64
    }

    /// Prunes to the member of the cost-complexity sequence with the lowest
    /// ASE on `valid`; ties go to the smaller tree.
    pub fn prune_on(&self, valid: &Dataset) -> Result<TreeModel> {
        let (rows, y) = target_rows(valid, &self.target)?;
        if rows.is_empty() {
            return Ok(self.clone());
        }
        let bound = self.bind(valid)?;
        let seq = self.pruning_sequence();
        let mut best = (f64::INFINITY, 0);
        for (i, mask) in seq.iter().enumerate() {
            let ase = self.ase_under(&bound, &rows, &y, mask);
            if ase <= best.0 {
                best = (ase, i);
            }
        }
        Ok(self.materialize(&seq[best.1]))
    }
}

/// Grows a tree on `train` and, when `params.prune` is set, prunes it on `valid`.
pub fn train_tree(
    train: &Dataset,
    valid: &Dataset,
    target: &str,
    params: &TreeParams,
) -> Result<TreeModel> {
    let full = grow_tree(train, target, params)?;
    if params.prune {
        full.prune_on(valid)
    } else {
        Ok(full)
    }
}

/// Grows the unpruned tree.
pub fn grow_tree(train: &Dataset, target: &str, params: &TreeParams) -> Result<TreeModel> {
    if train.n_rows() == 0 {
        return Err(Error::TooFewRows { needed: 1, got: 0 });
    }
    if params.max_depth == 0 && params.min_leaf == 0 {
        return Err(Error::InvalidParam("min_leaf must be at least 1".into()));
    }
    let (rows, y) = target_rows(train, target)?;
    if rows.is_empty() {
        return Err(Error::TargetAllMissing(target.to_string()));
    }
    let features: Vec<TreeFeature> = input_variables(train, target)
        .into_iter()
        .map(|s| TreeFeature {
            name: s.name.clone(),
            level: s.level,
        })
        .collect();
    let view = TrainingView::new(train, &features, &rows, &y)?;
    let mut grower = Grower {
        view: &view,
        features: &features,
        params,
        nodes: Vec::new(),
    };
    grower.grow(rows, 0);
    let nodes = grower.nodes;
    Ok(TreeModel {
        target: target.to_string(),
        features,
        nodes,
        params: params.clone(),
    })
}

pub fn predict_tree(model: &TreeModel, data: &Dataset) -> Result<Vec<f64>> {
    model.predict(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{Role, VariableSpec};

    pub(crate) fn table(x: &[Option<f64>], g: &[Option<&str>], y: &[Option<f64>]) -> Dataset {
        let n = y.len();
        let schema = vec![
            VariableSpec::new("id", Role::Id, Level::Nominal),
            VariableSpec::new("x", Role::Input, Level::Interval),
            VariableSpec::new("g", Role::Input, Level::Nominal),
            VariableSpec::new("y", Role::Target, Level::Interval),
        ];
        let g: Vec<Option<String>> = if g.is_empty() {
            vec![Some("a".into()); n]
        } else {
            g.iter().map(|s| s.map(str::to_string)).collect()
        };
        Dataset::new(
            schema,
            vec![
                Column::Categorical((0..n).map(|i| Some(format!("r{i}"))).collect()),
                Column::Interval(x.to_vec()),
                Column::Categorical(g),
                Column::Interval(y.to_vec()),
            ],
        )
        .unwrap()
    }

    fn some(v: &[f64]) -> Vec<Option<f64>> {
        v.iter().copied().map(Some).collect()
    }

    fn params(max_depth: usize, min_leaf: usize, prune: bool) -> TreeParams {
        TreeParams {
            max_depth,
            min_leaf,
            min_split_improvement: 1e-7,
            prune,
        }
    }

    #[test]
    fn constant_target_single_leaf() {
        let d = table(&some(&[1.0, 2.0, 3.0, 4.0]), &[], &some(&[7.0; 4]));
        let t = train_tree(&d, &d, "y", &TreeParams::default()).unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.predict(&d).unwrap(), vec![7.0; 4]);
    }

    #[test]
    fn step_function_splits_at_five_and_a_half() {
        let xs: Vec<f64> = (1..=10).map(f64::from).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x| if x > 5.0 { 10.0 } else { 0.0 })
            .collect();
        let d = table(&some(&xs), &[], &some(&ys));
        let t = grow_tree(&d, "y", &params(6, 1, false)).unwrap();
        let root = t.root_split().unwrap();
        assert_eq!(root.variable, "x");
        assert_eq!(root.rule, SplitRule::Threshold { threshold: 5.5 });
        let [l, r] = t.nodes[0].children.unwrap();
        assert_eq!(t.nodes[l].sse, 0.0);
        assert_eq!(t.nodes[r].sse, 0.0);
        assert_eq!(t.nodes.len(), 3);
        assert_eq!(t.predict(&d).unwrap(), ys);
    }

    #[test]
    fn memorizes_separable_rows() {
        let xs: Vec<f64> = (0..40).map(|i| (i * 37 % 40) as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (x * 0.7).sin() * 20.0 + 50.0).collect();
        let d = table(&some(&xs), &[], &some(&ys));
        let t = grow_tree(&d, "y", &params(64, 1, false)).unwrap();
        let p = t.predict(&d).unwrap();
        for (a, b) in p.iter().zip(&ys) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn missing_routing_recorded_and_followed() {
        // missing rows behave like the high group, so they should ride right
        let x = [
            Some(1.0),
            Some(2.0),
            Some(3.0),
            Some(10.0),
            Some(11.0),
            None,
            None,
        ];
        let y = some(&[0.0, 0.0, 0.0, 9.0, 9.0, 9.0, 9.0]);
        let d = table(&x, &[], &y);
        let t = grow_tree(&d, "y", &params(1, 1, false)).unwrap();
        let s = t.root_split().unwrap();
        assert_eq!(s.missing, Direction::Right);
        let probe = table(&[None], &[], &[None]);
        assert_eq!(t.predict(&probe).unwrap(), vec![9.0]);
    }

    #[test]
    fn no_missing_routes_to_larger_child() {
        let x = some(&[1.0, 2.0, 3.0, 4.0, 10.0]);
        let y = some(&[0.0, 0.0, 0.0, 0.0, 10.0]);
        let t = grow_tree(&table(&x, &[], &y), "y", &params(1, 1, false)).unwrap();
        assert_eq!(t.root_split().unwrap().missing, Direction::Left);
        let probe = table(&[None], &[], &[None]);
        assert_eq!(t.predict(&probe).unwrap(), vec![0.0]);
    }

    #[test]
    fn nominal_subset_split() {
        let g = [
            Some("a"),
            Some("b"),
            Some("c"),
            Some("a"),
            Some("b"),
            Some("c"),
        ];
        let y = some(&[1.0, 10.0, 1.0, 1.0, 10.0, 1.0]);
        let x = some(&[0.0; 6]);
        let t = grow_tree(&table(&x, &g, &y), "y", &params(1, 1, false)).unwrap();
        let s = t.root_split().unwrap();
        assert_eq!(s.variable, "g");
        assert_eq!(
            s.rule,
            SplitRule::Levels {
                left: vec!["a".into(), "c".into()],
                right: vec!["b".into()]
            }
        );
        // unseen level follows the missing route (larger child = left)
        let probe = table(&[Some(0.0)], &[Some("zzz")], &[None]);
        assert_eq!(t.predict(&probe).unwrap(), vec![1.0]);
    }

    #[test]
    fn min_leaf_and_depth_respected() {
        let xs: Vec<f64> = (0..30).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let t = grow_tree(
            &table(&some(&xs), &[], &some(&ys)),
            "y",
            &params(3, 4, false),
        )
        .unwrap();
        assert!(t.nodes.iter().all(|n| n.n >= 4 && n.depth <= 3));
        for node in &t.nodes {
            if let Some([l, r]) = node.children {
                assert_eq!(t.nodes[l].n + t.nodes[r].n, node.n);
                assert!(t.nodes[l].sse + t.nodes[r].sse <= node.sse + 1e-9);
            }
        }
    }

    #[test]
    fn pruning_never_hurts_validation() {
        let xs: Vec<f64> = (0..60).map(|i| i as f64).collect();
        let noise = |i: usize| ((i * 7919) % 13) as f64 - 6.0;
        let ys: Vec<f64> = (0..60)
            .map(|i| if i < 30 { 0.0 } else { 20.0 } + noise(i))
            .collect();
        let train = table(&some(&xs), &[], &some(&ys));
        let vy: Vec<f64> = (0..60)
            .map(|i| if i < 30 { 0.0 } else { 20.0 } + noise(i + 3))
            .collect();
        let valid = table(&some(&xs), &[], &some(&vy));
        let full = grow_tree(&train, "y", &params(6, 2, false)).unwrap();
        let pruned = full.prune_on(&valid).unwrap();
        let ase = |m: &TreeModel| {
            m.predict(&valid)
                .unwrap()
                .iter()
                .zip(&vy)
                .map(|(p, v)| (p - v).powi(2))
                .sum::<f64>()
                / 60.0
        };
        assert!(ase(&pruned) <= ase(&full));
        assert!(pruned.n_leaves() < full.n_leaves());
    }

    #[test]
    fn pruning_sequence_ends_at_root() {
        let xs: Vec<f64> = (0..20).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (x / 3.0).floor()).collect();
        let t = grow_tree(
            &table(&some(&xs), &[], &some(&ys)),
            "y",
            &params(5, 1, false),
        )
        .unwrap();
        let seq = t.pruning_sequence();
        assert!(seq[0].iter().all(|c| !c));
        assert_eq!(t.materialize(seq.last().unwrap()).nodes.len(), 1);
        let sizes: Vec<usize> = seq.iter().map(|m| t.materialize(m).n_leaves()).collect();
        assert!(sizes.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn predict_requires_split_variables() {
        let xs: Vec<f64> = (1..=10).map(f64::from).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x| if x > 5.0 { 10.0 } else { 0.0 })
            .collect();
        let t = grow_tree(
            &table(&some(&xs), &[], &some(&ys)),
            "y",
            &params(2, 1, false),
        )
        .unwrap();
        let schema = vec![VariableSpec::new("id", Role::Id, Level::Nominal)];
        let d = Dataset::new(schema, vec![Column::Categorical(vec![Some("q".into())])]).unwrap();
        assert!(matches!(t.predict(&d), Err(Error::SchemaMismatch(v)) if v == ["x"]));
    }

    #[test]
    fn errors() {
        let empty = table(&[], &[], &[]);
        assert!(train_tree(&empty, &empty, "y", &TreeParams::default()).is_err());
        let d = table(&some(&[1.0]), &[], &[None]);
        assert!(matches!(
            train_tree(&d, &d, "y", &TreeParams::default()),
            Err(Error::TargetAllMissing(_))
        ));
    }
}
