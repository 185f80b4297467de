//! Descriptive statistics, one-way ANOVA, and pairwise-complete Pearson
//! correlation with strength bands.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::special::f_sf;

/// Count, mean and sample (n - 1) standard deviation of the non-missing cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Descriptives {
    pub n: usize,
    pub mean: f64,
    pub std_dev: f64,
}

impl Descriptives {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                n,
                mean: f64::NAN,
                std_dev: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std_dev = if n < 2 {
            0.0
        } else {
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            (ss / (n - 1) as f64).sqrt()
        };
        Self { n, mean, std_dev }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupDescriptives {
    /// `None` for the ungrouped summary.
    pub group: Option<String>,
    pub stats: Descriptives,
}

/// Groups rows by a categorical column; rows with a missing group label are
/// skipped. Groups come back sorted by label.
fn grouped_values(
    data: &Dataset,
    value_col: &str,
    group_col: &str,
) -> Result<BTreeMap<String, Vec<f64>>> {
    let values = data.interval(value_col)?;
    let groups = data.categorical(group_col)?;
    let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (v, g) in values.iter().zip(groups) {
        if let Some(g) = g {
            let entry = out.entry(g.clone()).or_default();
            if let Some(v) = v {
                entry.push(*v);
            }
        }
    }
    Ok(out)
}

pub fn descriptives(
    data: &Dataset,
    column: &str,
    group_by: Option<&str>,
) -> Result<Vec<GroupDescriptives>> {
    match group_by {
        None => {
            let values: Vec<f64> = data.interval(column)?.iter().flatten().copied().collect();
            Ok(vec![GroupDescriptives {
                group: None,
                stats: Descriptives::of(&values),
            }])
        }
        Some(g) => Ok(grouped_values(data, column, g)?
            .into_iter()
            .map(|(group, values)| GroupDescriptives {
                group: Some(group),
                stats: Descriptives::of(&values),
            })
            .collect()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    Low,
    Moderate,
    High,
    VeryHigh,
}

impl Band {
    pub fn label(self) -> &'static str {
        match self {
            Band::VeryHigh => "very_high",
            Band::High => "high",
            Band::Moderate => "moderate",
            Band::Low => "low",
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Strength band of |r|: above 0.70 very high, (0.60, 0.70] high,
/// (0.50, 0.60] moderate, everything else low.
pub fn band_of(r: f64) -> Result<Band> {
    if !(-1.0..=1.0).contains(&r) {
        return Err(Error::CorrelationOutOfRange(r));
    }
    let a = r.abs();
    Ok(if a > 0.70 {
        Band::VeryHigh
    } else if a > 0.60 {
        Band::High
    } else if a > 0.50 {
        Band::Moderate
    } else {
        Band::Low
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub r: f64,
    pub n_pairs: usize,
    pub band: Band,
}

impl CorrelationResult {
    pub fn r_squared(&self) -> f64 {
        self.r * self.r
    }
}

/// Sample Pearson r over two equal-length slices (no missing handling).
pub fn pearson_slices(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

fn has_spread(values: &[f64]) -> bool {
    values.iter().any(|v| *v != values[0])
}

/// Pearson correlation over rows where both columns are present.
pub fn pearson(data: &Dataset, col_a: &str, col_b: &str) -> Result<CorrelationResult> {
    let (a, b): (Vec<f64>, Vec<f64>) = data
        .interval(col_a)?
        .iter()
        .zip(data.interval(col_b)?)
        .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
        .unzip();
    if a.len() < 3 {
        return Err(Error::TooFewPairs {
            needed: 3,
            got: a.len(),
        });
    }
    if !has_spread(&a) {
        return Err(Error::ZeroVariance(col_a.to_string()));
    }
    if !has_spread(&b) {
        return Err(Error::ZeroVariance(col_b.to_string()));
    }
    let r = pearson_slices(&a, &b)?;
    Ok(CorrelationResult {
        r,
        n_pairs: a.len(),
        band: band_of(r)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    pub f_stat: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub p_value: f64,
}

/// Classical one-way ANOVA on pre-grouped samples.
pub fn anova_groups(groups: &[Vec<f64>]) -> Result<AnovaResult> {
    let groups: Vec<&Vec<f64>> = groups.iter().filter(|g| !g.is_empty()).collect();
    let k = groups.len();
    if k < 2 {
        return Err(Error::Anova(format!(
            "need at least 2 non-empty groups, got {k}"
        )));
    }
    let n: usize = groups.iter().map(|g| g.len()).sum();
    if n <= k {
        return Err(Error::Anova(format!(
            "{n} observations leave no within-group freedom for {k} groups"
        )));
    }
    let grand = groups.iter().flat_map(|g| g.iter()).sum::<f64>() / n as f64;
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for g in &groups {
        let m = g.iter().sum::<f64>() / g.len() as f64;
        ss_between += g.len() as f64 * (m - grand).powi(2);
        ss_within += g.iter().map(|v| (v - m).powi(2)).sum::<f64>();
    }
    let df_between = k - 1;
    let df_within = n - k;
    let ms_between = ss_between / df_between as f64;
    let ms_within = ss_within / df_within as f64;
    if ms_within == 0.0 && ms_between == 0.0 {
        return Err(Error::Anova("all values are identical".into()));
    }
    let f_stat = if ms_within == 0.0 {
        f64::INFINITY
    } else {
        ms_between / ms_within
    };
    Ok(AnovaResult {
        f_stat,
        df_between,
        df_within,
        p_value: f_sf(f_stat, df_between as f64, df_within as f64),
    })
}

pub fn anova_one_way(data: &Dataset, value_col: &str, group_col: &str) -> Result<AnovaResult> {
    let groups: Vec<Vec<f64>> = grouped_values(data, value_col, group_col)?
        .into_values()
        .collect();
    anova_groups(&groups)
}

/// Summary of a set of interval columns: per-column descriptives (optionally
/// by group, with an ANOVA per column) and every pairwise correlation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdaReport {
    pub group_by: Option<String>,
    pub columns: Vec<ColumnSummary>,
    pub correlations: Vec<PairCorrelation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub column: String,
    pub overall: Descriptives,
    pub groups: Vec<GroupDescriptives>,
    pub anova: Option<AnovaResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCorrelation {
    pub a: String,
    pub b: String,
    /// `None` when the pair is not computable (too few pairs, constant column).
    pub result: Option<CorrelationResult>,
}

pub fn eda_report(data: &Dataset, columns: &[&str], group_by: Option<&str>) -> Result<EdaReport> {
    let mut summaries = Vec::with_capacity(columns.len());
    for &col in columns {
        let overall = descriptives(data, col, None)?[0].stats;
        let (groups, anova) = match group_by {
            Some(g) => (
                descriptives(data, col, Some(g))?,
                anova_one_way(data, col, g).ok(),
            ),
            None => (Vec::new(), None),
        };
        summaries.push(ColumnSummary {
            column: col.to_string(),
            overall,
            groups,
            anova,
        });
    }
    let mut correlations = Vec::new();
    for (i, &a) in columns.iter().enumerate() {
        for &b in &columns[i + 1..] {
            correlations.push(PairCorrelation {
                a: a.to_string(),
                b: b.to_string(),
                result: pearson(data, a, b).ok(),
            });
        }
    }
    Ok(EdaReport {
        group_by: group_by.map(str::to_string),
        columns: summaries,
        correlations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{Column, Level, Role, VariableSpec};
    use proptest::prelude::*;

    fn table(a: &[Option<f64>], b: &[Option<f64>], g: &[&str]) -> Dataset {
        let n = a.len();
        let schema = vec![
            VariableSpec::new("id", Role::Id, Level::Nominal),
            VariableSpec::new("a", Role::Input, Level::Interval),
            VariableSpec::new("b", Role::Input, Level::Interval),
            VariableSpec::new("g", Role::Input, Level::Binary),
        ];
        let g: Vec<Option<String>> = if g.is_empty() {
            vec![Some("x".into()); n]
        } else {
            g.iter().map(|s| Some(s.to_string())).collect()
        };
        Dataset::new(
            schema,
            vec![
                Column::Categorical((0..n).map(|i| Some(format!("r{i}"))).collect()),
                Column::Interval(a.to_vec()),
                Column::Interval(b.to_vec()),
                Column::Categorical(g),
            ],
        )
        .unwrap()
    }

    fn some(v: &[f64]) -> Vec<Option<f64>> {
        v.iter().copied().map(Some).collect()
    }

    #[test]
    fn descriptives_basic() {
        let d = Descriptives::of(&[2.0, 4.0, 6.0]);
        assert_eq!((d.n, d.mean, d.std_dev), (3, 4.0, 2.0));
        assert_eq!(Descriptives::of(&[5.0; 4]).std_dev, 0.0);
        assert_eq!(Descriptives::of(&[5.0]).std_dev, 0.0);
    }

    #[test]
    fn descriptives_skip_missing_and_group() {
        let t = table(
            &[Some(1.0), None, Some(3.0), Some(10.0)],
            &some(&[0.0; 4]),
            &["f", "f", "f", "m"],
        );
        let all = descriptives(&t, "a", None).unwrap();
        assert_eq!(all[0].stats.n, 3);
        let by = descriptives(&t, "a", Some("g")).unwrap();
        assert_eq!(by.len(), 2);
        assert_eq!(by[0].group.as_deref(), Some("f"));
        assert_eq!(by[0].stats.mean, 2.0);
        assert_eq!(by[1].stats.n, 1);
        assert!(descriptives(&t, "g", None).is_err());
    }

    #[test]
    fn band_thresholds() {
        assert_eq!(band_of(0.72).unwrap(), Band::VeryHigh);
        assert_eq!(band_of(0.60).unwrap(), Band::Moderate);
        assert_eq!(band_of(0.0).unwrap(), Band::Low);
        assert_eq!(band_of(-0.65).unwrap(), Band::High);
        assert!(band_of(1.01).is_err());
        assert!(band_of(f64::NAN).is_err());
    }

    #[test]
    fn pearson_self_and_negation() {
        let a = some(&[1.0, 2.0, 4.0, 8.0]);
        let neg: Vec<_> = a.iter().map(|v| v.map(|x| -x)).collect();
        let t = table(&a, &a, &[]);
        let r = pearson(&t, "a", "b").unwrap();
        assert_eq!(r.r, 1.0);
        assert_eq!(r.band, Band::VeryHigh);
        let t = table(&a, &neg, &[]);
        assert!((pearson(&t, "a", "b").unwrap().r + 1.0).abs() < 1e-15);
    }

    #[test]
    fn pearson_pairwise_deletion_and_errors() {
        let t = table(
            &[Some(1.0), Some(2.0), None, Some(4.0), Some(5.0)],
            &[Some(2.0), Some(1.0), Some(4.0), None, Some(6.0)],
            &[],
        );
        let r = pearson(&t, "a", "b").unwrap();
        assert_eq!(r.n_pairs, 3);
        let few = table(&[Some(1.0), Some(2.0), None], &some(&[1.0, 2.0, 3.0]), &[]);
        assert!(matches!(
            pearson(&few, "a", "b"),
            Err(Error::TooFewPairs { .. })
        ));
        let flat = table(&some(&[1.0, 1.0, 1.0]), &some(&[1.0, 2.0, 3.0]), &[]);
        assert!(matches!(
            pearson(&flat, "a", "b"),
            Err(Error::ZeroVariance(_))
        ));
    }

    #[test]
    fn anova_textbook() {
        let r = anova_groups(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        assert!((r.f_stat - 13.5).abs() < 1e-12);
        assert_eq!((r.df_between, r.df_within), (1, 4));
        // p = P(F(1,4) > 13.5) = P(|t_4| > sqrt(13.5)).
        assert!(
            (r.p_value - 0.021_311_641_128_756_3).abs() < 1e-8,
            "{}",
            r.p_value
        );
    }

    #[test]
    fn anova_equal_groups_and_errors() {
        let r = anova_groups(&[vec![1.0, 5.0, 9.0], vec![9.0, 1.0, 5.0]]).unwrap();
        assert_eq!(r.f_stat, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert!(anova_groups(&[vec![1.0, 2.0]]).is_err());
        assert!(anova_groups(&[vec![1.0], vec![2.0]]).is_err());
        assert!(anova_groups(&[vec![3.0, 3.0], vec![3.0, 3.0]]).is_err());
        let sep = anova_groups(&[vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap();
        assert!(sep.f_stat.is_infinite());
        assert_eq!(sep.p_value, 0.0);
    }

    #[test]
    fn anova_from_dataset() {
        let t = table(
            &some(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]),
            &some(&[0.0; 6]),
            &["f", "f", "f", "m", "m", "m"],
        );
        assert!((anova_one_way(&t, "a", "g").unwrap().f_stat - 13.5).abs() < 1e-12);
    }

    #[test]
    fn report_collects_pairs() {
        let t = table(
            &some(&[1.0, 2.0, 3.0, 4.0]),
            &some(&[2.0, 1.0, 4.0, 3.0]),
            &["f", "m", "f", "m"],
        );
        let rep = eda_report(&t, &["a", "b"], Some("g")).unwrap();
        assert_eq!(rep.columns.len(), 2);
        assert_eq!(rep.correlations.len(), 1);
        assert!(rep.columns[0].anova.is_some());
    }

    proptest! {
        #[test]
        fn pearson_symmetric_affine(
            xs in prop::collection::vec(-100.0f64..100.0, 5..40),
            noise in prop::collection::vec(-50.0f64..50.0, 40),
            scale in 0.1f64..10.0,
            shift in -100.0f64..100.0,
        ) {
            let ys: Vec<f64> = xs.iter().zip(&noise).map(|(x, e)| 0.5 * x + e).collect();
            prop_assume!(has_spread(&xs) && has_spread(&ys));
            let r = pearson_slices(&xs, &ys).unwrap();
            prop_assert!((r - pearson_slices(&ys, &xs).unwrap()).abs() < 1e-12);
            let moved: Vec<f64> = xs.iter().map(|x| scale * x + shift).collect();
            prop_assert!((r - pearson_slices(&moved, &ys).unwrap()).abs() < 1e-9);
            let neg: Vec<f64> = ys.iter().map(|y| -y).collect();
            prop_assert!((r + pearson_slices(&xs, &neg).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn anova_affine_invariant(
            g1 in prop::collection::vec(-10.0f64..10.0, 2..15),
            g2 in prop::collection::vec(-10.0f64..10.0, 2..15),
            scale in 0.5f64..5.0,
            shift in -100.0f64..100.0,
        ) {
            let base = anova_groups(&[g1.clone(), g2.clone()]);
            prop_assume!(base.is_ok());
            let f = base.unwrap().f_stat;
            let tf = |g: &Vec<f64>| g.iter().map(|v| scale * v + shift).collect::<Vec<_>>();
            let moved = anova_groups(&[tf(&g1), tf(&g2)]).unwrap().f_stat;
            prop_assert!((f - moved).abs() <= 1e-8 * f.max(1.0));
        }

        #[test]
        fn banding_partitions_interval(i in 0usize..=2000) {
            let r = -1.0 + i as f64 / 1000.0;
            let band = band_of(r).unwrap();
            let a = r.abs();
            let hits = [a > 0.7, a > 0.6 && a <= 0.7, a > 0.5 && a <= 0.6, a <= 0.5];
            prop_assert_eq!(hits.iter().filter(|h| **h).count(), 1);
            let expect = [Band::VeryHigh, Band::High, Band::Moderate, Band::Low][hits.iter().position(|h| *h).unwrap()];
            prop_assert_eq!(band, expect);
        }
    }
}
