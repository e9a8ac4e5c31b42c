//! Kruskal-Wallis rank tests over acoustic features.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::audio::{Consistency, Label};
use crate::dataset::{FeatureRow, FeatureTable};
use crate::error::{Error, Result};
use crate::features::{FEATURE_COUNT, FEATURE_NAMES};
use crate::format::sig9;

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KruskalResult {
    pub h_statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
}

/// Ranks starting at 1; tied values share the mean of the positions they
/// cover.
pub fn rank_with_ties(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::Domain("cannot rank an empty vector".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("cannot rank non-finite values".into()));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start+1 ..= end share their average.
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    Ok(ranks)
}

/// Sum of t^3 - t over groups of tied values.
fn tie_term(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
        .chunk_by(|a, b| a == b)
        .map(|run| {
            let t = run.len() as f64;
            t * t * t - t
        })
        .sum()
}

/// Tie-corrected Kruskal-Wallis H with its chi-square p-value.
pub fn kruskal_wallis<G: AsRef<[f64]>>(groups: &[G]) -> Result<KruskalResult> {
    if groups.len() < 2 {
        return Err(Error::Domain(format!("need at least 2 groups, got {}", groups.len())));
    }
    if let Some(i) = groups.iter().position(|g| g.as_ref().is_empty()) {
        return Err(Error::Domain(format!("group {i} is empty")));
    }
    let pooled: Vec<f64> = groups.iter().flat_map(|g| g.as_ref().iter().copied()).collect();
    let n = pooled.len() as f64;
    if pooled.len() < 3 {
        return Err(Error::Domain(format!("need at least 3 observations, got {}", pooled.len())));
    }

    let ranks = rank_with_ties(&pooled)?;
    let correction = 1.0 - tie_term(&pooled) / (n * n * n - n);
    if correction <= 0.0 {
        return Err(Error::Degenerate("all observations are tied".into()));
    }

    let mut offset = 0;
    let mut between = 0.0;
    for g in groups {
        let len = g.as_ref().len();
        let rank_sum: f64 = ranks[offset..offset + len].iter().sum();
        between += rank_sum * rank_sum / len as f64;
        offset += len;
    }
    let h = ((12.0 / (n * (n + 1.0)) * between - 3.0 * (n + 1.0)) / correction).max(0.0);
    let df = groups.len() - 1;
    Ok(KruskalResult {
        h_statistic: h,
        degrees_of_freedom: df,
        p_value: chi_square_sf(h, df)?,
    })
}

/// Upper tail of the chi-square distribution, 1 - P(df/2, x/2).
pub fn chi_square_sf(x: f64, df: usize) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("chi-square statistic {x} must be >= 0")));
    }
    if df == 0 {
        return Err(Error::Domain("chi-square needs at least one degree of freedom".into()));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    Ok(statrs::function::gamma::gamma_ur(df as f64 / 2.0, x / 2.0).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    /// Compare consistencies separately inside each label.
    ByConsistencyWithinLabel,
    /// Compare normal against dysphagic.
    ByLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceRow {
    /// Zero-based feature position.
    pub feature: usize,
    pub name: String,
    pub h: f64,
    pub df: usize,
    pub p: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceTable {
    /// Label the table was restricted to, for within-label groupings.
    pub within: Option<Label>,
    pub rows: Vec<SignificanceRow>,
}

impl SignificanceTable {
    pub fn significant_features(&self) -> Vec<usize> {
        self.rows.iter().filter(|r| r.significant).map(|r| r.feature).collect()
    }

    /// CSV with columns `feature,index,H,df,p,significant`; `index` is
    /// 1-based to match the feature names (`mfcc1` is index 1).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature,index,H,df,p,significant\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.name,
                r.feature + 1,
                sig9(r.h),
                r.df,
                sig9(r.p),
                r.significant
            );
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Inverse of [`SignificanceTable::to_csv`]. The grouping scope is not
    /// stored in the file, so the caller supplies it.
    pub fn from_csv(text: &str, within: Option<Label>) -> Result<Self> {
        const HEADER: [&str; 6] = ["feature", "index", "H", "df", "p", "significant"];
        let mut r = csv::Reader::from_reader(text.as_bytes());
        if !r.headers().is_ok_and(|h| h.iter().eq(HEADER)) {
            return Err(Error::Parse { line: 1, message: format!("expected header `{}`", HEADER.join(",")) });
        }
        let rows = r
            .records()
            .map(|rec| {
                let rec = rec.map_err(|e| Error::Parse { line: 0, message: e.to_string() })?;
                let line = rec.position().map_or(0, |p| p.line() as usize);
                let bad = |i: usize| Error::Parse { line, message: format!("cannot parse `{}`", &rec[i]) };
                let index: usize = rec[1].parse().map_err(|_| bad(1))?;
                Ok(SignificanceRow {
                    feature: index.checked_sub(1).ok_or_else(|| bad(1))?,
                    name: rec[0].to_string(),
                    h: rec[2].parse().map_err(|_| bad(2))?,
                    df: rec[3].parse().map_err(|_| bad(3))?,
                    p: rec[4].parse().map_err(|_| bad(4))?,
                    significant: rec[5].parse().map_err(|_| bad(5))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { within, rows })
    }
}

fn test_groups<K: Ord + std::fmt::Display>(
    rows: &[&FeatureRow],
    key: impl Fn(&FeatureRow) -> K,
    required: &[K],
    within: Option<Label>,
) -> Result<SignificanceTable> {
    let mut groups: BTreeMap<K, Vec<&FeatureRow>> = BTreeMap::new();
    for r in rows {
        groups.entry(key(r)).or_default().push(r);
    }
    let scope = within.map_or(String::new(), |l| format!(" within {l}"));
    for k in required {
        if !groups.contains_key(k) {
            return Err(Error::Grouping(format!("group `{k}`{scope} is empty")));
        }
    }
    if groups.len() < 2 {
        let only = groups.keys().next().map_or("none".to_string(), ToString::to_string);
        return Err(Error::Grouping(format!("only one group (`{only}`){scope}")));
    }
    if let Some((k, g)) = groups.iter().find(|(_, g)| g.len() < 2) {
        return Err(Error::Grouping(format!("group `{k}`{scope} has {} member", g.len())));
    }

    let rows = (0..FEATURE_COUNT)
        .map(|f| {
            let columns: Vec<Vec<f64>> = groups
                .values()
                .map(|g| g.iter().map(|r| r.features.get(f)).collect())
                .collect();
            let kw = kruskal_wallis(&columns).map_err(|e| {
                Error::Degenerate(format!("feature {}{scope}: {e}", FEATURE_NAMES[f]))
            })?;
            Ok(SignificanceRow {
                feature: f,
                name: FEATURE_NAMES[f].to_string(),
                h: kw.h_statistic,
                df: kw.degrees_of_freedom,
                p: kw.p_value,
                significant: kw.p_value < SIGNIFICANCE_LEVEL,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SignificanceTable { within, rows })
}

/// One Kruskal-Wallis test per feature. `ByLabel` yields a single table;
/// `ByConsistencyWithinLabel` yields one table per label present.
pub fn feature_significance_table(
    table: &FeatureTable,
    grouping: Grouping,
) -> Result<Vec<SignificanceTable>> {
    let all: Vec<&FeatureRow> = table.rows.iter().collect();
    match grouping {
        Grouping::ByLabel => Ok(vec![test_groups(&all, |r| r.label, &Label::ALL, None)?]),
        Grouping::ByConsistencyWithinLabel => Label::ALL
            .into_iter()
            .filter(|l| all.iter().any(|r| r.label == *l))
            .map(|label| {
                let rows: Vec<&FeatureRow> = all.iter().copied().filter(|r| r.label == label).collect();
                test_groups::<Consistency>(&rows, |r| r.consistency, &[], Some(label))
            })
            .collect(),
    }
}
