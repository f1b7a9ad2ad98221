use super::{FeatureBlock, ScoreTable};
use crate::stats::{mean, std_dev};
use crate::{Error, Result};

/// `log10(followers + 1)`.
pub fn follower_transform(followers: f64) -> f64 {
    (followers + 1.0).log10()
}

/// Engagement count normalised by popularity:
/// `log10(c') / log10(followers + 1)`, where zero counts become 0.1.
pub fn transform_engagement(count: f64, followers: f64) -> Result<f64> {
    if !(count.is_finite() && count >= 0.0) {
        return Err(Error::invalid(format!("engagement count {count} must be >= 0")));
    }
    if !(followers.is_finite() && followers >= 1.0) {
        return Err(Error::invalid(format!(
            "follower count {followers} must be >= 1 (log10(followers + 1) is the denominator)"
        )));
    }
    let c = if count > 0.0 { count } else { 0.1 };
    Ok(c.log10() / follower_transform(followers))
}

/// How per-column outlier flags combine into a row decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutlierRule {
    /// Drop a row if any column flags it.
    #[default]
    Any,
    /// Drop a row only if every column flags it.
    All,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutlierReport {
    pub kept: Vec<usize>,
    pub dropped: usize,
    /// Rows flagged by each column.
    pub flagged_per_column: Vec<usize>,
}

/// Rows whose value deviates from the column mean by more than
/// `threshold` population SDs are flagged. Zero-variance columns flag nothing.
pub fn remove_outliers(columns: &[&[f64]], threshold: f64, rule: OutlierRule) -> Result<OutlierReport> {
    let n = columns.first().map_or(0, |c| c.len());
    if columns.is_empty() || n == 0 {
        return Err(Error::InsufficientData("remove_outliers needs a nonempty column".into()));
    }
    if let Some(c) = columns.iter().find(|c| c.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: c.len(),
        });
    }
    let mut flags = vec![0usize; n];
    let mut flagged_per_column = Vec::with_capacity(columns.len());
    for col in columns {
        let m = mean(col);
        let sd = std_dev(col);
        let mut count = 0;
        if sd > 0.0 {
            for (i, v) in col.iter().enumerate() {
                if ((v - m) / sd).abs() > threshold {
                    flags[i] += 1;
                    count += 1;
                }
            }
        }
        flagged_per_column.push(count);
    }
    let need = match rule {
        OutlierRule::Any => 1,
        OutlierRule::All => columns.len(),
    };
    let kept: Vec<usize> = (0..n).filter(|&i| flags[i] < need).collect();
    Ok(OutlierReport {
        dropped: n - kept.len(),
        kept,
        flagged_per_column,
    })
}

/// Collapses one foundation's virtue/vice flags: 1 when both are present,
/// 0.5 when exactly one is, 0 otherwise.
pub fn aggregate_moral(virtue: u8, vice: u8) -> Result<f64> {
    if virtue > 1 || vice > 1 {
        return Err(Error::invalid(format!(
            "moral flags must be 0 or 1, got ({virtue}, {vice})"
        )));
    }
    Ok(match virtue + vice {
        2 => 1.0,
        1 => 0.5,
        _ => 0.0,
    })
}

/// Per-foundation mean of the aggregated scores over one author's records.
pub fn user_moral_profile(flags: &[[u8; 10]]) -> Result<[f64; 5]> {
    if flags.is_empty() {
        return Err(Error::InsufficientData("author has no moral records".into()));
    }
    let mut sums = [0.0; 5];
    for f in flags {
        for (k, s) in sums.iter_mut().enumerate() {
            *s += aggregate_moral(f[2 * k], f[2 * k + 1])?;
        }
    }
    Ok(sums.map(|s| s / flags.len() as f64))
}

/// Standardises the named columns to mean 0, population SD 1. Other
/// columns are copied unchanged.
pub fn zscore_columns(table: &ScoreTable, columns: &[&str]) -> Result<ScoreTable> {
    let mut out = table.clone();
    for &name in columns {
        let col = table.get(name)?;
        let m = mean(col);
        let sd = std_dev(col);
        let scale = col.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
        if !(sd > 1e-12 * scale) {
            return Err(Error::ZeroVariance(format!("column '{name}'")));
        }
        out.insert(name, col.iter().map(|v| (v - m) / sd).collect())?;
    }
    Ok(out)
}

/// Z-scores each metadata column over its observed values, imputes missing
/// entries as 0 and appends one presence flag per column.
pub fn standardize_metadata(name: &str, rows: &[Vec<Option<f64>>]) -> Result<FeatureBlock> {
    let width = rows.first().map_or(0, Vec::len);
    if width == 0 {
        return Err(Error::invalid("metadata rows have no columns"));
    }
    if let Some(r) = rows.iter().find(|r| r.len() != width) {
        return Err(Error::DimensionMismatch {
            expected: width,
            actual: r.len(),
        });
    }
    let mut stats = Vec::with_capacity(width);
    for c in 0..width {
        let seen: Vec<f64> = rows.iter().filter_map(|r| r[c]).collect();
        if seen.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("metadata column {c}")));
        }
        let (m, sd) = if seen.is_empty() {
            (0.0, 0.0)
        } else {
            (mean(&seen), std_dev(&seen))
        };
        stats.push((m, sd));
    }
    let mut data = Vec::with_capacity(rows.len() * width * 2);
    for r in rows {
        for (c, v) in r.iter().enumerate() {
            let (m, sd) = stats[c];
            data.push(match v {
                Some(x) if sd > 0.0 => (x - m) / sd,
                _ => 0.0,
            });
        }
        data.extend(r.iter().map(|v| if v.is_some() { 1.0 } else { 0.0 }));
    }
    FeatureBlock::new(name, width * 2, data)
}
