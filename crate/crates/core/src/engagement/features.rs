use crate::features::{transform_engagement, FeatureTable, Metric, RecordTable};
use crate::{Error, Result};

/// Per-record design matrix for an expectation model.
#[derive(Debug, Clone, PartialEq)]
pub struct TweetFeatures {
    pub dim: usize,
    /// Row-major, one row per record in table order.
    pub data: Vec<f64>,
    /// Named column groups in row order.
    pub schema: Vec<(String, usize)>,
    /// Records without prior history whose trailing means fell back to
    /// their own values.
    pub fallback: Vec<bool>,
}

impl TweetFeatures {
    pub fn len(&self) -> usize {
        self.fallback.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fallback.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

fn check_followers(records: &RecordTable, followers: &[f64]) -> Result<()> {
    if let Some(r) = records.records().iter().find(|r| r.author >= followers.len()) {
        return Err(Error::invalid(format!("record author {} has no follower count", r.author)));
    }
    Ok(())
}

/// Transformed engagement of every record for one metric.
pub fn engagement_targets(records: &RecordTable, followers: &[f64], metric: Metric) -> Result<Vec<f64>> {
    check_followers(records, followers)?;
    records
        .records()
        .iter()
        .map(|r| transform_engagement(r.engagement.get(metric), followers[r.author]))
        .collect()
}

/// `x`-per-`denominator` target: transformed numerator minus transformed
/// denominator.
pub fn relative_metric(records: &RecordTable, followers: &[f64], numerator: Metric, denominator: Metric) -> Result<Vec<f64>> {
    let a = engagement_targets(records, followers, numerator)?;
    let b = engagement_targets(records, followers, denominator)?;
    Ok(a.iter().zip(&b).map(|(x, y)| x - y).collect())
}

/// Builds the expectation-model inputs for predicting `target`.
///
/// Columns: author node features (all blocks of `authors`, if given), the
/// record's text embedding (zeros when absent), its hate score, the mean
/// hate score and mean transformed engagement per metric over the author's
/// previous `window` records, and the record's other transformed metrics.
/// A record with no earlier record uses its own values for the trailing
/// means and is flagged in `fallback`.
pub fn build_tweet_features(
    records: &RecordTable,
    authors: Option<&FeatureTable>,
    followers: &[f64],
    target: Metric,
    window: usize,
) -> Result<TweetFeatures> {
    if window == 0 {
        return Err(Error::invalid("trailing window must be >= 1"));
    }
    check_followers(records, followers)?;
    let recs = records.records();
    let text_dim = recs.iter().find_map(|r| r.text.as_ref().map(Vec::len)).unwrap_or(0);
    if let Some(r) = recs.iter().filter_map(|r| r.text.as_ref()).find(|t| t.len() != text_dim) {
        return Err(Error::DimensionMismatch {
            expected: text_dim,
            actual: r.len(),
        });
    }
    let author_dim = authors.map_or(0, |t| t.width());
    if let Some(t) = authors {
        if let Some(r) = recs.iter().find(|r| r.author >= t.len()) {
            return Err(Error::invalid(format!("record author {} has no node features", r.author)));
        }
    }
    let siblings: Vec<Metric> = Metric::ALL.into_iter().filter(|&m| m != target).collect();
    let mut schema = Vec::new();
    if author_dim > 0 {
        schema.push(("author".to_string(), author_dim));
    }
    if text_dim > 0 {
        schema.push(("text".to_string(), text_dim));
    }
    schema.push(("hate".to_string(), 1));
    schema.push(("trailing_hate".to_string(), 1));
    schema.push(("trailing_engagement".to_string(), Metric::ALL.len()));
    schema.push(("sibling_engagement".to_string(), siblings.len()));
    let dim: usize = schema.iter().map(|s| s.1).sum();

    let mut eng = vec![[0.0f64; 4]; recs.len()];
    for (i, r) in recs.iter().enumerate() {
        for m in Metric::ALL {
            eng[i][m.index()] = transform_engagement(r.engagement.get(m), followers[r.author])?;
        }
    }

    let mut data = vec![0.0; recs.len() * dim];
    let mut fallback = vec![false; recs.len()];
    for timeline in records.timelines().values() {
        for (pos, &i) in timeline.iter().enumerate() {
            let r = &recs[i];
            let row = &mut data[i * dim..(i + 1) * dim];
            let mut c = 0;
            if let Some(t) = authors {
                row[..author_dim].copy_from_slice(&t.concat_row(r.author));
                c += author_dim;
            }
            if let Some(text) = &r.text {
                row[c..c + text_dim].copy_from_slice(text);
            }
            c += text_dim;
            row[c] = r.hate_score();
            c += 1;
            let past = &timeline[pos.saturating_sub(window)..pos];
            if past.is_empty() {
                fallback[i] = true;
                row[c] = r.hate_score();
                row[c + 1..c + 5].copy_from_slice(&eng[i]);
            } else {
                let n = past.len() as f64;
                row[c] = past.iter().map(|&j| recs[j].hate_score()).sum::<f64>() / n;
                for m in 0..4 {
                    row[c + 1 + m] = past.iter().map(|&j| eng[j][m]).sum::<f64>() / n;
                }
            }
            c += 5;
            for (k, m) in siblings.iter().enumerate() {
                row[c + k] = eng[i][m.index()];
            }
        }
    }
    Ok(TweetFeatures {
        dim,
        data,
        schema,
        fallback,
    })
}
