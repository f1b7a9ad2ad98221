use super::mann_whitney::{mann_whitney, Alternative, MannWhitney};
use crate::features::{Engagement, Record, RecordTable};
use crate::stats::{mean, std_dev};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Lower,
    Higher,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Lower => "lower",
            Direction::Higher => "higher",
        }
    }
}

/// A record whose engagement departed from expectation by more than the
/// threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnchorEvent {
    pub record: usize,
    pub author: usize,
    pub ordinal: i64,
    pub metric: String,
    pub direction: Direction,
    pub z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualScope {
    /// One mean and SD over every record.
    #[default]
    Global,
    /// Mean and SD within each author's records.
    PerAuthor,
}

/// Flags records with `|z| > threshold`, where `z` standardizes
/// `actual - expected` (population SD). Events come out in
/// (author, ordinal, record) order.
///
/// With [`ResidualScope::PerAuthor`], authors with fewer than two records
/// or constant residuals yield no events.
pub fn detect_anchors(
    records: &RecordTable,
    actual: &[f64],
    expected: &[f64],
    metric: &str,
    threshold: f64,
    scope: ResidualScope,
) -> Result<Vec<AnchorEvent>> {
    let n = records.len();
    for col in [actual, expected] {
        if col.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: col.len(),
            });
        }
    }
    if !(threshold > 0.0) {
        return Err(Error::invalid("anchor threshold must be > 0"));
    }
    let resid: Vec<f64> = actual.iter().zip(expected).map(|(a, e)| a - e).collect();
    if resid.iter().any(|r| !r.is_finite()) {
        return Err(Error::NonFinite("engagement residuals".into()));
    }
    let recs = records.records();
    let mut z = vec![f64::NAN; n];
    match scope {
        ResidualScope::Global => {
            let (m, s) = (mean(&resid), std_dev(&resid));
            if !(s > 0.0) {
                return Err(Error::ZeroVariance("engagement residuals".into()));
            }
            z.iter_mut().zip(&resid).for_each(|(z, r)| *z = (r - m) / s);
        }
        ResidualScope::PerAuthor => {
            for idx in records.timelines().values() {
                let rs: Vec<f64> = idx.iter().map(|&i| resid[i]).collect();
                let (m, s) = (mean(&rs), std_dev(&rs));
                if idx.len() >= 2 && s > 0.0 {
                    idx.iter().for_each(|&i| z[i] = (resid[i] - m) / s);
                }
            }
        }
    }
    let mut out = Vec::new();
    for idx in records.timelines().values() {
        for &i in idx {
            if z[i].abs() > threshold {
                out.push(AnchorEvent {
                    record: i,
                    author: recs[i].author,
                    ordinal: recs[i].ordinal,
                    metric: metric.to_string(),
                    direction: if z[i] > 0.0 { Direction::Higher } else { Direction::Lower },
                    z: z[i],
                });
            }
        }
    }
    Ok(out)
}

/// Anchors present in both lists at the same record with the same
/// direction, labelled `a&b`.
pub fn joint_anchors(a: &[AnchorEvent], b: &[AnchorEvent]) -> Vec<AnchorEvent> {
    let bs: BTreeMap<(usize, Direction), &AnchorEvent> = b.iter().map(|e| ((e.record, e.direction), e)).collect();
    a.iter()
        .filter_map(|e| {
            bs.get(&(e.record, e.direction)).map(|o| AnchorEvent {
                metric: format!("{}&{}", e.metric, o.metric),
                z: if e.z.abs() <= o.z.abs() { e.z } else { o.z },
                ..e.clone()
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregator {
    #[default]
    Mean,
    Max,
}

impl Aggregator {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggregator::Mean => "mean",
            Aggregator::Max => "max",
        }
    }

    fn apply(self, xs: &[f64]) -> f64 {
        match self {
            Aggregator::Mean => mean(xs),
            Aggregator::Max => xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeltaConfig {
    pub k: usize,
    pub aggregator: Aggregator,
    /// Toxicity column of the record (0 is the hate score).
    pub toxicity_index: usize,
    /// Drop anchors whose window overlaps the previous kept anchor's.
    pub de_overlap: bool,
}

impl Default for DeltaConfig {
    fn default() -> Self {
        DeltaConfig {
            k: 50,
            aggregator: Aggregator::Mean,
            toxicity_index: 0,
            de_overlap: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnchorDelta {
    pub record: usize,
    pub author: usize,
    pub direction: Direction,
    pub before: f64,
    pub after: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaSummary {
    pub n: usize,
    pub mean_delta: f64,
    pub sd_delta: f64,
}

/// Toxicity before vs after anchors, and whether deltas after higher-than-
/// expected anchors exceed those after lower-than-expected ones.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaReport {
    pub metric: String,
    pub k: usize,
    pub aggregator: Aggregator,
    pub rows: Vec<AnchorDelta>,
    /// Anchors without records on one side of the window.
    pub excluded_empty: usize,
    /// Anchors dropped by `de_overlap`.
    pub excluded_overlap: usize,
    pub higher: DeltaSummary,
    pub lower: DeltaSummary,
    /// One-sided test that higher-anchor deltas exceed lower-anchor deltas.
    pub test: Option<MannWhitney>,
}

fn summary(xs: &[f64]) -> DeltaSummary {
    DeltaSummary {
        n: xs.len(),
        mean_delta: mean(xs),
        sd_delta: std_dev(xs),
    }
}

pub fn toxicity_delta(records: &RecordTable, anchors: &[AnchorEvent], cfg: &DeltaConfig) -> Result<DeltaReport> {
    if cfg.k == 0 {
        return Err(Error::invalid("window k must be >= 1"));
    }
    if cfg.toxicity_index >= 6 {
        return Err(Error::invalid(format!("toxicity index {} outside 0..6", cfg.toxicity_index)));
    }
    let recs = records.records();
    let timelines = records.timelines();
    let mut position = vec![0usize; recs.len()];
    for idx in timelines.values() {
        for (p, &i) in idx.iter().enumerate() {
            position[i] = p;
        }
    }
    let mut sorted: Vec<&AnchorEvent> = anchors.iter().collect();
    for a in &sorted {
        if a.record >= recs.len() || recs[a.record].author != a.author {
            return Err(Error::invalid(format!("anchor on record {} does not match the record table", a.record)));
        }
    }
    sorted.sort_by_key(|a| (a.author, position[a.record], a.record));
    let tox = |i: usize| recs[i].toxicity[cfg.toxicity_index];
    let mut rows = Vec::new();
    let (mut excluded_empty, mut excluded_overlap) = (0, 0);
    let mut last: Option<(usize, usize)> = None;
    for a in sorted {
        let tl = &timelines[&a.author];
        let p = position[a.record];
        if cfg.de_overlap {
            if let Some((author, q)) = last {
                if author == a.author && p - q <= 2 * cfg.k {
                    excluded_overlap += 1;
                    continue;
                }
            }
            last = Some((a.author, p));
        }
        let before: Vec<f64> = tl[p.saturating_sub(cfg.k)..p].iter().map(|&i| tox(i)).collect();
        let after: Vec<f64> = tl[p + 1..(p + 1 + cfg.k).min(tl.len())].iter().map(|&i| tox(i)).collect();
        if before.is_empty() || after.is_empty() {
            excluded_empty += 1;
            continue;
        }
        let (b, f) = (cfg.aggregator.apply(&before), cfg.aggregator.apply(&after));
        rows.push(AnchorDelta {
            record: a.record,
            author: a.author,
            direction: a.direction,
            before: b,
            after: f,
            delta: f - b,
        });
    }
    let pick = |d: Direction| -> Vec<f64> { rows.iter().filter(|r| r.direction == d).map(|r| r.delta).collect() };
    let (hi, lo) = (pick(Direction::Higher), pick(Direction::Lower));
    let test = if hi.is_empty() || lo.is_empty() {
        None
    } else {
        Some(mann_whitney(&hi, &lo, Alternative::Greater)?)
    };
    Ok(DeltaReport {
        metric: anchors.first().map(|a| a.metric.clone()).unwrap_or_default(),
        k: cfg.k,
        aggregator: cfg.aggregator,
        higher: summary(&hi),
        lower: summary(&lo),
        rows,
        excluded_empty,
        excluded_overlap,
        test,
    })
}

/// Synthetic timelines for exercising the approval pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthTimelineConfig {
    pub authors: usize,
    pub records_per_author: usize,
    /// Toxicity added, in toxicity SDs, to the `window` records that follow
    /// a higher-than-expected record.
    pub shift: f64,
    pub window: usize,
    pub threshold: f64,
    pub toxicity_sd: f64,
    pub seed: u64,
}

impl Default for SynthTimelineConfig {
    fn default() -> Self {
        SynthTimelineConfig {
            authors: 100,
            records_per_author: 200,
            shift: 0.5,
            window: 30,
            threshold: 2.0,
            toxicity_sd: 0.1,
            seed: 0,
        }
    }
}

/// Records plus the actual and expected engagement columns that produced
/// them.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthTimelines {
    pub records: RecordTable,
    pub followers: Vec<f64>,
    pub actual: Vec<f64>,
    pub expected: Vec<f64>,
}

/// Expected engagement is an author-level baseline, actual engagement adds
/// standard normal noise. Toxicity is an author mean plus Gaussian noise,
/// raised by `shift` SDs for the `window` records after any record whose
/// residual exceeds `threshold`.
pub fn synth_timelines(cfg: &SynthTimelineConfig) -> Result<SynthTimelines> {
    if cfg.authors == 0 || cfg.records_per_author == 0 {
        return Err(Error::invalid("synthetic timelines need authors and records"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut records = Vec::with_capacity(cfg.authors * cfg.records_per_author);
    let mut actual = Vec::with_capacity(records.capacity());
    let mut expected = Vec::with_capacity(records.capacity());
    let mut followers = Vec::with_capacity(cfg.authors);
    for author in 0..cfg.authors {
        let base_tox = rng.random_range(0.2..0.6);
        let base_eng = rng.random_range(-1.0..1.0);
        followers.push(10f64.powf(rng.random_range(1.0..5.0)).round());
        let mut boosted_until = 0usize;
        for t in 0..cfg.records_per_author {
            let noise: f64 = StandardNormal.sample(&mut rng);
            let resid: f64 = StandardNormal.sample(&mut rng);
            let mut tox = base_tox + cfg.toxicity_sd * noise;
            if t < boosted_until {
                tox += cfg.shift * cfg.toxicity_sd;
            }
            if resid > cfg.threshold {
                boosted_until = t + 1 + cfg.window;
            }
            let mut toxicity = [0.0; 6];
            toxicity[0] = tox;
            records.push(Record {
                author,
                ordinal: t as i64,
                text: None,
                toxicity,
                engagement: Engagement::default(),
                moral: [0; 10],
            });
            expected.push(base_eng);
            actual.push(base_eng + resid);
        }
    }
    Ok(SynthTimelines {
        records: RecordTable::new(records)?,
        followers,
        actual,
        expected,
    })
}
