//! Per-user feature blocks, per-record (tweet) rows and scalar transforms.

mod hash;
mod io;
mod transforms;

pub use hash::{hash_embed, HashEmbedding};
pub use io::{load_node_features, load_records, write_node_features, write_records};
pub use transforms::{
    aggregate_moral, follower_transform, remove_outliers, standardize_metadata,
    transform_engagement, user_moral_profile, zscore_columns, OutlierReport, OutlierRule,
};

use crate::{Error, Result};
use std::collections::{BTreeMap, HashMap};

/// The five moral foundations, in the order used by every 5-vector.
pub const FOUNDATIONS: [&str; 5] = ["care", "fairness", "loyalty", "authority", "purity"];

/// Names of the 10 virtue/vice flags; flag `2f` is the virtue and `2f + 1`
/// the vice of foundation `f`.
pub const MORAL_FLAGS: [&str; 10] = [
    "care", "harm", "fairness", "cheating", "loyalty", "betrayal", "authority", "subversion",
    "purity", "degradation",
];

/// Toxicity attributes carried per record; index 0 is the hate score.
pub const TOXICITY_ATTRS: [&str; 6] = [
    "toxicity",
    "severe_toxicity",
    "identity_attack",
    "insult",
    "profanity",
    "threat",
];

/// A dense, uniformly sized block of per-node vectors (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBlock {
    pub name: String,
    dim: usize,
    data: Vec<f64>,
}

impl FeatureBlock {
    pub fn new(name: impl Into<String>, dim: usize, data: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if dim == 0 {
            return Err(Error::invalid(format!("block '{name}' has dimension 0")));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "block '{name}': {} values is not a multiple of dim {dim}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("feature block '{name}'")));
        }
        Ok(FeatureBlock { name, dim, data })
    }

    pub fn from_rows(name: impl Into<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let name = name.into();
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: bad.len(),
            });
        }
        Self::new(name, dim, rows.concat())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Node-indexed feature blocks sharing one row index.
///
/// `present[i]` is false for nodes whose features were not supplied; their
/// rows are zero-filled.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    ids: Vec<String>,
    blocks: Vec<FeatureBlock>,
    present: Vec<bool>,
}

impl FeatureTable {
    pub fn new(ids: Vec<String>, blocks: Vec<FeatureBlock>) -> Result<Self> {
        let present = vec![true; ids.len()];
        Self::with_presence(ids, blocks, present)
    }

    pub fn with_presence(
        ids: Vec<String>,
        blocks: Vec<FeatureBlock>,
        present: Vec<bool>,
    ) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::invalid("feature table needs at least one block"));
        }
        for b in &blocks {
            if b.rows() != ids.len() {
                return Err(Error::DimensionMismatch {
                    expected: ids.len(),
                    actual: b.rows(),
                });
            }
        }
        if present.len() != ids.len() {
            return Err(Error::DimensionMismatch {
                expected: ids.len(),
                actual: present.len(),
            });
        }
        Ok(FeatureTable {
            ids,
            blocks,
            present,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn blocks(&self) -> &[FeatureBlock] {
        &self.blocks
    }

    pub fn block(&self, name: &str) -> Option<&FeatureBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(FeatureBlock::dim).collect()
    }

    pub fn is_present(&self, i: usize) -> bool {
        self.present[i]
    }

    /// Total width of a row across blocks.
    pub fn width(&self) -> usize {
        self.blocks.iter().map(FeatureBlock::dim).sum()
    }

    /// All blocks of row `i` concatenated.
    pub fn concat_row(&self, i: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.width());
        for b in &self.blocks {
            out.extend_from_slice(b.row(i));
        }
        out
    }

    /// Re-indexes rows to `ids`; ids with no features get zero rows and
    /// `present = false`.
    pub fn aligned_to(&self, ids: &[String]) -> FeatureTable {
        let pos: HashMap<&str, usize> = self
            .ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let src: Vec<Option<usize>> = ids
            .iter()
            .map(|id| pos.get(id.as_str()).copied().filter(|&i| self.present[i]))
            .collect();
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let mut data = Vec::with_capacity(ids.len() * b.dim);
                for s in &src {
                    match s {
                        Some(i) => data.extend_from_slice(b.row(*i)),
                        None => data.extend(std::iter::repeat_n(0.0, b.dim)),
                    }
                }
                FeatureBlock {
                    name: b.name.clone(),
                    dim: b.dim,
                    data,
                }
            })
            .collect();
        FeatureTable {
            ids: ids.to_vec(),
            blocks,
            present: src.iter().map(Option::is_some).collect(),
        }
    }
}

/// Named real-valued columns over one index (nodes or records).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTable {
    len: usize,
    columns: BTreeMap<String, Vec<f64>>,
}

impl ScoreTable {
    pub fn new(len: usize) -> Self {
        ScoreTable {
            len,
            columns: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn insert(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let name = name.into();
        if values.len() != self.len {
            return Err(Error::DimensionMismatch {
                expected: self.len,
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("score column '{name}'")));
        }
        self.columns.insert(name, values);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.get(name).map(Vec::as_slice)
    }

    pub fn get(&self, name: &str) -> Result<&[f64]> {
        self.column(name)
            .ok_or_else(|| Error::invalid(format!("no score column '{name}'")))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }
}

/// Engagement counts a record received.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Engagement {
    pub likes: f64,
    pub retweets: f64,
    pub replies: f64,
    pub quotes: f64,
}

/// Engagement metric selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Likes,
    Retweets,
    Replies,
    Quotes,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Likes, Metric::Retweets, Metric::Replies, Metric::Quotes];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Likes => "likes",
            Metric::Retweets => "retweets",
            Metric::Replies => "replies",
            Metric::Quotes => "quotes",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::invalid(format!("unknown metric '{s}'")))
    }
}

impl Engagement {
    pub fn get(&self, m: Metric) -> f64 {
        match m {
            Metric::Likes => self.likes,
            Metric::Retweets => self.retweets,
            Metric::Replies => self.replies,
            Metric::Quotes => self.quotes,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        Metric::ALL.map(|m| self.get(m))
    }
}

/// One authored post.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    /// Dense index of the author.
    pub author: usize,
    /// Position in the author's timeline; only the order matters.
    pub ordinal: i64,
    pub text: Option<Vec<f64>>,
    pub toxicity: [f64; 6],
    pub engagement: Engagement,
    /// Virtue/vice flags in [`MORAL_FLAGS`] order, each 0 or 1.
    pub moral: [u8; 10],
}

impl Record {
    pub fn hate_score(&self) -> f64 {
        self.toxicity[0]
    }

    /// Five-bit mask of the foundations present (virtue or vice).
    pub fn moral_mask(&self) -> u8 {
        (0..5).fold(0u8, |m, f| {
            if self.moral[2 * f] != 0 || self.moral[2 * f + 1] != 0 {
                m | (1 << f)
            } else {
                m
            }
        })
    }
}

/// Record rows plus a per-author timeline index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RecordTable {
    records: Vec<Record>,
}

impl RecordTable {
    pub fn new(records: Vec<Record>) -> Result<Self> {
        for (i, r) in records.iter().enumerate() {
            if r.engagement.as_array().iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::invalid(format!("record {i}: engagement counts must be >= 0")));
            }
            if r.moral.iter().any(|&f| f > 1) {
                return Err(Error::invalid(format!("record {i}: moral flags must be 0 or 1")));
            }
            if r.toxicity.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("record {i} toxicity")));
            }
        }
        Ok(RecordTable { records })
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Record indices grouped by author, each timeline sorted by ordinal
    /// (then record index). Authors are listed in ascending order.
    pub fn timelines(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, r) in self.records.iter().enumerate() {
            map.entry(r.author).or_default().push(i);
        }
        for idx in map.values_mut() {
            idx.sort_by_key(|&i| (self.records[i].ordinal, i));
        }
        map
    }
}
