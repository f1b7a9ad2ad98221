//! Pipeline configuration: a JSON document with flat `key=value` overrides.

use crate::error::CliError;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use socweave::analytics::{NeighborScope, RwcConfig};
use socweave::cluster::KmeansConfig;
use socweave::embedder::TrainConfig;
use socweave::engagement::{Aggregator, ExpectationConfig, ResidualScope, SynthTimelineConfig};
use socweave::features::Metric;
use socweave::graph::EdgeType;
use socweave::heads::{HeadConfig, SplitPlan};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub output_dir: PathBuf,
    /// Master seed, copied into every stage's own seed field.
    pub seed: u64,
    /// Keep wall-clock timings out of manifests so reruns are byte-identical.
    /// Every stage is seeded and independent of thread scheduling.
    pub deterministic: bool,
    /// Worker threads; 0 picks one per core.
    pub threads: usize,
    pub data: DataPaths,
    pub graph: GraphOptions,
    pub synth: SynthOptions,
    pub train: TrainConfig,
    pub head: HeadConfig,
    pub split: SplitPlan,
    pub label: LabelOptions,
    pub analysis: AnalysisOptions,
    pub approval: ApprovalOptions,
    pub cluster: ClusterOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            output_dir: PathBuf::from("out"),
            seed: 0,
            deterministic: true,
            threads: 0,
            data: DataPaths::default(),
            graph: GraphOptions::default(),
            synth: SynthOptions::default(),
            train: TrainConfig::default(),
            head: HeadConfig::default(),
            split: SplitPlan::default(),
            label: LabelOptions::default(),
            analysis: AnalysisOptions::default(),
            approval: ApprovalOptions::default(),
            cluster: ClusterOptions::default(),
        }
    }
}

/// Input files. Unset paths fall back to the artifact of the same name in
/// `output_dir`, so stages chain without extra configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataPaths {
    /// Edge list (`.csv`, `.tsv` or `.jsonl`).
    pub edges: Option<PathBuf>,
    /// Node features, JSONL with one array per block.
    pub node_features: Option<PathBuf>,
    /// `node,label` CSV.
    pub labels: Option<PathBuf>,
    /// `node,score` CSV of a per-user attribute.
    pub scores: Option<PathBuf>,
    /// Per-record JSONL.
    pub records: Option<PathBuf>,
    /// `node,followers` CSV.
    pub followers: Option<PathBuf>,
    /// `record,retweeter` CSV; `record` is the 0-based line of the record file.
    pub events: Option<PathBuf>,
    /// JSONL `{"id", "profile", "endorsements"}` used for pseudo-labels.
    pub profiles: Option<PathBuf>,
    /// Extra `hashtag,side` lexicon entries.
    pub hashtags: Option<PathBuf>,
    /// Extra `handle,url,rating` media entries.
    pub media: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphOptions {
    pub filter_etype: EdgeType,
    pub w_min: f64,
    pub drop_isolated: bool,
}

impl Default for GraphOptions {
    fn default() -> Self {
        GraphOptions {
            filter_etype: EdgeType::Retweet,
            w_min: 1.0,
            drop_isolated: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthOptions {
    pub nodes: usize,
    pub groups: usize,
    pub p_in: f64,
    pub p_out: f64,
    /// Pure-noise feature columns after the one-hot group indicator.
    pub noise_dims: usize,
    pub sigma: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            nodes: 2000,
            groups: 4,
            p_in: 0.05,
            p_out: 0.002,
            noise_dims: 100,
            sigma: 0.45,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelOptions {
    pub propagate: bool,
    pub max_iters: usize,
    /// Layers used for propagation; empty means all.
    pub etypes: Vec<EdgeType>,
}

impl Default for LabelOptions {
    fn default() -> Self {
        LabelOptions {
            propagate: true,
            max_iters: 50,
            etypes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisOptions {
    pub etype: EdgeType,
    /// Score bins for the controversy matrix.
    pub n_bins: usize,
    pub rwc: RwcConfig,
    pub scope: NeighborScope,
    /// Degree-preserving shuffles reported next to the observed coefficient.
    pub shuffles: usize,
    pub null_reps: usize,
    pub min_in_count: u64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            etype: EdgeType::Retweet,
            n_bins: 5,
            rwc: RwcConfig::default(),
            scope: NeighborScope::Union,
            shuffles: 20,
            null_reps: 100,
            min_in_count: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApprovalOptions {
    pub metrics: Vec<Metric>,
    /// Trailing window of the expectation features.
    pub window: usize,
    pub threshold: f64,
    pub scope: ResidualScope,
    pub ks: Vec<usize>,
    pub aggregator: Aggregator,
    pub toxicity_index: usize,
    pub de_overlap: bool,
    pub expectation: ExpectationConfig,
    pub split: SplitPlan,
    pub synthetic: SynthTimelineConfig,
}

impl Default for ApprovalOptions {
    fn default() -> Self {
        ApprovalOptions {
            metrics: vec![Metric::Likes, Metric::Retweets],
            window: 50,
            threshold: 2.0,
            scope: ResidualScope::Global,
            ks: vec![30, 50, 80],
            aggregator: Aggregator::Mean,
            toxicity_index: 0,
            de_overlap: false,
            expectation: ExpectationConfig::default(),
            split: SplitPlan {
                seeds: vec![0],
                ..SplitPlan::default()
            },
            synthetic: SynthTimelineConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterOptions {
    /// Feature block to cluster; all blocks when unset.
    pub block: Option<String>,
    pub k_min: usize,
    pub k_max: usize,
    /// Forces k instead of the silhouette recommendation.
    pub k: Option<usize>,
    pub kmeans: KmeansConfig,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        ClusterOptions {
            block: None,
            k_min: 2,
            k_max: 8,
            k: None,
            kmeans: KmeansConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Reads `path` (defaults when `None`), applies overrides and validates.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut doc = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::config(format!("cannot read {}: {e}", p.display()), None))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::config(format!("{}: {e}", p.display()), None))?
            }
            None => Value::Object(Default::default()),
        };
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let mut cfg: PipelineConfig = serde_json::from_value(doc).map_err(|e| {
            let msg = e.to_string();
            let key = unknown_key(&msg);
            CliError::config(msg, key)
        })?;
        cfg.resolve_seeds();
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_seeds(&mut self) {
        let s = self.seed;
        self.train.seed = s;
        self.analysis.rwc.seed = s;
        self.approval.expectation.seed = s;
        self.approval.synthetic.seed = s;
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |key: &str, msg: String| Err(CliError::config(msg, Some(key.to_string())));
        if let Err(e) = self.train.validate() {
            return bad("train", e.to_string());
        }
        if let Err(e) = self.split.validate() {
            return bad("split", e.to_string());
        }
        if let Err(e) = self.approval.split.validate() {
            return bad("approval.split", e.to_string());
        }
        if self.analysis.n_bins < 2 {
            return bad("analysis.n_bins", "n_bins must be >= 2".into());
        }
        if self.approval.ks.contains(&0) {
            return bad("approval.ks", "every k must be >= 1".into());
        }
        if self.approval.metrics.is_empty() {
            return bad("approval.metrics", "at least one metric is required".into());
        }
        if self.cluster.k_min < 2 || self.cluster.k_max < self.cluster.k_min {
            return bad("cluster.k_min", "need 2 <= k_min <= k_max".into());
        }
        if self.graph.w_min < 1.0 {
            return bad("graph.w_min", "w_min must be >= 1".into());
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON of the resolved configuration.
    pub fn hash(&self) -> String {
        let v = serde_json::to_value(self).expect("config serializes");
        hex::encode(Sha256::digest(v.to_string().as_bytes()))
    }

    pub fn path_or(&self, p: &Option<PathBuf>, default_name: &str) -> PathBuf {
        p.clone().unwrap_or_else(|| self.output_dir.join(default_name))
    }
}

/// `a.b.c=value`; the value is read as JSON and falls back to a string.
fn apply_override(doc: &mut Value, spec: &str) -> Result<(), CliError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::config(format!("override '{spec}' is not key=value"), None))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(CliError::config(format!("bad override key '{key}'"), Some(key.to_string())));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = match cur {
            Value::Object(m) => m,
            _ => {
                return Err(CliError::config(
                    format!("override '{key}': '{}' is not an object", parts[..i].join(".")),
                    Some(key.to_string()),
                ))
            }
        };
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

fn unknown_key(msg: &str) -> Option<String> {
    let rest = msg.strip_prefix("unknown field `")?;
    Some(rest[..rest.find('`')?].to_string())
}
