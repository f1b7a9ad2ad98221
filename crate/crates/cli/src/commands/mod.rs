pub mod analyze;
pub mod approve;
pub mod cluster;
pub mod embed;
pub mod eval;
pub mod graph;
pub mod label;
pub mod synth;

use crate::config::PipelineConfig;
use crate::error::CliError;
use socweave::features::{load_node_features, FeatureTable};
use socweave::graph::{load_edges, EdgeFormat, SocialGraph};

pub fn load_graph(cfg: &PipelineConfig) -> Result<SocialGraph, CliError> {
    let path = cfg.path_or(&cfg.data.edges, "edges.csv");
    let format = EdgeFormat::from_path(&path)?;
    let (g, report) = load_edges(&path, format)?;
    if report.merged_duplicates > 0 || report.self_loops_dropped > 0 {
        eprintln!(
            "{}: merged {} duplicate edges, dropped {} self-loops",
            path.display(),
            report.merged_duplicates,
            report.self_loops_dropped
        );
    }
    Ok(g)
}

pub fn load_features(cfg: &PipelineConfig) -> Result<FeatureTable, CliError> {
    Ok(load_node_features(cfg.path_or(&cfg.data.node_features, "node_features.jsonl"))?)
}
