use crate::data::write_csv;
use crate::error::CliError;
use crate::manifest::Run;
use socweave::features::{write_node_features, FeatureBlock, FeatureTable};
use socweave::graph::{generate_planted_partition, group_features, write_edges, EdgeFormat};

/// Planted-partition graph, noisy group features and ground-truth labels.
pub fn run(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.cfg;
    let s = &cfg.synth;
    let pp = generate_planted_partition(s.nodes, s.groups, s.p_in, s.p_out, cfg.seed)?;
    let rows = group_features(&pp.groups, s.groups, s.noise_dims, s.sigma, cfg.seed.wrapping_add(1000))?;
    let ids = pp.graph.ids().to_vec();
    let table = FeatureTable::new(ids.clone(), vec![FeatureBlock::from_rows("x", &rows)?])?;

    let p = run.output("edges.csv");
    write_edges(&pp.graph, &p, EdgeFormat::Csv)?;
    let p = run.output("node_features.jsonl");
    write_node_features(&table, &p)?;
    let p = run.output("labels.csv");
    write_csv(
        &p,
        &["node", "label"],
        ids.iter().zip(&pp.groups).map(|(id, g)| vec![id.clone(), g.to_string()]),
    )?;
    run.write_json("graph_stats.json", &pp.graph.stats())?;
    Ok(())
}
