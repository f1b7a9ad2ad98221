use super::load_graph;
use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::manifest::Run;
use serde_json::json;
use socweave::graph::{filter_min_weight, write_edges, EdgeFormat, SocialGraph};

fn write_graph(run: &mut Run, g: &SocialGraph, name: &str) -> Result<(), CliError> {
    let p = run.output(name);
    write_edges(g, &p, EdgeFormat::Csv)?;
    Ok(())
}

/// Normalizes the edge list: merged duplicates, no self-loops, sorted.
pub fn load(run: &mut Run) -> Result<(), CliError> {
    let g = load_graph(run.cfg)?;
    write_graph(run, &g, "graph_edges.csv")?;
    run.write_json("graph_stats.json", &g.stats())?;
    Ok(())
}

pub fn filter(run: &mut Run) -> Result<(), CliError> {
    let cfg: &PipelineConfig = run.cfg;
    let g = load_graph(cfg)?;
    let o = &cfg.graph;
    let f = filter_min_weight(&g, o.filter_etype, o.w_min, o.drop_isolated)?;
    write_graph(run, &f, "filtered_edges.csv")?;
    run.write_json(
        "filter_stats.json",
        &json!({
            "etype": o.filter_etype,
            "w_min": o.w_min,
            "drop_isolated": o.drop_isolated,
            "before": g.stats(),
            "after": f.stats(),
        }),
    )?;
    Ok(())
}

pub fn stats(run: &mut Run) -> Result<(), CliError> {
    let g = load_graph(run.cfg)?;
    let s = g.stats();
    println!("{}", serde_json::to_string_pretty(&s).expect("stats serialize"));
    run.write_json("graph_stats.json", &s)?;
    Ok(())
}
