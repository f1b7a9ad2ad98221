use super::load_features;
use crate::data::{num, read_numbers, write_csv};
use crate::error::CliError;
use crate::manifest::Run;
use serde_json::json;
use socweave::cluster::{group_profiles, kmeans, select_k};
use socweave::heads::bin_scores;
use std::collections::BTreeMap;

/// k-means over node features with silhouette-based k selection.
pub fn run(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.cfg;
    let c = &cfg.cluster;
    let f = load_features(cfg)?;
    let rows: Vec<usize> = (0..f.len()).filter(|&i| f.is_present(i)).collect();
    let (data, dim) = match &c.block {
        Some(name) => {
            let b = f
                .block(name)
                .ok_or_else(|| CliError::config(format!("no feature block named '{name}'"), Some("cluster.block".into())))?;
            (rows.iter().flat_map(|&i| b.row(i).iter().copied()).collect::<Vec<f64>>(), b.dim())
        }
        None => (rows.iter().flat_map(|&i| f.concat_row(i)).collect(), f.width()),
    };
    let n = rows.len();
    let k_max = c.k_max.min(n.saturating_sub(1));
    let sel = select_k(&data, dim, c.k_min..=k_max, cfg.seed, &c.kmeans)?;
    let k = c.k.unwrap_or(sel.recommended);
    let a = kmeans(&data, dim, k, cfg.seed, &c.kmeans)?;

    let p = run.output("clusters.csv");
    write_csv(
        &p,
        &["node", "cluster"],
        rows.iter().zip(&a.labels).map(|(&i, l)| vec![f.ids()[i].clone(), l.to_string()]),
    )?;
    let p = run.output("k_selection.csv");
    write_csv(
        &p,
        &["k", "inertia", "silhouette"],
        sel.per_k.iter().map(|d| vec![d.k.to_string(), num(d.inertia), num(d.silhouette)]),
    )?;

    let scores = match &cfg.data.scores {
        Some(p) => Some(read_numbers(p)?),
        None => None,
    };
    let bins = match &scores {
        Some(s) if rows.iter().all(|&i| s.contains_key(&f.ids()[i])) => {
            let v: Vec<f64> = rows.iter().map(|&i| s[&f.ids()[i]]).collect();
            Some(bin_scores(&v, cfg.analysis.n_bins)?)
        }
        Some(_) => {
            eprintln!("some clustered users have no score; partisanship profile skipped");
            None
        }
        None => None,
    };
    let profiles = group_profiles(
        &a.labels,
        k,
        &data,
        dim,
        bins.as_deref().map(|b| (b, cfg.analysis.n_bins)),
        &BTreeMap::new(),
    )?;
    run.write_json(
        "clusters.json",
        &json!({
            "k": k,
            "recommended": sel.recommended,
            "elbow": sel.elbow,
            "inertia": a.inertia,
            "iterations": a.iterations,
            "converged": a.converged,
            "reseeds": a.reseeds,
            "profiles": profiles,
        }),
    )?;
    Ok(())
}
