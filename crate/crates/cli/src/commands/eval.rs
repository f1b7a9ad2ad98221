use crate::data::{num, read_labels, write_csv};
use crate::error::CliError;
use crate::manifest::Run;
use serde_json::json;
use socweave::features::load_node_features;
use socweave::heads::{compare_paired, evaluate_repeated, LabeledSet, RepeatedEval, Task};
use socweave::matrix_file::read_matrix;
use std::collections::HashMap;

/// Repeated-split head evaluation of the embeddings, and of the raw node
/// features as a baseline when they are available.
pub fn run(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.cfg;
    let m = read_matrix(cfg.path_or(&cfg.data.embeddings, "embeddings.sllm"))?;
    let labels = read_labels(&cfg.path_or(&cfg.data.labels, "labels.csv"))?;
    let pos: HashMap<&str, usize> = m.ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let mut keep = Vec::new();
    let mut rows = Vec::new();
    for (i, id) in labels.ids.iter().enumerate() {
        if let Some(&r) = pos.get(id.as_str()) {
            keep.push(i);
            rows.push(r);
        }
    }
    if keep.len() < labels.ids.len() {
        eprintln!("{} labeled nodes have no embedding", labels.ids.len() - keep.len());
    }
    let set = LabeledSet::new(rows, labels.labels.subset(&keep))?;
    let x: Vec<f64> = m.data.iter().map(|&v| f64::from(v)).collect();
    let mut results: Vec<(&str, RepeatedEval)> = vec![("embedding", evaluate_repeated(&x, m.dim, &set, &cfg.split, &cfg.head)?)];

    let feature_path = cfg.path_or(&cfg.data.node_features, "node_features.jsonl");
    if feature_path.exists() {
        let f = load_node_features(&feature_path)?.aligned_to(&m.ids);
        let dim = f.width();
        let xf: Vec<f64> = (0..f.len()).flat_map(|i| f.concat_row(i)).collect();
        results.push(("features", evaluate_repeated(&xf, dim, &set, &cfg.split, &cfg.head)?));
    }

    let p = run.output("eval.csv");
    write_csv(
        &p,
        &["representation", "seed", "metric"],
        results.iter().flat_map(|(name, r)| {
            r.per_seed
                .iter()
                .map(move |s| vec![name.to_string(), s.seed.to_string(), num(s.metric)])
        }),
    )?;
    let p = run.output("eval_summary.csv");
    write_csv(
        &p,
        &["representation", "mean", "sd", "seeds"],
        results
            .iter()
            .map(|(name, r)| vec![name.to_string(), num(r.mean), num(r.sd), r.per_seed.len().to_string()]),
    )?;
    let paired = match results.as_slice() {
        [(_, a), (_, b)] => Some(compare_paired(a, b)?),
        _ => None,
    };
    let metric = match set.labels.task() {
        Task::Classification => "macro_f1",
        Task::Regression => "mean_pearson",
    };
    run.write_json(
        "eval.json",
        &json!({
            "metric": metric,
            "labeled": set.rows.len(),
            "classes": labels.classes,
            "embedding_vs_features": paired,
        }),
    )?;
    Ok(())
}
