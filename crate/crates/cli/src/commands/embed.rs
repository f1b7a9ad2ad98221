use super::{load_features, load_graph};
use crate::data::write_csv;
use crate::error::CliError;
use crate::manifest::Run;
use socweave::embedder::{load_checkpoint, save_checkpoint, train as fit, EmbedModel};
use socweave::features::FeatureTable;
use socweave::matrix_file::{index_path, read_matrix, write_matrix};

fn write_embeddings(run: &mut Run, model: &EmbedModel, f: &FeatureTable) -> Result<(), CliError> {
    let emb = model.infer_all(f)?;
    let missing = emb.missing.iter().filter(|&&m| m).count();
    if missing > 0 {
        eprintln!("{missing} nodes had no features; their embeddings are zero");
    }
    let p = run.output("embeddings.sllm");
    write_matrix(&p, &emb.to_matrix()?)?;
    run.record(&index_path(&p));
    Ok(())
}

/// Trains on the graph and embeds every node that has features, including
/// nodes absent from the graph.
pub fn train(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.cfg;
    let g = load_graph(cfg)?;
    let all = load_features(cfg)?;
    let aligned = all.aligned_to(g.ids());
    let (model, report) = fit(&g, &aligned, &cfg.train)?;
    let p = run.output("model.ckpt");
    save_checkpoint(&model, &p)?;
    run.write_json("train_report.json", &report)?;
    write_embeddings(run, &model, &all)
}

pub fn infer(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.cfg;
    let model = load_checkpoint(cfg.path_or(&cfg.data.checkpoint, "model.ckpt"))?;
    let f = load_features(cfg)?;
    write_embeddings(run, &model, &f)
}

/// Embedding matrix as `id,e0,e1,...` CSV.
pub fn export(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.cfg;
    let m = read_matrix(cfg.path_or(&cfg.data.embeddings, "embeddings.sllm"))?;
    let mut header = vec!["id".to_string()];
    header.extend((0..m.dim).map(|j| format!("e{j}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let p = run.output("embeddings.csv");
    write_csv(
        &p,
        &header,
        (0..m.rows()).map(|i| {
            let mut r = vec![m.ids[i].clone()];
            r.extend(m.row(i).iter().map(|v| v.to_string()));
            r
        }),
    )
}
