use super::load_graph;
use crate::config::PipelineConfig;
use crate::data::{induced, num, read_labels, read_numbers, read_pairs, write_csv};
use crate::error::CliError;
use crate::manifest::Run;
use serde_json::json;
use socweave::analytics::{
    assortativity, combo_label, group_ratio, in_out_group_ratio, moral_combo_ratio, rwc_matrix, shuffle_null,
    weighted_neighbor_corr, write_matrix_csv, RetweetEvent,
};
use socweave::features::load_records;
use socweave::graph::SocialGraph;
use socweave::heads::{bin_scores, Labels};
use socweave::stats::{mean, std_dev};

/// Graph restricted to users with a score, and their scores.
fn scored_graph(cfg: &PipelineConfig) -> Result<(SocialGraph, Vec<f64>), CliError> {
    let g = load_graph(cfg)?;
    let scores = read_numbers(&cfg.path_or(&cfg.data.scores, "scores.csv"))?;
    let keep: Vec<bool> = g.ids().iter().map(|id| scores.contains_key(id)).collect();
    let (sub, _) = induced(&g, &keep)?;
    let attr = sub.ids().iter().map(|id| scores[id]).collect();
    Ok((sub, attr))
}

/// Graph restricted to labeled users, their class per node and class names.
fn grouped_graph(cfg: &PipelineConfig) -> Result<(SocialGraph, Vec<usize>, Vec<String>), CliError> {
    let g = load_graph(cfg)?;
    let labels = read_labels(&cfg.path_or(&cfg.data.labels, "labels.csv"))?;
    let Labels::Classes(classes) = &labels.labels else {
        return Err(CliError::runtime("group analyses need categorical labels"));
    };
    let mut of = vec![None; g.node_count()];
    for (id, &c) in labels.ids.iter().zip(classes) {
        if let Some(v) = g.index_of(id) {
            of[v] = Some(c);
        }
    }
    let keep: Vec<bool> = of.iter().map(Option::is_some).collect();
    let (sub, old) = induced(&g, &keep)?;
    let groups = old.iter().map(|&v| of[v].expect("kept nodes are labeled")).collect();
    Ok((sub, groups, labels.classes))
}

pub fn rwc(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.cfg;
    let a = &cfg.analysis;
    let (g, attr) = scored_graph(cfg)?;
    let bins = bin_scores(&attr, a.n_bins)?;
    let m = rwc_matrix(&g, a.etype, &bins, a.n_bins, &a.rwc)?;
    let labels: Vec<String> = (1..=a.n_bins).map(|b| b.to_string()).collect();
    let p = run.output("rwc.csv");
    write_matrix_csv(&p, "start\\end", &labels, &m.rows())?;
    run.write_json(
        "rwc.json",
        &json!({
            "nodes": g.node_count(),
            "n_bins": m.n_bins,
            "n_walks": m.n_walks,
            "max_len": m.max_len,
            "authoritative": m.authoritative.len(),
            "landings": m.landings,
        }),
    )?;
    Ok(())
}

pub fn assort(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.cfg;
    let a = &cfg.analysis;
    let (g, attr) = scored_graph(cfg)?;
    let r = assortativity(&g, &attr, a.etype)?;
    let neighbor = weighted_neighbor_corr(&g, &attr, a.etype, a.scope)?;
    let null: Vec<f64> = (0..a.shuffles as u64)
        .map(|i| assortativity(&shuffle_null(&g, cfg.seed.wrapping_add(i)), &attr, a.etype))
        .collect::<Result<_, _>>()?;
    let mut rows = vec![vec!["observed".into(), "0".into(), num(r)], vec!["neighbor".into(), "0".into(), num(neighbor)]];
    rows.extend(null.iter().enumerate().map(|(i, v)| vec!["shuffle".into(), i.to_string(), num(*v)]));
    let p = run.output("assortativity.csv");
    write_csv(&p, &["kind", "replicate", "r"], rows)?;
    run.write_json(
        "assortativity.json",
        &json!({
            "etype": a.etype,
            "edges": g.edge_count(a.etype),
            "r": r,
            "neighbor_corr": neighbor,
            "null_mean": (!null.is_empty()).then(|| mean(&null)),
            "null_sd": (!null.is_empty()).then(|| std_dev(&null)),
        }),
    )?;
    Ok(())
}

pub fn ratio(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.cfg;
    let a = &cfg.analysis;
    let (g, groups, names) = grouped_graph(cfg)?;
    let m = group_ratio(&g, &groups, names.len(), a.etype, a.null_reps, cfg.seed)?;
    let p = run.output("group_ratio.csv");
    write_matrix_csv(&p, "actor\\source", &names, &m.rows())?;
    let p = run.output("group_in_out.csv");
    write_csv(
        &p,
        &["group", "in_ratio", "out_ratio"],
        in_out_group_ratio(&m)
            .iter()
            .map(|r| vec![names[r.group].clone(), num(r.in_ratio), num(r.out_ratio)]),
    )?;
    Ok(())
}

pub fn combo(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.cfg;
    let (g, groups, names) = grouped_graph(cfg)?;
    let full = load_graph(cfg)?;
    let records = load_records(cfg.path_or(&cfg.data.records, "records.jsonl"), full.ids())?;
    let events_path = cfg.path_or(&cfg.data.events, "events.csv");
    let mut events = Vec::new();
    let mut skipped = 0usize;
    for (i, (rec, who)) in read_pairs(&events_path)?.into_iter().enumerate() {
        let record: usize = rec
            .parse()
            .map_err(|_| CliError::runtime(format!("{}:{}: bad record index '{rec}'", events_path.display(), i + 2)))?;
        let Some(r) = records.records().get(record) else {
            return Err(CliError::runtime(format!(
                "{}:{}: record {record} out of range",
                events_path.display(),
                i + 2
            )));
        };
        match (g.index_of(full.id(r.author)), g.index_of(&who)) {
            (Some(_), Some(retweeter)) => events.push((record, retweeter)),
            _ => skipped += 1,
        }
    }
    if skipped > 0 {
        eprintln!("{skipped} events involve users without a group label; skipped");
    }
    // Records index the full graph. Unlabeled users get group 0 but appear in no event.
    let mut by_node = vec![0usize; full.node_count()];
    for (v, &c) in groups.iter().enumerate() {
        by_node[full.index_of(g.id(v)).expect("subgraph ids come from the graph")] = c;
    }
    let events: Vec<RetweetEvent> = events
        .into_iter()
        .map(|(record, sub_v)| RetweetEvent {
            record,
            retweeter: full.index_of(g.id(sub_v)).expect("subgraph ids come from the graph"),
        })
        .collect();
    let tables = moral_combo_ratio(&records, &events, &by_node, names.len(), cfg.analysis.min_in_count)?;
    let mut rows = Vec::new();
    for t in &tables {
        for (status, list) in [("ranked", &t.ranked), ("filtered", &t.filtered)] {
            for r in list {
                rows.push(vec![
                    names[t.group].clone(),
                    r.combo.to_string(),
                    combo_label(r.combo),
                    r.out_count.to_string(),
                    r.in_count.to_string(),
                    num(r.ratio),
                    status.to_string(),
                ]);
            }
        }
    }
    let p = run.output("combo_ratio.csv");
    write_csv(&p, &["group", "mask", "combo", "out_count", "in_count", "ratio", "status"], rows)?;
    Ok(())
}
