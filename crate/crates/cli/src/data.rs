//! Small tabular inputs and outputs shared by the commands.

use crate::error::{io_err, CliError};
use serde::Deserialize;
use socweave::graph::{Edge, EdgeType, SocialGraph};
use socweave::heads::Labels;
use std::collections::{BTreeSet, HashMap};
use std::path::Path;

/// Two-column CSV with a header row.
pub fn read_pairs(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        if rec.len() < 2 {
            return Err(CliError::runtime(format!("{}:{}: expected 2 columns", path.display(), i + 2)));
        }
        out.push((rec[0].to_string(), rec[1].to_string()));
    }
    Ok(out)
}

pub fn read_numbers(path: &Path) -> Result<HashMap<String, f64>, CliError> {
    read_pairs(path)?
        .into_iter()
        .enumerate()
        .map(|(i, (k, v))| {
            v.parse::<f64>()
                .map(|x| (k, x))
                .map_err(|_| CliError::runtime(format!("{}:{}: '{v}' is not a number", path.display(), i + 2)))
        })
        .collect()
}

/// Labels keyed by node id, plus the category names when they were not
/// integers.
pub struct LabelColumn {
    pub ids: Vec<String>,
    pub labels: Labels,
    pub classes: Vec<String>,
}

/// Integer labels become classes as given; other numbers become a single
/// regression target; anything else is a category, numbered in sorted order.
pub fn read_labels(path: &Path) -> Result<LabelColumn, CliError> {
    let pairs = read_pairs(path)?;
    let ids: Vec<String> = pairs.iter().map(|p| p.0.clone()).collect();
    if let Ok(classes) = pairs.iter().map(|p| p.1.parse::<usize>()).collect::<Result<Vec<_>, _>>() {
        let k = classes.iter().max().map_or(0, |m| m + 1);
        return Ok(LabelColumn {
            ids,
            labels: Labels::Classes(classes),
            classes: (0..k).map(|c| c.to_string()).collect(),
        });
    }
    if let Ok(values) = pairs.iter().map(|p| p.1.parse::<f64>()).collect::<Result<Vec<_>, _>>() {
        return Ok(LabelColumn {
            ids,
            labels: Labels::Values {
                outputs: 1,
                data: values,
            },
            classes: Vec::new(),
        });
    }
    let names: Vec<String> = pairs
        .iter()
        .map(|p| p.1.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let data = pairs.iter().map(|p| index[p.1.as_str()]).collect();
    Ok(LabelColumn {
        ids,
        labels: Labels::Classes(data),
        classes: names,
    })
}

#[derive(Debug, Deserialize)]
pub struct ProfileRow {
    pub id: serde_json::Value,
    #[serde(default)]
    pub profile: String,
    #[serde(default)]
    pub endorsements: Vec<String>,
}

pub fn read_profiles(path: &Path) -> Result<Vec<(String, ProfileRow)>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let row: ProfileRow = serde_json::from_str(line)
            .map_err(|e| CliError::runtime(format!("{}:{}: {e}", path.display(), i + 1)))?;
        let id = match &row.id {
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Number(n) => n.to_string(),
            _ => return Err(CliError::runtime(format!("{}:{}: bad id", path.display(), i + 1))),
        };
        out.push((id, row));
    }
    Ok(out)
}

/// The subgraph induced by `keep`, with the original index of every kept node.
pub fn induced(g: &SocialGraph, keep: &[bool]) -> Result<(SocialGraph, Vec<usize>), CliError> {
    let old: Vec<usize> = (0..g.node_count()).filter(|&v| keep[v]).collect();
    let mut new = vec![usize::MAX; g.node_count()];
    for (i, &v) in old.iter().enumerate() {
        new[v] = i;
    }
    let ids = old.iter().map(|&v| g.id(v).to_string()).collect();
    let edges: Vec<Edge> = EdgeType::ALL
        .into_iter()
        .flat_map(|et| g.edges(et).iter().copied())
        .filter(|e| keep[e.src] && keep[e.dst])
        .map(|e| Edge {
            src: new[e.src],
            dst: new[e.dst],
            ..e
        })
        .collect();
    let (sub, _) = SocialGraph::from_edges(ids, edges)?;
    Ok((sub, old))
}

/// Writes a CSV with a header; values are formatted by the caller.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn num(v: f64) -> String {
    v.to_string()
}
