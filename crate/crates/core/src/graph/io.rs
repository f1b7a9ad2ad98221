use super::{BuildReport, Edge, EdgeType, SocialGraph};
use crate::{Error, Result};
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

/// On-disk edge-list layouts. CSV and TSV need a header row naming
/// `src`, `dst`, `etype` and optionally `weight`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeFormat {
    Csv,
    Tsv,
    Jsonl,
}

impl EdgeFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("csv") => Ok(EdgeFormat::Csv),
            Some("tsv") | Some("txt") => Ok(EdgeFormat::Tsv),
            Some("jsonl") | Some("ndjson") => Ok(EdgeFormat::Jsonl),
            _ => Err(Error::invalid(format!(
                "cannot infer edge format from {}",
                path.display()
            ))),
        }
    }

    fn delimiter(self) -> u8 {
        match self {
            EdgeFormat::Tsv => b'\t',
            _ => b',',
        }
    }
}

struct RawEdge {
    src: String,
    dst: String,
    etype: EdgeType,
    weight: f64,
}

fn parse_weight(raw: Option<&str>, path: &Path, line: usize) -> Result<f64> {
    let w = match raw.map(str::trim) {
        None | Some("") => 1.0,
        Some(s) => s.parse::<f64>().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("weight '{s}' is not a number"),
        })?,
    };
    if !w.is_finite() || w < 1.0 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("weight {w} must be >= 1"),
        });
    }
    Ok(w)
}

fn parse_etype(raw: &str, path: &Path, line: usize) -> Result<EdgeType> {
    raw.parse().map_err(|e: Error| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: e.to_string(),
    })
}

fn read_delimited(path: &Path, format: EdgeFormat) -> Result<Vec<RawEdge>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(format.delimiter())
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name));
    let (src_c, dst_c, et_c) = match (col("src"), col("dst"), col("etype")) {
        (Some(s), Some(d), Some(t)) => (s, d, t),
        _ => {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: "header must name src, dst and etype columns".into(),
            })
        }
    };
    let w_c = col("weight");
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let field = |c: usize| {
            rec.get(c).map(str::trim).filter(|s| !s.is_empty()).ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("missing column '{}'", &headers[c]),
            })
        };
        out.push(RawEdge {
            src: field(src_c)?.to_string(),
            dst: field(dst_c)?.to_string(),
            etype: parse_etype(field(et_c)?, path, line)?,
            weight: parse_weight(w_c.and_then(|c| rec.get(c)), path, line)?,
        });
    }
    Ok(out)
}

fn json_id(v: Option<&serde_json::Value>) -> Option<String> {
    match v? {
        serde_json::Value::String(s) if !s.is_empty() => Some(s.clone()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn read_jsonl(path: &Path) -> Result<Vec<RawEdge>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        let obj: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        let src = json_id(obj.get("src")).ok_or_else(|| bad("missing 'src'".into()))?;
        let dst = json_id(obj.get("dst")).ok_or_else(|| bad("missing 'dst'".into()))?;
        let etype = obj
            .get("etype")
            .and_then(|v| v.as_str())
            .ok_or_else(|| bad("missing 'etype'".into()))?;
        let weight = match obj.get("weight") {
            None | Some(serde_json::Value::Null) => None,
            Some(v) => Some(
                v.as_f64()
                    .ok_or_else(|| bad("weight is not a number".into()))?
                    .to_string(),
            ),
        };
        out.push(RawEdge {
            src,
            dst,
            etype: parse_etype(etype, path, line_no)?,
            weight: parse_weight(weight.as_deref(), path, line_no)?,
        });
    }
    Ok(out)
}

/// Sorts ids numerically when all of them are unsigned integers, else lexically.
pub(crate) fn sort_ids(ids: &mut [String]) {
    if ids.iter().all(|s| s.parse::<u64>().is_ok()) {
        ids.sort_by_key(|s| s.parse::<u64>().expect("checked numeric"));
    } else {
        ids.sort();
    }
}

/// Reads an edge list and builds a graph with merged duplicates.
pub fn load_edges(path: impl AsRef<Path>, format: EdgeFormat) -> Result<(SocialGraph, BuildReport)> {
    let path = path.as_ref();
    let raw = match format {
        EdgeFormat::Csv | EdgeFormat::Tsv => read_delimited(path, format)?,
        EdgeFormat::Jsonl => read_jsonl(path)?,
    };
    let mut ids: Vec<String> = raw
        .iter()
        .flat_map(|r| [r.src.clone(), r.dst.clone()])
        .collect::<std::collections::HashSet<_>>()
        .into_iter()
        .collect();
    sort_ids(&mut ids);
    let index: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let edges: Vec<Edge> = raw
        .iter()
        .map(|r| Edge {
            src: index[r.src.as_str()],
            dst: index[r.dst.as_str()],
            etype: r.etype,
            weight: r.weight,
        })
        .collect();
    let (g, report) = SocialGraph::from_edges(ids, edges)?;
    log::info!(
        "loaded {}: {} nodes, {} edges ({} duplicates merged, {} self-loops dropped)",
        path.display(),
        g.node_count(),
        g.total_edge_count(),
        report.merged_duplicates,
        report.self_loops_dropped
    );
    Ok((g, report))
}

/// Writes every edge with external ids, ordered by type then `(src, dst)`.
pub fn write_edges(g: &SocialGraph, path: impl AsRef<Path>, format: EdgeFormat) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    let io = |e| Error::io(path, e);
    match format {
        EdgeFormat::Jsonl => {
            for et in g.etypes() {
                for e in g.edges(et) {
                    let obj = serde_json::json!({
                        "src": g.id(e.src),
                        "dst": g.id(e.dst),
                        "etype": et.as_str(),
                        "weight": e.weight,
                    });
                    writeln!(w, "{obj}").map_err(io)?;
                }
            }
        }
        EdgeFormat::Csv | EdgeFormat::Tsv => {
            let d = format.delimiter() as char;
            writeln!(w, "src{d}dst{d}etype{d}weight").map_err(io)?;
            for et in g.etypes() {
                for e in g.edges(et) {
                    writeln!(w, "{}{d}{}{d}{}{d}{}", g.id(e.src), g.id(e.dst), et, e.weight)
                        .map_err(io)?;
                }
            }
        }
    }
    w.flush().map_err(io)
}
