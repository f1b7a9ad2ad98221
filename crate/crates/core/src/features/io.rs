use super::{Engagement, FeatureBlock, FeatureTable, Record, RecordTable};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

fn lines(path: &Path) -> Result<impl Iterator<Item = (usize, Result<String>)> + '_> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(BufReader::new(f)
        .lines()
        .enumerate()
        .map(move |(i, l)| (i + 1, l.map_err(|e| Error::io(path, e))))
        .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty())))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn id_string(v: &serde_json::Value) -> Option<String> {
    match v {
        serde_json::Value::String(s) => Some(s.clone()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

/// Reads node features from JSONL: one object per node with an `id` and one
/// numeric array per block, e.g. `{"id": "42", "text": [...], "metadata": [...]}`.
///
/// Blocks are ordered by name; every row must carry the same blocks with
/// the same dimensions.
pub fn load_node_features(path: impl AsRef<Path>) -> Result<FeatureTable> {
    let path = path.as_ref();
    let mut ids = Vec::new();
    let mut blocks: BTreeMap<String, (usize, Vec<f64>)> = BTreeMap::new();
    for (line, text) in lines(path)? {
        let text = text?;
        let obj: serde_json::Map<String, serde_json::Value> =
            serde_json::from_str(&text).map_err(|e| parse_err(path, line, e.to_string()))?;
        let id = obj
            .get("id")
            .and_then(id_string)
            .ok_or_else(|| parse_err(path, line, "missing 'id'"))?;
        let row_blocks: Vec<(&String, &serde_json::Value)> =
            obj.iter().filter(|(k, _)| k.as_str() != "id").collect();
        if ids.is_empty() {
            for (k, _) in &row_blocks {
                blocks.insert((*k).clone(), (0, Vec::new()));
            }
        } else if row_blocks.len() != blocks.len()
            || row_blocks.iter().any(|(k, _)| !blocks.contains_key(*k))
        {
            return Err(parse_err(path, line, "row blocks differ from the first row"));
        }
        for (k, v) in row_blocks {
            let arr = v
                .as_array()
                .ok_or_else(|| parse_err(path, line, format!("block '{k}' is not an array")))?;
            let vals: Vec<f64> = arr
                .iter()
                .map(|x| x.as_f64())
                .collect::<Option<_>>()
                .ok_or_else(|| parse_err(path, line, format!("block '{k}' has a non-number")))?;
            let entry = blocks.get_mut(k).expect("checked above");
            if ids.is_empty() {
                entry.0 = vals.len();
            } else if entry.0 != vals.len() {
                return Err(parse_err(
                    path,
                    line,
                    format!("block '{k}' has dim {} but earlier rows have {}", vals.len(), entry.0),
                ));
            }
            entry.1.extend(vals);
        }
        ids.push(id);
    }
    let blocks = blocks
        .into_iter()
        .map(|(name, (dim, data))| FeatureBlock::new(name, dim, data))
        .collect::<Result<Vec<_>>>()?;
    FeatureTable::new(ids, blocks)
}

/// Writes present rows in the JSONL layout read by [`load_node_features`].
pub fn write_node_features(table: &FeatureTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    for (i, id) in table.ids().iter().enumerate() {
        if !table.is_present(i) {
            continue;
        }
        let mut obj = serde_json::Map::new();
        obj.insert("id".into(), serde_json::Value::String(id.clone()));
        for b in table.blocks() {
            obj.insert(b.name.clone(), serde_json::json!(b.row(i)));
        }
        writeln!(w, "{}", serde_json::Value::Object(obj)).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordRow {
    author: serde_json::Value,
    ordinal: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    text: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    toxicity: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hate: Option<f64>,
    #[serde(default)]
    likes: f64,
    #[serde(default)]
    retweets: f64,
    #[serde(default)]
    replies: f64,
    #[serde(default)]
    quotes: f64,
    #[serde(default)]
    moral: Option<Vec<u8>>,
}

/// Reads per-record rows from JSONL. `author` ids are resolved against
/// `node_ids` (the dense node order).
///
/// A row gives either a 6-entry `toxicity` array or a scalar `hate` score
/// (stored as the first toxicity attribute); `moral` holds the 10 flags.
pub fn load_records(path: impl AsRef<Path>, node_ids: &[String]) -> Result<RecordTable> {
    let path = path.as_ref();
    let index: HashMap<&str, usize> = node_ids
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let mut records = Vec::new();
    for (line, text) in lines(path)? {
        let text = text?;
        let row: RecordRow =
            serde_json::from_str(&text).map_err(|e| parse_err(path, line, e.to_string()))?;
        let author_id = id_string(&row.author).ok_or_else(|| parse_err(path, line, "bad author"))?;
        let author = *index
            .get(author_id.as_str())
            .ok_or_else(|| parse_err(path, line, format!("unknown author '{author_id}'")))?;
        let toxicity = match (row.toxicity, row.hate) {
            (Some(t), _) => <[f64; 6]>::try_from(t.as_slice())
                .map_err(|_| parse_err(path, line, "toxicity needs 6 values"))?,
            (None, Some(h)) => [h, 0.0, 0.0, 0.0, 0.0, 0.0],
            (None, None) => [0.0; 6],
        };
        let moral = match row.moral {
            Some(m) => <[u8; 10]>::try_from(m.as_slice())
                .map_err(|_| parse_err(path, line, "moral needs 10 flags"))?,
            None => [0; 10],
        };
        records.push(Record {
            author,
            ordinal: row.ordinal,
            text: row.text,
            toxicity,
            engagement: Engagement {
                likes: row.likes,
                retweets: row.retweets,
                replies: row.replies,
                quotes: row.quotes,
            },
            moral,
        });
    }
    RecordTable::new(records).map_err(|e| parse_err(path, 0, e.to_string()))
}

/// Writes records in the JSONL layout read by [`load_records`].
pub fn write_records(table: &RecordTable, node_ids: &[String], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    for r in table.records() {
        let row = RecordRow {
            author: serde_json::Value::String(node_ids[r.author].clone()),
            ordinal: r.ordinal,
            text: r.text.clone(),
            toxicity: Some(r.toxicity.to_vec()),
            hate: None,
            likes: r.engagement.likes,
            retweets: r.engagement.retweets,
            replies: r.engagement.replies,
            quotes: r.engagement.quotes,
            moral: Some(r.moral.to_vec()),
        };
        let s = serde_json::to_string(&row).map_err(|e| Error::Format(e.to_string()))?;
        writeln!(w, "{s}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
