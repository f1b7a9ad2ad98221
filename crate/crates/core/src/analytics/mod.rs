//! Network polarization and homophily measurements: random-walk
//! controversy, assortativity, shuffle nulls, group communication ratios
//! and moral-combination ratios.

mod assort;
mod groups;
mod rwc;

pub use assort::{assortativity, shuffle_null, weighted_neighbor_corr, NeighborScope};
pub use groups::{
    combo_label, group_ratio, in_out_group_ratio, moral_combo_ratio, ComboRow, ComboTable, GroupRatioMatrix,
    InOutRatio, RetweetEvent,
};
pub use rwc::{
    authoritative_nodes, random_walk, rwc_matrix, rwc_matrix_with_stop, NeighborChoice, RwcConfig, RwcMatrix, Walk,
};

use crate::{Error, Result};
use std::path::Path;

/// Writes a square matrix with labelled rows and columns. Undefined
/// entries are written as `NaN`.
pub fn write_matrix_csv(path: impl AsRef<Path>, corner: &str, labels: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let path = path.as_ref();
    let err = |e: csv::Error| Error::Format(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    let mut header = vec![corner.to_string()];
    header.extend(labels.iter().cloned());
    w.write_record(&header).map_err(err)?;
    for (label, row) in labels.iter().zip(rows) {
        let mut rec = vec![label.clone()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
