//! Table files: JSON with explicit nulls for unbounded cells.
//!
//! Floats are written shortest-round-trip and parsed back exactly, so a
//! save/load cycle reproduces the table bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ConformalTable;
use crate::{Error, Result};

const TABLE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TableFile {
    version: u32,
    epsilon: f64,
    predictor_fingerprint: u64,
    monotonized: bool,
    k_per_cell: Vec<Vec<usize>>,
    /// `null` marks an unbounded (+inf) cell.
    bounds: Vec<Vec<Option<f64>>>,
}

pub fn save_table(table: &ConformalTable, path: &Path) -> Result<()> {
    let file = TableFile {
        version: TABLE_VERSION,
        epsilon: table.epsilon,
        predictor_fingerprint: table.predictor_fingerprint,
        monotonized: table.monotonized,
        k_per_cell: table.k_per_cell.clone(),
        bounds: table
            .bounds
            .iter()
            .map(|row| row.iter().map(|&b| b.is_finite().then_some(b)).collect())
            .collect(),
    };
    let text = serde_json::to_string_pretty(&file)
        .map_err(|e| Error::Serialization(format!("encode table: {e}")))?;
    fs::write(path, text).map_err(|e| Error::Serialization(format!("write {path:?}: {e}")))
}

pub fn load_table(path: &Path) -> Result<ConformalTable> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Serialization(format!("read {path:?}: {e}")))?;
    let file: TableFile = serde_json::from_str(&text)
        .map_err(|e| Error::Serialization(format!("parse {path:?}: {e}")))?;
    if file.version != TABLE_VERSION {
        return Err(Error::Serialization(format!(
            "table version {} unsupported, expected {TABLE_VERSION}",
            file.version
        )));
    }
    let rows = file.bounds.len();
    let cols = file.bounds.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Err(Error::TableMismatch("empty bound grid".into()));
    }
    if file.bounds.iter().any(|r| r.len() != cols) {
        return Err(Error::TableMismatch("ragged bound grid".into()));
    }
    if file.k_per_cell.len() != rows || file.k_per_cell.iter().any(|r| r.len() != cols) {
        return Err(Error::TableMismatch(
            "calibration-count grid does not match bound grid".into(),
        ));
    }
    if !(file.epsilon > 0.0 && file.epsilon < 1.0) {
        return Err(Error::TableMismatch(format!(
            "miscoverage {} out of range",
            file.epsilon
        )));
    }
    Ok(ConformalTable {
        bounds: file
            .bounds
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|b| b.unwrap_or(f64::INFINITY))
                    .collect()
            })
            .collect(),
        epsilon: file.epsilon,
        k_per_cell: file.k_per_cell,
        predictor_fingerprint: file.predictor_fingerprint,
        monotonized: file.monotonized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn awkward_table() -> ConformalTable {
        // deliberately awkward floats plus an unbounded cell
        ConformalTable {
            bounds: vec![
                vec![0.1 + 0.2, f64::INFINITY, 1.5],
                vec![3.0_f64.sqrt(), 0.0, 2.0 / 3.0],
            ],
            epsilon: 0.1,
            k_per_cell: vec![vec![7, 0, 3], vec![7, 2, 3]],
            predictor_fingerprint: 0xdead_beef_cafe_f00d,
            monotonized: true,
        }
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let dir = std::env::temp_dir().join("confmerge-table-roundtrip");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("table.json");
        let table = awkward_table();
        save_table(&table, &path).unwrap();
        let loaded = load_table(&path).unwrap();
        assert_eq!(loaded, table);
        // a second save of the loaded table produces identical bytes
        let path2 = dir.join("table2.json");
        save_table(&loaded, &path2).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn wrong_version_is_rejected() {
        let dir = std::env::temp_dir().join("confmerge-table-version");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("table.json");
        save_table(&awkward_table(), &path).unwrap();
        let text = std::fs::read_to_string(&path)
            .unwrap()
            .replace("\"version\": 1", "\"version\": 99");
        std::fs::write(&path, text).unwrap();
        assert!(matches!(load_table(&path), Err(Error::Serialization(_))));
    }

    #[test]
    fn ragged_or_mismatched_grids_are_rejected() {
        let dir = std::env::temp_dir().join("confmerge-table-shape");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("table.json");

        let mut bad = awkward_table();
        bad.bounds[1].pop();
        save_raw(&bad, &path);
        assert!(matches!(load_table(&path), Err(Error::TableMismatch(_))));

        let mut bad = awkward_table();
        bad.k_per_cell.pop();
        save_raw(&bad, &path);
        assert!(matches!(load_table(&path), Err(Error::TableMismatch(_))));
    }

    // bypasses no validation today, but keeps the fixtures honest if
    // save_table ever starts checking shapes
    fn save_raw(table: &ConformalTable, path: &Path) {
        save_table(table, path).unwrap();
    }
}
