//! Marker dictionary and marker registry files.
//!
//! Dictionary: `{"markers": [{"id": 7, "bits": ["000000", "010110", …], "side_mm": 50}]}`
//! with six rows of six cells, `0` black and `1` white; the outer ring must
//! be black. Registry: `{"7": "dataset-a", "8": "dataset-a"}`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use xct_core::tracking::code::{BitGrid, GRID};
use xct_core::tracking::{Dictionary, MarkerDescriptor, MarkerRegistry};

use crate::error::{read_json, write_json};
use crate::LabError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkerEntry {
    pub id: u32,
    pub bits: Vec<String>,
    pub side_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DictionaryFile {
    pub markers: Vec<MarkerEntry>,
}

fn grid_rows(g: &BitGrid) -> Vec<String> {
    g.iter()
        .map(|row| row.iter().map(|&b| if b { '1' } else { '0' }).collect())
        .collect()
}

fn parse_grid(id: u32, rows: &[String]) -> Result<BitGrid, LabError> {
    let bad = || LabError::Invalid(format!("marker {id}: bits must be {GRID} rows of {GRID} '0'/'1' cells"));
    if rows.len() != GRID {
        return Err(bad());
    }
    let mut g = [[false; GRID]; GRID];
    for (r, row) in rows.iter().enumerate() {
        let cells: Vec<char> = row.chars().collect();
        if cells.len() != GRID {
            return Err(bad());
        }
        for (c, ch) in cells.into_iter().enumerate() {
            g[r][c] = match ch {
                '0' => false,
                '1' => true,
                _ => return Err(bad()),
            };
        }
    }
    Ok(g)
}

impl From<&Dictionary> for DictionaryFile {
    fn from(d: &Dictionary) -> Self {
        DictionaryFile {
            markers: d
                .markers
                .iter()
                .map(|m| MarkerEntry {
                    id: m.id,
                    bits: grid_rows(&m.bits),
                    side_mm: m.side_mm,
                })
                .collect(),
        }
    }
}

impl TryFrom<&DictionaryFile> for Dictionary {
    type Error = LabError;

    fn try_from(f: &DictionaryFile) -> Result<Self, LabError> {
        let markers = f
            .markers
            .iter()
            .map(|m| {
                Ok(MarkerDescriptor {
                    id: m.id,
                    bits: parse_grid(m.id, &m.bits)?,
                    side_mm: m.side_mm,
                })
            })
            .collect::<Result<Vec<_>, LabError>>()?;
        Ok(Dictionary::new(markers)?)
    }
}

pub fn read_dictionary(path: &Path) -> Result<Dictionary, LabError> {
    let f: DictionaryFile = read_json(path)?;
    Dictionary::try_from(&f)
}

pub fn write_dictionary(path: &Path, d: &Dictionary) -> Result<(), LabError> {
    write_json(path, &DictionaryFile::from(d))
}

pub fn read_marker_registry(path: &Path) -> Result<MarkerRegistry, LabError> {
    read_json(path)
}

pub fn write_marker_registry(path: &Path, r: &MarkerRegistry) -> Result<(), LabError> {
    write_json(path, r)
}
