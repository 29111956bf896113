//! The dataset registry: which volume and fiber table belong to which
//! markers.
//!
//! ```json
//! {"datasets": [{"id": "A", "name": "Sample A", "volume": "a.raw", "meta": "a.meta",
//!                "csv": "a.csv", "markers": [0, 1],
//!                "marker_poses": {"1": {"rotation": [1,0,0,0], "translation": [0,-80,0]}},
//!                "default_views": [{"kind": "histogram", "column": "diameter", "bins": 8}]}]}
//! ```
//!
//! Relative paths resolve against the registry file's directory.
//! `marker_poses` places the volume frame in each marker's frame (identity
//! when absent); `default_views` replaces the built-in default layout.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use xct_core::geometry::Pose6DoF;
use xct_core::table::FiberTable;
use xct_core::tracking::MarkerRegistry;
use xct_core::volume::Volume;

use crate::error::{read_json, read_text};
use crate::table_csv::parse_csv;
use crate::volume_files::{read_meta, read_volume};
use crate::workspace::{default_views, ViewSpec};
use crate::LabError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub id: String,
    pub name: String,
    pub volume: PathBuf,
    pub meta: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub markers: Vec<u32>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub marker_poses: BTreeMap<u32, Pose6DoF>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_views: Option<Vec<ViewSpec>>,
}

impl DatasetEntry {
    /// Volume frame → marker frame for `marker`.
    pub fn marker_pose(&self, marker: u32) -> Pose6DoF {
        self.marker_poses.get(&marker).copied().unwrap_or_default()
    }

    pub fn views(&self) -> Vec<ViewSpec> {
        self.default_views
            .clone()
            .unwrap_or_else(|| default_views(self.csv.is_some()))
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.volume);
        fix(&mut self.meta);
        if let Some(c) = self.csv.as_mut() {
            fix(c);
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RegistryFile {
    datasets: Vec<DatasetEntry>,
}

/// A dataset read into memory.
#[derive(Debug)]
pub struct LoadedDataset {
    pub entry: DatasetEntry,
    pub volume: Volume,
    pub table: Option<FiberTable>,
}

impl LoadedDataset {
    pub fn load(entry: &DatasetEntry) -> Result<Self, LabError> {
        let volume = read_volume(&entry.volume, Some(&entry.meta))?;
        let table = match &entry.csv {
            Some(p) => Some(parse_csv(&read_text(p)?)?),
            None => None,
        };
        Ok(Self {
            entry: entry.clone(),
            volume,
            table,
        })
    }
}

/// Summary row for listings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub id: String,
    pub name: String,
    pub markers: Vec<u32>,
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub dtype: String,
    pub has_table: bool,
}

#[derive(Debug, Clone, Default)]
pub struct DatasetRegistry {
    entries: Vec<DatasetEntry>,
    markers: MarkerRegistry,
}

impl DatasetRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Reads a registry file and registers every entry.
    pub fn load(path: &Path) -> Result<Self, LabError> {
        let file: RegistryFile = read_json(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut reg = Self::new();
        for mut e in file.datasets {
            e.resolve(base);
            reg.register(e)?;
        }
        Ok(reg)
    }

    /// Adds an entry after checking its id, files, markers and views.
    pub fn register(&mut self, entry: DatasetEntry) -> Result<(), LabError> {
        if entry.id.is_empty() {
            return Err(LabError::Invalid("dataset id must not be empty".into()));
        }
        if self.get(&entry.id).is_some() {
            return Err(LabError::Invalid(format!("duplicate dataset id `{}`", entry.id)));
        }
        let files = [Some(&entry.volume), Some(&entry.meta), entry.csv.as_ref()];
        for p in files.into_iter().flatten() {
            if !p.is_file() {
                return Err(LabError::Invalid(format!(
                    "dataset `{}`: file {} does not exist",
                    entry.id,
                    p.display()
                )));
            }
        }
        if let Some(m) = entry.marker_poses.keys().find(|m| !entry.markers.contains(m)) {
            return Err(LabError::Invalid(format!(
                "dataset `{}`: pose given for unlisted marker {m}",
                entry.id
            )));
        }
        for v in entry.default_views.iter().flatten() {
            v.validate(None)
                .map_err(|e| LabError::Invalid(format!("dataset `{}`: {e}", entry.id)))?;
        }
        let mut markers = self.markers.clone();
        for &m in &entry.markers {
            markers.link(m, &entry.id)?;
        }
        self.markers = markers;
        self.entries.push(entry);
        Ok(())
    }

    pub fn entries(&self) -> &[DatasetEntry] {
        &self.entries
    }

    pub fn get(&self, id: &str) -> Option<&DatasetEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn markers(&self) -> &MarkerRegistry {
        &self.markers
    }

    pub fn by_marker(&self, marker: u32) -> Option<&DatasetEntry> {
        let id = self.markers.resolve(marker).ok()?;
        self.get(id)
    }

    pub fn summaries(&self) -> Result<Vec<DatasetSummary>, LabError> {
        self.entries
            .iter()
            .map(|e| {
                let meta = read_meta(&e.meta)?;
                Ok(DatasetSummary {
                    id: e.id.clone(),
                    name: e.name.clone(),
                    markers: e.markers.clone(),
                    dims: meta.dims,
                    spacing: meta.spacing,
                    dtype: meta.dtype.name().into(),
                    has_table: e.csv.is_some(),
                })
            })
            .collect()
    }
}

/// Loads datasets once and shares them between sessions.
#[derive(Debug, Default)]
pub struct DatasetCache {
    loaded: std::sync::Mutex<BTreeMap<String, Arc<LoadedDataset>>>,
}

impl DatasetCache {
    pub fn get_or_load(&self, entry: &DatasetEntry) -> Result<Arc<LoadedDataset>, LabError> {
        if let Some(d) = self.loaded.lock().expect("cache poisoned").get(&entry.id) {
            return Ok(d.clone());
        }
        // Loading happens outside the lock; a racing load of the same entry
        // only wastes work.
        let d = Arc::new(LoadedDataset::load(entry)?);
        let mut map = self.loaded.lock().expect("cache poisoned");
        Ok(map.entry(entry.id.clone()).or_insert(d).clone())
    }
}
