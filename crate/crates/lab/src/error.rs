use std::path::{Path, PathBuf};

use xct_core::charts::ChartError;
use xct_core::fibers::ExtractionError;
use xct_core::geometry::GeometryError;
use xct_core::phantom::PhantomError;
use xct_core::render::RenderError;
use xct_core::table::TableError;
use xct_core::tracking::{DictionaryError, RegistryError};
use xct_core::volume::VolumeError;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Volume(#[from] VolumeError),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Extraction(#[from] ExtractionError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Phantom(#[from] PhantomError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Dictionary(#[from] DictionaryError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error("image: {0}")]
    Image(String),
    #[error("{0}")]
    Invalid(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl LabError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn json(path: &Path, source: serde_json::Error) -> Self {
        LabError::Json {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Failures caused by the program rather than by its inputs.
    pub fn is_internal(&self) -> bool {
        matches!(self, LabError::Internal(_))
    }
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>, LabError> {
    std::fs::read(path).map_err(|e| LabError::io(path, e))
}

pub(crate) fn read_text(path: &Path) -> Result<String, LabError> {
    std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), LabError> {
    std::fs::write(path, bytes).map_err(|e| LabError::io(path, e))
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, LabError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| LabError::json(path, e))
}

pub(crate) fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), LabError> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| LabError::Internal(e.to_string()))?;
    text.push('\n');
    write_file(path, text.as_bytes())
}
