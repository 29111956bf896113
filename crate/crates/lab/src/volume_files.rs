//! Volumes on disk: a headerless `.raw` payload next to a `.meta` sidecar.

use std::path::{Path, PathBuf};

use xct_core::volume::{load_raw, parse_meta, write_meta, Volume, VolumeMeta};

use crate::error::{read_file, read_text, write_file};
use crate::LabError;

/// Sidecar for a payload: `x.raw` → `x.meta`, falling back to an existing
/// `x.mhd`.
pub fn sidecar_path(raw: &Path) -> PathBuf {
    let meta = raw.with_extension("meta");
    if !meta.exists() {
        let mhd = raw.with_extension("mhd");
        if mhd.exists() {
            return mhd;
        }
    }
    meta
}

pub fn read_meta(path: &Path) -> Result<VolumeMeta, LabError> {
    Ok(parse_meta(&read_text(path)?)?)
}

/// Loads `raw` with the given sidecar, or the one found by [`sidecar_path`].
pub fn read_volume(raw: &Path, meta: Option<&Path>) -> Result<Volume, LabError> {
    let meta_path = meta.map_or_else(|| sidecar_path(raw), Path::to_path_buf);
    let meta = read_meta(&meta_path)?;
    let bytes = read_file(raw)?;
    Ok(load_raw(&bytes, meta)?)
}

/// Writes the payload and its `.meta` sidecar; returns the sidecar path.
pub fn write_volume(raw: &Path, v: &Volume) -> Result<PathBuf, LabError> {
    write_file(raw, &v.to_raw_bytes())?;
    let meta_path = raw.with_extension("meta");
    write_file(&meta_path, write_meta(v.meta()).as_bytes())?;
    Ok(meta_path)
}
