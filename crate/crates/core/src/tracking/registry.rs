//! Marker id → dataset id links.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegistryError {
    #[error("marker {0} is not linked to any dataset")]
    UnknownMarker(u32),
    #[error("marker {marker} is already linked to `{existing}`")]
    Conflict { marker: u32, existing: String },
}

/// Several markers may point at one dataset; a marker points at one
/// dataset only.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MarkerRegistry {
    links: BTreeMap<u32, String>,
}

impl MarkerRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn link(&mut self, marker: u32, dataset: &str) -> Result<(), RegistryError> {
        match self.links.get(&marker) {
            Some(existing) if existing != dataset => Err(RegistryError::Conflict {
                marker,
                existing: existing.clone(),
            }),
            _ => {
                self.links.insert(marker, dataset.into());
                Ok(())
            }
        }
    }

    pub fn unlink_dataset(&mut self, dataset: &str) {
        self.links.retain(|_, d| d != dataset);
    }

    pub fn resolve(&self, marker: u32) -> Result<&str, RegistryError> {
        self.links
            .get(&marker)
            .map(String::as_str)
            .ok_or(RegistryError::UnknownMarker(marker))
    }

    pub fn markers_of(&self, dataset: &str) -> Vec<u32> {
        self.links
            .iter()
            .filter(|(_, d)| *d == dataset)
            .map(|(m, _)| *m)
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &str)> {
        self.links.iter().map(|(m, d)| (*m, d.as_str()))
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolve_links() {
        let mut r = MarkerRegistry::new();
        r.link(7, "fiber_sample_A").unwrap();
        r.link(8, "fiber_sample_A").unwrap();
        assert_eq!(r.resolve(7), Ok("fiber_sample_A"));
        assert_eq!(r.resolve(7), r.resolve(8));
        assert_eq!(r.resolve(9), Err(RegistryError::UnknownMarker(9)));
        assert!(matches!(r.link(7, "other"), Err(RegistryError::Conflict { .. })));
        assert_eq!(r.markers_of("fiber_sample_A"), [7, 8]);
        r.unlink_dataset("fiber_sample_A");
        assert!(r.is_empty());
    }
}
