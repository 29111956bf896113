//! Cylinder meshes as JSON with base64 binary arrays.
//!
//! ```json
//! {"fiber_id": 3, "vertex_count": 130, "triangle_count": 128,
//!  "positions": "<base64 f32le xyz…>", "normals": "<base64 f32le xyz…>",
//!  "indices": "<base64 u32le abc…>"}
//! ```

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use serde::{Deserialize, Serialize};
use xct_core::geometry::CylinderMesh;

use crate::LabError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeshPayload {
    pub fiber_id: u64,
    pub vertex_count: usize,
    pub triangle_count: usize,
    pub positions: String,
    pub normals: String,
    pub indices: String,
}

fn f32_bytes(v: &[[f64; 3]]) -> String {
    let bytes: Vec<u8> = v
        .iter()
        .flatten()
        .flat_map(|&x| (x as f32).to_le_bytes())
        .collect();
    STANDARD.encode(bytes)
}

fn decode_f32(name: &str, s: &str, count: usize) -> Result<Vec<[f64; 3]>, LabError> {
    let bytes = STANDARD
        .decode(s)
        .map_err(|e| LabError::Invalid(format!("mesh {name}: {e}")))?;
    if bytes.len() != 12 * count {
        return Err(LabError::Invalid(format!(
            "mesh {name}: expected {} bytes, got {}",
            12 * count,
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(12)
        .map(|c| {
            std::array::from_fn(|k| {
                f32::from_le_bytes(c[4 * k..4 * k + 4].try_into().unwrap()) as f64
            })
        })
        .collect())
}

impl From<&CylinderMesh> for MeshPayload {
    fn from(m: &CylinderMesh) -> Self {
        let indices: Vec<u8> = m
            .indices
            .iter()
            .flatten()
            .flat_map(|i| i.to_le_bytes())
            .collect();
        MeshPayload {
            fiber_id: m.fiber_id,
            vertex_count: m.vertices.len(),
            triangle_count: m.indices.len(),
            positions: f32_bytes(&m.vertices),
            normals: f32_bytes(&m.normals),
            indices: STANDARD.encode(indices),
        }
    }
}

impl MeshPayload {
    /// Decodes the arrays (coordinates come back rounded to `f32`).
    pub fn decode(&self) -> Result<CylinderMesh, LabError> {
        let vertices = decode_f32("positions", &self.positions, self.vertex_count)?;
        let normals = decode_f32("normals", &self.normals, self.vertex_count)?;
        let bytes = STANDARD
            .decode(&self.indices)
            .map_err(|e| LabError::Invalid(format!("mesh indices: {e}")))?;
        if bytes.len() != 12 * self.triangle_count {
            return Err(LabError::Invalid("mesh indices: wrong length".into()));
        }
        let indices: Vec<[u32; 3]> = bytes
            .chunks_exact(12)
            .map(|c| std::array::from_fn(|k| u32::from_le_bytes(c[4 * k..4 * k + 4].try_into().unwrap())))
            .collect();
        if indices.iter().flatten().any(|&i| i as usize >= self.vertex_count) {
            return Err(LabError::Invalid("mesh indices out of range".into()));
        }
        Ok(CylinderMesh {
            fiber_id: self.fiber_id,
            vertices,
            normals,
            indices,
        })
    }
}
