//! Placed views and the sample pose, persisted as one JSON document per
//! session.
//!
//! ```json
//! {"version": 1, "active_dataset": "A", "sample_pose": {...}, "next_view_id": 3,
//!  "views": [{"id": 1, "spec": {"kind": "histogram", "column": "straight_length", "bins": 16},
//!             "pose": {"rotation": [1,0,0,0], "translation": [0,0,0], "scale": 1}}]}
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use xct_core::charts::{
    bar_aggregate, density, histogram, scatter3, Aggregate, BarChart, Bandwidth, DensityCurve,
    Histogram, HistogramSpec, Series3D, DEFAULT_CLASSES,
};
use xct_core::geometry::Pose6DoF;
use xct_core::math::Vec3;
use xct_core::render::TransferFunction;
use xct_core::table::{column_index, FiberTable, CATEGORICAL};
use xct_core::volume::Axis;

use crate::error::{read_json, write_json};
use crate::LabError;

pub const WORKSPACE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RenderMode {
    Mip,
    Dvr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewKind {
    Volume,
    Slice,
    Histogram,
    Scatter3,
    Bar,
    Density,
}

fn default_classes() -> usize {
    DEFAULT_CLASSES
}

/// What a view shows. Column names are schema-v1 names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ViewSpec {
    Volume {
        mode: RenderMode,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tf: Option<TransferFunction>,
    },
    Slice {
        axis: Axis,
        index: usize,
    },
    Histogram {
        column: String,
        bins: usize,
        /// Explicit `[lo, hi)`; automatic when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        range: Option<[f64; 2]>,
    },
    Density {
        column: String,
        /// Kernel bandwidth; Silverman's rule when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bandwidth: Option<f64>,
    },
    Bar {
        group: String,
        value: String,
        aggregate: Aggregate,
        #[serde(default = "default_classes")]
        classes: usize,
    },
    Scatter3 {
        x: String,
        y: String,
        z: String,
    },
}

/// Chart data for one view, tagged like its spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChartData {
    Histogram { column: String, histogram: Histogram },
    Density { column: String, curve: DensityCurve },
    Bar { chart: BarChart },
    Scatter3 { series: Series3D },
}

fn measurement(name: &str) -> Result<(), String> {
    if column_index(name).is_none() {
        return Err(format!("unknown column `{name}`"));
    }
    if CATEGORICAL.contains(&name) {
        return Err(format!("column `{name}` is an identifier, not a measurement"));
    }
    Ok(())
}

impl ViewSpec {
    pub fn kind(&self) -> ViewKind {
        match self {
            ViewSpec::Volume { .. } => ViewKind::Volume,
            ViewSpec::Slice { .. } => ViewKind::Slice,
            ViewSpec::Histogram { .. } => ViewKind::Histogram,
            ViewSpec::Density { .. } => ViewKind::Density,
            ViewSpec::Bar { .. } => ViewKind::Bar,
            ViewSpec::Scatter3 { .. } => ViewKind::Scatter3,
        }
    }

    /// Parameter checks that need no data. `dims` bounds slice indices when
    /// a volume is loaded.
    pub fn validate(&self, dims: Option<[usize; 3]>) -> Result<(), String> {
        match self {
            ViewSpec::Volume { .. } => Ok(()),
            ViewSpec::Slice { axis, index } => match dims {
                Some(d) if *index >= d[axis.index()] => Err(format!(
                    "slice index {index} out of range for axis {axis:?} of length {}",
                    d[axis.index()]
                )),
                _ => Ok(()),
            },
            ViewSpec::Histogram { column, bins, range } => {
                measurement(column)?;
                let spec = match range {
                    Some([lo, hi]) => HistogramSpec::explicit(*bins, *lo, *hi),
                    None => HistogramSpec::auto(*bins),
                };
                spec.validate().map_err(|e| e.to_string())
            }
            ViewSpec::Density { column, bandwidth } => {
                measurement(column)?;
                match bandwidth {
                    Some(h) if !(*h > 0.0 && h.is_finite()) => {
                        Err(format!("bandwidth must be positive, got {h}"))
                    }
                    _ => Ok(()),
                }
            }
            ViewSpec::Bar { group, value, classes, .. } => {
                measurement(group)?;
                measurement(value)?;
                if *classes == 0 {
                    return Err("classes must be at least 1".into());
                }
                Ok(())
            }
            ViewSpec::Scatter3 { x, y, z } => {
                measurement(x)?;
                measurement(y)?;
                measurement(z)
            }
        }
    }

    /// Chart data over `t`; `None` for volume and slice views.
    pub fn chart(&self, t: &FiberTable) -> Option<Result<ChartData, LabError>> {
        let run = || -> Result<ChartData, LabError> {
            Ok(match self {
                ViewSpec::Histogram { column, bins, range } => {
                    let spec = match range {
                        Some([lo, hi]) => HistogramSpec::explicit(*bins, *lo, *hi),
                        None => HistogramSpec::auto(*bins),
                    };
                    ChartData::Histogram {
                        column: column.clone(),
                        histogram: histogram(&t.measurement(column)?, &spec)?,
                    }
                }
                ViewSpec::Density { column, bandwidth } => {
                    let bw = bandwidth.map_or(Bandwidth::Auto, Bandwidth::Fixed);
                    ChartData::Density {
                        column: column.clone(),
                        curve: density(&t.measurement(column)?, bw)?,
                    }
                }
                ViewSpec::Bar { group, value, aggregate, classes } => ChartData::Bar {
                    chart: bar_aggregate(t, group, value, *aggregate, *classes)?,
                },
                ViewSpec::Scatter3 { x, y, z } => ChartData::Scatter3 {
                    series: scatter3(t, x, y, z)?,
                },
                ViewSpec::Volume { .. } | ViewSpec::Slice { .. } => unreachable!(),
            })
        };
        match self {
            ViewSpec::Volume { .. } | ViewSpec::Slice { .. } => None,
            _ => Some(run()),
        }
    }
}

/// The views a dataset opens with unless its registry entry lists its own:
/// a volume rendering, histograms of both lengths, and a
/// diameter/surface-area/curved-length scatterplot.
pub fn default_views(has_table: bool) -> Vec<ViewSpec> {
    let mut v = vec![ViewSpec::Volume {
        mode: RenderMode::Mip,
        tf: None,
    }];
    if has_table {
        for column in ["straight_length", "curved_length"] {
            v.push(ViewSpec::Histogram {
                column: column.into(),
                bins: 16,
                range: None,
            });
        }
        v.push(ViewSpec::Scatter3 {
            x: "diameter".into(),
            y: "surface_area".into(),
            z: "curved_length".into(),
        });
    }
    v
}

/// Default placement for the `k`-th view: a row 300 mm apart, right of the
/// sample.
pub fn default_pose(k: usize) -> Pose6DoF {
    Pose6DoF::from_translation(Vec3::new(300.0 * k as f64, 0.0, 0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedView {
    pub id: u32,
    pub spec: ViewSpec,
    /// Offset from the sample pose.
    pub pose: Pose6DoF,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub version: u32,
    pub active_dataset: Option<String>,
    /// Sample (volume frame) to camera, from the latest tracked frame.
    pub sample_pose: Pose6DoF,
    pub next_view_id: u32,
    pub views: Vec<PlacedView>,
}

impl Default for Workspace {
    fn default() -> Self {
        Self {
            version: WORKSPACE_VERSION,
            active_dataset: None,
            sample_pose: Pose6DoF::identity(),
            next_view_id: 1,
            views: Vec::new(),
        }
    }
}

impl Workspace {
    pub fn get(&self, id: u32) -> Option<&PlacedView> {
        self.views.iter().find(|v| v.id == id)
    }

    pub fn place(&mut self, spec: ViewSpec, pose: Pose6DoF) -> u32 {
        let id = self.next_view_id;
        self.next_view_id += 1;
        self.views.push(PlacedView { id, spec, pose });
        id
    }

    pub fn get_mut(&mut self, id: u32) -> Option<&mut PlacedView> {
        self.views.iter_mut().find(|v| v.id == id)
    }

    pub fn remove(&mut self, id: u32) -> Option<PlacedView> {
        let k = self.views.iter().position(|v| v.id == id)?;
        Some(self.views.remove(k))
    }

    /// World pose of a view: the sample pose applied after the view offset.
    pub fn content_pose(&self, id: u32) -> Option<Pose6DoF> {
        self.get(id).map(|v| v.pose.then(&self.sample_pose))
    }

    pub fn validate(&self) -> Result<(), LabError> {
        if self.version != WORKSPACE_VERSION {
            return Err(LabError::Invalid(format!(
                "unsupported workspace version {}",
                self.version
            )));
        }
        let mut ids = std::collections::BTreeSet::new();
        for v in &self.views {
            if !ids.insert(v.id) {
                return Err(LabError::Invalid(format!("duplicate view id {}", v.id)));
            }
            if v.id >= self.next_view_id {
                return Err(LabError::Invalid(format!(
                    "view id {} not below next_view_id {}",
                    v.id, self.next_view_id
                )));
            }
            v.spec
                .validate(None)
                .map_err(|e| LabError::Invalid(format!("view {}: {e}", v.id)))?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), LabError> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let ws: Workspace = read_json(path)?;
        ws.validate()?;
        Ok(ws)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn view_spec_wire_form() {
        let v = ViewSpec::Histogram {
            column: "straight_length".into(),
            bins: 16,
            range: None,
        };
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json, r#"{"kind":"histogram","column":"straight_length","bins":16}"#);
        let bar: ViewSpec = serde_json::from_str(
            r#"{"kind":"bar","group":"diameter","value":"volume","aggregate":"mean"}"#,
        )
        .unwrap();
        assert_eq!(
            bar,
            ViewSpec::Bar {
                group: "diameter".into(),
                value: "volume".into(),
                aggregate: Aggregate::Mean,
                classes: 5
            }
        );
        assert!(serde_json::from_str::<ViewSpec>(r#"{"kind":"histogram","column":"x","bins":1,"oops":1}"#).is_err());
    }

    #[test]
    fn validation() {
        let h = |c: &str, bins| ViewSpec::Histogram { column: c.into(), bins, range: None };
        assert!(h("straight_length", 16).validate(None).is_ok());
        assert!(h("bogus", 16).validate(None).is_err());
        assert!(h("id", 16).validate(None).is_err());
        assert!(h("diameter", 0).validate(None).is_err());
        let s = ViewSpec::Slice { axis: Axis::Z, index: 4 };
        assert!(s.validate(None).is_ok());
        assert!(s.validate(Some([8, 8, 4])).is_err());
        let d = ViewSpec::Density { column: "theta".into(), bandwidth: Some(0.0) };
        assert!(d.validate(None).is_err());
    }

    #[test]
    fn ids_and_content_pose() {
        let mut ws = Workspace::default();
        let a = ws.place(default_views(true)[1].clone(), default_pose(1));
        let b = ws.place(default_views(true)[2].clone(), default_pose(2));
        assert_eq!((a, b), (1, 2));
        ws.remove(a);
        let c = ws.place(default_views(true)[3].clone(), default_pose(3));
        assert_eq!(c, 3);
        ws.sample_pose = Pose6DoF::from_axis_angle(Vec3::z(), std::f64::consts::FRAC_PI_2);
        let p = ws.content_pose(b).unwrap().apply(&Vec3::zeros());
        assert!((p - Vec3::new(0.0, 600.0, 0.0)).norm() < 1e-9);
        ws.validate().unwrap();
        let mut bad = ws.clone();
        bad.views[1].id = bad.views[0].id;
        assert!(bad.validate().is_err());
    }
}
