#![allow(dead_code)]

use std::path::{Path, PathBuf};

use serde_json::Value;
use xct_core::geometry::Pose6DoF;
use xct_core::table::{FiberRecord, FiberTable};
use xct_core::math::Vec3;
use xct_core::phantom::{generate, CylinderRanges, PhantomSpec};
use xct_core::tracking::synth::{render_frame, SynthOptions};
use xct_core::tracking::GrayImage;
use xct_lab::datasets::{DatasetEntry, DatasetRegistry};
use xct_lab::session::{ServiceContext, Tracker};
use xct_lab::table_csv::write_csv;
use xct_lab::volume_files::write_volume;

pub fn schema() -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas/xct.schema.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Validates `value` against one definition of the shipped schema.
pub fn assert_schema(def: &str, value: &Value) {
    let mut doc = schema();
    assert!(doc["$defs"].get(def).is_some(), "no schema definition `{def}`");
    doc["$ref"] = Value::String(format!("#/$defs/{def}"));
    let v = jsonschema::validator_for(&doc).expect("schema compiles");
    let errors: Vec<String> = v.iter_errors(value).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "`{def}` violations: {errors:?}\n{value:#}");
}

/// A small phantom with its ground truth as the fiber table.
pub fn write_dataset(dir: &Path, id: &str, seed: u64, markers: &[u32]) -> DatasetEntry {
    let spec = PhantomSpec {
        dims: [48, 48, 48],
        seed,
        ..PhantomSpec::default()
    };
    let ranges = CylinderRanges {
        length: (12.0, 24.0),
        ..CylinderRanges::default()
    };
    let (volume, _, table) = generate(&spec, 4, &ranges).unwrap();
    let raw = dir.join(format!("{id}.raw"));
    let meta = write_volume(&raw, &volume).unwrap();
    let csv = dir.join(format!("{id}.csv"));
    std::fs::write(&csv, write_csv(&table)).unwrap();
    DatasetEntry {
        id: id.into(),
        name: format!("Sample {id}"),
        volume: raw,
        meta,
        csv: Some(csv),
        markers: markers.to_vec(),
        marker_poses: Default::default(),
        default_views: None,
    }
}

/// Registry with dataset A (markers 1, 2) and B (marker 3).
pub fn context(dir: &Path, workspace_dir: Option<PathBuf>) -> ServiceContext {
    let mut reg = DatasetRegistry::new();
    reg.register(write_dataset(dir, "A", 1, &[1, 2])).unwrap();
    reg.register(write_dataset(dir, "B", 2, &[3])).unwrap();
    ServiceContext::new(reg, Tracker::standard(), workspace_dir)
}

/// Marker-to-camera pose 500 mm in front of the camera, tilted a little.
pub fn marker_pose(x: f64, tilt_deg: f64) -> Pose6DoF {
    let mut p = Pose6DoF::from_axis_angle(Vec3::new(1.0, 0.3, 0.0), tilt_deg.to_radians());
    p.translation = Vec3::new(x, 20.0, 500.0);
    p
}

/// A 1280×960 frame showing `markers` (id, pose) from the standard tracker.
pub fn frame(markers: &[(u32, Pose6DoF)]) -> GrayImage {
    let t = Tracker::standard();
    let placed: Vec<_> = markers
        .iter()
        .map(|(id, pose)| (*t.dictionary.get(*id).unwrap(), *pose))
        .collect();
    render_frame(1280, 960, &t.intrinsics, &placed, &SynthOptions::default())
}

/// `n` plausible fiber records in a 250×250×300 mm box.
pub fn random_table(n: usize, seed: u64) -> FiberTable {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let records = (1..=n as u64)
        .map(|id| {
            let start = [rng.random_range(0.0..250.0), rng.random_range(0.0..250.0), rng.random_range(0.0..300.0)];
            let dir = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.05..1.0)).normalize();
            let len: f64 = rng.random_range(5.0..60.0);
            let end = [start[0] + dir.x * len, start[1] + dir.y * len, start[2] + dir.z * len];
            let straight = Vec3::from(end).metric_distance(&Vec3::from(start));
            let curved = straight * rng.random_range(1.0..1.2);
            let d: f64 = rng.random_range(2.0..8.0);
            let theta = dir.z.abs().acos().to_degrees();
            let phi = dir.y.atan2(dir.x).to_degrees().rem_euclid(360.0) % 360.0;
            FiberRecord {
                id,
                start,
                end,
                straight_length: straight,
                curved_length: curved,
                curvature_ratio: curved / straight,
                diameter: d,
                surface_area: std::f64::consts::PI * d * curved,
                volume: std::f64::consts::PI * d * d / 4.0 * curved,
                theta: theta.clamp(0.0, 90.0),
                phi,
                cog: [(start[0] + end[0]) / 2.0, (start[1] + end[1]) / 2.0, (start[2] + end[2]) / 2.0],
                point_count: rng.random_range(2..200),
                mean_tubularity: rng.random_range(0.0..0.99),
            }
        })
        .collect();
    FiberTable::new(records).unwrap()
}
