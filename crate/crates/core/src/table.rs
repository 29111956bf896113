//! The per-fiber attribute table (schema v1).
//!
//! Twenty columns, in this fixed order. Lengths and positions are in mm,
//! angles in degrees.
//!
//! | # | name | unit |
//! |---|------|------|
//! | 1 | `id` | – |
//! | 2–4 | `start_x`, `start_y`, `start_z` | mm |
//! | 5–7 | `end_x`, `end_y`, `end_z` | mm |
//! | 8 | `straight_length` (chord start→end) | mm |
//! | 9 | `curved_length` (polyline arc length) | mm |
//! | 10 | `curvature_ratio` (curved / straight) | – |
//! | 11 | `diameter` | mm |
//! | 12 | `surface_area` (π·d·curved) | mm² |
//! | 13 | `volume` (π·(d/2)²·curved) | mm³ |
//! | 14 | `theta` (angle to +z, 0–90) | deg |
//! | 15 | `phi` (azimuth, 0–360) | deg |
//! | 16–18 | `cog_x`, `cog_y`, `cog_z` | mm |
//! | 19 | `point_count` | – |
//! | 20 | `mean_tubularity` | – |

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::{floor, sqrt};

pub const SCHEMA_VERSION: u32 = 1;

pub const COLUMN_COUNT: usize = 20;

/// Column names and units, in file order.
pub const COLUMNS: [(&str, &str); COLUMN_COUNT] = [
    ("id", "-"),
    ("start_x", "mm"),
    ("start_y", "mm"),
    ("start_z", "mm"),
    ("end_x", "mm"),
    ("end_y", "mm"),
    ("end_z", "mm"),
    ("straight_length", "mm"),
    ("curved_length", "mm"),
    ("curvature_ratio", "-"),
    ("diameter", "mm"),
    ("surface_area", "mm^2"),
    ("volume", "mm^3"),
    ("theta", "deg"),
    ("phi", "deg"),
    ("cog_x", "mm"),
    ("cog_y", "mm"),
    ("cog_z", "mm"),
    ("point_count", "-"),
    ("mean_tubularity", "-"),
];

/// Columns holding identifiers rather than measurements.
pub const CATEGORICAL: [&str; 1] = ["id"];

pub fn column_index(name: &str) -> Option<usize> {
    COLUMNS.iter().position(|(n, _)| *n == name)
}

pub fn column_names() -> Vec<String> {
    COLUMNS.iter().map(|(n, _)| n.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TableError {
    #[error("header mismatch: missing {missing:?}, unexpected {extra:?}")]
    HeaderMismatch {
        missing: Vec<String>,
        extra: Vec<String>,
    },
    #[error("row {row}: expected {expected} fields, got {got}")]
    RowArity {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("row {row}, column `{column}`: cannot parse `{token}`")]
    NumericParse {
        row: usize,
        column: String,
        token: String,
    },
    #[error("duplicate fiber id {0}")]
    DuplicateId(u64),
    #[error("unknown column `{name}`; valid columns: {valid:?}")]
    UnknownColumn { name: String, valid: Vec<String> },
    #[error("column `{0}` is an identifier, not a measurement")]
    NonNumeric(String),
    #[error("fiber {id}: {reason}")]
    InvalidRecord { id: u64, reason: String },
}

impl TableError {
    pub fn unknown_column(name: &str) -> Self {
        TableError::UnknownColumn {
            name: name.to_string(),
            valid: column_names(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberRecord {
    pub id: u64,
    pub start: [f64; 3],
    pub end: [f64; 3],
    pub straight_length: f64,
    pub curved_length: f64,
    pub curvature_ratio: f64,
    pub diameter: f64,
    pub surface_area: f64,
    pub volume: f64,
    pub theta: f64,
    pub phi: f64,
    pub cog: [f64; 3],
    pub point_count: u64,
    pub mean_tubularity: f64,
}

impl FiberRecord {
    /// Values in column order.
    pub fn values(&self) -> [f64; COLUMN_COUNT] {
        [
            self.id as f64,
            self.start[0],
            self.start[1],
            self.start[2],
            self.end[0],
            self.end[1],
            self.end[2],
            self.straight_length,
            self.curved_length,
            self.curvature_ratio,
            self.diameter,
            self.surface_area,
            self.volume,
            self.theta,
            self.phi,
            self.cog[0],
            self.cog[1],
            self.cog[2],
            self.point_count as f64,
            self.mean_tubularity,
        ]
    }

    /// Inverse of [`FiberRecord::values`]. `id` and `point_count` must be
    /// non-negative integers.
    pub fn from_values(v: &[f64; COLUMN_COUNT]) -> Result<Self, String> {
        let as_count = |x: f64, name: &str| {
            if x >= 0.0 && floor(x) == x && x <= u64::MAX as f64 {
                Ok(x as u64)
            } else {
                Err(alloc::format!("`{name}` must be a non-negative integer, got {x}"))
            }
        };
        Ok(Self {
            id: as_count(v[0], "id")?,
            start: [v[1], v[2], v[3]],
            end: [v[4], v[5], v[6]],
            straight_length: v[7],
            curved_length: v[8],
            curvature_ratio: v[9],
            diameter: v[10],
            surface_area: v[11],
            volume: v[12],
            theta: v[13],
            phi: v[14],
            cog: [v[15], v[16], v[17]],
            point_count: as_count(v[18], "point_count")?,
            mean_tubularity: v[19],
        })
    }

    pub fn value(&self, column: usize) -> f64 {
        self.values()[column]
    }

    /// Checks the record invariants. Non-finite measurements are treated as
    /// missing and skipped.
    pub fn validate(&self) -> Result<(), TableError> {
        let fail = |reason: String| TableError::InvalidRecord {
            id: self.id,
            reason,
        };
        if self.id < 1 {
            return Err(fail("id must be >= 1".into()));
        }
        if self.point_count < 2 {
            return Err(fail("point_count must be >= 2".into()));
        }
        let chord = sqrt(
            (0..3)
                .map(|i| (self.end[i] - self.start[i]) * (self.end[i] - self.start[i]))
                .sum(),
        );
        if chord.is_finite()
            && self.straight_length.is_finite()
            && (chord - self.straight_length).abs() > 1e-4
        {
            return Err(fail(alloc::format!(
                "straight_length {} differs from endpoint distance {}",
                self.straight_length,
                chord
            )));
        }
        let (s, c) = (self.straight_length, self.curved_length);
        if s.is_finite() && c.is_finite() && c < s - 1e-9 * s.abs().max(1.0) {
            return Err(fail(alloc::format!(
                "curved_length {c} is shorter than straight_length {s}"
            )));
        }
        if self.diameter.is_finite() && self.diameter <= 0.0 {
            return Err(fail("diameter must be positive".into()));
        }
        if self.volume.is_finite() && self.volume <= 0.0 {
            return Err(fail("volume must be positive".into()));
        }
        if self.theta.is_finite() && !(0.0..=90.0).contains(&self.theta) {
            return Err(fail("theta outside [0, 90]".into()));
        }
        if self.phi.is_finite() && !(0.0..360.0).contains(&self.phi) {
            return Err(fail("phi outside [0, 360)".into()));
        }
        if self.mean_tubularity.is_finite() && !(0.0..1.0).contains(&self.mean_tubularity) {
            return Err(fail("mean_tubularity outside [0, 1)".into()));
        }
        Ok(())
    }
}

/// Ordered fiber records with unique ids.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FiberTable {
    records: Vec<FiberRecord>,
}

impl FiberTable {
    /// Validates every record and id uniqueness.
    pub fn new(records: Vec<FiberRecord>) -> Result<Self, TableError> {
        let mut seen = BTreeSet::new();
        for r in &records {
            if !seen.insert(r.id) {
                return Err(TableError::DuplicateId(r.id));
            }
            r.validate()?;
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[FiberRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// All values of one column, in row order.
    pub fn column(&self, name: &str) -> Result<Vec<f64>, TableError> {
        let idx = column_index(name).ok_or_else(|| TableError::unknown_column(name))?;
        Ok(self.records.iter().map(|r| r.value(idx)).collect())
    }

    /// Like [`FiberTable::column`] but rejects identifier columns.
    pub fn measurement(&self, name: &str) -> Result<Vec<f64>, TableError> {
        let values = self.column(name)?;
        if CATEGORICAL.contains(&name) {
            return Err(TableError::NonNumeric(name.to_string()));
        }
        Ok(values)
    }

    pub fn into_records(self) -> Vec<FiberRecord> {
        self.records
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn straight_record(id: u64, start: [f64; 3], end: [f64; 3], diameter: f64) -> FiberRecord {
        let len = sqrt((0..3).map(|i| (end[i] - start[i]).powi(2)).sum());
        let r = diameter / 2.0;
        FiberRecord {
            id,
            start,
            end,
            straight_length: len,
            curved_length: len,
            curvature_ratio: 1.0,
            diameter,
            surface_area: core::f64::consts::PI * diameter * len,
            volume: core::f64::consts::PI * r * r * len,
            theta: 0.0,
            phi: 0.0,
            cog: core::array::from_fn(|i| 0.5 * (start[i] + end[i])),
            point_count: 2,
            mean_tubularity: 0.5,
        }
    }

    #[test]
    fn twenty_unique_columns() {
        let names: BTreeSet<_> = COLUMNS.iter().map(|c| c.0).collect();
        assert_eq!(names.len(), COLUMN_COUNT);
        assert_eq!(column_index("id"), Some(0));
        assert_eq!(column_index("mean_tubularity"), Some(19));
    }

    #[test]
    fn values_round_trip() {
        let r = straight_record(3, [0.0, 1.0, 2.0], [0.0, 1.0, 12.0], 0.8);
        assert_eq!(FiberRecord::from_values(&r.values()).unwrap(), r);
        let mut bad = r.values();
        bad[0] = 1.5;
        assert!(FiberRecord::from_values(&bad).is_err());
    }

    #[test]
    fn columns_and_errors() {
        let t = FiberTable::new(vec![
            straight_record(4, [0.0; 3], [0.0, 0.0, 1.0], 1.0),
            straight_record(2, [0.0; 3], [0.0, 0.0, 3.0], 1.0),
        ])
        .unwrap();
        assert_eq!(t.column("id").unwrap(), [4.0, 2.0]);
        assert_eq!(t.column("straight_length").unwrap(), [1.0, 3.0]);
        match t.column("bogus") {
            Err(TableError::UnknownColumn { name, valid }) => {
                assert_eq!(name, "bogus");
                assert_eq!(valid.len(), 20);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(t.measurement("id"), Err(TableError::NonNumeric("id".into())));
    }

    #[test]
    fn rejects_duplicates_and_bad_records() {
        let a = straight_record(1, [0.0; 3], [1.0, 0.0, 0.0], 1.0);
        assert_eq!(FiberTable::new(vec![a, a]), Err(TableError::DuplicateId(1)));
        let mut short = a;
        short.curved_length = 0.5;
        assert!(matches!(
            FiberTable::new(vec![short]),
            Err(TableError::InvalidRecord { id: 1, .. })
        ));
        let mut off = a;
        off.straight_length = 1.1;
        assert!(FiberTable::new(vec![off]).is_err());
    }

    #[test]
    fn missing_values_are_tolerated() {
        let mut a = straight_record(1, [0.0; 3], [1.0, 0.0, 0.0], 1.0);
        a.diameter = f64::NAN;
        assert!(FiberTable::new(vec![a]).is_ok());
    }
}
