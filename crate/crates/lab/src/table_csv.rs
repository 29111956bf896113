//! Fiber tables as comma-separated text (schema v1).
//!
//! The first non-comment row is the header and must name every schema
//! column exactly once, in any order. Lines starting with `#` (such as
//! `# unit: ...`) are skipped. Numbers use `.` decimals with no grouping.
//! `id` and `point_count` are non-negative integers; other cells may be
//! empty or `NaN` for a missing measurement.
//!
//! The writer emits the header in schema order and each float in its
//! shortest round-trip form, so `parse_csv(write_csv(t)) == t` bit for bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use xct_core::table::{column_index, FiberRecord, FiberTable, TableError, COLUMNS, COLUMN_COUNT};

use crate::LabError;

const ID: usize = 0;
const POINT_COUNT: usize = 18;

/// Foreign header name → schema column, or `null` to drop the column.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HeaderMapping(pub BTreeMap<String, Option<String>>);

impl HeaderMapping {
    pub fn validate(&self) -> Result<(), LabError> {
        let mut targets = BTreeMap::new();
        for (from, to) in &self.0 {
            let Some(to) = to else { continue };
            if column_index(to).is_none() {
                return Err(TableError::unknown_column(to).into());
            }
            if let Some(prev) = targets.insert(to.as_str(), from.as_str()) {
                return Err(LabError::Invalid(format!(
                    "header mapping sends both `{prev}` and `{from}` to `{to}`"
                )));
            }
        }
        Ok(())
    }
}

pub fn parse_csv(text: &str) -> Result<FiberTable, TableError> {
    parse_rows(text, None)
}

/// Parses a table whose header is first renamed through `mapping`.
pub fn parse_csv_mapped(text: &str, mapping: &HeaderMapping) -> Result<FiberTable, LabError> {
    mapping.validate()?;
    Ok(parse_rows(text, Some(mapping))?)
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn parse_rows(text: &str, mapping: Option<&HeaderMapping>) -> Result<FiberTable, TableError> {
    let mut rows = reader(text).into_records();
    let header = match rows.next() {
        Some(Ok(h)) => h,
        Some(Err(e)) => return Err(csv_error(0, e)),
        None => {
            return Err(TableError::HeaderMismatch {
                missing: xct_core::table::column_names(),
                extra: vec![],
            })
        }
    };

    // For each file column: the schema column it fills, if any.
    let mut slots: Vec<Option<usize>> = Vec::with_capacity(header.len());
    let mut seen = [false; COLUMN_COUNT];
    let mut extra = Vec::new();
    for name in header.iter() {
        let target = match mapping.and_then(|m| m.0.get(name)) {
            Some(None) => {
                slots.push(None);
                continue;
            }
            Some(Some(to)) => to.as_str(),
            None => name,
        };
        match column_index(target) {
            Some(k) if !seen[k] => {
                seen[k] = true;
                slots.push(Some(k));
            }
            _ => {
                extra.push(name.to_string());
                slots.push(None);
            }
        }
    }
    let missing: Vec<String> = COLUMNS
        .iter()
        .zip(seen)
        .filter(|(_, s)| !s)
        .map(|((n, _), _)| n.to_string())
        .collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(TableError::HeaderMismatch { missing, extra });
    }

    let mut records = Vec::new();
    for (i, row) in rows.enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| csv_error(row_no, e))?;
        if row.len() != slots.len() {
            return Err(TableError::RowArity {
                row: row_no,
                got: row.len(),
                expected: slots.len(),
            });
        }
        let mut values = [f64::NAN; COLUMN_COUNT];
        for (token, slot) in row.iter().zip(&slots) {
            let Some(k) = *slot else { continue };
            values[k] = parse_cell(token, k).ok_or_else(|| TableError::NumericParse {
                row: row_no,
                column: COLUMNS[k].0.to_string(),
                token: token.to_string(),
            })?;
        }
        let record = FiberRecord::from_values(&values).map_err(|_| {
            let k = if values[ID].is_nan() { ID } else { POINT_COUNT };
            TableError::NumericParse {
                row: row_no,
                column: COLUMNS[k].0.to_string(),
                token: values[k].to_string(),
            }
        })?;
        records.push(record);
    }
    FiberTable::new(records)
}

fn parse_cell(token: &str, column: usize) -> Option<f64> {
    if column == ID || column == POINT_COUNT {
        return token.parse::<u64>().ok().map(|v| v as f64);
    }
    if token.is_empty() || token.eq_ignore_ascii_case("nan") {
        return Some(f64::NAN);
    }
    // Rust's float grammar already rejects grouping and ',' decimals.
    token.parse::<f64>().ok()
}

fn csv_error(row: usize, e: csv::Error) -> TableError {
    TableError::NumericParse {
        row,
        column: String::new(),
        token: e.to_string(),
    }
}

/// Header line plus one line per record, `\n`-terminated.
pub fn write_csv(t: &FiberTable) -> String {
    let mut out = String::with_capacity(64 * (t.len() + 1));
    out.push_str(&header_line());
    out.push('\n');
    for r in t.records() {
        for (k, v) in r.values().iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            match k {
                ID => write!(out, "{}", r.id),
                POINT_COUNT => write!(out, "{}", r.point_count),
                _ if v.is_nan() => write!(out, "NaN"),
                _ => write!(out, "{v:?}"),
            }
            .expect("writing to a String cannot fail");
        }
        out.push('\n');
    }
    out
}

/// A `# unit:` comment line in column order, for human readers.
pub fn units_comment() -> String {
    let units: Vec<&str> = COLUMNS.iter().map(|(_, u)| *u).collect();
    format!("# unit: {}", units.join(","))
}

pub fn header_line() -> String {
    COLUMNS.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: u64) -> FiberRecord {
        FiberRecord {
            id,
            start: [0.0, 0.0, 0.0],
            end: [0.0, 3.0, 4.0],
            straight_length: 5.0,
            curved_length: 5.5,
            curvature_ratio: 1.1,
            diameter: 0.1,
            surface_area: 1.7278759594743862,
            volume: 0.04319689898685965,
            theta: 36.86989764584402,
            phi: 90.0,
            cog: [0.0, 1.5, 2.0],
            point_count: 12,
            mean_tubularity: 0.25,
        }
    }

    #[test]
    fn empty_and_single() {
        let empty = FiberTable::new(vec![]).unwrap();
        let text = write_csv(&empty);
        assert_eq!(text.lines().count(), 1);
        assert_eq!(parse_csv(&text).unwrap(), empty);
        let one = FiberTable::new(vec![record(1)]).unwrap();
        let text = write_csv(&one);
        assert_eq!(text.lines().count(), 2);
        assert_eq!(parse_csv(&text).unwrap(), one);
    }

    #[test]
    fn comments_and_column_order() {
        let one = FiberTable::new(vec![record(4)]).unwrap();
        let text = write_csv(&one);
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        let rev = |v: &[&str]| v.iter().rev().copied().collect::<Vec<_>>().join(",");
        let shuffled = format!("{}\n# unit: whatever\n{}\n", rev(&header), rev(&row));
        assert_eq!(parse_csv(&shuffled).unwrap(), one);
    }

    #[test]
    fn errors_name_the_problem() {
        let good = write_csv(&FiberTable::new(vec![record(1)]).unwrap());
        let (header, row) = good.trim_end().split_once('\n').unwrap();

        let short = row.rsplit_once(',').unwrap().0;
        assert_eq!(
            parse_csv(&format!("{header}\n{row}\n{short}\n")),
            Err(TableError::RowArity { row: 2, got: 19, expected: 20 })
        );

        let bad = row.replacen("5.0", "5,0", 1);
        assert!(matches!(
            parse_csv(&format!("{header}\n{bad}\n")),
            Err(TableError::RowArity { row: 1, .. })
        ));
        let bad = row.replacen("5.5", "5.5.1", 1);
        match parse_csv(&format!("{header}\n{bad}\n")) {
            Err(TableError::NumericParse { row, column, token }) => {
                assert_eq!((row, column.as_str(), token.as_str()), (1, "curved_length", "5.5.1"));
            }
            other => panic!("{other:?}"),
        }

        let renamed = header.replace("diameter", "dia");
        match parse_csv(&format!("{renamed}\n")) {
            Err(TableError::HeaderMismatch { missing, extra }) => {
                assert_eq!(missing, vec!["diameter"]);
                assert_eq!(extra, vec!["dia"]);
            }
            other => panic!("{other:?}"),
        }

        assert_eq!(
            parse_csv(&format!("{header}\n{row}\n{row}\n")),
            Err(TableError::DuplicateId(1))
        );
    }

    #[test]
    fn missing_measurements_survive() {
        let mut r = record(2);
        r.diameter = f64::NAN;
        r.surface_area = f64::NAN;
        r.volume = f64::NAN;
        let t = FiberTable::new(vec![r]).unwrap();
        let back = parse_csv(&write_csv(&t)).unwrap();
        assert!(back.records()[0].diameter.is_nan());
        assert_eq!(write_csv(&back), write_csv(&t));
    }

    #[test]
    fn import_mapping() {
        let text = write_csv(&FiberTable::new(vec![record(9)]).unwrap());
        let foreign = text
            .replacen("straight_length", "Length", 1)
            .replacen("id,", "Label,", 1);
        let foreign = foreign
            .lines()
            .map(|l| format!("{l},x"))
            .collect::<Vec<_>>()
            .join("\n");
        let mut m = HeaderMapping::default();
        m.0.insert("Length".into(), Some("straight_length".into()));
        m.0.insert("Label".into(), Some("id".into()));
        let foreign = foreign.replacen(",x", ",Comment", 1);
        m.0.insert("Comment".into(), None);
        let t = parse_csv_mapped(&foreign, &m).unwrap();
        assert_eq!(t.records()[0], record(9));

        m.0.insert("Other".into(), Some("bogus".into()));
        assert!(parse_csv_mapped(&foreign, &m).is_err());
    }
}
