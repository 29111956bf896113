//! Data behind the abstract-data views: histograms, kernel density curves,
//! grouped bar charts and 3-D scatter series. Everything here returns
//! numbers; drawing is left to the caller.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::{exp, floor, pow, sqrt};
use crate::table::{column_index, FiberTable, TableError, COLUMNS};
use crate::volume::Volume;

/// Number of points a density curve is sampled at.
pub const DENSITY_POINTS: usize = 256;
/// Default number of classes for [`bar_aggregate`].
pub const DEFAULT_CLASSES: usize = 5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChartError {
    #[error("no finite values to derive a range from")]
    EmptyInput,
    #[error("invalid range [{lo}, {hi})")]
    BadRange { lo: f64, hi: f64 },
    #[error("bin count must be at least 1")]
    BadBinCount,
    #[error("need at least 2 finite values, got {0}")]
    TooFewValues(usize),
    #[error("bandwidth must be finite and positive, got {0}")]
    BadBandwidth(f64),
    #[error(transparent)]
    Table(#[from] TableError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Range {
    Auto,
    Explicit { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub bin_count: usize,
    pub range: Range,
}

impl HistogramSpec {
    pub fn auto(bin_count: usize) -> Self {
        HistogramSpec {
            bin_count,
            range: Range::Auto,
        }
    }

    pub fn explicit(bin_count: usize, lo: f64, hi: f64) -> Self {
        HistogramSpec {
            bin_count,
            range: Range::Explicit { lo, hi },
        }
    }

    pub fn validate(&self) -> Result<(), ChartError> {
        if self.bin_count == 0 {
            return Err(ChartError::BadBinCount);
        }
        if let Range::Explicit { lo, hi } = self.range {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(ChartError::BadRange { lo, hi });
            }
        }
        Ok(())
    }
}

/// Bin `k` covers `[edges[k], edges[k + 1])`. Values below `lo` (including
/// −∞) go to `below`, values at or above `hi` (including +∞) to `above`,
/// NaN to `non_finite`. The four tallies always sum to the input length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub below: u64,
    pub above: u64,
    pub non_finite: u64,
}

impl Histogram {
    pub fn in_range(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.in_range() + self.below + self.above + self.non_finite
    }

    pub fn lo(&self) -> f64 {
        self.edges[0]
    }

    pub fn hi(&self) -> f64 {
        self.edges[self.edges.len() - 1]
    }
}

/// Smallest double strictly greater than `x` (finite `x`).
pub fn next_up(x: f64) -> f64 {
    if x.is_nan() || x == f64::INFINITY {
        return x;
    }
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let bits = x.to_bits();
    if x > 0.0 {
        f64::from_bits(bits + 1)
    } else {
        f64::from_bits(bits - 1)
    }
}

/// `n + 1` edges from `lo` to `hi`; the last edge is exactly `hi`.
pub fn bin_edges(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut edges: Vec<f64> = (0..=n)
        .map(|k| lo + (hi - lo) * (k as f64 / n as f64))
        .collect();
    edges[n] = hi;
    edges
}

fn finite_min_max(values: &[f64]) -> Option<(f64, f64)> {
    values
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(None, |acc, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
}

/// Resolves the spec's range; `Auto` is `[min, next_up(max))` over the
/// finite values.
pub fn resolve_range(values: &[f64], spec: &HistogramSpec) -> Result<(f64, f64), ChartError> {
    spec.validate()?;
    match spec.range {
        Range::Explicit { lo, hi } => Ok((lo, hi)),
        Range::Auto => {
            let (lo, hi) = finite_min_max(values).ok_or(ChartError::EmptyInput)?;
            let hi = next_up(hi);
            if !(hi - lo).is_finite() {
                return Err(ChartError::BadRange { lo, hi });
            }
            Ok((lo, hi))
        }
    }
}

pub fn histogram(values: &[f64], spec: &HistogramSpec) -> Result<Histogram, ChartError> {
    let (lo, hi) = resolve_range(values, spec)?;
    let n = spec.bin_count;
    let edges = bin_edges(lo, hi, n);
    let width = (hi - lo) / n as f64;
    let mut h = Histogram {
        counts: vec![0; n],
        edges,
        below: 0,
        above: 0,
        non_finite: 0,
    };
    for &v in values {
        if v.is_nan() {
            h.non_finite += 1;
        } else if v < lo {
            h.below += 1;
        } else if v >= hi {
            h.above += 1;
        } else {
            let mut b = (floor((v - lo) / width) as usize).min(n - 1);
            // The quotient can land one bin off next to an edge.
            while b > 0 && v < h.edges[b] {
                b -= 1;
            }
            while b + 1 < n && v >= h.edges[b + 1] {
                b += 1;
            }
            h.counts[b] += 1;
        }
    }
    Ok(h)
}

/// Histogram of raw voxel values. Integer volumes use `[min, max + 1)` so
/// equal raw values share a bin; float volumes use the auto range.
pub fn intensity_histogram(v: &Volume, bins: usize) -> Result<Histogram, ChartError> {
    let data: Vec<f64> = v.data().iter().map(|&x| x as f64).collect();
    let spec = if v.meta().dtype.is_integer() {
        let (lo, hi) = finite_min_max(&data).ok_or(ChartError::EmptyInput)?;
        HistogramSpec::explicit(bins, lo, hi + 1.0)
    } else {
        HistogramSpec::auto(bins)
    };
    histogram(&data, &spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub bandwidth: f64,
    pub x: Vec<f64>,
    pub density: Vec<f64>,
}

impl DensityCurve {
    /// Trapezoid-rule integral of the sampled curve.
    pub fn integral(&self) -> f64 {
        self.x
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(x, d)| 0.5 * (x[1] - x[0]) * (d[0] + d[1]))
            .sum()
    }
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = floor(pos) as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

/// Silverman's rule `0.9 · min(σ, IQR / 1.34) · n^(−1/5)`, σ the sample
/// standard deviation. When the IQR is zero σ is used alone; when every
/// value is equal the spread falls back to `max(|x|, 1) / 10`.
pub fn silverman_bandwidth(values: &[f64]) -> Result<f64, ChartError> {
    let mut xs: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let n = xs.len();
    if n < 2 {
        return Err(ChartError::TooFewValues(n));
    }
    xs.sort_by(|a, b| a.total_cmp(b));
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    let sigma = sqrt(var);
    let iqr = (quantile_sorted(&xs, 0.75) - quantile_sorted(&xs, 0.25)) / 1.34;
    let spread = if iqr > 0.0 && sigma > 0.0 {
        sigma.min(iqr)
    } else if sigma > 0.0 {
        sigma
    } else {
        mean.abs().max(1.0) / 10.0
    };
    Ok(0.9 * spread * pow(n as f64, -0.2))
}

/// Gaussian kernel density estimate sampled at [`DENSITY_POINTS`] evenly
/// spaced points over `[min − 3h, max + 3h]`. Non-finite inputs are ignored.
pub fn density(values: &[f64], bandwidth: Bandwidth) -> Result<DensityCurve, ChartError> {
    let xs: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if xs.len() < 2 {
        return Err(ChartError::TooFewValues(xs.len()));
    }
    let h = match bandwidth {
        Bandwidth::Auto => silverman_bandwidth(&xs)?,
        Bandwidth::Fixed(h) => {
            if !(h.is_finite() && h > 0.0) {
                return Err(ChartError::BadBandwidth(h));
            }
            h
        }
    };
    let (min, max) = finite_min_max(&xs).ok_or(ChartError::EmptyInput)?;
    let (a, b) = (min - 3.0 * h, max + 3.0 * h);
    let norm = 1.0 / (xs.len() as f64 * h * sqrt(2.0 * core::f64::consts::PI));
    let last = (DENSITY_POINTS - 1) as f64;
    let x: Vec<f64> = (0..DENSITY_POINTS)
        .map(|i| a + (b - a) * (i as f64 / last))
        .collect();
    let density = x
        .iter()
        .map(|&t| {
            let s: f64 = xs
                .iter()
                .map(|&xi| {
                    let u = (t - xi) / h;
                    exp(-0.5 * u * u)
                })
                .sum();
            s * norm
        })
        .collect();
    Ok(DensityCurve {
        bandwidth: h,
        x,
        density,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregate {
    Count,
    Mean,
    Sum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub label: String,
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
    /// `None` for the mean of an empty class.
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarChart {
    pub group_attr: String,
    pub value_attr: String,
    pub aggregate: Aggregate,
    pub bars: Vec<Bar>,
    /// Records whose group value was not finite.
    pub dropped: u64,
}

/// Class of `v` among `classes` equal-width classes over `[lo, hi]`; the
/// maximum falls into the last class.
pub fn class_of(v: f64, lo: f64, hi: f64, classes: usize) -> usize {
    if hi <= lo {
        return 0;
    }
    let k = floor((v - lo) / (hi - lo) * classes as f64);
    if k < 0.0 {
        0
    } else {
        (k as usize).min(classes - 1)
    }
}

/// Groups records into equal-width classes of `group_attr` and aggregates
/// `value_attr` per class. Bars are ordered by class lower bound.
pub fn bar_aggregate(
    t: &FiberTable,
    group_attr: &str,
    value_attr: &str,
    agg: Aggregate,
    classes: usize,
) -> Result<BarChart, ChartError> {
    if classes == 0 {
        return Err(ChartError::BadBinCount);
    }
    let groups = t.measurement(group_attr)?;
    let values = match agg {
        Aggregate::Count => {
            if column_index(value_attr).is_none() {
                return Err(TableError::unknown_column(value_attr).into());
            }
            vec![0.0; t.len()]
        }
        Aggregate::Mean | Aggregate::Sum => t.measurement(value_attr)?,
    };
    let (lo, hi) = finite_min_max(&groups).unwrap_or((0.0, 0.0));
    let width = (hi - lo) / classes as f64;
    let mut count = vec![0u64; classes];
    let mut used = vec![0u64; classes];
    let mut sum = vec![0.0f64; classes];
    let mut dropped = 0;
    for (&g, &v) in groups.iter().zip(&values) {
        if !g.is_finite() {
            dropped += 1;
            continue;
        }
        let c = class_of(g, lo, hi, classes);
        count[c] += 1;
        if v.is_finite() {
            used[c] += 1;
            sum[c] += v;
        }
    }
    let bars = (0..classes)
        .map(|c| {
            let a = lo + width * c as f64;
            let b = if c + 1 == classes {
                hi
            } else {
                lo + width * (c + 1) as f64
            };
            let value = match agg {
                Aggregate::Count => Some(count[c] as f64),
                Aggregate::Sum => Some(sum[c]),
                Aggregate::Mean => (used[c] > 0).then(|| sum[c] / used[c] as f64),
            };
            let close = if c + 1 == classes { ']' } else { ')' };
            Bar {
                label: format!("[{a:.4}, {b:.4}{close}"),
                lo: a,
                hi: b,
                count: count[c],
                value,
            }
        })
        .collect();
    Ok(BarChart {
        group_attr: group_attr.to_string(),
        value_attr: value_attr.to_string(),
        aggregate: agg,
        bars,
        dropped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis3 {
    pub name: String,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series3D {
    pub axes: [Axis3; 3],
    pub points: Vec<[f64; 3]>,
    /// Fiber id of each point.
    pub ids: Vec<u64>,
    /// Records skipped because a coordinate was not finite.
    pub dropped: u64,
}

pub fn scatter3(t: &FiberTable, ax: &str, ay: &str, az: &str) -> Result<Series3D, ChartError> {
    let axis = |name: &str| -> Result<(Vec<f64>, Axis3), ChartError> {
        let idx = column_index(name).ok_or_else(|| TableError::unknown_column(name))?;
        let col = t.column(name)?;
        Ok((
            col,
            Axis3 {
                name: name.to_string(),
                unit: COLUMNS[idx].1.to_string(),
            },
        ))
    };
    let (xs, x_axis) = axis(ax)?;
    let (ys, y_axis) = axis(ay)?;
    let (zs, z_axis) = axis(az)?;
    let mut points = Vec::with_capacity(t.len());
    let mut ids = Vec::with_capacity(t.len());
    let mut dropped = 0;
    for (i, r) in t.records().iter().enumerate() {
        let p = [xs[i], ys[i], zs[i]];
        if p.iter().all(|v| v.is_finite()) {
            points.push(p);
            ids.push(r.id);
        } else {
            dropped += 1;
        }
    }
    Ok(Series3D {
        axes: [x_axis, y_axis, z_axis],
        points,
        ids,
        dropped,
    })
}
