//! The `xct` command line.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 internal error. With
//! `--json` every command prints one report object on stdout (see
//! `schemas/cli-report.schema.json`); errors then print
//! `{"command", "ok": false, "error": {"kind", "message"}}`.

use std::ffi::OsString;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use xct_core::charts::{intensity_histogram, Aggregate};
use xct_core::fibers::{extract_table, ExtractionConfig};
use xct_core::geometry::Pose6DoF;
use xct_core::math::Vec3;
use xct_core::phantom::{generate, CylinderRanges, PhantomSpec};
use xct_core::render::{render_dvr_with, render_mip_with, Camera, RenderOptions, TransferFunction};
use xct_core::table::FiberTable;
use xct_core::tracking::pose::project_corners;
use xct_core::tracking::synth::{render_frame, SynthOptions};
use xct_core::tracking::{detect_markers_with, CameraIntrinsics, DetectorParams, Dictionary};
use xct_core::volume::Dtype;

use crate::datasets::DatasetRegistry;
use crate::error::{read_json, read_text, write_file};
use crate::images::{encode_gray, encode_rgba, read_frame};
use crate::marker_files::{read_dictionary, write_dictionary};
use crate::session::{content_hash, default_tf, ServiceContext, Tracker};
use crate::table_csv::{parse_csv, parse_csv_mapped, write_csv, HeaderMapping};
use crate::volume_files::{read_volume, write_volume};
use crate::workspace::{ChartData, RenderMode, ViewSpec};
use crate::LabError;

#[derive(Debug, Parser)]
#[command(name = "xct", version, about = "Fiber extraction, volume rendering, charts and marker tracking for XCT volumes")]
pub struct Cli {
    /// Print a machine-readable JSON report on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a random cylinder phantom (.raw + .meta) and its ground-truth CSV.
    Phantom(PhantomArgs),
    /// Trace fibers in a volume and write the fiber table as CSV.
    Extract(ExtractArgs),
    /// Render a volume (MIP or DVR) to PNG.
    Render(RenderArgs),
    /// Compute chart data as JSON.
    #[command(subcommand)]
    Chart(ChartCommand),
    /// Detect markers in a camera frame (PNG or PGM).
    Detect(DetectArgs),
    /// Synthesize a camera frame showing one marker.
    Frame(FrameArgs),
    /// Write the standard marker dictionary as JSON.
    Dictionary(DictionaryArgs),
    /// Start the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DtypeArg {
    Uint8,
    Uint16,
    Float32,
}

impl From<DtypeArg> for Dtype {
    fn from(d: DtypeArg) -> Self {
        match d {
            DtypeArg::Uint8 => Dtype::Uint8,
            DtypeArg::Uint16 => Dtype::Uint16,
            DtypeArg::Float32 => Dtype::Float32,
        }
    }
}

#[derive(Debug, Args)]
pub struct PhantomArgs {
    /// Output payload; the sidecar goes next to it as .meta.
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth CSV (default: <out>.truth.csv).
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub cylinders: usize,
    #[arg(long, num_args = 3, value_names = ["X", "Y", "Z"], default_values_t = [128, 128, 128])]
    pub dims: Vec<usize>,
    /// Isotropic voxel spacing, mm.
    #[arg(long, default_value_t = 1.0)]
    pub spacing: f64,
    #[arg(long, value_enum, default_value_t = DtypeArg::Uint8)]
    pub dtype: DtypeArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Standard deviation of additive Gaussian noise.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 200.0)]
    pub foreground: f64,
    #[arg(long, default_value_t = 20.0)]
    pub background: f64,
    /// Radius range, voxels.
    #[arg(long, num_args = 2, value_names = ["MIN", "MAX"], default_values_t = [2.0, 4.0])]
    pub radius: Vec<f64>,
    /// Length range, voxels.
    #[arg(long, num_args = 2, value_names = ["MIN", "MAX"], default_values_t = [20.0, 60.0])]
    pub length: Vec<f64>,
    /// Minimum gap between cylinder surfaces, voxels.
    #[arg(long, default_value_t = 4.0)]
    pub clearance: f64,
}

#[derive(Debug, Args)]
pub struct VolumeInput {
    /// Volume payload (.raw).
    pub volume: PathBuf,
    /// Sidecar (default: the .meta or .mhd next to the payload).
    #[arg(long)]
    pub meta: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub input: VolumeInput,
    /// Output CSV (default: stdout; required with --json).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Gaussian scale, voxels.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub ridge_threshold: Option<f64>,
    /// Tracing step as a fraction of the smallest spacing.
    #[arg(long)]
    pub step: Option<f64>,
    /// Shortest kept fiber, mm (default: 5 voxels).
    #[arg(long)]
    pub min_length: Option<f64>,
    /// Largest turn per step, degrees.
    #[arg(long)]
    pub max_angle: Option<f64>,
    /// Seed exclusion radius around traces, voxels.
    #[arg(long)]
    pub seed_suppression_radius: Option<f64>,
}

impl ExtractArgs {
    fn config(&self, min_spacing: f64) -> ExtractionConfig {
        let mut c = ExtractionConfig::for_spacing(min_spacing);
        if let Some(s) = self.sigma {
            c = c.with_sigma(s);
        }
        let set = |field: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *field = v;
            }
        };
        set(&mut c.ridge_threshold, self.ridge_threshold);
        set(&mut c.step, self.step);
        set(&mut c.min_length, self.min_length);
        set(&mut c.max_angle, self.max_angle);
        set(&mut c.seed_suppression_radius, self.seed_suppression_radius);
        c
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Mip,
    Dvr,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[command(flatten)]
    pub input: VolumeInput,
    #[arg(long, value_enum, default_value_t = ModeArg::Mip)]
    pub mode: ModeArg,
    /// Transfer function: a JSON file of `[x, [r, g, b, a]]` points, or
    /// `default` / `transparent`.
    #[arg(long)]
    pub tf: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 512)]
    pub width: usize,
    #[arg(long, default_value_t = 512)]
    pub height: usize,
    /// Degrees about +z.
    #[arg(long, default_value_t = 30.0, allow_negative_numbers = true)]
    pub yaw: f64,
    /// Degrees above the xy-plane.
    #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
    pub pitch: f64,
    /// Eye distance from the volume center, mm (default: fits the volume).
    #[arg(long)]
    pub distance: Option<f64>,
    /// Vertical field of view, degrees.
    #[arg(long, default_value_t = 40.0)]
    pub fov: f64,
    /// Ray step, mm (default: half the smallest spacing).
    #[arg(long)]
    pub step: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TableInput {
    /// Fiber table (.csv, schema v1).
    pub csv: PathBuf,
    /// JSON map from foreign header names to schema columns (null drops).
    #[arg(long)]
    pub mapping: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AggregateArg {
    Count,
    Mean,
    Sum,
}

impl From<AggregateArg> for Aggregate {
    fn from(a: AggregateArg) -> Self {
        match a {
            AggregateArg::Count => Aggregate::Count,
            AggregateArg::Mean => Aggregate::Mean,
            AggregateArg::Sum => Aggregate::Sum,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum ChartCommand {
    /// Frequency distribution of one column.
    Histogram {
        #[command(flatten)]
        table: TableInput,
        #[arg(long)]
        col: String,
        #[arg(long, default_value_t = 16)]
        bins: usize,
        /// Explicit [LO, HI) instead of the data range.
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
        range: Option<Vec<f64>>,
    },
    /// Gaussian kernel density of one column.
    Density {
        #[command(flatten)]
        table: TableInput,
        #[arg(long)]
        col: String,
        /// Kernel bandwidth (default: Silverman's rule).
        #[arg(long)]
        bandwidth: Option<f64>,
    },
    /// One column aggregated over equal-width classes of another.
    Bar {
        #[command(flatten)]
        table: TableInput,
        #[arg(long)]
        group: String,
        #[arg(long)]
        value: String,
        #[arg(long, value_enum, default_value_t = AggregateArg::Mean)]
        aggregate: AggregateArg,
        #[arg(long, default_value_t = 5)]
        classes: usize,
    },
    /// Three columns as 3D points.
    Scatter3 {
        #[command(flatten)]
        table: TableInput,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long)]
        z: String,
    },
    /// Histogram of raw voxel values.
    Intensity {
        #[command(flatten)]
        input: VolumeInput,
        #[arg(long, default_value_t = 256)]
        bins: usize,
    },
}

#[derive(Debug, Args)]
pub struct CameraArgs {
    /// Focal length, pixels (both axes).
    #[arg(long, default_value_t = 1400.0)]
    pub focal: f64,
    #[arg(long)]
    pub fx: Option<f64>,
    #[arg(long)]
    pub fy: Option<f64>,
    /// Principal point (default: image center).
    #[arg(long)]
    pub cx: Option<f64>,
    #[arg(long)]
    pub cy: Option<f64>,
}

impl CameraArgs {
    fn intrinsics(&self, width: usize, height: usize) -> Result<CameraIntrinsics, LabError> {
        let mut k = CameraIntrinsics::centered(width, height, self.focal);
        k.fx = self.fx.unwrap_or(k.fx);
        k.fy = self.fy.unwrap_or(k.fy);
        k.cx = self.cx.unwrap_or(k.cx);
        k.cy = self.cy.unwrap_or(k.cy);
        if !k.is_valid() {
            return Err(LabError::Invalid("camera intrinsics must be finite with positive focal lengths".into()));
        }
        Ok(k)
    }
}

#[derive(Debug, Args)]
pub struct MarkerArgs {
    /// Dictionary JSON (default: the standard dictionary).
    #[arg(long)]
    pub dict: Option<PathBuf>,
    /// Size of the standard dictionary.
    #[arg(long, default_value_t = 32)]
    pub markers: usize,
    /// Marker side, mm, for the standard dictionary.
    #[arg(long, default_value_t = 50.0)]
    pub side: f64,
}

impl MarkerArgs {
    fn dictionary(&self) -> Result<Dictionary, LabError> {
        match &self.dict {
            Some(p) => read_dictionary(p),
            None => standard_dictionary(self.markers, self.side),
        }
    }
}

fn standard_dictionary(n: usize, side: f64) -> Result<Dictionary, LabError> {
    if n == 0 || n > 64 {
        return Err(LabError::Invalid("standard dictionary size must be in 1..=64".into()));
    }
    if !(side > 0.0 && side.is_finite()) {
        return Err(LabError::Invalid("marker side must be positive".into()));
    }
    Ok(Dictionary::standard(n, side))
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Camera frame (PNG or PGM).
    pub frame: PathBuf,
    #[command(flatten)]
    pub markers: MarkerArgs,
    #[command(flatten)]
    pub camera: CameraArgs,
}

#[derive(Debug, Args)]
pub struct FrameArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Marker id to show (omit for an empty frame).
    #[arg(long)]
    pub marker: Option<u32>,
    #[arg(long, default_value_t = 1280)]
    pub width: usize,
    #[arg(long, default_value_t = 960)]
    pub height: usize,
    /// Marker center distance along the optical axis, mm.
    #[arg(long, default_value_t = 500.0)]
    pub distance: f64,
    /// Lateral marker offset, mm (x right, y down).
    #[arg(long, num_args = 2, value_names = ["X", "Y"], default_values_t = [0.0, 0.0], allow_negative_numbers = true)]
    pub offset: Vec<f64>,
    /// Tilt away from facing the camera, degrees.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub tilt: f64,
    /// Direction of the tilt axis in the image plane, degrees.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub tilt_azimuth: f64,
    /// In-plane rotation, degrees.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub spin: f64,
    /// Gaussian noise sigma, gray levels.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub markers: MarkerArgs,
    #[command(flatten)]
    pub camera: CameraArgs,
}

#[derive(Debug, Args)]
pub struct DictionaryArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 32)]
    pub markers: usize,
    #[arg(long, default_value_t = 50.0)]
    pub side: f64,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Dataset registry JSON.
    #[arg(long)]
    pub registry: PathBuf,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Directory for per-session workspace documents.
    #[arg(long)]
    pub workspace_dir: Option<PathBuf>,
    /// Frame size the camera intrinsics refer to.
    #[arg(long, num_args = 2, value_names = ["W", "H"], default_values_t = [1280, 960])]
    pub frame_size: Vec<usize>,
    #[command(flatten)]
    pub markers: MarkerArgs,
    #[command(flatten)]
    pub camera: CameraArgs,
}

/// Outcome of one command: a report for `--json` and a line for humans.
struct Outcome {
    report: Value,
    text: String,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Phantom(_) => "phantom",
            Command::Extract(_) => "extract",
            Command::Render(_) => "render",
            Command::Chart(_) => "chart",
            Command::Detect(_) => "detect",
            Command::Frame(_) => "frame",
            Command::Dictionary(_) => "dictionary",
            Command::Serve(_) => "serve",
        }
    }
}

/// Runs `xct` with `args` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let json = args.iter().skip(1).any(|a| a == "--json");
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{}", e.render());
                return 0;
            }
            if json {
                let report = json!({
                    "command": null,
                    "ok": false,
                    "error": {"kind": "usage", "message": e.kind().to_string()},
                });
                let _ = writeln!(out, "{report}");
            }
            let _ = write!(err, "{}", e.render());
            return 1;
        }
    };
    let name = cli.command.name();
    let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| dispatch(cli.command, out)));
    let failure = match result {
        Ok(Ok(o)) => {
            let _ = if cli.json {
                let mut report = json!({"command": name, "ok": true});
                if let (Some(r), Value::Object(extra)) = (report.as_object_mut(), o.report) {
                    r.extend(extra);
                }
                writeln!(out, "{report}")
            } else {
                write!(out, "{}", o.text)
            };
            return 0;
        }
        Ok(Err(e)) => (if e.is_internal() { "internal" } else { "input" }, e.to_string()),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            ("internal", msg)
        }
    };
    let (kind, message) = failure;
    if cli.json {
        let report = json!({"command": name, "ok": false, "error": {"kind": kind, "message": message}});
        let _ = writeln!(out, "{report}");
    }
    let _ = writeln!(err, "xct {name}: {message}");
    if kind == "internal" {
        2
    } else {
        1
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<Outcome, LabError> {
    match cmd {
        Command::Phantom(a) => phantom(a),
        Command::Extract(a) => extract(a, out),
        Command::Render(a) => render(a),
        Command::Chart(c) => chart(c),
        Command::Detect(a) => detect(a),
        Command::Frame(a) => frame(a),
        Command::Dictionary(a) => {
            let d = standard_dictionary(a.markers, a.side)?;
            write_dictionary(&a.out, &d)?;
            Ok(Outcome {
                report: json!({"output": a.out, "markers": d.markers.len()}),
                text: format!("wrote {} ({} markers)\n", a.out.display(), d.markers.len()),
            })
        }
        Command::Serve(a) => serve(a),
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report values serialize");
    s.push('\n');
    s
}

fn phantom(a: PhantomArgs) -> Result<Outcome, LabError> {
    let dims: [usize; 3] = a.dims.as_slice().try_into().expect("clap enforces three values");
    let spec = PhantomSpec {
        dims,
        spacing: [a.spacing; 3],
        dtype: a.dtype.into(),
        foreground: a.foreground,
        background: a.background,
        noise: a.noise,
        seed: a.seed,
    };
    if !(a.spacing > 0.0 && a.spacing.is_finite()) {
        return Err(LabError::Invalid("spacing must be positive".into()));
    }
    if a.noise.is_nan() || a.noise < 0.0 {
        return Err(LabError::Invalid("noise must be non-negative".into()));
    }
    let range = |v: &[f64], what: &str| -> Result<(f64, f64), LabError> {
        if v[0] > 0.0 && v[1] >= v[0] && v[1].is_finite() {
            Ok((v[0], v[1]))
        } else {
            Err(LabError::Invalid(format!("{what} range must satisfy 0 < MIN <= MAX")))
        }
    };
    let ranges = CylinderRanges {
        radius: range(&a.radius, "radius")?,
        length: range(&a.length, "length")?,
        clearance: a.clearance,
        ..CylinderRanges::default()
    };
    let (volume, _, truth) = generate(&spec, a.cylinders, &ranges)?;
    let meta = write_volume(&a.out, &volume)?;
    let truth_path = a.truth.unwrap_or_else(|| a.out.with_extension("truth.csv"));
    write_file(&truth_path, write_csv(&truth).as_bytes())?;
    Ok(Outcome {
        report: json!({
            "volume": a.out,
            "meta": meta,
            "truth": truth_path,
            "dims": dims,
            "dtype": Dtype::from(a.dtype).name(),
            "cylinders": truth.len(),
            "seed": a.seed,
        }),
        text: format!(
            "wrote {} ({}x{}x{} {}, {} cylinders) and {}\n",
            a.out.display(),
            dims[0],
            dims[1],
            dims[2],
            Dtype::from(a.dtype).name(),
            truth.len(),
            truth_path.display()
        ),
    })
}

fn extract(a: ExtractArgs, out: &mut dyn Write) -> Result<Outcome, LabError> {
    let v = read_volume(&a.input.volume, a.input.meta.as_deref())?;
    let cfg = a.config(v.meta().min_spacing());
    cfg.validate()?;
    let table = extract_table(&v, &cfg)?;
    let csv = write_csv(&table);
    let text = match &a.out {
        Some(p) => {
            write_file(p, csv.as_bytes())?;
            format!("wrote {} ({} fibers)\n", p.display(), table.len())
        }
        None => {
            out.write_all(csv.as_bytes())
                .map_err(|e| LabError::io(Path::new("<stdout>"), e))?;
            String::new()
        }
    };
    Ok(Outcome {
        report: json!({
            "input": a.input.volume,
            "output": a.out,
            "fibers": table.len(),
            "config": to_value(&cfg),
        }),
        text,
    })
}

fn transfer_function(arg: Option<&str>) -> Result<TransferFunction, LabError> {
    match arg {
        None | Some("default") => Ok(default_tf()),
        Some("transparent") => Ok(TransferFunction::constant([0.0; 4])),
        Some(path) => read_json(Path::new(path)),
    }
}

fn render(a: RenderArgs) -> Result<Outcome, LabError> {
    if a.width == 0 || a.height == 0 || a.width > 8192 || a.height > 8192 {
        return Err(LabError::Invalid("width and height must be in 1..=8192".into()));
    }
    if a.step.is_some_and(|s| !(s > 0.0 && s.is_finite())) {
        return Err(LabError::Invalid("step must be positive".into()));
    }
    let v = read_volume(&a.input.volume, a.input.meta.as_deref())?;
    let orbit = Camera::orbit(&v, a.yaw, a.pitch, a.distance, a.fov);
    let camera = Camera::new(orbit.pose, a.fov, orbit.near)?;
    let opts = RenderOptions {
        step: a.step,
        ..RenderOptions::default()
    };
    let (mode, img) = match a.mode {
        ModeArg::Mip => (RenderMode::Mip, render_mip_with(&v, &camera, a.width, a.height, &opts)),
        ModeArg::Dvr => {
            let tf = transfer_function(a.tf.as_deref())?;
            (RenderMode::Dvr, render_dvr_with(&v, &tf, &camera, a.width, a.height, &opts))
        }
    };
    let png = encode_rgba(&img)?;
    write_file(&a.out, &png)?;
    let hash = content_hash(&png);
    Ok(Outcome {
        report: json!({
            "output": a.out,
            "mode": mode,
            "width": a.width,
            "height": a.height,
            "hash": hash,
        }),
        text: format!("wrote {} ({}x{})\n", a.out.display(), a.width, a.height),
    })
}

fn load_table(t: &TableInput) -> Result<FiberTable, LabError> {
    let text = read_text(&t.csv)?;
    match &t.mapping {
        Some(m) => parse_csv_mapped(&text, &read_json::<HeaderMapping>(m)?),
        None => Ok(parse_csv(&text)?),
    }
}

fn chart(c: ChartCommand) -> Result<Outcome, LabError> {
    let (table, spec) = match c {
        ChartCommand::Intensity { input, bins } => {
            let v = read_volume(&input.volume, input.meta.as_deref())?;
            let h = intensity_histogram(&v, bins)?;
            let chart = json!({"kind": "intensity", "histogram": to_value(&h)});
            return Ok(Outcome {
                text: pretty(&chart),
                report: json!({"chart": chart}),
            });
        }
        ChartCommand::Histogram { table, col, bins, range } => (
            table,
            ViewSpec::Histogram {
                column: col,
                bins,
                range: range.map(|r| [r[0], r[1]]),
            },
        ),
        ChartCommand::Density { table, col, bandwidth } => (
            table,
            ViewSpec::Density {
                column: col,
                bandwidth,
            },
        ),
        ChartCommand::Bar { table, group, value, aggregate, classes } => (
            table,
            ViewSpec::Bar {
                group,
                value,
                aggregate: aggregate.into(),
                classes,
            },
        ),
        ChartCommand::Scatter3 { table, x, y, z } => (table, ViewSpec::Scatter3 { x, y, z }),
    };
    spec.validate(None).map_err(LabError::Invalid)?;
    let t = load_table(&table)?;
    let data: ChartData = spec.chart(&t).expect("table chart spec")?;
    let chart = to_value(&data);
    Ok(Outcome {
        text: pretty(&chart),
        report: json!({"chart": chart}),
    })
}

fn detect(a: DetectArgs) -> Result<Outcome, LabError> {
    let frame = read_frame(&a.frame)?;
    let dict = a.markers.dictionary()?;
    let intr = a.camera.intrinsics(frame.width, frame.height)?;
    let detections = detect_markers_with(&frame, &intr, &dict, &DetectorParams::default());
    let list = to_value(&detections);
    Ok(Outcome {
        text: pretty(&list),
        report: json!({
            "input": a.frame,
            "width": frame.width,
            "height": frame.height,
            "intrinsics": to_value(&intr),
            "detections": list,
        }),
    })
}

fn frame(a: FrameArgs) -> Result<Outcome, LabError> {
    if a.width < 8 || a.height < 8 || a.width > 8192 || a.height > 8192 {
        return Err(LabError::Invalid("frame size must be in 8..=8192".into()));
    }
    if !(a.distance > 0.0 && a.distance.is_finite()) {
        return Err(LabError::Invalid("distance must be positive".into()));
    }
    let dict = a.markers.dictionary()?;
    let intr = a.camera.intrinsics(a.width, a.height)?;
    let deg = std::f64::consts::PI / 180.0;
    let tilt_axis = Vec3::new((a.tilt_azimuth * deg).cos(), (a.tilt_azimuth * deg).sin(), 0.0);
    let rotation = Pose6DoF::from_axis_angle(Vec3::z(), a.spin * deg)
        .then(&Pose6DoF::from_axis_angle(tilt_axis, a.tilt * deg))
        .rotation;
    let pose = Pose6DoF::new(rotation, Vec3::new(a.offset[0], a.offset[1], a.distance), 1.0);
    let mut placed = vec![];
    if let Some(id) = a.marker {
        let m = dict
            .get(id)
            .ok_or_else(|| LabError::Invalid(format!("marker {id} is not in the dictionary")))?;
        placed.push((*m, pose));
    }
    let opts = SynthOptions {
        noise_sigma: a.noise,
        seed: a.seed,
        ..SynthOptions::default()
    };
    let img = render_frame(a.width, a.height, &intr, &placed, &opts);
    write_file(&a.out, &encode_gray(&img)?)?;
    let corners = placed
        .first()
        .and_then(|(m, p)| project_corners(p, m.side_mm, &intr));
    Ok(Outcome {
        report: json!({
            "output": a.out,
            "marker": a.marker,
            "pose": placed.first().map(|(_, p)| to_value(p)),
            "corners": corners,
        }),
        text: format!("wrote {}\n", a.out.display()),
    })
}

fn serve(a: ServeArgs) -> Result<Outcome, LabError> {
    let registry = DatasetRegistry::load(&a.registry)?;
    let intrinsics = a.camera.intrinsics(a.frame_size[0], a.frame_size[1])?;
    let tracker = Tracker {
        dictionary: a.markers.dictionary()?,
        intrinsics,
        params: DetectorParams::default(),
    };
    if let Some(d) = &a.workspace_dir {
        std::fs::create_dir_all(d).map_err(|e| LabError::io(d, e))?;
    }
    let addr: SocketAddr = format!("{}:{}", a.host, a.port)
        .parse()
        .map_err(|e| LabError::Invalid(format!("bad listen address: {e}")))?;
    let state = crate::http::AppState::new(ServiceContext::new(registry, tracker, a.workspace_dir));
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| LabError::Internal(e.to_string()))?;
    rt.block_on(crate::http::serve(addr, state))
        .map_err(|e| LabError::Invalid(format!("server on {addr}: {e}")))?;
    Ok(Outcome {
        report: json!({"address": addr.to_string()}),
        text: String::new(),
    })
}
