//! One inspection session: the tracked sample, its active dataset and the
//! placed views.
//!
//! Every mutation returns the events it caused, numbered per session in the
//! order they happened.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use xct_core::geometry::{fiber_to_cylinder, Pose6DoF};
use xct_core::math::Vec3;
use xct_core::render::{
    render_dvr_with, render_mip_with, Camera, RenderOptions, TransferFunction,
};
use xct_core::tracking::{
    detect_markers_with, CameraIntrinsics, Detection, DetectorParams, Dictionary, GrayImage,
};
use xct_core::volume::{Axis, Volume};

use crate::datasets::{DatasetCache, DatasetRegistry, LoadedDataset};
use crate::images::{encode_gray, encode_rgba, slice_to_gray};
use crate::mesh_json::MeshPayload;
use crate::workspace::{default_pose, ChartData, PlacedView, RenderMode, ViewSpec, Workspace};
use crate::LabError;

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("no dataset is active in this session")]
    NoActiveDataset,
    #[error("the active dataset has no fiber table")]
    NoTable,
    #[error("unknown view {0}")]
    UnknownView(u32),
    #[error("unknown dataset `{0}`")]
    UnknownDataset(String),
    #[error("view {0} is not a chart")]
    NotAChart(u32),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("bad transfer function: {0}")]
    BadTF(String),
    #[error(transparent)]
    Lab(#[from] LabError),
}

/// Camera model and code book for frame ingest.
#[derive(Debug, Clone)]
pub struct Tracker {
    pub dictionary: Dictionary,
    pub intrinsics: CameraIntrinsics,
    pub params: DetectorParams,
}

impl Tracker {
    /// 32 standard 50 mm markers seen by a 1280×960 camera with f = 1400 px.
    pub fn standard() -> Self {
        Self {
            dictionary: Dictionary::standard(32, 50.0),
            intrinsics: CameraIntrinsics::centered(1280, 960, 1400.0),
            params: DetectorParams::default(),
        }
    }
}

/// State shared by all sessions of one service.
#[derive(Debug)]
pub struct ServiceContext {
    pub registry: DatasetRegistry,
    pub cache: DatasetCache,
    pub tracker: Tracker,
    /// Where each session's workspace document is written, if anywhere.
    pub workspace_dir: Option<PathBuf>,
}

impl ServiceContext {
    pub fn new(registry: DatasetRegistry, tracker: Tracker, workspace_dir: Option<PathBuf>) -> Self {
        Self {
            registry,
            cache: DatasetCache::default(),
            tracker,
            workspace_dir,
        }
    }

    pub fn workspace_path(&self, session: u64) -> Option<PathBuf> {
        self.workspace_dir
            .as_ref()
            .map(|d| d.join(format!("session-{session}.json")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViewAction {
    Placed,
    Updated,
    Removed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum EventBody {
    DatasetChanged {
        dataset: String,
        previous: Option<String>,
        views: Vec<PlacedView>,
    },
    Pose {
        frame: u64,
        marker: u32,
        /// Volume frame to camera.
        sample_pose: Pose6DoF,
        /// Marker frame to camera, as detected.
        marker_pose: Pose6DoF,
    },
    ViewChanged {
        action: ViewAction,
        view_id: u32,
        #[serde(skip_serializing_if = "Option::is_none")]
        view: Option<PlacedView>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub session: u64,
    pub seq: u64,
    #[serde(flatten)]
    pub body: EventBody,
}

impl Event {
    pub fn name(&self) -> &'static str {
        match self.body {
            EventBody::DatasetChanged { .. } => "dataset-changed",
            EventBody::Pose { .. } => "pose",
            EventBody::ViewChanged { .. } => "view-changed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameStatus {
    Tracked,
    NoDetection,
    Unregistered,
    LoadFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    #[serde(flatten)]
    pub detection: Detection,
    pub dataset: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub frame: u64,
    pub status: FrameStatus,
    pub detections: Vec<DetectionReport>,
    /// Marker whose pose became the sample pose.
    pub tracked_marker: Option<u32>,
    pub active_dataset: Option<String>,
    pub dataset_changed: bool,
    pub log: Vec<String>,
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CameraMode {
    /// Orbit around the volume center.
    Orbit,
    /// The tracking camera, looking at the sample through its pose.
    Tracked,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderRequest {
    /// Falls back to the view's mode, then MIP.
    pub mode: Option<RenderMode>,
    pub width: usize,
    pub height: usize,
    /// Tracked once a pose has been received, orbit before.
    pub camera: Option<CameraMode>,
    pub yaw: f64,
    pub pitch: f64,
    pub distance: Option<f64>,
    pub fov: f64,
    pub step: Option<f64>,
    /// Falls back to the view's transfer function, then [`default_tf`].
    pub tf: Option<TransferFunction>,
    /// Volume view whose offset and settings apply.
    pub view: Option<u32>,
}

impl Default for RenderRequest {
    fn default() -> Self {
        Self {
            mode: None,
            width: 256,
            height: 256,
            camera: None,
            yaw: 30.0,
            pitch: 20.0,
            distance: None,
            fov: 40.0,
            step: None,
            tf: None,
            view: None,
        }
    }
}

pub const MAX_IMAGE_SIDE: usize = 4096;

/// Transparent below 0.3 normalized intensity, then a white ramp to
/// opacity 0.6.
pub fn default_tf() -> TransferFunction {
    TransferFunction::new(vec![
        (0.0, [0.0, 0.0, 0.0, 0.0]),
        (0.3, [0.0, 0.0, 0.0, 0.0]),
        (1.0, [1.0, 1.0, 1.0, 0.6]),
    ])
    .expect("valid default transfer function")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderOutput {
    pub png: Vec<u8>,
    /// Hex SHA-256 of `png`.
    pub hash: String,
}

pub fn content_hash(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshList {
    pub sample_pose: Pose6DoF,
    pub meshes: Vec<MeshPayload>,
    /// Fibers without a usable diameter or length.
    pub skipped: Vec<u64>,
}

#[derive(Debug)]
pub struct Session {
    id: u64,
    workspace: Workspace,
    dataset: Option<Arc<LoadedDataset>>,
    tracked: bool,
    frames: u64,
    seq: u64,
}

impl Session {
    pub fn new(id: u64) -> Self {
        Self {
            id,
            workspace: Workspace::default(),
            dataset: None,
            tracked: false,
            frames: 0,
            seq: 0,
        }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn workspace(&self) -> &Workspace {
        &self.workspace
    }

    pub fn dataset(&self) -> Option<&Arc<LoadedDataset>> {
        self.dataset.as_ref()
    }

    fn event(&mut self, body: EventBody) -> Event {
        self.seq += 1;
        Event {
            session: self.id,
            seq: self.seq,
            body,
        }
    }

    fn persist(&self, ctx: &ServiceContext) -> Result<(), LabError> {
        match ctx.workspace_path(self.id) {
            Some(p) => self.workspace.save(&p),
            None => Ok(()),
        }
    }

    fn loaded(&self) -> Result<&LoadedDataset, SessionError> {
        self.dataset.as_deref().ok_or(SessionError::NoActiveDataset)
    }

    /// Makes `id` the active dataset with its default views. Does nothing if
    /// it already is.
    pub fn activate(&mut self, ctx: &ServiceContext, id: &str) -> Result<Vec<Event>, SessionError> {
        if self.workspace.active_dataset.as_deref() == Some(id) && self.dataset.is_some() {
            return Ok(vec![]);
        }
        let entry = ctx
            .registry
            .get(id)
            .ok_or_else(|| SessionError::UnknownDataset(id.into()))?;
        let data = ctx.cache.get_or_load(entry)?;
        let previous = self.workspace.active_dataset.replace(id.to_string());
        self.workspace.views.clear();
        for (k, spec) in entry.views().into_iter().enumerate() {
            self.workspace.place(spec, default_pose(k));
        }
        self.dataset = Some(data);
        self.persist(ctx)?;
        let views = self.workspace.views.clone();
        Ok(vec![self.event(EventBody::DatasetChanged {
            dataset: id.into(),
            previous,
            views,
        })])
    }

    /// Detects markers, auto-loads the dataset of the best registered
    /// detection when it differs from the active one, and updates the
    /// sample pose. Problems end up in the report, never as errors.
    pub fn ingest_frame(&mut self, ctx: &ServiceContext, frame: &GrayImage) -> FrameReport {
        self.frames += 1;
        let t = &ctx.tracker;
        let detections = detect_markers_with(frame, &t.intrinsics, &t.dictionary, &t.params);
        let reports: Vec<DetectionReport> = detections
            .iter()
            .map(|d| DetectionReport {
                detection: *d,
                dataset: ctx.registry.by_marker(d.id).map(|e| e.id.clone()),
            })
            .collect();
        let mut report = FrameReport {
            frame: self.frames,
            status: FrameStatus::NoDetection,
            detections: reports,
            tracked_marker: None,
            active_dataset: self.workspace.active_dataset.clone(),
            dataset_changed: false,
            log: vec![],
            events: vec![],
        };
        if detections.is_empty() {
            report.log.push("no detection".into());
            return report;
        }

        let active = self.workspace.active_dataset.clone();
        let best = report
            .detections
            .iter()
            .filter(|r| r.dataset.is_some())
            .min_by(|a, b| {
                let key = |r: &DetectionReport| {
                    (
                        r.dataset != active,
                        r.detection.bit_errors,
                        r.detection.reprojection_rms,
                        r.detection.id,
                    )
                };
                key(a).partial_cmp(&key(b)).unwrap_or(std::cmp::Ordering::Equal)
            })
            .cloned();
        let Some(best) = best else {
            report.status = FrameStatus::Unregistered;
            for r in &report.detections {
                report.log.push(format!("marker {} is not registered", r.detection.id));
            }
            return report;
        };
        let dataset = best.dataset.clone().expect("filtered on registered markers");

        if active.as_deref() != Some(dataset.as_str()) {
            match self.activate(ctx, &dataset) {
                Ok(events) => {
                    report.dataset_changed = true;
                    report.events.extend(events);
                }
                Err(e) => {
                    report.status = FrameStatus::LoadFailed;
                    report.log.push(format!("loading dataset `{dataset}` failed: {e}"));
                    return report;
                }
            }
        }

        let marker = best.detection.id;
        let entry = ctx.registry.get(&dataset).expect("resolved through the registry");
        let sample_pose = entry.marker_pose(marker).then(&best.detection.pose);
        self.workspace.sample_pose = sample_pose;
        self.tracked = true;
        let ev = self.event(EventBody::Pose {
            frame: self.frames,
            marker,
            sample_pose,
            marker_pose: best.detection.pose,
        });
        report.events.push(ev);
        report.status = FrameStatus::Tracked;
        report.tracked_marker = Some(marker);
        report.active_dataset = self.workspace.active_dataset.clone();
        report
    }

    fn check_spec(&self, spec: &ViewSpec) -> Result<(), SessionError> {
        let dims = self.dataset.as_ref().map(|d| d.volume.dims());
        spec.validate(dims).map_err(SessionError::BadParams)?;
        if let ViewSpec::Volume { tf: Some(tf), .. } = spec {
            TransferFunction::new(tf.points().to_vec()).map_err(|e| SessionError::BadTF(e.to_string()))?;
        }
        Ok(())
    }

    pub fn place_view(
        &mut self,
        ctx: &ServiceContext,
        spec: ViewSpec,
        pose: Option<Pose6DoF>,
    ) -> Result<(PlacedView, Vec<Event>), SessionError> {
        self.check_spec(&spec)?;
        let pose = pose.unwrap_or_else(|| default_pose(self.workspace.views.len()));
        let id = self.workspace.place(spec, pose);
        self.persist(ctx)?;
        let view = self.workspace.get(id).cloned().expect("just placed");
        let ev = self.event(EventBody::ViewChanged {
            action: ViewAction::Placed,
            view_id: id,
            view: Some(view.clone()),
        });
        Ok((view, vec![ev]))
    }

    /// Moves, scales or reconfigures one view; other views are untouched.
    pub fn update_view(
        &mut self,
        ctx: &ServiceContext,
        id: u32,
        pose: Option<Pose6DoF>,
        spec: Option<ViewSpec>,
    ) -> Result<(PlacedView, Vec<Event>), SessionError> {
        if let Some(s) = &spec {
            self.check_spec(s)?;
        }
        let view = self.workspace.get_mut(id).ok_or(SessionError::UnknownView(id))?;
        if let Some(p) = pose {
            view.pose = p;
        }
        if let Some(s) = spec {
            view.spec = s;
        }
        let view = view.clone();
        self.persist(ctx)?;
        let ev = self.event(EventBody::ViewChanged {
            action: ViewAction::Updated,
            view_id: id,
            view: Some(view.clone()),
        });
        Ok((view, vec![ev]))
    }

    pub fn remove_view(&mut self, ctx: &ServiceContext, id: u32) -> Result<Vec<Event>, SessionError> {
        self.workspace.remove(id).ok_or(SessionError::UnknownView(id))?;
        self.persist(ctx)?;
        Ok(vec![self.event(EventBody::ViewChanged {
            action: ViewAction::Removed,
            view_id: id,
            view: None,
        })])
    }

    /// Replaces the whole workspace (activating its dataset, if any).
    pub fn replace_workspace(
        &mut self,
        ctx: &ServiceContext,
        ws: Workspace,
    ) -> Result<Vec<Event>, SessionError> {
        ws.validate().map_err(|e| SessionError::BadParams(e.to_string()))?;
        let dataset = match &ws.active_dataset {
            Some(id) => {
                let entry = ctx
                    .registry
                    .get(id)
                    .ok_or_else(|| SessionError::UnknownDataset(id.clone()))?;
                Some(ctx.cache.get_or_load(entry)?)
            }
            None => None,
        };
        let previous = self.workspace.active_dataset.clone();
        self.workspace = ws;
        self.dataset = dataset;
        self.persist(ctx)?;
        let mut events = vec![];
        if let Some(id) = self.workspace.active_dataset.clone() {
            if previous.as_deref() != Some(id.as_str()) {
                let views = self.workspace.views.clone();
                events.push(self.event(EventBody::DatasetChanged {
                    dataset: id,
                    previous,
                    views,
                }));
            }
        }
        Ok(events)
    }

    pub fn chart(&self, view: u32) -> Result<ChartData, SessionError> {
        let v = self.workspace.get(view).ok_or(SessionError::UnknownView(view))?;
        let data = self.loaded()?;
        let table = data.table.as_ref().ok_or(SessionError::NoTable)?;
        match v.spec.chart(table) {
            None => Err(SessionError::NotAChart(view)),
            Some(r) => r.map_err(|e| SessionError::BadParams(e.to_string())),
        }
    }

    pub fn render(&self, ctx: &ServiceContext, req: &RenderRequest) -> Result<RenderOutput, SessionError> {
        let data = self.loaded()?;
        let bad = |m: &str| Err(SessionError::BadParams(m.into()));
        if !(1..=MAX_IMAGE_SIDE).contains(&req.width) || !(1..=MAX_IMAGE_SIDE).contains(&req.height) {
            return bad("width and height must be in 1..=4096");
        }
        if !(req.fov > 0.0 && req.fov < 180.0) {
            return bad("fov must be in (0, 180) degrees");
        }
        if req.step.is_some_and(|s| !(s > 0.0 && s.is_finite())) {
            return bad("step must be positive");
        }
        if req.distance.is_some_and(|d| !(d > 0.0 && d.is_finite())) {
            return bad("distance must be positive");
        }

        let (mut mode, mut tf, mut offset) = (RenderMode::Mip, None, Pose6DoF::identity());
        if let Some(id) = req.view {
            let v = self.workspace.get(id).ok_or(SessionError::UnknownView(id))?;
            match &v.spec {
                ViewSpec::Volume { mode: m, tf: t } => {
                    mode = *m;
                    tf = t.clone();
                    offset = v.pose;
                }
                _ => return bad("render view must be a volume view"),
            }
        }
        let mode = req.mode.unwrap_or(mode);
        let tf = req.tf.clone().or(tf).unwrap_or_else(default_tf);

        let v = &data.volume;
        let camera = match req.camera.unwrap_or(if self.tracked {
            CameraMode::Tracked
        } else {
            CameraMode::Orbit
        }) {
            CameraMode::Orbit => Camera::orbit(v, req.yaw, req.pitch, req.distance, req.fov),
            CameraMode::Tracked => {
                let model = offset.then(&self.workspace.sample_pose);
                tracked_camera(&model, &ctx.tracker.intrinsics)?
            }
        };
        let opts = RenderOptions {
            step: req.step,
            ..RenderOptions::default()
        };
        let img = match mode {
            RenderMode::Mip => render_mip_with(v, &camera, req.width, req.height, &opts),
            RenderMode::Dvr => render_dvr_with(v, &tf, &camera, req.width, req.height, &opts),
        };
        let png = encode_rgba(&img)?;
        Ok(RenderOutput {
            hash: content_hash(&png),
            png,
        })
    }

    pub fn slice_png(&self, axis: Axis, index: usize) -> Result<Vec<u8>, SessionError> {
        let v: &Volume = &self.loaded()?.volume;
        let s = v
            .extract_slice(axis, index)
            .map_err(|e| SessionError::BadParams(e.to_string()))?;
        Ok(encode_gray(&slice_to_gray(v, &s))?)
    }

    pub fn meshes(&self, segments: usize, limit: Option<usize>) -> Result<MeshList, SessionError> {
        if segments < 3 {
            return Err(SessionError::BadParams("segments must be at least 3".into()));
        }
        let table = self.loaded()?.table.as_ref().ok_or(SessionError::NoTable)?;
        let mut out = MeshList {
            sample_pose: self.workspace.sample_pose,
            meshes: vec![],
            skipped: vec![],
        };
        for r in table.records().iter().take(limit.unwrap_or(usize::MAX)) {
            match fiber_to_cylinder(r, segments) {
                Ok(m) => out.meshes.push(MeshPayload::from(&m)),
                Err(_) => out.skipped.push(r.id),
            }
        }
        Ok(out)
    }
}

/// Render camera (volume frame) for a model placed in the tracking camera by
/// `model`. The tracking camera looks down +z with y down; the renderer's
/// camera looks down −z with y up, hence the half turn about x.
fn tracked_camera(model: &Pose6DoF, intr: &CameraIntrinsics) -> Result<Camera, SessionError> {
    let flip = Pose6DoF::from_axis_angle(Vec3::x(), std::f64::consts::PI);
    let pose = flip.then(&model.inverse());
    let fov = 2.0 * ((intr.cy + 0.5) / intr.fy).atan().to_degrees();
    Camera::new(pose, fov, 1.0).map_err(|e| SessionError::BadParams(e.to_string()))
}
