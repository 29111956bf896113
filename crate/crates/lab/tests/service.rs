mod common;

use std::time::Duration;

use axum::body::{Body, Bytes};
use axum::http::{HeaderMap, Method, Request, StatusCode};
use axum::Router;
use futures_util::StreamExt;
use serde_json::{json, Value};
use tower::ServiceExt;
use xct_core::geometry::Pose6DoF;
use xct_core::tracking::GrayImage;
use xct_lab::datasets::DatasetRegistry;
use xct_lab::http::{router, AppState};
use xct_lab::images::{encode_gray, encode_pgm};
use xct_lab::session::{ServiceContext, Session, Tracker};
use xct_lab::workspace::Workspace;

use common::{assert_schema, context, frame, marker_pose, write_dataset};

struct Reply {
    status: StatusCode,
    headers: HeaderMap,
    body: Bytes,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| {
            panic!("{e}: {}", String::from_utf8_lossy(&self.body))
        })
    }
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    send(app, req.body(body).unwrap()).await
}

async fn send(app: &Router, req: Request<Body>) -> Reply {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let body = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    Reply { status, headers, body }
}

async fn post_frame(app: &Router, session: u64, img: &GrayImage) -> Value {
    let req = Request::post(format!("/sessions/{session}/frames"))
        .header("content-type", "image/png")
        .body(Body::from(encode_gray(img).unwrap()))
        .unwrap();
    let r = send(app, req).await;
    assert_eq!(r.status, StatusCode::OK, "{}", String::from_utf8_lossy(&r.body));
    let v = r.json();
    assert_schema("frame_report", &v);
    v
}

fn app(dir: &std::path::Path, ws: Option<std::path::PathBuf>) -> Router {
    router(AppState::new(context(dir, ws)))
}

async fn new_session(app: &Router) -> u64 {
    let r = call(app, Method::POST, "/sessions", None).await;
    assert_eq!(r.status, StatusCode::CREATED);
    let v = r.json();
    assert_schema("session_info", &v);
    v["session"].as_u64().unwrap()
}

fn event_types(report: &Value) -> Vec<String> {
    report["events"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["type"].as_str().unwrap().to_string())
        .collect()
}

#[tokio::test]
async fn lists_registered_datasets() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), None);
    let r = call(&app, Method::GET, "/datasets", None).await;
    assert_eq!(r.status, StatusCode::OK);
    let v = r.json();
    assert_schema("datasets", &v);
    assert_eq!(v[0]["id"], "A");
    assert_eq!(v[0]["markers"], json!([1, 2]));
    assert_eq!(v[1]["dims"], json!([48, 48, 48]));
}

#[tokio::test]
async fn cold_start_second_marker_and_blank_frame() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), None);
    let s = new_session(&app).await;

    let r = post_frame(&app, s, &frame(&[(1, marker_pose(0.0, 10.0))])).await;
    assert_eq!(r["status"], "tracked");
    assert_eq!(r["dataset_changed"], true);
    assert_eq!(r["active_dataset"], "A");
    assert_eq!(event_types(&r), ["dataset-changed", "pose"]);
    let views = &r["events"][0]["views"];
    let kinds: Vec<&str> = views.as_array().unwrap().iter().map(|v| v["spec"]["kind"].as_str().unwrap()).collect();
    assert_eq!(kinds, ["volume", "histogram", "histogram", "scatter3"]);

    // The dataset's second marker only moves the sample.
    let r = post_frame(&app, s, &frame(&[(2, marker_pose(-30.0, 20.0))])).await;
    assert_eq!(r["dataset_changed"], false);
    assert_eq!(event_types(&r), ["pose"]);
    assert_eq!(r["tracked_marker"], 2);
    let pose_before = call(&app, Method::GET, &format!("/sessions/{s}/workspace"), None).await.json()["sample_pose"].clone();

    let r = post_frame(&app, s, &GrayImage::new(1280, 960, 128)).await;
    assert_eq!(r["status"], "no_detection");
    assert_eq!(r["log"], json!(["no detection"]));
    assert!(r["events"].as_array().unwrap().is_empty());
    let ws = call(&app, Method::GET, &format!("/sessions/{s}/workspace"), None).await.json();
    assert_schema("workspace", &ws);
    assert_eq!(ws["sample_pose"], pose_before);
    assert_eq!(ws["active_dataset"], "A");
}

#[tokio::test]
async fn replay_a_then_b_switches_once() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), None);
    let s = new_session(&app).await;
    let mut switches = 0;
    let mut loads = 0;
    for (k, id) in [1, 1, 2, 1, 3, 3, 3].into_iter().enumerate() {
        let r = post_frame(&app, s, &frame(&[(id, marker_pose(5.0 * k as f64, 5.0))])).await;
        for e in r["events"].as_array().unwrap() {
            if e["type"] == "dataset-changed" {
                loads += 1;
                if !e["previous"].is_null() {
                    switches += 1;
                    assert_eq!((e["previous"].as_str(), e["dataset"].as_str()), (Some("A"), Some("B")));
                }
            }
        }
    }
    assert_eq!((loads, switches), (2, 1));
}

#[tokio::test]
async fn unregistered_marker_changes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), None);
    let s = new_session(&app).await;
    let r = post_frame(&app, s, &frame(&[(9, marker_pose(0.0, 0.0))])).await;
    assert_eq!(r["status"], "unregistered");
    assert_eq!(r["detections"][0]["id"], 9);
    assert!(r["detections"][0]["dataset"].is_null());
    assert!(r["events"].as_array().unwrap().is_empty());
    assert!(r["active_dataset"].is_null());
}

#[tokio::test]
async fn frames_accept_pgm_and_reject_garbage() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), None);
    let s = new_session(&app).await;
    let img = frame(&[(3, marker_pose(0.0, 0.0))]);
    let req = Request::post(format!("/sessions/{s}/frames")).body(Body::from(encode_pgm(&img))).unwrap();
    let r = send(&app, req).await;
    assert_eq!(r.json()["active_dataset"], "B");
    let req = Request::post(format!("/sessions/{s}/frames")).body(Body::from("nope")).unwrap();
    let r = send(&app, req).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.json()["error"], "bad_frame");
    let r = call(&app, Method::GET, "/sessions/99/workspace", None).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    assert_schema("api_error", &r.json());
}

#[tokio::test]
async fn views_place_patch_delete_and_chart() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), None);
    let s = new_session(&app).await;
    let views = format!("/sessions/{s}/views");

    let r = call(&app, Method::POST, &views, Some(json!({"spec": {"kind": "histogram", "column": "straight_length", "bins": 16}}))).await;
    assert_eq!(r.status, StatusCode::CREATED);
    let v = r.json();
    assert_schema("placed_view", &v);
    assert_eq!(v["id"], 1);

    let r = call(&app, Method::POST, &views, Some(json!({"spec": {"kind": "histogram", "column": "bogus", "bins": 16}}))).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.json()["error"], "bad_params");
    let r = call(&app, Method::POST, &views, Some(json!({"spec": {"kind": "pie"}}))).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);

    let scatter = json!({"kind": "scatter3", "x": "diameter", "y": "surface_area", "z": "curved_length"});
    let pose = json!({"rotation": [1.0, 0.0, 0.0, 0.0], "translation": [10.0, 0.0, 0.0], "scale": 1.0});
    let r = call(&app, Method::POST, &views, Some(json!({"spec": scatter, "pose": pose}))).await;
    assert_eq!(r.json()["id"], 2);

    // Charts need data.
    let r = call(&app, Method::GET, &format!("/sessions/{s}/charts/1"), None).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    assert_eq!(r.json()["error"], "no_active_dataset");

    // Moving view 1 leaves view 2 alone.
    let moved = json!({"rotation": [0.0, 0.0, 0.0, 1.0], "translation": [1.0, 2.0, 3.0], "scale": 2.5});
    let r = call(&app, Method::PATCH, &format!("{views}/1"), Some(json!({"pose": moved}))).await;
    assert_eq!(r.status, StatusCode::OK);
    let ws = call(&app, Method::GET, &format!("/sessions/{s}/workspace"), None).await.json();
    assert_eq!(ws["views"][0]["pose"], moved);
    assert_eq!(ws["views"][1]["pose"], pose);
    let r = call(&app, Method::PATCH, &format!("{views}/1"), Some(json!({"pose": {"rotation": [2.0, 0.0, 0.0, 0.0], "translation": [0.0, 0.0, 0.0]}}))).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let r = call(&app, Method::PATCH, &format!("{views}/7"), Some(json!({"pose": moved}))).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);

    // Load a dataset by hand (this resets to its default views).
    let r = call(&app, Method::POST, &format!("/sessions/{s}/dataset"), Some(json!({"dataset": "B"}))).await;
    assert_eq!(r.status, StatusCode::OK);
    let ws = r.json();
    let hist = ws["views"].as_array().unwrap().iter().find(|v| v["spec"]["kind"] == "histogram").unwrap()["id"].as_u64().unwrap();
    let r = call(&app, Method::GET, &format!("/sessions/{s}/charts/{hist}"), None).await;
    assert_eq!(r.status, StatusCode::OK);
    let chart = r.json();
    assert_schema("chart_data", &chart);
    let total: u64 = chart["histogram"]["counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).sum();
    assert_eq!(total, 4);
    let volume_view = ws["views"][0]["id"].as_u64().unwrap();
    let r = call(&app, Method::GET, &format!("/sessions/{s}/charts/{volume_view}"), None).await;
    assert_eq!(r.json()["error"], "not_a_chart");

    for (spec, kind) in [
        (json!({"kind": "density", "column": "diameter"}), "density"),
        (json!({"kind": "bar", "group": "theta", "value": "curved_length", "aggregate": "count", "classes": 3}), "bar"),
    ] {
        let id = call(&app, Method::POST, &views, Some(json!({"spec": spec}))).await.json()["id"].as_u64().unwrap();
        let c = call(&app, Method::GET, &format!("/sessions/{s}/charts/{id}"), None).await.json();
        assert_schema("chart_data", &c);
        assert_eq!(c["kind"], kind);
    }

    let r = call(&app, Method::DELETE, &format!("{views}/{hist}"), None).await;
    assert_eq!(r.status, StatusCode::NO_CONTENT);
    let r = call(&app, Method::GET, &format!("/sessions/{s}/charts/{hist}"), None).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    let r = call(&app, Method::POST, &views, Some(json!({"spec": {"kind": "slice", "axis": "z", "index": 48}}))).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
}

fn decode_rgba(png: &[u8]) -> image::RgbaImage {
    image::load_from_memory(png).unwrap().to_rgba8()
}

#[tokio::test]
async fn renders_are_hashed_and_validated() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), None);
    let s = new_session(&app).await;
    let render = |q: &str| format!("/sessions/{s}/render?{q}");

    let r = call(&app, Method::GET, &render("mode=mip"), None).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    assert_eq!(r.json()["error"], "no_active_dataset");

    call(&app, Method::POST, &format!("/sessions/{s}/dataset"), Some(json!({"dataset": "A"}))).await;
    let a = call(&app, Method::GET, &render("mode=mip&width=64&height=48"), None).await;
    assert_eq!(a.status, StatusCode::OK);
    assert_eq!(a.headers["content-type"], "image/png");
    let hash = a.headers["x-content-hash"].to_str().unwrap().to_string();
    assert_eq!(hash.len(), 64);
    let b = call(&app, Method::GET, &render("mode=mip&width=64&height=48"), None).await;
    assert_eq!(a.body, b.body);
    assert_eq!(b.headers["x-content-hash"].to_str().unwrap(), hash);
    let img = decode_rgba(&a.body);
    assert_eq!(img.dimensions(), (64, 48));
    assert!(img.pixels().any(|p| p.0[0] > 100), "MIP shows the fibers");

    let req = Request::get(render("mode=mip&width=64&height=48"))
        .header("if-none-match", format!("\"{hash}\""))
        .body(Body::empty())
        .unwrap();
    assert_eq!(send(&app, req).await.status, StatusCode::NOT_MODIFIED);

    let clear = call(&app, Method::GET, &render("mode=dvr&tf=transparent&width=32&height=32"), None).await;
    let img = decode_rgba(&clear.body);
    assert!(img.pixels().all(|p| p.0 == [0, 0, 0, 255]), "transparent TF shows only the background");

    let custom = "[[0,[1,0,0,0]],[1,[1,0,0,0.5]]]";
    let r = call(&app, Method::GET, &render(&format!("mode=dvr&width=16&height=16&tf={}", urlencode(custom))), None).await;
    assert_eq!(r.status, StatusCode::OK);

    for bad in ["[[0.5,[1,1,1,1]],[1,[1,1,1,1]]]", "[[0,[2,0,0,0]],[1,[0,0,0,0]]]", "nonsense"] {
        let r = call(&app, Method::GET, &render(&format!("mode=dvr&tf={}", urlencode(bad))), None).await;
        assert_eq!(r.status, StatusCode::BAD_REQUEST, "{bad}");
        assert_eq!(r.json()["error"], "bad_tf");
    }
    let r = call(&app, Method::GET, &render("width=0"), None).await;
    assert_eq!(r.json()["error"], "bad_params");
    let r = call(&app, Method::GET, &render("mode=sideways"), None).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
}

fn urlencode(s: &str) -> String {
    s.bytes()
        .map(|b| match b {
            b'a'..=b'z' | b'A'..=b'Z' | b'0'..=b'9' | b'.' | b'-' | b'_' => (b as char).to_string(),
            _ => format!("%{b:02X}"),
        })
        .collect()
}

#[tokio::test]
async fn tracked_render_follows_the_sample() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), None);
    let s = new_session(&app).await;
    let q = format!("/sessions/{s}/render?mode=mip&width=160&height=120");

    post_frame(&app, s, &frame(&[(1, marker_pose(-60.0, 0.0))])).await;
    let left = decode_rgba(&call(&app, Method::GET, &q, None).await.body);
    post_frame(&app, s, &frame(&[(1, marker_pose(60.0, 0.0))])).await;
    let right = decode_rgba(&call(&app, Method::GET, &q, None).await.body);

    // Mean column of bright pixels moves right with the sample.
    let centroid = |img: &image::RgbaImage| {
        let (mut sum, mut n) = (0.0, 0.0);
        for (x, _, p) in img.enumerate_pixels() {
            if p.0[0] > 10 {
                sum += x as f64;
                n += 1.0;
            }
        }
        assert!(n > 0.0, "volume visible in the tracked view");
        sum / n
    };
    let (l, r) = (centroid(&left), centroid(&right));
    assert!(r - l > 20.0, "centroids {l} → {r}");

    let orbit = call(&app, Method::GET, &format!("{q}&camera=orbit"), None).await;
    assert_eq!(orbit.status, StatusCode::OK);
}

#[tokio::test]
async fn slices_and_meshes() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), None);
    let s = new_session(&app).await;
    call(&app, Method::POST, &format!("/sessions/{s}/dataset"), Some(json!({"dataset": "A"}))).await;

    let r = call(&app, Method::GET, &format!("/sessions/{s}/slice?axis=y&index=20"), None).await;
    assert_eq!(r.status, StatusCode::OK);
    let img = image::load_from_memory(&r.body).unwrap().to_luma8();
    assert_eq!(img.dimensions(), (48, 48));
    let r = call(&app, Method::GET, &format!("/sessions/{s}/slice?axis=y&index=48"), None).await;
    assert_eq!(r.json()["error"], "bad_params");
    let r = call(&app, Method::GET, &format!("/sessions/{s}/slice?axis=w&index=1"), None).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);

    let r = call(&app, Method::GET, &format!("/sessions/{s}/meshes?segments=8"), None).await;
    let v = r.json();
    assert_schema("mesh_list", &v);
    assert_eq!(v["meshes"].as_array().unwrap().len(), 4);
    let m: xct_lab::mesh_json::MeshPayload = serde_json::from_value(v["meshes"][0].clone()).unwrap();
    let mesh = m.decode().unwrap();
    assert_eq!((mesh.vertices.len(), mesh.indices.len()), (34, 32));
    let r = call(&app, Method::GET, &format!("/sessions/{s}/meshes?segments=2"), None).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn workspace_persists_and_reloads() {
    let dir = tempfile::tempdir().unwrap();
    let wsdir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), Some(wsdir.path().to_path_buf()));
    let s = new_session(&app).await;
    post_frame(&app, s, &frame(&[(1, marker_pose(0.0, 15.0))])).await;
    let pose = json!({"rotation": [0.5, 0.5, 0.5, 0.5], "translation": [-4.0, 2.5, 1e-3], "scale": 0.25});
    call(&app, Method::PATCH, &format!("/sessions/{s}/views/2"), Some(json!({"pose": pose}))).await;
    call(&app, Method::POST, &format!("/sessions/{s}/views"), Some(json!({"spec": {"kind": "slice", "axis": "x", "index": 3}}))).await;

    let live: Workspace = serde_json::from_value(call(&app, Method::GET, &format!("/sessions/{s}/workspace"), None).await.json()).unwrap();
    let file = wsdir.path().join(format!("session-{s}.json"));
    let saved = Workspace::load(&file).unwrap();
    assert_eq!(saved, live);
    assert_eq!(saved.views.len(), 5);

    // A fresh session adopts the saved document unchanged.
    let s2 = new_session(&app).await;
    let r = call(&app, Method::PUT, &format!("/sessions/{s2}/workspace"), Some(serde_json::to_value(&saved).unwrap())).await;
    assert_eq!(r.status, StatusCode::OK);
    let back: Workspace = serde_json::from_value(call(&app, Method::GET, &format!("/sessions/{s2}/workspace"), None).await.json()).unwrap();
    assert_eq!(back, saved);
    let chart = call(&app, Method::GET, &format!("/sessions/{s2}/charts/3"), None).await;
    assert_eq!(chart.status, StatusCode::OK);

    let mut dup = serde_json::to_value(&saved).unwrap();
    dup["views"][1]["id"] = dup["views"][0]["id"].clone();
    let r = call(&app, Method::PUT, &format!("/sessions/{s2}/workspace"), Some(dup)).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
}

/// Reads `n` server-sent events from a streaming body.
async fn read_events(body: Body, n: usize) -> Vec<(String, Value)> {
    let mut stream = body.into_data_stream();
    let mut buf = String::new();
    let mut out = vec![];
    while out.len() < n {
        let chunk = tokio::time::timeout(Duration::from_secs(20), stream.next())
            .await
            .expect("event arrives")
            .expect("stream open")
            .unwrap();
        buf.push_str(std::str::from_utf8(&chunk).unwrap());
        while let Some(end) = buf.find("\n\n") {
            let block: String = buf.drain(..end + 2).collect();
            let mut name = String::new();
            let mut data = String::new();
            for line in block.lines() {
                if let Some(v) = line.strip_prefix("event: ").or_else(|| line.strip_prefix("event:")) {
                    name = v.trim().into();
                } else if let Some(v) = line.strip_prefix("data: ").or_else(|| line.strip_prefix("data:")) {
                    data.push_str(v);
                }
            }
            if !data.is_empty() {
                out.push((name, serde_json::from_str(&data).unwrap()));
            }
        }
    }
    out
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn event_stream_preserves_ingest_order() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), None);
    let s = new_session(&app).await;
    let resp = app
        .clone()
        .oneshot(Request::get(format!("/sessions/{s}/events")).body(Body::empty()).unwrap())
        .await
        .unwrap();
    assert_eq!(resp.headers()["content-type"], "text/event-stream");

    let frames: Vec<GrayImage> = (0..6).map(|k| frame(&[(1 + (k % 2), marker_pose(-50.0 + 20.0 * k as f64, 5.0))])).collect();
    for f in &frames {
        post_frame(&app, s, f).await;
    }
    call(&app, Method::POST, &format!("/sessions/{s}/views"), Some(json!({"spec": {"kind": "density", "column": "theta"}}))).await;

    let events = read_events(resp.into_body(), 8).await;
    let names: Vec<&str> = events.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names[0], "dataset-changed");
    assert!(names[1..7].iter().all(|n| *n == "pose"));
    assert_eq!(names[7], "view-changed");
    for (k, (name, e)) in events.iter().enumerate() {
        assert_schema("event", e);
        assert_eq!(e["type"], name.as_str());
        assert_eq!(e["seq"], k as u64 + 1);
    }
    let frame_nos: Vec<u64> = events[1..7].iter().map(|(_, e)| e["frame"].as_u64().unwrap()).collect();
    assert_eq!(frame_nos, [1, 2, 3, 4, 5, 6]);
    let xs: Vec<f64> = events[1..7].iter().map(|(_, e)| e["sample_pose"]["translation"][0].as_f64().unwrap()).collect();
    assert!(xs.windows(2).all(|w| w[1] > w[0]), "poses arrive in frame order: {xs:?}");
}

#[test]
fn registry_rejects_bad_entries() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_dataset(dir.path(), "A", 1, &[1]);
    let mut reg = DatasetRegistry::new();
    reg.register(a.clone()).unwrap();
    assert!(reg.register(a.clone()).is_err(), "duplicate id");
    let mut b = write_dataset(dir.path(), "B", 2, &[1]);
    assert!(reg.register(b.clone()).is_err(), "marker already linked");
    b.markers = vec![2];
    b.csv = Some(dir.path().join("missing.csv"));
    assert!(reg.register(b.clone()).is_err(), "missing file");
    b.csv = None;
    b.marker_poses.insert(5, Pose6DoF::identity());
    assert!(reg.register(b.clone()).is_err(), "pose for unlisted marker");
    b.marker_poses.clear();
    reg.register(b).unwrap();
    assert_eq!(reg.by_marker(2).unwrap().id, "B");
    assert!(reg.by_marker(9).is_none());

    // Registry files resolve paths relative to themselves.
    let doc = json!({"datasets": [{"id": "A", "name": "a", "volume": "A.raw", "meta": "A.meta", "csv": "A.csv", "markers": [4],
        "marker_poses": {"4": {"rotation": [1, 0, 0, 0], "translation": [0, -80, 0]}},
        "default_views": [{"kind": "histogram", "column": "diameter", "bins": 8}]}]});
    let path = dir.path().join("datasets.json");
    std::fs::write(&path, doc.to_string()).unwrap();
    let reg = DatasetRegistry::load(&path).unwrap();
    let e = reg.by_marker(4).unwrap();
    assert_eq!(e.views().len(), 1);
    assert_eq!(e.marker_pose(4).translation.y, -80.0);
}

#[test]
fn marker_offsets_and_failed_loads() {
    let dir = tempfile::tempdir().unwrap();
    let mut entry = write_dataset(dir.path(), "A", 1, &[1]);
    let offset = Pose6DoF::from_translation(xct_core::math::Vec3::new(0.0, -80.0, 0.0));
    entry.marker_poses.insert(1, offset);
    let mut reg = DatasetRegistry::new();
    reg.register(entry.clone()).unwrap();
    let broken = write_dataset(dir.path(), "B", 2, &[3]);
    reg.register(broken.clone()).unwrap();
    let ctx = ServiceContext::new(reg, Tracker::standard(), None);

    let mut s = Session::new(1);
    let r = s.ingest_frame(&ctx, &frame(&[(1, marker_pose(0.0, 0.0))]));
    let det = r.detections[0].detection.pose;
    let expected = offset.then(&det);
    assert!(s.workspace().sample_pose.max_deviation(&expected, &[xct_core::math::Vec3::zeros()]) < 1e-9);

    // Re-detection does not reload.
    let before = std::sync::Arc::as_ptr(s.dataset().unwrap());
    let r = s.ingest_frame(&ctx, &frame(&[(1, marker_pose(10.0, 0.0))]));
    assert!(!r.dataset_changed);
    assert_eq!(std::sync::Arc::as_ptr(s.dataset().unwrap()), before);

    std::fs::remove_file(&broken.volume).unwrap();
    let r = s.ingest_frame(&ctx, &frame(&[(3, marker_pose(0.0, 0.0))]));
    assert_eq!(r.status, xct_lab::session::FrameStatus::LoadFailed);
    assert!(r.events.is_empty());
    assert!(r.log[0].contains("B"), "{:?}", r.log);
    assert_eq!(s.workspace().active_dataset.as_deref(), Some("A"));
}
