//! Std side of the XCT inspection engine: files on disk, the HTTP session
//! service and the `xct` command line, all on top of `xct-core`.
//!
//! - [`volume_files`]: `.raw` + `.meta` pairs.
//! - [`table_csv`]: fiber tables as schema-v1 CSV, plus foreign-header import.
//! - [`images`]: PNG output, PNG/PGM frame input.
//! - [`mesh_json`]: cylinder meshes as JSON with base64 little-endian payloads.
//! - [`marker_files`]: marker dictionary and marker registry JSON.
//! - [`datasets`]: the dataset registry (volume, table, markers, default views).
//! - [`workspace`]: placed views and their persistence.
//! - [`session`]: frame ingest, auto-load, charts, renders.
//! - [`http`]: the axum router and server-sent events.
//! - [`cli`]: the `xct` subcommands.

pub mod cli;
pub mod datasets;
pub mod error;
pub mod http;
pub mod images;
pub mod marker_files;
pub mod mesh_json;
pub mod session;
pub mod table_csv;
pub mod volume_files;
pub mod workspace;

pub use error::LabError;
