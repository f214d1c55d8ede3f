//! Command-line toolkit around `dstrack-core`: file formats, run
//! configuration, SVG overlays, and a multi-video runner. The binary in
//! `main.rs` is a thin shell over these modules.

pub mod config;
pub mod formats;
pub mod overlay;
pub mod runner;
