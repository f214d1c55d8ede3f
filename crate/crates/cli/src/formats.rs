//! File formats: detection JSONL in, track and ground-truth JSON out.
//!
//! Writers are hand-rolled so output is byte-deterministic: keys in
//! alphabetical order, frame keys as quoted integers in numeric order,
//! one instance object per line, reals formatted with two decimals. Two
//! runs over the same input produce identical files, which makes output
//! diffable and lets tests compare bytes instead of parse trees.

use dstrack_core::geometry::{Point, Quad};
use dstrack_core::metrics::{GroundTruth, GtInstance};
use dstrack_core::tracker::{Detection, Emission, TrackSet};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{} line {line}: {msg}", path.display())]
    Line { path: PathBuf, line: usize, msg: String },
    #[error("{}: {msg}", path.display())]
    File { path: PathBuf, msg: String },
}

impl FormatError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_owned(), source }
    }

    fn line(path: &Path, line: usize, msg: impl Into<String>) -> Self {
        Self::Line { path: path.to_owned(), line, msg: msg.into() }
    }

    fn file(path: &Path, msg: impl Into<String>) -> Self {
        Self::File { path: path.to_owned(), msg: msg.into() }
    }
}

/// Two-decimal fixed-point rendering; negative zero is normalized so the
/// same geometry never prints two ways.
fn fmt_real(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        String::from("0.00")
    } else {
        s
    }
}

fn fmt_points(q: &Quad) -> String {
    let mut out = String::from("[");
    for (i, p) in q.points().iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{}, {}", fmt_real(p.x), fmt_real(p.y));
    }
    out.push(']');
    out
}

fn quad_from_points(points: &[f64]) -> Result<Quad, String> {
    if points.len() != 8 {
        return Err(format!("points has {} coordinates, expected 8", points.len()));
    }
    let pts = [
        Point::new(points[0], points[1]),
        Point::new(points[2], points[3]),
        Point::new(points[4], points[5]),
        Point::new(points[6], points[7]),
    ];
    Quad::new(pts).map_err(|e| e.to_string())
}

/// Detections grouped by video, then frame.
pub type DetectionMap = BTreeMap<String, BTreeMap<u64, Vec<Detection>>>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DetLine {
    frame: u64,
    points: Vec<f64>,
    score: f64,
    video_id: String,
}

/// Reads a detections JSONL file: one JSON object per line with keys
/// `frame`, `points` (8 reals), `score`, `video_id`. Blank lines are
/// skipped. Frames must be non-decreasing per video.
pub fn read_detections_file(path: &Path) -> Result<DetectionMap, FormatError> {
    let file = fs::File::open(path).map_err(|e| FormatError::io(path, e))?;
    let reader = BufReader::new(file);
    let mut out: DetectionMap = BTreeMap::new();
    let mut last_frame: BTreeMap<String, u64> = BTreeMap::new();

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| FormatError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: DetLine = serde_json::from_str(&line)
            .map_err(|e| FormatError::line(path, lineno, format!("invalid JSON: {e}")))?;
        let quad = quad_from_points(&raw.points)
            .map_err(|msg| FormatError::line(path, lineno, msg))?;
        let det = Detection::from_quad(raw.frame, quad, raw.score)
            .map_err(|e| FormatError::line(path, lineno, e.to_string()))?;

        if let Some(&last) = last_frame.get(&raw.video_id) {
            if raw.frame < last {
                return Err(FormatError::line(
                    path,
                    lineno,
                    format!("frame {} after frame {last} for video {}", raw.frame, raw.video_id),
                ));
            }
        }
        last_frame.insert(raw.video_id.clone(), raw.frame);
        out.entry(raw.video_id).or_default().entry(raw.frame).or_default().push(det);
    }
    Ok(out)
}

/// Renders detections as JSONL, videos in map order.
pub fn write_detections_string(videos: &DetectionMap) -> String {
    let mut out = String::new();
    for (video_id, frames) in videos {
        let vid = serde_json::to_string(video_id).expect("string serializes");
        for (frame, dets) in frames {
            for d in dets {
                let _ = writeln!(
                    out,
                    "{{\"frame\": {frame}, \"points\": {}, \"score\": {}, \"video_id\": {vid}}}",
                    fmt_points(d.quad()),
                    fmt_real(d.score()),
                );
            }
        }
    }
    out
}

pub fn write_detections_file(path: &Path, videos: &DetectionMap) -> Result<(), FormatError> {
    fs::write(path, write_detections_string(videos)).map_err(|e| FormatError::io(path, e))
}

/// Renders a track set as pretty JSON with the frozen layout.
pub fn write_tracks_string(tracks: &TrackSet) -> String {
    let mut out = String::from("{\n  \"frames\": {");
    let mut first_frame = true;
    for (frame, emissions) in &tracks.frames {
        if !first_frame {
            out.push(',');
        }
        first_frame = false;
        let _ = write!(out, "\n    \"{frame}\": [\n");
        for (i, e) in emissions.iter().enumerate() {
            let sep = if i + 1 < emissions.len() { "," } else { "" };
            let _ = writeln!(
                out,
                "      {{\"points\": {}, \"score\": {}, \"track_id\": {}}}{sep}",
                fmt_points(&e.quad),
                fmt_real(e.score),
                e.trace_id,
            );
        }
        out.push_str("    ]");
    }
    if !first_frame {
        out.push_str("\n  ");
    }
    let vid = serde_json::to_string(&tracks.video_id).expect("string serializes");
    let _ = write!(out, "}},\n  \"video_id\": {vid}\n}}\n");
    out
}

pub fn write_tracks_file(path: &Path, tracks: &TrackSet) -> Result<(), FormatError> {
    fs::write(path, write_tracks_string(tracks)).map_err(|e| FormatError::io(path, e))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TrackInstanceRaw {
    points: Vec<f64>,
    score: f64,
    track_id: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TrackFileRaw {
    frames: BTreeMap<String, Vec<TrackInstanceRaw>>,
    video_id: String,
}

fn parse_frame_key(path: &Path, key: &str) -> Result<u64, FormatError> {
    key.parse::<u64>()
        .map_err(|_| FormatError::file(path, format!("frame key {key:?} is not an integer")))
}

/// Reads a track file written by [`write_tracks_file`].
pub fn read_tracks_file(path: &Path) -> Result<TrackSet, FormatError> {
    let text = fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
    let raw: TrackFileRaw = serde_json::from_str(&text)
        .map_err(|e| FormatError::file(path, format!("invalid JSON: {e}")))?;
    let mut frames: BTreeMap<u64, Vec<Emission>> = BTreeMap::new();
    for (key, instances) in &raw.frames {
        let frame = parse_frame_key(path, key)?;
        let mut emissions = Vec::with_capacity(instances.len());
        for inst in instances {
            let quad = quad_from_points(&inst.points)
                .map_err(|msg| FormatError::file(path, format!("frame {frame}: {msg}")))?;
            if !(0.0..=1.0).contains(&inst.score) || inst.score.is_nan() {
                return Err(FormatError::file(
                    path,
                    format!("frame {frame}: score {} outside [0, 1]", inst.score),
                ));
            }
            emissions.push(Emission { trace_id: inst.track_id, quad, score: inst.score });
        }
        frames.insert(frame, emissions);
    }
    Ok(TrackSet { video_id: raw.video_id, frames })
}

/// Renders ground truth as pretty JSON with the frozen layout.
pub fn write_gt_string(gt: &GroundTruth) -> String {
    let mut out = String::from("{\n  \"frames\": {");
    let mut first_frame = true;
    for (frame, instances) in &gt.frames {
        if !first_frame {
            out.push(',');
        }
        first_frame = false;
        let _ = write!(out, "\n    \"{frame}\": [\n");
        for (i, g) in instances.iter().enumerate() {
            let sep = if i + 1 < instances.len() { "," } else { "" };
            let transcription =
                serde_json::to_string(&g.transcription).expect("option serializes");
            let _ = writeln!(
                out,
                "      {{\"id\": {}, \"points\": {}, \"transcription\": {transcription}}}{sep}",
                g.id,
                fmt_points(&g.quad),
            );
        }
        out.push_str("    ]");
    }
    if !first_frame {
        out.push_str("\n  ");
    }
    let vid = serde_json::to_string(&gt.video_id).expect("string serializes");
    let _ = write!(out, "}},\n  \"video_id\": {vid}\n}}\n");
    out
}

pub fn write_gt_file(path: &Path, gt: &GroundTruth) -> Result<(), FormatError> {
    fs::write(path, write_gt_string(gt)).map_err(|e| FormatError::io(path, e))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GtInstanceRaw {
    id: u64,
    points: Vec<f64>,
    transcription: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GtFileRaw {
    frames: BTreeMap<String, Vec<GtInstanceRaw>>,
    video_id: String,
}

/// Reads a ground-truth file written by [`write_gt_file`].
pub fn read_gt_file(path: &Path) -> Result<GroundTruth, FormatError> {
    let text = fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
    let raw: GtFileRaw = serde_json::from_str(&text)
        .map_err(|e| FormatError::file(path, format!("invalid JSON: {e}")))?;
    let mut frames: BTreeMap<u64, Vec<GtInstance>> = BTreeMap::new();
    for (key, instances) in &raw.frames {
        let frame = parse_frame_key(path, key)?;
        let mut out = Vec::with_capacity(instances.len());
        for inst in instances {
            let quad = quad_from_points(&inst.points)
                .map_err(|msg| FormatError::file(path, format!("frame {frame}: {msg}")))?;
            out.push(GtInstance {
                id: inst.id,
                quad,
                transcription: inst.transcription.clone(),
            });
        }
        frames.insert(frame, out);
    }
    Ok(GroundTruth { video_id: raw.video_id, frames })
}
