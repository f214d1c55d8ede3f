//! Tracking-by-detection over rotated boxes.
//!
//! Each frame runs a fixed pipeline: score filter, NMS, Kalman predict,
//! IoU-gated assignment, Kalman update, track birth, aging, emission. The
//! stages are deterministic and detections are canonically pre-sorted, so
//! the output is a pure function of the configuration and the detection
//! set; feeding the same video twice (or in a different input order)
//! produces identical track files.
//!
//! Lifecycle: a track is born from every unmatched detection, gains a hit
//! per matched frame, and is killed after `max_age` consecutive unmatched
//! frames. Emission requires a match in the current frame (no coasting
//! output) plus confirmation: `hits >= min_hits`, relaxed during the first
//! `min_hits` frames of a video so short clips are not structurally empty.

use crate::assignment::{associate_with, AssocOptions};
use crate::filter::{self, FilterError, KalmanState, NoiseConfig};
use crate::geometry::{
    nms, quad_to_rotated_box, rotated_box_to_quad, GeometryError, IouMode, Quad, RotatedBox,
};
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Identifier of a track within one video; sequential from 1.
pub type TraceId = u64;

#[derive(Debug, Clone, PartialEq)]
pub enum TrackError {
    /// `step` was called with a frame index not greater than the last.
    OutOfOrderFrame { frame: u64, last: u64 },
    /// A detection's frame field disagrees with the frame being stepped.
    FrameMismatch { expected: u64, got: u64 },
    /// A detection score outside `[0, 1]`.
    ScoreRange(f64),
    /// A tracker or noise parameter outside its range.
    InvalidConfig(String),
    Geometry(GeometryError),
    Filter(FilterError),
}

impl fmt::Display for TrackError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::OutOfOrderFrame { frame, last } => {
                write!(f, "out-of-order frame {frame} after {last}")
            }
            Self::FrameMismatch { expected, got } => {
                write!(f, "detection for frame {got} fed to step for frame {expected}")
            }
            Self::ScoreRange(s) => write!(f, "detection score {s} outside [0, 1]"),
            Self::InvalidConfig(msg) => write!(f, "invalid config: {msg}"),
            Self::Geometry(e) => write!(f, "geometry: {e}"),
            Self::Filter(e) => write!(f, "filter: {e}"),
        }
    }
}

impl core::error::Error for TrackError {}

impl From<GeometryError> for TrackError {
    fn from(e: GeometryError) -> Self {
        Self::Geometry(e)
    }
}

impl From<FilterError> for TrackError {
    fn from(e: FilterError) -> Self {
        Self::Filter(e)
    }
}

/// One scored detection on one frame, carrying both the source quad and its
/// minimum-area rotated box.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    frame: u64,
    quad: Quad,
    rbox: RotatedBox,
    score: f64,
}

impl Detection {
    /// Builds a detection from a quad, deriving the rotated box.
    pub fn from_quad(frame: u64, quad: Quad, score: f64) -> Result<Self, TrackError> {
        if !(0.0..=1.0).contains(&score) || score.is_nan() {
            return Err(TrackError::ScoreRange(score));
        }
        let rbox = quad_to_rotated_box(&quad)?;
        Ok(Self { frame, quad, rbox, score })
    }

    /// Builds a detection from a rotated box, deriving the quad.
    pub fn from_box(frame: u64, rbox: RotatedBox, score: f64) -> Result<Self, TrackError> {
        if !(0.0..=1.0).contains(&score) || score.is_nan() {
            return Err(TrackError::ScoreRange(score));
        }
        Ok(Self { frame, quad: rotated_box_to_quad(&rbox), rbox, score })
    }

    pub fn frame(&self) -> u64 {
        self.frame
    }

    pub fn quad(&self) -> &Quad {
        &self.quad
    }

    pub fn rbox(&self) -> &RotatedBox {
        &self.rbox
    }

    pub fn score(&self) -> f64 {
        self.score
    }
}

/// Tracker parameters. All fields have working defaults; see `validate`
/// for the accepted ranges.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrackerConfig {
    /// Detections scoring below this are dropped before anything else.
    pub score_threshold: f64,
    /// NMS suppression threshold on detection IoU.
    pub nms_iou: f64,
    /// Minimum IoU for a track-detection match to stand.
    pub iou_gate: f64,
    /// Consecutive unmatched frames before a track is killed.
    pub max_age: u32,
    /// Matches required before a track emits (see module docs for the
    /// early-video relaxation).
    pub min_hits: u32,
    /// Filter and associate on the detection angle. When false, boxes are
    /// tracked axis-aligned and the last observed angle is re-attached at
    /// emission.
    pub track_angle: bool,
    /// Emit the matched detection quad instead of the filtered box.
    pub emit_raw: bool,
    /// Mask sub-gate pairs before assignment instead of demoting after.
    pub gate_before_assign: bool,
    /// IoU flavor for NMS and association.
    pub iou_mode: IouMode,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            score_threshold: 0.1,
            nms_iou: 0.5,
            iou_gate: 0.3,
            max_age: 3,
            min_hits: 2,
            track_angle: true,
            emit_raw: false,
            gate_before_assign: false,
            iou_mode: IouMode::Rotated,
        }
    }
}

impl TrackerConfig {
    /// Checks ranges; the error names the offending field.
    pub fn validate(&self) -> Result<(), String> {
        use alloc::format;
        for (name, v) in [
            ("score_threshold", self.score_threshold),
            ("nms_iou", self.nms_iou),
            ("iou_gate", self.iou_gate),
        ] {
            if !(0.0..=1.0).contains(&v) || v.is_nan() {
                return Err(format!("{name} = {v} outside [0, 1]"));
            }
        }
        if self.min_hits == 0 {
            return Err(String::from("min_hits must be at least 1"));
        }
        Ok(())
    }
}

/// One emitted track instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Emission {
    pub trace_id: TraceId,
    pub quad: Quad,
    pub score: f64,
}

struct Track {
    id: TraceId,
    state: KalmanState,
    hits: u32,
    age: u32,
    time_since_update: u32,
    last_theta: f64,
    last_quad: Quad,
    last_score: f64,
}

/// Stateful per-video tracker. Create one per video; see [`run_video`].
pub struct Tracker {
    cfg: TrackerConfig,
    noise: NoiseConfig,
    tracks: Vec<Track>,
    next_id: TraceId,
    last_frame: Option<u64>,
}

impl Tracker {
    pub fn new(cfg: TrackerConfig, noise: NoiseConfig) -> Result<Self, TrackError> {
        cfg.validate().map_err(TrackError::InvalidConfig)?;
        noise.validate().map_err(TrackError::InvalidConfig)?;
        Ok(Self { cfg, noise, tracks: Vec::new(), next_id: 1, last_frame: None })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    /// Live (not yet killed) tracks, including unconfirmed ones.
    pub fn active_tracks(&self) -> usize {
        self.tracks.len()
    }

    /// The box a detection contributes to filtering and association:
    /// its rotated box, or the same box flattened to angle zero when
    /// `track_angle` is off.
    fn match_box(&self, d: &Detection) -> RotatedBox {
        if self.cfg.track_angle {
            *d.rbox()
        } else {
            RotatedBox::new(d.rbox().cx(), d.rbox().cy(), d.rbox().w(), d.rbox().h(), 0.0)
                .expect("valid box stays valid with zero angle")
        }
    }

    /// Advances one frame and returns this frame's emissions, sorted by
    /// trace id. Frames must be fed in strictly increasing order; frames
    /// with no detections still age and kill tracks.
    pub fn step(&mut self, frame: u64, detections: &[Detection]) -> Result<Vec<Emission>, TrackError> {
        if let Some(last) = self.last_frame {
            if frame <= last {
                return Err(TrackError::OutOfOrderFrame { frame, last });
            }
        }
        self.last_frame = Some(frame);
        for d in detections {
            if d.frame() != frame {
                return Err(TrackError::FrameMismatch { expected: frame, got: d.frame() });
            }
        }

        // Score filter, then the canonical pre-sort (score descending, quad
        // order ascending) that makes input order irrelevant.
        let mut dets: Vec<&Detection> =
            detections.iter().filter(|d| d.score() >= self.cfg.score_threshold).collect();
        dets.sort_by(|a, b| {
            b.score().total_cmp(&a.score()).then_with(|| a.quad().canonical_cmp(b.quad()))
        });

        // NMS on the native detection geometry.
        let nms_boxes: Vec<RotatedBox> = dets.iter().map(|d| *d.rbox()).collect();
        let nms_scores: Vec<f64> = dets.iter().map(|d| d.score()).collect();
        let mut kept = nms(&nms_boxes, &nms_scores, self.cfg.nms_iou, self.cfg.iou_mode);
        kept.sort_unstable();
        let dets: Vec<&Detection> = kept.into_iter().map(|i| dets[i]).collect();

        // Predict.
        for t in &mut self.tracks {
            filter::predict(&mut t.state, &self.noise);
            t.age += 1;
            t.time_since_update += 1;
        }

        // Associate predicted boxes with detections.
        let track_boxes: Vec<RotatedBox> =
            self.tracks.iter().map(|t| filter::state_to_box(&t.state)).collect();
        let det_boxes: Vec<RotatedBox> = dets.iter().map(|d| self.match_box(d)).collect();
        let assoc = associate_with(
            &track_boxes,
            &det_boxes,
            self.cfg.iou_gate,
            AssocOptions {
                gate_before_assign: self.cfg.gate_before_assign,
                iou_mode: self.cfg.iou_mode,
            },
        );

        // Update matched tracks.
        for &(ti, di) in &assoc.matches {
            let t = &mut self.tracks[ti];
            filter::update(&mut t.state, &det_boxes[di], &self.noise)?;
            t.hits += 1;
            t.time_since_update = 0;
            t.last_theta = dets[di].rbox().theta();
            t.last_quad = *dets[di].quad();
            t.last_score = dets[di].score();
        }

        // Birth a track per unmatched detection, in detection order.
        for &di in &assoc.unmatched_detections {
            let d = dets[di];
            let state = filter::initiate(&det_boxes[di], &self.noise);
            self.tracks.push(Track {
                id: self.next_id,
                state,
                hits: 1,
                age: 0,
                time_since_update: 0,
                last_theta: d.rbox().theta(),
                last_quad: *d.quad(),
                last_score: d.score(),
            });
            self.next_id += 1;
        }

        // Kill stale tracks.
        let max_age = self.cfg.max_age;
        self.tracks.retain(|t| t.time_since_update <= max_age);

        // Emit confirmed tracks matched in this frame. During the first
        // `min_hits` frames of the video, tracks that have already survived
        // at least one frame emit early.
        let min_hits = self.cfg.min_hits;
        let mut out = Vec::new();
        for t in &self.tracks {
            if t.time_since_update != 0 {
                continue;
            }
            let confirmed = t.hits >= min_hits;
            let early = t.age >= 1 && t.age < min_hits && frame < u64::from(min_hits);
            if !(confirmed || early) {
                continue;
            }
            let quad = if self.cfg.emit_raw {
                t.last_quad
            } else {
                let b = filter::state_to_box(&t.state);
                let b = if self.cfg.track_angle {
                    b
                } else {
                    RotatedBox::new(b.cx(), b.cy(), b.w(), b.h(), t.last_theta)
                        .expect("posterior box is valid at any angle")
                };
                rotated_box_to_quad(&b)
            };
            out.push(Emission { trace_id: t.id, quad, score: t.last_score });
        }
        // Track storage is in birth order, so emissions are already sorted.
        debug_assert!(out.windows(2).all(|w| w[0].trace_id < w[1].trace_id));
        Ok(out)
    }
}

/// All emissions of one video, grouped by frame. Frames with no emissions
/// carry no entry.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrackSet {
    pub video_id: String,
    pub frames: BTreeMap<u64, Vec<Emission>>,
}

/// Aggregate facts about a track set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrackStats {
    pub distinct_tracks: u64,
    pub max_concurrent: usize,
    pub frames_with_output: usize,
}

impl TrackSet {
    pub fn stats(&self) -> TrackStats {
        let mut ids = alloc::collections::BTreeSet::new();
        let mut max_concurrent = 0;
        for frame in self.frames.values() {
            max_concurrent = max_concurrent.max(frame.len());
            for e in frame {
                ids.insert(e.trace_id);
            }
        }
        TrackStats {
            distinct_tracks: ids.len() as u64,
            max_concurrent,
            frames_with_output: self.frames.len(),
        }
    }
}

/// Runs a fresh tracker over a whole video.
///
/// Steps every frame from 0 through the last detection frame, including
/// empty ones, so gaps age tracks exactly as they would in a live feed.
/// Detections must carry the frame index they are keyed under.
pub fn run_video(
    cfg: &TrackerConfig,
    noise: &NoiseConfig,
    video_id: &str,
    detections: &BTreeMap<u64, Vec<Detection>>,
) -> Result<TrackSet, TrackError> {
    let mut tracker = Tracker::new(cfg.clone(), noise.clone())?;
    let mut out = TrackSet { video_id: String::from(video_id), frames: BTreeMap::new() };
    let Some((&last, _)) = detections.last_key_value() else {
        return Ok(out);
    };
    static NO_DETS: [Detection; 0] = [];
    for frame in 0..=last {
        let dets: &[Detection] = detections.get(&frame).map_or(&NO_DETS, |v| v.as_slice());
        let emissions = tracker.step(frame, dets)?;
        if !emissions.is_empty() {
            out.frames.insert(frame, emissions);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn det(frame: u64, cx: f64, cy: f64, w: f64, h: f64, theta: f64, score: f64) -> Detection {
        Detection::from_box(frame, RotatedBox::new(cx, cy, w, h, theta).unwrap(), score).unwrap()
    }

    fn center_of(e: &Emission) -> (f64, f64) {
        let pts = e.quad.points();
        let cx = pts.iter().map(|p| p.x).sum::<f64>() / 4.0;
        let cy = pts.iter().map(|p| p.y).sum::<f64>() / 4.0;
        (cx, cy)
    }

    fn tracker(cfg: TrackerConfig) -> Tracker {
        Tracker::new(cfg, NoiseConfig::default()).unwrap()
    }

    #[test]
    fn stationary_box_emits_from_second_frame() {
        let mut tk = tracker(TrackerConfig::default()); // min_hits = 2
        for frame in 0..6 {
            let out = tk.step(frame, &[det(frame, 50.0, 40.0, 20.0, 8.0, 0.1, 0.9)]).unwrap();
            if frame == 0 {
                assert!(out.is_empty(), "unconfirmed track must not emit at birth");
            } else {
                assert_eq!(out.len(), 1);
                assert_eq!(out[0].trace_id, 1);
                let (cx, cy) = center_of(&out[0]);
                assert!((cx - 50.0).abs() < 0.5 && (cy - 40.0).abs() < 0.5);
            }
        }
    }

    #[test]
    fn min_hits_one_emits_at_birth() {
        let cfg = TrackerConfig { min_hits: 1, ..TrackerConfig::default() };
        let mut tk = tracker(cfg);
        let out = tk.step(0, &[det(0, 10.0, 10.0, 8.0, 4.0, 0.0, 0.8)]).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].trace_id, 1);
    }

    #[test]
    fn early_video_exception_fills_short_clips() {
        let cfg = TrackerConfig { min_hits: 3, ..TrackerConfig::default() };
        let mut tk = tracker(cfg.clone());
        let d = |f| det(f, 30.0, 30.0, 16.0, 6.0, 0.0, 0.9);
        assert!(tk.step(0, &[d(0)]).unwrap().is_empty()); // newborn never early-emits
        assert_eq!(tk.step(1, &[d(1)]).unwrap().len(), 1); // hits 2 < 3, but frame 1 < 3
        assert_eq!(tk.step(2, &[d(2)]).unwrap().len(), 1); // hits 3: confirmed

        // The same birth later in the video gets no exception.
        let mut tk = tracker(cfg);
        for f in 0..5 {
            assert!(tk.step(f, &[]).unwrap().is_empty());
        }
        assert!(tk.step(5, &[d(5)]).unwrap().is_empty());
        assert!(tk.step(6, &[d(6)]).unwrap().is_empty()); // hits 2 < 3, frame 6 >= 3
        assert_eq!(tk.step(7, &[d(7)]).unwrap().len(), 1); // hits 3
    }

    #[test]
    fn gap_within_max_age_keeps_the_id() {
        let mut tk = tracker(TrackerConfig::default()); // max_age = 3
        let d = |f| det(f, 100.0, 50.0, 24.0, 10.0, 0.2, 0.9);
        for f in 0..4 {
            tk.step(f, &[d(f)]).unwrap();
        }
        for f in 4..6 {
            assert!(tk.step(f, &[]).unwrap().is_empty(), "no coasting emission");
        }
        for f in 6..10 {
            let out = tk.step(f, &[d(f)]).unwrap();
            assert_eq!(out.len(), 1, "frame {f}");
            assert_eq!(out[0].trace_id, 1, "id must survive a gap <= max_age");
        }
    }

    #[test]
    fn gap_beyond_max_age_births_a_new_id() {
        let mut tk = tracker(TrackerConfig::default());
        let d = |f| det(f, 100.0, 50.0, 24.0, 10.0, 0.2, 0.9);
        for f in 0..4 {
            tk.step(f, &[d(f)]).unwrap();
        }
        for f in 4..9 {
            tk.step(f, &[]).unwrap(); // killed once time_since_update > 3
        }
        assert_eq!(tk.active_tracks(), 0);
        assert!(tk.step(9, &[d(9)]).unwrap().is_empty()); // reborn, unconfirmed
        let out = tk.step(10, &[d(10)]).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].trace_id, 2);
    }

    #[test]
    fn low_scores_are_ignored() {
        let mut tk = tracker(TrackerConfig::default()); // threshold 0.1
        let out = tk.step(0, &[det(0, 10.0, 10.0, 8.0, 4.0, 0.0, 0.05)]).unwrap();
        assert!(out.is_empty());
        assert_eq!(tk.active_tracks(), 0, "sub-threshold detection must not birth a track");
    }

    #[test]
    fn nms_collapses_duplicates_before_birth() {
        let mut tk = tracker(TrackerConfig::default());
        let dets = [
            det(0, 10.0, 10.0, 20.0, 8.0, 0.1, 0.9),
            det(0, 10.3, 10.1, 20.0, 8.0, 0.1, 0.7), // near-duplicate, lower score
        ];
        tk.step(0, &dets).unwrap();
        assert_eq!(tk.active_tracks(), 1);
    }

    #[test]
    fn frame_ordering_is_enforced() {
        let mut tk = tracker(TrackerConfig::default());
        tk.step(5, &[]).unwrap();
        let err = tk.step(5, &[]).unwrap_err();
        assert_eq!(err, TrackError::OutOfOrderFrame { frame: 5, last: 5 });
        let err = tk.step(3, &[]).unwrap_err();
        assert_eq!(err, TrackError::OutOfOrderFrame { frame: 3, last: 5 });
        // Gaps forward are fine.
        tk.step(9, &[]).unwrap();
    }

    #[test]
    fn detection_frame_must_match_step_frame() {
        let mut tk = tracker(TrackerConfig::default());
        let err = tk.step(0, &[det(3, 10.0, 10.0, 8.0, 4.0, 0.0, 0.9)]).unwrap_err();
        assert_eq!(err, TrackError::FrameMismatch { expected: 0, got: 3 });
    }

    #[test]
    fn ids_follow_canonical_detection_order() {
        let cfg = TrackerConfig { min_hits: 1, ..TrackerConfig::default() };
        let mut tk = tracker(cfg);
        // Input order scrambled; ids must follow score-descending order.
        let dets = [
            det(0, 10.0, 10.0, 8.0, 4.0, 0.0, 0.5),
            det(0, 20.0, 10.0, 8.0, 4.0, 0.0, 0.9),
            det(0, 30.0, 10.0, 8.0, 4.0, 0.0, 0.7),
        ];
        let out = tk.step(0, &dets).unwrap();
        assert_eq!(out.len(), 3);
        let find = |cx: f64| {
            out.iter()
                .find(|e| (center_of(e).0 - cx).abs() < 0.5)
                .map(|e| e.trace_id)
                .unwrap()
        };
        assert_eq!(find(20.0), 1);
        assert_eq!(find(30.0), 2);
        assert_eq!(find(10.0), 3);
    }

    #[test]
    fn score_ties_break_by_quad_order() {
        let cfg = TrackerConfig { min_hits: 1, ..TrackerConfig::default() };
        let mut tk = tracker(cfg);
        let dets = [
            det(0, 30.0, 10.0, 8.0, 4.0, 0.0, 0.9),
            det(0, 10.0, 10.0, 8.0, 4.0, 0.0, 0.9),
        ];
        let out = tk.step(0, &dets).unwrap();
        let find = |cx: f64| {
            out.iter()
                .find(|e| (center_of(e).0 - cx).abs() < 0.5)
                .map(|e| e.trace_id)
                .unwrap()
        };
        // Equal scores: the quad with the smaller canonical key is first.
        assert_eq!(find(10.0), 1);
        assert_eq!(find(30.0), 2);
    }

    #[test]
    fn crossing_tracks_hold_their_ids() {
        let mut tk = tracker(TrackerConfig::default());
        let mut ids_at = vec![];
        for f in 0..30 {
            let t = f as f64;
            // A runs left to right at y=10, B right to left at y=12.
            let a = det(f, 2.0 * t, 10.0, 8.0, 4.0, 0.0, 0.9);
            let b = det(f, 60.0 - 2.0 * t, 12.0, 8.0, 4.0, 0.0, 0.9);
            let out = tk.step(f, &[a, b]).unwrap();
            if f >= 1 {
                assert_eq!(out.len(), 2, "frame {f}");
            }
            if f == 1 || f == 29 {
                let mut pair: Vec<(f64, TraceId)> =
                    out.iter().map(|e| (center_of(e).1, e.trace_id)).collect();
                pair.sort_by(|x, y| x.0.total_cmp(&y.0));
                ids_at.push((pair[0].1, pair[1].1));
            }
        }
        // The y=10 track keeps its id through the crossing, and so does y=12.
        assert_eq!(ids_at[0], ids_at[1]);
        let (ia, ib) = ids_at[0];
        assert_ne!(ia, ib);
    }

    #[test]
    fn track_angle_off_reattaches_observed_theta() {
        let cfg = TrackerConfig { track_angle: false, ..TrackerConfig::default() };
        let mut tk = tracker(cfg);
        let d = |f| det(f, 40.0, 40.0, 20.0, 6.0, 0.3, 0.9);
        tk.step(0, &[d(0)]).unwrap();
        let out = tk.step(1, &[d(1)]).unwrap();
        assert_eq!(out.len(), 1);
        let b = quad_to_rotated_box(&out[0].quad).unwrap();
        assert!((b.theta() - 0.3).abs() < 1e-9, "theta {} not re-attached", b.theta());
    }

    #[test]
    fn emit_raw_passes_detection_quads_through() {
        let cfg = TrackerConfig { emit_raw: true, min_hits: 1, ..TrackerConfig::default() };
        let mut tk = tracker(cfg);
        let d = det(0, 15.0, 25.0, 12.0, 5.0, -0.2, 0.8);
        let out = tk.step(0, &[d.clone()]).unwrap();
        assert_eq!(out[0].quad, *d.quad());
        assert_eq!(out[0].score, 0.8);
    }

    #[test]
    fn run_video_is_reproducible_and_resets_ids() {
        let mut frames: BTreeMap<u64, Vec<Detection>> = BTreeMap::new();
        for f in 0..10 {
            frames.insert(
                f,
                vec![
                    det(f, 10.0 + f as f64, 10.0, 8.0, 4.0, 0.1, 0.9),
                    det(f, 50.0, 30.0, 10.0, 4.0, -0.2, 0.8),
                ],
            );
        }
        let cfg = TrackerConfig::default();
        let noise = NoiseConfig::default();
        let a = run_video(&cfg, &noise, "v", &frames).unwrap();
        let b = run_video(&cfg, &noise, "v", &frames).unwrap();
        assert_eq!(a, b);
        let stats = a.stats();
        assert_eq!(stats.distinct_tracks, 2);
        assert_eq!(stats.max_concurrent, 2);
        assert_eq!(stats.frames_with_output, 9); // no output on frame 0
        let ids: Vec<TraceId> = a.frames[&1].iter().map(|e| e.trace_id).collect();
        assert_eq!(ids, vec![1, 2]);
    }

    #[test]
    fn run_video_empty_input() {
        let out = run_video(
            &TrackerConfig::default(),
            &NoiseConfig::default(),
            "empty",
            &BTreeMap::new(),
        )
        .unwrap();
        assert!(out.frames.is_empty());
        assert_eq!(out.stats().distinct_tracks, 0);
    }

    #[test]
    fn config_validation_names_fields() {
        let bad = TrackerConfig { iou_gate: 1.5, ..TrackerConfig::default() };
        let msg = bad.validate().unwrap_err();
        assert!(msg.contains("iou_gate") && msg.contains("1.5"), "{msg}");
        let bad = TrackerConfig { min_hits: 0, ..TrackerConfig::default() };
        assert!(bad.validate().unwrap_err().contains("min_hits"));
        assert!(TrackerConfig::default().validate().is_ok());
    }

    #[test]
    fn detection_validation() {
        let b = RotatedBox::new(0.0, 0.0, 4.0, 2.0, 0.0).unwrap();
        assert_eq!(
            Detection::from_box(0, b, 1.5).unwrap_err(),
            TrackError::ScoreRange(1.5)
        );
        assert!(Detection::from_box(0, b, 1.0).is_ok());
        assert!(Detection::from_box(0, b, 0.0).is_ok());
    }
}
