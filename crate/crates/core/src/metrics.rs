//! Multi-object tracking evaluation and synthetic scenario generation.
//!
//! `evaluate` scores one predicted track set against ground truth with the
//! CLEAR family of counts (matches, misses, false positives, identity
//! switches, fragmentations, MOTA) plus identity-level IDF1.
//!
//! Frame matching keeps standing correspondences first: a ground-truth
//! object that matched some predicted id on an earlier frame stays with
//! that id as long as both are present and their IoU clears `match_iou`,
//! even when a fresh assignment would pair things differently. Only the
//! leftovers go to the Hungarian solver. This is what makes an identity
//! switch mean "the tracker changed its mind", not "two boxes drifted
//! past the midpoint".

use crate::assignment::{hungarian, CostMatrix};
use crate::geometry::{quad_to_rotated_box, rotated_iou, GeometryError, Quad, RotatedBox};
use crate::rng::SplitMix64;
use crate::tracker::{Detection, TrackError, TrackSet};
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Cost standing in for "pair not allowed"; real costs are 1 - IoU <= 1.
const MASKED: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub enum MetricsError {
    /// The same id appears twice in one frame of the ground truth or the
    /// predictions.
    DuplicateId { frame: u64, id: u64, side: &'static str },
    /// `match_iou` outside `[0, 1]`.
    MatchIouRange(f64),
    Geometry(GeometryError),
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DuplicateId { frame, id, side } => {
                write!(f, "duplicate {side} id {id} in frame {frame}")
            }
            Self::MatchIouRange(v) => write!(f, "match_iou = {v} outside [0, 1]"),
            Self::Geometry(e) => write!(f, "geometry: {e}"),
        }
    }
}

impl core::error::Error for MetricsError {}

impl From<GeometryError> for MetricsError {
    fn from(e: GeometryError) -> Self {
        Self::Geometry(e)
    }
}

/// One annotated object on one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct GtInstance {
    pub id: u64,
    pub quad: Quad,
    pub transcription: Option<String>,
}

/// Ground truth for one video, keyed by frame.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruth {
    pub video_id: String,
    pub frames: BTreeMap<u64, Vec<GtInstance>>,
}

/// Scores for a single video. Counts are totals over frames.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VideoMetrics {
    pub false_negatives: u64,
    pub false_positives: u64,
    pub fragmentations: u64,
    pub gt_total: u64,
    pub id_switches: u64,
    pub idf1: f64,
    pub idtp: u64,
    pub matches: u64,
    pub mota: f64,
    pub pred_total: u64,
}

/// Corpus-level scores: counts summed over videos, rates recomputed from
/// the pooled counts (micro-averaged).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricsReport {
    pub false_negatives: u64,
    pub false_positives: u64,
    pub fragmentations: u64,
    pub id_switches: u64,
    pub idf1: f64,
    pub matches: u64,
    pub mota: f64,
    pub per_video: BTreeMap<String, VideoMetrics>,
}

/// Per-frame boxes with ids, extracted and validated once.
struct FrameObjects {
    ids: Vec<u64>,
    boxes: Vec<RotatedBox>,
}

fn gt_frame(frame: u64, instances: &[GtInstance]) -> Result<FrameObjects, MetricsError> {
    let mut seen = BTreeSet::new();
    let mut ids = Vec::with_capacity(instances.len());
    let mut boxes = Vec::with_capacity(instances.len());
    for inst in instances {
        if !seen.insert(inst.id) {
            return Err(MetricsError::DuplicateId { frame, id: inst.id, side: "ground truth" });
        }
        ids.push(inst.id);
        boxes.push(quad_to_rotated_box(&inst.quad)?);
    }
    Ok(FrameObjects { ids, boxes })
}

fn pred_frame(
    frame: u64,
    emissions: &[crate::tracker::Emission],
) -> Result<FrameObjects, MetricsError> {
    let mut seen = BTreeSet::new();
    let mut ids = Vec::with_capacity(emissions.len());
    let mut boxes = Vec::with_capacity(emissions.len());
    for e in emissions {
        if !seen.insert(e.trace_id) {
            return Err(MetricsError::DuplicateId { frame, id: e.trace_id, side: "prediction" });
        }
        ids.push(e.trace_id);
        boxes.push(quad_to_rotated_box(&e.quad)?);
    }
    Ok(FrameObjects { ids, boxes })
}

/// Scores `pred` against `gt` at the given IoU threshold.
///
/// MOTA is `1 - (FN + FP + IDSW) / max(1, gt_total)`. IDF1 pairs ground
/// truth and predicted identities by a maximum-overlap bipartite matching,
/// where a pair's overlap counts the frames both are present with IoU at
/// or above `match_iou`; `IDF1 = 2 * IDTP / (gt_total + pred_total)`, and
/// 1.0 when both totals are zero.
pub fn evaluate(
    pred: &TrackSet,
    gt: &GroundTruth,
    match_iou: f64,
) -> Result<VideoMetrics, MetricsError> {
    if !(0.0..=1.0).contains(&match_iou) || match_iou.is_nan() {
        return Err(MetricsError::MatchIouRange(match_iou));
    }

    let mut gt_total = 0u64;
    let mut pred_total = 0u64;
    let mut matches = 0u64;
    let mut false_negatives = 0u64;
    let mut false_positives = 0u64;
    let mut id_switches = 0u64;
    let mut fragmentations = 0u64;

    // Standing gt -> pred correspondence; retained across frames and gaps.
    let mut last_pred: BTreeMap<u64, u64> = BTreeMap::new();
    // Gt ids matched at least once, and those interrupted since their last
    // match (present but unmatched on some frame in between).
    let mut ever_matched: BTreeSet<u64> = BTreeSet::new();
    let mut interrupted: BTreeSet<u64> = BTreeSet::new();

    // Identity-level frame overlaps for IDF1.
    let mut overlap: BTreeMap<(u64, u64), u64> = BTreeMap::new();

    let frames: BTreeSet<u64> =
        gt.frames.keys().chain(pred.frames.keys()).copied().collect();
    static NO_GT: [GtInstance; 0] = [];
    static NO_PRED: [crate::tracker::Emission; 0] = [];

    for &frame in &frames {
        let g = gt_frame(frame, gt.frames.get(&frame).map_or(&NO_GT[..], |v| v))?;
        let p = pred_frame(frame, pred.frames.get(&frame).map_or(&NO_PRED[..], |v| v))?;
        gt_total += g.ids.len() as u64;
        pred_total += p.ids.len() as u64;

        // IoU of every gt-pred pair, reused by every stage below.
        let iou = |gi: usize, pi: usize| rotated_iou(&g.boxes[gi], &p.boxes[pi]);
        let mut iou_cache = Vec::with_capacity(g.ids.len() * p.ids.len());
        for gi in 0..g.ids.len() {
            for pi in 0..p.ids.len() {
                let v = iou(gi, pi);
                iou_cache.push(v);
                if v >= match_iou {
                    *overlap.entry((g.ids[gi], p.ids[pi])).or_insert(0) += 1;
                }
            }
        }
        let iou_at = |gi: usize, pi: usize| iou_cache[gi * p.ids.len() + pi];

        // Persistence pass: keep standing matches that still clear the bar.
        let mut matched_g = alloc::vec![false; g.ids.len()];
        let mut matched_p = alloc::vec![false; p.ids.len()];
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for gi in 0..g.ids.len() {
            let Some(&want) = last_pred.get(&g.ids[gi]) else { continue };
            let Some(pi) = p.ids.iter().position(|&id| id == want) else { continue };
            if !matched_p[pi] && iou_at(gi, pi) >= match_iou {
                matched_g[gi] = true;
                matched_p[pi] = true;
                pairs.push((gi, pi));
            }
        }

        // Hungarian on the remainder, masked below the threshold.
        let free_g: Vec<usize> = (0..g.ids.len()).filter(|&gi| !matched_g[gi]).collect();
        let free_p: Vec<usize> = (0..p.ids.len()).filter(|&pi| !matched_p[pi]).collect();
        if !free_g.is_empty() && !free_p.is_empty() {
            let mut costs = Vec::with_capacity(free_g.len() * free_p.len());
            for &gi in &free_g {
                for &pi in &free_p {
                    let v = iou_at(gi, pi);
                    costs.push(if v >= match_iou { 1.0 - v } else { MASKED });
                }
            }
            let m = CostMatrix::new(free_g.len(), free_p.len(), costs)
                .expect("finite 1 - IoU costs");
            for (r, c) in hungarian(&m) {
                let (gi, pi) = (free_g[r], free_p[c]);
                if iou_at(gi, pi) >= match_iou {
                    matched_g[gi] = true;
                    matched_p[pi] = true;
                    pairs.push((gi, pi));
                }
            }
        }

        pairs.sort_unstable();
        matches += pairs.len() as u64;
        for &(gi, pi) in &pairs {
            let gid = g.ids[gi];
            let pid = p.ids[pi];
            match last_pred.insert(gid, pid) {
                Some(prev) if prev != pid => id_switches += 1,
                _ => {}
            }
            if interrupted.remove(&gid) {
                fragmentations += 1;
            }
            ever_matched.insert(gid);
        }
        for gi in 0..g.ids.len() {
            if !matched_g[gi] {
                false_negatives += 1;
                if ever_matched.contains(&g.ids[gi]) {
                    interrupted.insert(g.ids[gi]);
                }
            }
        }
        false_positives += matched_p.iter().filter(|&&m| !m).count() as u64;
    }

    let idtp = idf1_overlap_total(&overlap);
    let denom = gt_total + pred_total;
    let idf1 = if denom == 0 { 1.0 } else { 2.0 * idtp as f64 / denom as f64 };
    let mota =
        1.0 - (false_negatives + false_positives + id_switches) as f64 / gt_total.max(1) as f64;

    Ok(VideoMetrics {
        false_negatives,
        false_positives,
        fragmentations,
        gt_total,
        id_switches,
        idf1,
        idtp,
        matches,
        mota,
        pred_total,
    })
}

/// Maximum total frame overlap over a one-to-one pairing of gt ids with
/// predicted ids.
fn idf1_overlap_total(overlap: &BTreeMap<(u64, u64), u64>) -> u64 {
    if overlap.is_empty() {
        return 0;
    }
    let gt_ids: BTreeSet<u64> = overlap.keys().map(|&(g, _)| g).collect();
    let pred_ids: BTreeSet<u64> = overlap.keys().map(|&(_, p)| p).collect();
    let gt_ids: Vec<u64> = gt_ids.into_iter().collect();
    let pred_ids: Vec<u64> = pred_ids.into_iter().collect();
    // Hungarian minimizes, so negate the overlaps.
    let mut costs = Vec::with_capacity(gt_ids.len() * pred_ids.len());
    for &g in &gt_ids {
        for &p in &pred_ids {
            let w = overlap.get(&(g, p)).copied().unwrap_or(0);
            costs.push(-(w as f64));
        }
    }
    let m = CostMatrix::new(gt_ids.len(), pred_ids.len(), costs).expect("finite overlap counts");
    hungarian(&m)
        .into_iter()
        .map(|(r, c)| overlap.get(&(gt_ids[r], pred_ids[c])).copied().unwrap_or(0))
        .sum()
}

/// Pools per-video metrics into a corpus report.
pub fn merge_reports(per_video: BTreeMap<String, VideoMetrics>) -> MetricsReport {
    let mut fn_ = 0u64;
    let mut fp = 0u64;
    let mut frag = 0u64;
    let mut idsw = 0u64;
    let mut matches = 0u64;
    let mut gt_total = 0u64;
    let mut pred_total = 0u64;
    let mut idtp = 0u64;
    for v in per_video.values() {
        fn_ += v.false_negatives;
        fp += v.false_positives;
        frag += v.fragmentations;
        idsw += v.id_switches;
        matches += v.matches;
        gt_total += v.gt_total;
        pred_total += v.pred_total;
        idtp += v.idtp;
    }
    let denom = gt_total + pred_total;
    MetricsReport {
        false_negatives: fn_,
        false_positives: fp,
        fragmentations: frag,
        id_switches: idsw,
        idf1: if denom == 0 { 1.0 } else { 2.0 * idtp as f64 / denom as f64 },
        matches,
        mota: 1.0 - (fn_ + fp + idsw) as f64 / gt_total.max(1) as f64,
        per_video,
    }
}

/// Parameters of the synthetic lane scenario. Tracks move horizontally at
/// constant speed in non-overlapping lanes, so the noiseless scenario is
/// trackable with zero misses and zero switches by construction.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ScenarioConfig {
    pub video_id: String,
    pub n_tracks: u32,
    pub n_frames: u32,
    pub width: f64,
    pub height: f64,
    /// Box width range, sampled uniformly per track.
    pub box_w: (f64, f64),
    /// Box height range.
    pub box_h: (f64, f64),
    /// Speed range, pixels per frame.
    pub speed: (f64, f64),
    /// Angle range, radians.
    pub theta: (f64, f64),
    /// Detector jitter in pixels: centers get sigma, sides sigma/2, angle
    /// 0.01 * sigma. Zero means detections equal ground truth exactly.
    pub noise_sigma: f64,
    /// Per-instance probability a detection is dropped.
    pub drop_rate: f64,
    /// Expected spurious detections per frame.
    pub fp_rate: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            video_id: String::from("synth"),
            n_tracks: 10,
            n_frames: 100,
            width: 1920.0,
            height: 1080.0,
            box_w: (20.0, 60.0),
            box_h: (8.0, 20.0),
            speed: (0.5, 3.0),
            theta: (-0.4, 0.4),
            noise_sigma: 0.0,
            drop_rate: 0.0,
            fp_rate: 0.0,
            seed: 1,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), String> {
        use alloc::format;
        if self.n_tracks == 0 {
            return Err(String::from("n_tracks must be at least 1"));
        }
        if !(self.width > 0.0) || !(self.height > 0.0) {
            return Err(format!(
                "frame size {}x{} must be positive",
                self.width, self.height
            ));
        }
        for (name, (lo, hi)) in [
            ("box_w", self.box_w),
            ("box_h", self.box_h),
            ("speed", self.speed),
            ("theta", self.theta),
        ] {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(format!("{name} range ({lo}, {hi}) is not a valid interval"));
            }
        }
        if self.box_w.0 <= 0.0 || self.box_h.0 <= 0.0 {
            return Err(String::from("box sides must be positive"));
        }
        if !(0.0..=1.0).contains(&self.drop_rate) || self.drop_rate.is_nan() {
            return Err(format!("drop_rate = {} outside [0, 1]", self.drop_rate));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(format!("noise_sigma = {} must be finite and >= 0", self.noise_sigma));
        }
        if !(self.fp_rate >= 0.0) || !self.fp_rate.is_finite() {
            return Err(format!("fp_rate = {} must be finite and >= 0", self.fp_rate));
        }
        Ok(())
    }
}

/// A generated scenario: detector output, the ground truth behind it, and
/// which (gt id, frame) detections the drop model removed.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub detections: BTreeMap<u64, Vec<Detection>>,
    pub ground_truth: GroundTruth,
    /// Frames on which each gt id's detection was dropped. Diagnostic;
    /// empty when `drop_rate` is zero.
    pub dropped: BTreeMap<u64, Vec<u64>>,
}

struct Lane {
    cx0: f64,
    cy: f64,
    w: f64,
    h: f64,
    theta: f64,
    vx: f64,
}

/// Generates a deterministic synthetic scenario from the config and seed.
///
/// Track i lives in the horizontal lane centered at `(i + 0.5) * height /
/// n_tracks`, with its box scaled so the vertical extent stays inside 95%
/// of the lane; lanes therefore never overlap and odd tracks run right to
/// left. The draw order is fixed, so the same seed always produces the
/// same scenario byte for byte.
pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<Scenario, TrackError> {
    cfg.validate().map_err(TrackError::InvalidConfig)?;
    let mut rng = SplitMix64::new(cfg.seed);
    let lane_h = cfg.height / f64::from(cfg.n_tracks);

    let travel_cap = if cfg.n_frames > 1 {
        cfg.width / f64::from(cfg.n_frames - 1)
    } else {
        f64::INFINITY
    };

    let mut lanes = Vec::with_capacity(cfg.n_tracks as usize);
    for i in 0..cfg.n_tracks {
        let w = rng.next_range(cfg.box_w.0, cfg.box_w.1);
        let h = rng.next_range(cfg.box_h.0, cfg.box_h.1);
        let speed = rng.next_range(cfg.speed.0, cfg.speed.1).min(travel_cap);
        let theta = rng.next_range(cfg.theta.0, cfg.theta.1);
        let x0 = rng.next_range(0.0, cfg.width);

        // Shrink uniformly until the rotated vertical extent fits the lane.
        let (sin, cos) = (libm::sin(theta).abs(), libm::cos(theta).abs());
        let ext = w * sin + h * cos;
        let cap = 0.95 * lane_h;
        let (w, h) = if ext > cap { (w * cap / ext, h * cap / ext) } else { (w, h) };

        // Keep the whole trajectory on screen.
        let dir = if i % 2 == 0 { 1.0 } else { -1.0 };
        let travel = speed * f64::from(cfg.n_frames.saturating_sub(1));
        let cx0 = if dir > 0.0 { x0.min(cfg.width - travel).max(0.0) } else { x0.max(travel) };

        lanes.push(Lane {
            cx0,
            cy: (f64::from(i) + 0.5) * lane_h,
            w,
            h,
            theta,
            vx: dir * speed,
        });
    }

    let mut detections: BTreeMap<u64, Vec<Detection>> = BTreeMap::new();
    let mut gt_frames: BTreeMap<u64, Vec<GtInstance>> = BTreeMap::new();
    let mut dropped: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    let sigma = cfg.noise_sigma;

    for frame in 0..u64::from(cfg.n_frames) {
        let mut dets = Vec::new();
        let mut gts = Vec::new();
        for (i, lane) in lanes.iter().enumerate() {
            let gt_id = i as u64 + 1;
            let cx = lane.cx0 + lane.vx * frame as f64;
            let gt_box = RotatedBox::new(cx, lane.cy, lane.w, lane.h, lane.theta)
                .expect("lane boxes have positive sides");
            gts.push(GtInstance {
                id: gt_id,
                quad: crate::geometry::rotated_box_to_quad(&gt_box),
                transcription: None,
            });

            // One uniform decides the drop; a dropped instance consumes
            // nothing further, so drop patterns are reproducible per track.
            if rng.next_f64() < cfg.drop_rate {
                dropped.entry(gt_id).or_default().push(frame);
                continue;
            }
            let jcx = cx + sigma * rng.next_gaussian();
            let jcy = lane.cy + sigma * rng.next_gaussian();
            let jw = (lane.w + 0.5 * sigma * rng.next_gaussian()).max(2.0);
            let jh = (lane.h + 0.5 * sigma * rng.next_gaussian()).max(1.0);
            let jt = lane.theta + 0.01 * sigma * rng.next_gaussian();
            let score = 0.5 + 0.5 * rng.next_f64();
            let b = RotatedBox::new(jcx, jcy, jw, jh, jt).expect("jittered sides are clamped");
            dets.push(Detection::from_box(frame, b, score)?);
        }

        if cfg.fp_rate > 0.0 {
            let base = cfg.fp_rate as u64;
            let frac = cfg.fp_rate - base as f64;
            let extra = u64::from(rng.next_f64() < frac);
            for _ in 0..base + extra {
                let x = rng.next_range(0.0, cfg.width);
                let y = rng.next_range(0.0, cfg.height);
                let w = rng.next_range(cfg.box_w.0, cfg.box_w.1);
                let h = rng.next_range(cfg.box_h.0, cfg.box_h.1);
                let t = rng.next_range(cfg.theta.0, cfg.theta.1);
                let score = 0.5 + 0.5 * rng.next_f64();
                let b = RotatedBox::new(x, y, w, h, t).expect("ranges validated positive");
                dets.push(Detection::from_box(frame, b, score)?);
            }
        }

        if !dets.is_empty() {
            detections.insert(frame, dets);
        }
        gt_frames.insert(frame, gts);
    }

    Ok(Scenario {
        detections,
        ground_truth: GroundTruth { video_id: cfg.video_id.clone(), frames: gt_frames },
        dropped,
    })
}
