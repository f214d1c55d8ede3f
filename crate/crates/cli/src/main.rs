//! The `dstrack` binary. Exit codes: 0 success, 1 expected errors (usage,
//! files, config, data), 2 internal panic.

use clap::{Args, Parser, Subcommand};
use dstrack::config::RunConfig;
use dstrack::formats::{
    read_detections_file, read_gt_file, read_tracks_file, write_detections_file, write_gt_file,
    write_tracks_file,
};
use dstrack::overlay::write_overlays;
use dstrack::runner::{run_all, VideoJob};
use dstrack_core::filter::NoiseConfig;
use dstrack_core::metrics::{
    evaluate, generate_scenario, merge_reports, GroundTruth, ScenarioConfig, VideoMetrics,
};
use dstrack_core::tracker::{run_video, TrackSet, TrackerConfig};
use std::collections::BTreeMap;
use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "dstrack",
    version,
    about = "Track rotated-box detections through video and score the result"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the tracker over a detections file and write track files
    Track(TrackArgs),
    /// Score track files against ground truth and print a metrics report
    Eval(EvalArgs),
    /// Generate a synthetic detections file with matching ground truth
    Synth(SynthArgs),
    /// Render per-frame SVG overlays from a track file
    Overlay(OverlayArgs),
    /// Measure single-thread tracking throughput
    Bench(BenchArgs),
}

#[derive(Args)]
struct TrackArgs {
    /// Detections JSONL file (falls back to io.detections in the config)
    #[arg(long)]
    detections: Option<PathBuf>,
    /// TOML config file (else the DSTRACK_CONFIG env var, else defaults)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output .json file (single video) or directory (falls back to io.out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for multi-video input (falls back to io.workers)
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    /// Track file or directory of track files
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth file or directory of ground-truth files
    #[arg(long)]
    gt: PathBuf,
    /// IoU threshold for a frame match (falls back to metrics.match_iou)
    #[arg(long)]
    match_iou: Option<f64>,
    /// TOML config file (else the DSTRACK_CONFIG env var, else defaults)
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Where to write the detections JSONL
    #[arg(long)]
    out_detections: PathBuf,
    /// Where to write the ground-truth JSON
    #[arg(long)]
    out_gt: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "synth")]
    video_id: String,
    /// Number of simultaneous tracks
    #[arg(long, default_value_t = 10)]
    tracks: u32,
    #[arg(long, default_value_t = 100)]
    frames: u32,
    #[arg(long, default_value_t = 1920.0)]
    width: f64,
    #[arg(long, default_value_t = 1080.0)]
    height: f64,
    /// Detector jitter in pixels (0 = detections equal ground truth)
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,
    /// Probability that a ground-truth instance goes undetected
    #[arg(long, default_value_t = 0.0)]
    drop_rate: f64,
    /// Expected spurious detections per frame
    #[arg(long, default_value_t = 0.0)]
    fp_rate: f64,
}

#[derive(Args)]
struct OverlayArgs {
    /// Track file to render
    #[arg(long)]
    tracks: PathBuf,
    /// Output directory for the SVG sequence
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1920)]
    width: u32,
    #[arg(long, default_value_t = 1080)]
    height: u32,
    /// Render at most this many frames
    #[arg(long)]
    frames: Option<u64>,
}

#[derive(Args)]
struct BenchArgs {
    /// Boxes per frame
    #[arg(long, default_value_t = 200)]
    boxes: u32,
    #[arg(long, default_value_t = 100)]
    frames: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Test hook for the exit-code contract; panics immediately.
    #[arg(long, hide = true)]
    induce_panic: bool,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes; everything else is
            // a usage error.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| run(cli)));
    let code = match outcome {
        Ok(Ok(())) => 0,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            1
        }
        Err(_) => {
            eprintln!("internal error: unexpected panic, please report this");
            2
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<(), Box<dyn Error>> {
    match cli.cmd {
        Cmd::Track(args) => cmd_track(args),
        Cmd::Eval(args) => cmd_eval(args),
        Cmd::Synth(args) => cmd_synth(args),
        Cmd::Overlay(args) => cmd_overlay(args),
        Cmd::Bench(args) => cmd_bench(args),
    }
}

fn err(msg: impl Into<String>) -> Box<dyn Error> {
    Box::new(std::io::Error::other(msg.into()))
}

/// Keeps video ids usable as file names.
fn sanitize(video_id: &str) -> String {
    video_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') { c } else { '_' })
        .collect()
}

fn cmd_track(args: TrackArgs) -> Result<(), Box<dyn Error>> {
    let cfg = RunConfig::resolve(args.config.as_deref())?;
    let det_path = args
        .detections
        .or_else(|| cfg.io.detections.clone())
        .ok_or_else(|| err("no detections path: pass --detections or set io.detections"))?;
    let out_path = args
        .out
        .or_else(|| cfg.io.out.clone())
        .ok_or_else(|| err("no output path: pass --out or set io.out"))?;
    let workers = args.workers.unwrap_or(cfg.io.workers).max(1);

    let videos = read_detections_file(&det_path)?;
    let jobs: Vec<VideoJob> = videos
        .into_iter()
        .map(|(video_id, detections)| VideoJob { video_id, detections })
        .collect();
    let results = run_all(&cfg.tracker, &cfg.filter, &jobs, workers)
        .map_err(|(vid, e)| err(format!("video {vid}: {e}")))?;

    let single_file = out_path.extension().is_some_and(|e| e == "json");
    if single_file && results.len() > 1 {
        return Err(err(format!(
            "{} looks like a file but the input has {} videos; pass a directory",
            out_path.display(),
            results.len()
        )));
    }
    if !single_file && !results.is_empty() {
        fs::create_dir_all(&out_path)?;
    }
    for ts in &results {
        let path = if single_file {
            out_path.clone()
        } else {
            out_path.join(format!("{}.tracks.json", sanitize(&ts.video_id)))
        };
        write_tracks_file(&path, ts)?;
        let stats = ts.stats();
        println!(
            "{{\"frames_with_output\": {}, \"tracks\": {}, \"video_id\": {}}}",
            stats.frames_with_output,
            stats.distinct_tracks,
            serde_json::to_string(&ts.video_id)?,
        );
    }
    Ok(())
}

/// A path argument that may be one file or a directory of .json files.
fn json_files(path: &Path) -> Result<Vec<PathBuf>, Box<dyn Error>> {
    if !path.is_dir() {
        return Ok(vec![path.to_owned()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)?
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(err(format!("no .json files in {}", path.display())));
    }
    Ok(files)
}

fn cmd_eval(args: EvalArgs) -> Result<(), Box<dyn Error>> {
    let cfg = RunConfig::resolve(args.config.as_deref())?;
    let match_iou = args.match_iou.unwrap_or(cfg.metrics.match_iou);

    let mut preds: BTreeMap<String, TrackSet> = BTreeMap::new();
    for path in json_files(&args.pred)? {
        let ts = read_tracks_file(&path)?;
        if preds.insert(ts.video_id.clone(), ts).is_some() {
            return Err(err(format!("duplicate predictions in {}", path.display())));
        }
    }
    let mut gts: BTreeMap<String, GroundTruth> = BTreeMap::new();
    for path in json_files(&args.gt)? {
        let gt = read_gt_file(&path)?;
        if gts.insert(gt.video_id.clone(), gt).is_some() {
            return Err(err(format!("duplicate ground truth in {}", path.display())));
        }
    }
    for video_id in preds.keys() {
        if !gts.contains_key(video_id) {
            return Err(err(format!("no ground truth for video {video_id}")));
        }
    }

    let mut per_video: BTreeMap<String, VideoMetrics> = BTreeMap::new();
    for (video_id, gt) in &gts {
        // A ground-truth video with no predictions scores all misses.
        let empty = TrackSet { video_id: video_id.clone(), ..Default::default() };
        let pred = preds.get(video_id).unwrap_or(&empty);
        per_video.insert(video_id.clone(), evaluate(pred, gt, match_iou)?);
    }
    let report = merge_reports(per_video);
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<(), Box<dyn Error>> {
    let scenario_cfg = ScenarioConfig {
        video_id: args.video_id.clone(),
        n_tracks: args.tracks,
        n_frames: args.frames,
        width: args.width,
        height: args.height,
        noise_sigma: args.noise_sigma,
        drop_rate: args.drop_rate,
        fp_rate: args.fp_rate,
        seed: args.seed,
        ..Default::default()
    };
    let scenario = generate_scenario(&scenario_cfg)?;

    let mut videos = BTreeMap::new();
    videos.insert(args.video_id.clone(), scenario.detections);
    write_detections_file(&args.out_detections, &videos)?;
    write_gt_file(&args.out_gt, &scenario.ground_truth)?;

    let n_dets: usize = videos[&args.video_id].values().map(Vec::len).sum();
    let n_gt: usize = scenario.ground_truth.frames.values().map(Vec::len).sum();
    println!(
        "{{\"detections\": {n_dets}, \"frames\": {}, \"gt_instances\": {n_gt}, \"video_id\": {}}}",
        args.frames,
        serde_json::to_string(&args.video_id)?,
    );
    Ok(())
}

fn cmd_overlay(args: OverlayArgs) -> Result<(), Box<dyn Error>> {
    let tracks = read_tracks_file(&args.tracks)?;
    let written = write_overlays(&tracks, &args.out, args.width, args.height, args.frames)?;
    println!(
        "{{\"frames_written\": {written}, \"out\": {}}}",
        serde_json::to_string(&args.out.display().to_string())?,
    );
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), Box<dyn Error>> {
    if args.induce_panic {
        panic!("induced for testing");
    }
    // Keep each lane at least 32 px tall regardless of the box count;
    // otherwise the generator shrinks boxes below the jitter scale and the
    // run measures association churn instead of steady-state tracking.
    let height = 1080.0_f64.max(args.boxes as f64 * 32.0);
    let scenario = generate_scenario(&ScenarioConfig {
        video_id: String::from("bench"),
        n_tracks: args.boxes,
        n_frames: args.frames,
        height,
        noise_sigma: 1.0,
        seed: args.seed,
        ..Default::default()
    })?;
    let t0 = Instant::now();
    let tracks = run_video(
        &TrackerConfig::default(),
        &NoiseConfig::default(),
        "bench",
        &scenario.detections,
    )?;
    let elapsed = t0.elapsed().as_secs_f64();
    println!(
        "{{\"boxes\": {}, \"fps\": {:.1}, \"frames\": {}, \"total_ms\": {:.1}, \"tracks\": {}}}",
        args.boxes,
        f64::from(args.frames) / elapsed,
        args.frames,
        elapsed * 1000.0,
        tracks.stats().distinct_tracks,
    );
    Ok(())
}
