//! Multi-video execution. Videos are independent, so they fan out over a
//! scoped thread pool; results come back in video order and errors are
//! reported for the first failing video by that order, making the output
//! (and the failure mode) identical for any worker count.

use dstrack_core::filter::NoiseConfig;
use dstrack_core::tracker::{run_video, Detection, TrackError, TrackSet, TrackerConfig};
use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

pub struct VideoJob {
    pub video_id: String,
    pub detections: BTreeMap<u64, Vec<Detection>>,
}

/// Runs the tracker over every job with up to `workers` threads.
///
/// Returns one track set per job, in the jobs' order. A worker count of 1
/// runs inline; any count produces byte-identical results because each
/// video is a pure function of its own detections.
pub fn run_all(
    cfg: &TrackerConfig,
    noise: &NoiseConfig,
    jobs: &[VideoJob],
    workers: usize,
) -> Result<Vec<TrackSet>, (String, TrackError)> {
    let run_one = |job: &VideoJob| {
        run_video(cfg, noise, &job.video_id, &job.detections)
            .map_err(|e| (job.video_id.clone(), e))
    };

    if workers <= 1 || jobs.len() <= 1 {
        return jobs.iter().map(run_one).collect();
    }

    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<TrackSet, (String, TrackError)>>>> =
        Mutex::new((0..jobs.len()).map(|_| None).collect());

    std::thread::scope(|scope| {
        for _ in 0..workers.min(jobs.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= jobs.len() {
                    break;
                }
                let result = run_one(&jobs[i]);
                slots.lock().unwrap()[i] = Some(result);
            });
        }
    });

    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|slot| slot.expect("every job index was claimed by a worker"))
        .collect()
}
