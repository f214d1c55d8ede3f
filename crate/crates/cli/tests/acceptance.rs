//! Acceptance suite: one test per criterion, each printing a `[criterion
//! N] PASS`/`FAIL` line (visible with `--nocapture`, or in the failure
//! output otherwise). Oracles here are written independently of the
//! library code paths they check: IoU against brute rasterization,
//! assignment against permutation enumeration, the filter against closed
//! forms.
//!
//! Run with:
//!     cargo test -p dstrack --test acceptance -- --nocapture --test-threads=1

use dstrack_core::assignment::{hungarian, CostMatrix};
use dstrack_core::filter::{self, NoiseConfig};
use dstrack_core::geometry::{rotated_iou, RotatedBox};
use dstrack_core::metrics::{evaluate, generate_scenario, ScenarioConfig};
use dstrack_core::rng::SplitMix64;
use dstrack_core::tracker::{run_video, TrackerConfig};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

// Pinned tolerances and budgets.
const IOU_PAIRS: usize = 1000;
const IOU_GRID: usize = 2000;
const IOU_TOL: f64 = 1e-3;
const IOU_BUDGET_S: f64 = 60.0;
const ASSIGN_CASES: usize = 500;
const ASSIGN_MAX_DIM: usize = 7;
const ASSIGN_BUDGET_S: f64 = 10.0;
const KALMAN_CENTER_TOL: f64 = 0.01;
const KALMAN_CLOSED_FORM_TOL: f64 = 1e-9;
const ROBUST_MOTA_TARGET: f64 = 0.9;
const BENCH_TARGET_FPS: f64 = 30.0;
const BENCH_FLOOR_FPS: f64 = BENCH_TARGET_FPS / 2.0; // fail only on a 2x drift

fn verdict(n: u32, ok: bool, detail: &str) {
    println!("[criterion {n}] {} {detail}", if ok { "PASS" } else { "FAIL" });
}

/// Point-in-box test in the box's own frame; shares nothing with the
/// polygon-clipping implementation under test.
struct BoxFrame {
    cx: f64,
    cy: f64,
    hw: f64,
    hh: f64,
    c: f64,
    s: f64,
}

impl BoxFrame {
    fn of(b: &RotatedBox) -> Self {
        Self {
            cx: b.cx(),
            cy: b.cy(),
            hw: b.w() / 2.0,
            hh: b.h() / 2.0,
            c: b.theta().cos(),
            s: b.theta().sin(),
        }
    }

    #[inline]
    fn contains(&self, x: f64, y: f64) -> bool {
        let dx = x - self.cx;
        let dy = y - self.cy;
        let u = dx * self.c + dy * self.s;
        let v = -dx * self.s + dy * self.c;
        u.abs() <= self.hw && v.abs() <= self.hh
    }
}

fn raster_iou(a: &RotatedBox, b: &RotatedBox, grid: usize) -> f64 {
    let fa = BoxFrame::of(a);
    let fb = BoxFrame::of(b);
    let (ax0, ay0, ax1, ay1) = a.aabb();
    let (bx0, by0, bx1, by1) = b.aabb();
    let x0 = ax0.min(bx0) - 1e-6;
    let y0 = ay0.min(by0) - 1e-6;
    let x1 = ax1.max(bx1) + 1e-6;
    let y1 = ay1.max(by1) + 1e-6;
    let dx = (x1 - x0) / grid as f64;
    let dy = (y1 - y0) / grid as f64;
    let (mut ca, mut cb, mut cab) = (0u64, 0u64, 0u64);
    for i in 0..grid {
        let x = x0 + (i as f64 + 0.5) * dx;
        for j in 0..grid {
            let y = y0 + (j as f64 + 0.5) * dy;
            let ina = fa.contains(x, y);
            let inb = fb.contains(x, y);
            ca += u64::from(ina);
            cb += u64::from(inb);
            cab += u64::from(ina && inb);
        }
    }
    let union = ca + cb - cab;
    if union == 0 {
        0.0
    } else {
        cab as f64 / union as f64
    }
}

fn random_box(rng: &mut SplitMix64) -> RotatedBox {
    let cx = rng.next_range(-50.0, 50.0);
    let cy = rng.next_range(-50.0, 50.0);
    let w = rng.next_range(2.0, 40.0);
    let h = rng.next_range(1.0, 20.0);
    let t = rng.next_range(-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2);
    RotatedBox::new(cx, cy, w, h, t).unwrap()
}

#[test]
fn criterion_1_geometry_against_rasterization() {
    let t0 = Instant::now();
    let mut rng = SplitMix64::new(0xACCE5501);
    let mut max_err: f64 = 0.0;
    for i in 0..IOU_PAIRS {
        let a = random_box(&mut rng);
        // Half the pairs are forced to overlap so the sample is not
        // dominated by trivially disjoint boxes.
        let b = if i % 2 == 0 {
            let db = random_box(&mut rng);
            RotatedBox::new(
                a.cx() + rng.next_range(-10.0, 10.0),
                a.cy() + rng.next_range(-6.0, 6.0),
                db.w(),
                db.h(),
                db.theta(),
            )
            .unwrap()
        } else {
            random_box(&mut rng)
        };
        let exact = rotated_iou(&a, &b);
        let sampled = raster_iou(&a, &b, IOU_GRID);
        max_err = max_err.max((exact - sampled).abs());
    }
    let elapsed = t0.elapsed().as_secs_f64();
    let ok = max_err < IOU_TOL && elapsed < IOU_BUDGET_S;
    verdict(
        1,
        ok,
        &format!(
            "(max |exact - raster| = {max_err:.2e} over {IOU_PAIRS} pairs at {IOU_GRID}x{IOU_GRID}, {elapsed:.1}s)"
        ),
    );
    assert!(max_err < IOU_TOL, "max error {max_err}");
    assert!(elapsed < IOU_BUDGET_S, "took {elapsed:.1}s");
}

/// Sum in ascending value order, so totals of the same cost multiset are
/// bit-identical no matter which side selected them.
fn sorted_sum(mut vals: Vec<f64>) -> f64 {
    vals.sort_by(f64::total_cmp);
    vals.iter().sum()
}

/// Minimal total cost over complete matchings of the smaller side, by
/// direct permutation enumeration.
fn brute_min_total(rows: usize, cols: usize, cost: &dyn Fn(usize, usize) -> f64) -> f64 {
    fn recurse(
        row: usize,
        rows: usize,
        cols: usize,
        used: &mut Vec<bool>,
        chosen: &mut Vec<f64>,
        best: &mut f64,
        cost: &dyn Fn(usize, usize) -> f64,
    ) {
        if row == rows {
            let total = sorted_sum(chosen.clone());
            if total < *best {
                *best = total;
            }
            return;
        }
        for col in 0..cols {
            if !used[col] {
                used[col] = true;
                chosen.push(cost(row, col));
                recurse(row + 1, rows, cols, used, chosen, best, cost);
                chosen.pop();
                used[col] = false;
            }
        }
    }
    // Transpose so the recursion always walks the smaller side.
    let (r, c, f): (usize, usize, Box<dyn Fn(usize, usize) -> f64>) = if rows <= cols {
        (rows, cols, Box::new(|i, j| cost(i, j)))
    } else {
        (cols, rows, Box::new(|i, j| cost(j, i)))
    };
    let mut best = f64::INFINITY;
    recurse(0, r, c, &mut vec![false; c], &mut Vec::new(), &mut best, &f);
    best
}

#[test]
fn criterion_2_assignment_against_brute_force() {
    let t0 = Instant::now();
    let mut rng = SplitMix64::new(0xACCE5502);
    for case in 0..ASSIGN_CASES {
        let rows = 1 + (rng.next_u64() % ASSIGN_MAX_DIM as u64) as usize;
        let cols = 1 + (rng.next_u64() % ASSIGN_MAX_DIM as u64) as usize;
        // Alternate continuous costs with eighth-quantized ones; the
        // latter make exact ties common, the hard case for optimality.
        let data: Vec<f64> = (0..rows * cols)
            .map(|_| {
                if case % 2 == 0 {
                    rng.next_f64()
                } else {
                    (rng.next_u64() % 9) as f64 / 8.0
                }
            })
            .collect();
        let m = CostMatrix::new(rows, cols, data.clone()).unwrap();
        let pairs = hungarian(&m);
        assert_eq!(pairs.len(), rows.min(cols), "case {case}: matching size");
        let total = sorted_sum(pairs.iter().map(|&(i, j)| data[i * cols + j]).collect());
        let best = brute_min_total(rows, cols, &|i, j| data[i * cols + j]);
        assert_eq!(total, best, "case {case} ({rows}x{cols}): {total} vs brute {best}");
    }
    let elapsed = t0.elapsed().as_secs_f64();
    let ok = elapsed < ASSIGN_BUDGET_S;
    verdict(
        2,
        ok,
        &format!("(exact total parity on {ASSIGN_CASES} matrices up to {ASSIGN_MAX_DIM}x{ASSIGN_MAX_DIM}, {elapsed:.2}s)"),
    );
    assert!(ok, "took {elapsed:.2}s");
}

#[test]
fn criterion_3_kalman_sanity() {
    let noise = NoiseConfig::default();

    // Stationary convergence: initialize 11.2 px off center, then feed the
    // true box until the estimate settles.
    let truth = RotatedBox::new(100.0, 80.0, 24.0, 10.0, 0.2).unwrap();
    let start = RotatedBox::new(108.0, 72.16, 24.0, 10.0, 0.2).unwrap();
    let mut state = filter::initiate(&start, &noise);
    let mut settled_at = None;
    for step in 1..=20 {
        filter::predict(&mut state, &noise);
        filter::update(&mut state, &truth, &noise).unwrap();
        let err = ((state.mean()[0] - 100.0).powi(2) + (state.mean()[1] - 80.0).powi(2)).sqrt();
        if err < KALMAN_CENTER_TOL {
            settled_at = Some((step, err));
            break;
        }
    }
    let (steps, err) = settled_at.expect("center error must settle within 20 updates");

    // Constant-velocity prediction: build up a velocity estimate, then
    // check 5 bare predictions against the linear closed form.
    let mut state = filter::initiate(
        &RotatedBox::new(0.0, 0.0, 20.0, 10.0, 0.1).unwrap(),
        &noise,
    );
    for k in 1..=10 {
        let t = k as f64;
        let b = RotatedBox::new(1.5 * t, -2.25 * t, 20.0, 10.0, 0.1).unwrap();
        filter::predict(&mut state, &noise);
        filter::update(&mut state, &b, &noise).unwrap();
    }
    let m0 = *state.mean();
    let mut max_dev: f64 = 0.0;
    for k in 1..=5 {
        filter::predict(&mut state, &noise);
        let kk = k as f64;
        let expect = [
            m0[0] + kk * m0[5],
            m0[1] + kk * m0[6],
            m0[2] + kk * m0[7],
            m0[3],
            m0[4],
            m0[5],
            m0[6],
            m0[7],
        ];
        for (got, want) in state.mean().iter().zip(&expect) {
            max_dev = max_dev.max((got - want).abs());
        }
    }
    let ok = max_dev < KALMAN_CLOSED_FORM_TOL;
    verdict(
        3,
        ok,
        &format!("(stationary settled to {err:.4} px in {steps} updates; closed-form deviation {max_dev:.1e})"),
    );
    assert!(ok, "closed-form deviation {max_dev}");
}

#[test]
fn criterion_4_noiseless_closed_loop() {
    let cfg = TrackerConfig { min_hits: 1, ..TrackerConfig::default() };
    let noise = NoiseConfig::default();
    let mut all_ok = true;
    let mut detail = String::new();
    for seed in 1..=5 {
        let s = generate_scenario(&ScenarioConfig { seed, ..Default::default() }).unwrap();
        let tracks = run_video(&cfg, &noise, "synth", &s.detections).unwrap();
        let m = evaluate(&tracks, &s.ground_truth, 0.5).unwrap();
        let ok = m.mota == 1.0 && m.idf1 == 1.0 && m.id_switches == 0;
        all_ok &= ok;
        detail.push_str(&format!(
            "seed {seed}: mota {} idf1 {} idsw {}; ",
            m.mota, m.idf1, m.id_switches
        ));
    }
    verdict(4, all_ok, &format!("({})", detail.trim_end_matches("; ")));
    assert!(all_ok, "{detail}");
}

#[test]
fn criterion_5_robustness_loop() {
    // Design targets of the default configuration: sigma = 1 px jitter and
    // 10% independent drops, scored at IoU 0.5. Two caveats, both measured
    // and documented rather than tuned away:
    //
    // * Every dropped detection is a miss by construction (a coasting
    //   track emits nothing), so MOTA is bounded near 1 - drop_rate before
    //   counting the min_hits warmup. The 0.9 target leaves no margin.
    // * The initial velocity sigma (10x the position sigma) means a track
    //   interrupted within its first frames coasts on a noise-fitted
    //   velocity; the prediction can drift below the 0.3 gate before the
    //   detection returns, and the rebirth scores as an id switch even
    //   though the gap itself was shorter than max_age. A jitter outlier
    //   at the gate boundary can flap a mature track the same way.
    let cfg = TrackerConfig::default();
    let noise = NoiseConfig::default();
    let mut mota_ok = true;
    let mut switches_ok = true;
    let mut lines = String::new();
    for seed in 1..=5 {
        let s = generate_scenario(&ScenarioConfig {
            noise_sigma: 1.0,
            drop_rate: 0.1,
            seed,
            ..Default::default()
        })
        .unwrap();
        let tracks = run_video(&cfg, &noise, "synth", &s.detections).unwrap();
        let m = evaluate(&tracks, &s.ground_truth, 0.5).unwrap();

        // Gaps longer than max_age, from the generator's own drop log.
        let mut long_gaps = 0u64;
        for frames in s.dropped.values() {
            let mut run = 0u64;
            let mut prev: Option<u64> = None;
            for &f in frames {
                run = if prev == Some(f.wrapping_sub(1)) { run + 1 } else { 1 };
                prev = Some(f);
                if run == u64::from(cfg.max_age) + 1 {
                    long_gaps += 1;
                }
            }
        }

        mota_ok &= m.mota >= ROBUST_MOTA_TARGET;
        switches_ok &= m.id_switches <= long_gaps;
        lines.push_str(&format!(
            "  seed {seed}: mota {:.4} (fn {} fp {} idsw {}), gaps > max_age: {long_gaps}\n",
            m.mota, m.false_negatives, m.false_positives, m.id_switches
        ));
    }
    println!("{lines}");
    let ok = mota_ok && switches_ok;
    verdict(
        5,
        ok,
        &format!(
            "(mota >= {ROBUST_MOTA_TARGET}: {}; switches only across gaps > max_age: {})",
            if mota_ok { "met" } else { "not met" },
            if switches_ok { "met" } else { "not met" },
        ),
    );
    assert!(
        ok,
        "design targets not met by the default config under this noise model:\n\
         mota >= {ROBUST_MOTA_TARGET}: {}; switches only across gaps > max_age: {}\n{lines}",
        if mota_ok { "met" } else { "not met" },
        if switches_ok { "met" } else { "not met" },
    );
}

fn dstrack() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dstrack"))
}

fn synth_corpus(dir: &Path) -> std::path::PathBuf {
    let mut all = String::new();
    for i in 0..3 {
        let d = dir.join(format!("d{i}.jsonl"));
        let g = dir.join(format!("g{i}.json"));
        let out = dstrack()
            .args([
                "synth",
                "--out-detections",
                d.to_str().unwrap(),
                "--out-gt",
                g.to_str().unwrap(),
                "--video-id",
                &format!("video-{i}"),
                "--seed",
                &(21 + i).to_string(),
                "--tracks",
                "6",
                "--frames",
                "60",
                "--noise-sigma",
                "1.0",
                "--drop-rate",
                "0.1",
            ])
            .output()
            .unwrap();
        assert!(out.status.success());
        all.push_str(&std::fs::read_to_string(&d).unwrap());
    }
    let corpus = dir.join("corpus.jsonl");
    std::fs::write(&corpus, all).unwrap();
    corpus
}

#[test]
fn criterion_6_determinism_across_workers_and_runs() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(dir.path());

    let mut observed: Vec<(String, Vec<Vec<u8>>)> = vec![];
    for (run, workers) in [(0, "1"), (1, "4"), (2, "1")] {
        let out_dir = dir.path().join(format!("out{run}"));
        let out = dstrack()
            .args([
                "track",
                "--detections",
                corpus.to_str().unwrap(),
                "--out",
                out_dir.to_str().unwrap(),
                "--workers",
                workers,
            ])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let files = (0..3)
            .map(|i| std::fs::read(out_dir.join(format!("video-{i}.tracks.json"))).unwrap())
            .collect();
        observed.push((String::from_utf8(out.stdout).unwrap(), files));
    }
    let ok = observed[0] == observed[1] && observed[0] == observed[2];
    verdict(6, ok, "(track files and summaries byte-identical for workers 1, 4, 1)");
    assert!(ok);
}

#[test]
fn criterion_7_formats_and_golden_files() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let dir = tempfile::tempdir().unwrap();
    let dets = dir.path().join("golden.dets.jsonl");
    let gt = dir.path().join("golden.gt.json");
    let tracks = dir.path().join("golden.tracks.json");

    // Regenerate the whole pipeline from its fixed inputs.
    let out = dstrack()
        .args([
            "synth",
            "--out-detections",
            dets.to_str().unwrap(),
            "--out-gt",
            gt.to_str().unwrap(),
            "--seed",
            "42",
            "--video-id",
            "golden",
            "--tracks",
            "3",
            "--frames",
            "8",
            "--noise-sigma",
            "0.5",
            "--drop-rate",
            "0.15",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let out = dstrack()
        .args([
            "track",
            "--detections",
            dets.to_str().unwrap(),
            "--out",
            tracks.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let eval = dstrack()
        .args([
            "eval",
            "--pred",
            tracks.to_str().unwrap(),
            "--gt",
            gt.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(eval.status.success());

    let mut ok = true;
    for (name, produced) in [
        ("golden.dets.jsonl", std::fs::read(&dets).unwrap()),
        ("golden.gt.json", std::fs::read(&gt).unwrap()),
        ("golden.tracks.json", std::fs::read(&tracks).unwrap()),
        ("golden.report.json", eval.stdout.clone()),
    ] {
        let frozen = std::fs::read(golden.join(name)).unwrap();
        if produced != frozen {
            ok = false;
            println!("  golden mismatch: {name}");
        }
    }

    // Read-write round trips are byte-stable on already-written files.
    let ts = dstrack::formats::read_tracks_file(&golden.join("golden.tracks.json")).unwrap();
    ok &= dstrack::formats::write_tracks_string(&ts).into_bytes()
        == std::fs::read(golden.join("golden.tracks.json")).unwrap();
    let g = dstrack::formats::read_gt_file(&golden.join("golden.gt.json")).unwrap();
    ok &= dstrack::formats::write_gt_string(&g).into_bytes()
        == std::fs::read(golden.join("golden.gt.json")).unwrap();

    verdict(7, ok, "(pipeline output matches frozen bytes; round trips stable)");
    assert!(ok);
}

#[test]
fn criterion_8_dense_scene_throughput() {
    let out = dstrack()
        .args(["bench", "--boxes", "200", "--frames", "100", "--seed", "1"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let fps = v["fps"].as_f64().unwrap();
    let ok = fps >= BENCH_FLOOR_FPS;
    verdict(
        8,
        ok,
        &format!(
            "({fps:.1} frames/s at 200 boxes/frame; target {BENCH_TARGET_FPS}, hard floor {BENCH_FLOOR_FPS})"
        ),
    );
    assert!(ok, "throughput {fps:.1} fps below the 2x-drift floor {BENCH_FLOOR_FPS}");
}
