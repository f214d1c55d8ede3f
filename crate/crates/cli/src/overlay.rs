//! SVG overlays: one image per frame with every emitted quad drawn in its
//! track's color. Colors come from the golden-angle hue walk, so nearby
//! ids land far apart on the color wheel and a track keeps its color for
//! life.

use dstrack_core::tracker::{Emission, TraceId, TrackSet};
use std::fmt::Write as _;
use std::path::Path;

/// Successive ids step the hue by the golden angle in degrees.
const GOLDEN_ANGLE_DEG: f64 = 137.50776405003785;

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> (u8, u8, u8) {
    let h = h.rem_euclid(360.0) / 60.0;
    let i = h as u32 % 6;
    let f = h - h.floor();
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    let (r, g, b) = match i {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    };
    let to = |x: f64| (x * 255.0).round() as u8;
    (to(r), to(g), to(b))
}

/// Stable hex color for a track id.
pub fn track_color(id: TraceId) -> String {
    let hue = (id as f64 * GOLDEN_ANGLE_DEG).rem_euclid(360.0);
    let (r, g, b) = hsv_to_rgb(hue, 0.65, 0.95);
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Renders one frame's emissions as a standalone SVG document.
pub fn render_frame_svg(emissions: &[Emission], width: u32, height: u32) -> String {
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"#101014\"/>\n"
    );
    for e in emissions {
        let color = track_color(e.trace_id);
        let mut points = String::new();
        for (i, p) in e.quad.points().iter().enumerate() {
            if i > 0 {
                points.push(' ');
            }
            let _ = write!(points, "{:.2},{:.2}", p.x, p.y);
        }
        let anchor = e.quad.points()[0];
        let _ = writeln!(
            out,
            "<polygon points=\"{points}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>"
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" fill=\"{color}\" font-size=\"12\" \
             font-family=\"monospace\">{}</text>",
            anchor.x,
            anchor.y - 4.0,
            e.trace_id,
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Writes `000000.svg`, `000001.svg`, ... into `dir` for frames `0..=last`
/// (or the first `max_frames` when given). Frames without emissions get a
/// background-only image, so the sequence plays back at a constant rate.
pub fn write_overlays(
    tracks: &TrackSet,
    dir: &Path,
    width: u32,
    height: u32,
    max_frames: Option<u64>,
) -> std::io::Result<usize> {
    std::fs::create_dir_all(dir)?;
    let last = tracks.frames.keys().next_back().copied().unwrap_or(0);
    let end = match max_frames {
        Some(n) if n > 0 => last.min(n - 1),
        Some(_) => return Ok(0),
        None => last,
    };
    let mut written = 0;
    for frame in 0..=end {
        let emissions = tracks.frames.get(&frame).map_or(&[][..], |v| v.as_slice());
        let svg = render_frame_svg(emissions, width, height);
        std::fs::write(dir.join(format!("{frame:06}.svg")), svg)?;
        written += 1;
    }
    Ok(written)
}
