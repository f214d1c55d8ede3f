//! Rotated-box geometry: canonical quads and rotated rectangles, convex
//! clipping, rotated IoU and rotated NMS.
//!
//! Everything downstream (association, tracking, evaluation) leans on the
//! canonical forms established here, so the constructors normalize
//! aggressively and the comparison helpers are total orders over the
//! canonical representation.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use core::fmt;
use libm::{atan2, cos, floor, sin};

/// Two points closer than this are merged during clipping.
pub const MERGE_EPS: f64 = 1e-9;
/// Cross products smaller than this in magnitude count as collinear.
pub const COLLINEAR_EPS: f64 = 1e-9;
/// Quads with shoelace area at or below this are rejected as degenerate.
pub const DEGENERATE_AREA_EPS: f64 = 1e-12;

const MAX_POLY_VERTS: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GeometryError {
    /// A coordinate or parameter was NaN or infinite.
    NonFinite,
    /// Box width or height was zero or negative.
    InvalidSize,
    /// Quad edges cross each other.
    SelfIntersecting,
    /// Collinear or zero-area input where an area is required.
    Degenerate,
    /// Polygon vertex count outside 3..=16.
    VertexCount(usize),
    /// Polygon vertices are not in convex counter-clockwise position.
    NotConvex,
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NonFinite => write!(f, "non-finite coordinate"),
            Self::InvalidSize => write!(f, "box dimensions must be positive and finite"),
            Self::SelfIntersecting => write!(f, "self-intersecting quad"),
            Self::Degenerate => write!(f, "degenerate geometry"),
            Self::VertexCount(n) => write!(f, "polygon must have 3..=16 vertices, got {n}"),
            Self::NotConvex => write!(f, "polygon is not convex"),
        }
    }
}

impl core::error::Error for GeometryError {}

/// A point in image coordinates (x right, y down).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// z-component of `(b - a) x (c - a)`; positive when `c` lies left of `a -> b`.
fn cross(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn dist_sq(a: Point, b: Point) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    dx * dx + dy * dy
}

/// Twice the signed shoelace area; positive for counter-clockwise rings.
fn shoelace2(points: &[Point]) -> f64 {
    let n = points.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = points[i];
        let b = points[(i + 1) % n];
        s += a.x * b.y - b.x * a.y;
    }
    s
}

/// Index of the vertex with the smallest `(y, x)`; ties keep the first.
fn canonical_start(points: &[Point]) -> usize {
    let mut best = 0;
    for (i, p) in points.iter().enumerate().skip(1) {
        let b = points[best];
        if (p.y, p.x) < (b.y, b.x) {
            best = i;
        }
    }
    best
}

/// Wraps an angle into `[-pi/2, pi/2)` modulo pi (rectangle symmetry).
pub fn wrap_angle(theta: f64) -> f64 {
    let t = theta - PI * floor(theta / PI + 0.5);
    if t >= FRAC_PI_2 {
        t - PI
    } else if t < -FRAC_PI_2 {
        t + PI
    } else {
        t
    }
}

/// A word-level quadrilateral: four vertices in counter-clockwise order,
/// starting from the vertex with minimal `(y, x)`.
///
/// The constructor enforces the canonical order, so two `Quad`s describing
/// the same four corners compare equal regardless of how the corners were
/// listed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    points: [Point; 4],
}

impl Quad {
    /// Validates and canonicalizes four vertices.
    ///
    /// Rejects non-finite coordinates, self-intersecting ("bowtie") quads and
    /// quads with near-zero area. Clockwise input is reversed, then the ring
    /// is rotated to start at the minimal `(y, x)` vertex.
    pub fn new(points: [Point; 4]) -> Result<Self, GeometryError> {
        if points.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let area2 = shoelace2(&points);
        if area2.abs() <= 2.0 * DEGENERATE_AREA_EPS {
            return Err(GeometryError::Degenerate);
        }
        // Opposite edges of a simple quad never properly cross.
        if segments_cross(points[0], points[1], points[2], points[3])
            || segments_cross(points[1], points[2], points[3], points[0])
        {
            return Err(GeometryError::SelfIntersecting);
        }
        let mut pts = points;
        if area2 < 0.0 {
            pts.swap(1, 3);
        }
        let start = canonical_start(&pts);
        let ordered = [
            pts[start],
            pts[(start + 1) % 4],
            pts[(start + 2) % 4],
            pts[(start + 3) % 4],
        ];
        Ok(Self { points: ordered })
    }

    pub fn points(&self) -> &[Point; 4] {
        &self.points
    }

    pub fn area(&self) -> f64 {
        0.5 * shoelace2(&self.points)
    }

    /// Total order over the canonical vertex list, for deterministic sorting.
    pub fn canonical_cmp(&self, other: &Self) -> core::cmp::Ordering {
        for (a, b) in self.points.iter().zip(other.points.iter()) {
            let o = a.y.total_cmp(&b.y).then(a.x.total_cmp(&b.x));
            if o != core::cmp::Ordering::Equal {
                return o;
            }
        }
        core::cmp::Ordering::Equal
    }
}

/// True when segments `a1-a2` and `b1-b2` properly cross (shared endpoints
/// and touching do not count).
fn segments_cross(a1: Point, a2: Point, b1: Point, b2: Point) -> bool {
    let d1 = cross(b1, b2, a1);
    let d2 = cross(b1, b2, a2);
    let d3 = cross(a1, a2, b1);
    let d4 = cross(a1, a2, b2);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// A rotated rectangle `(cx, cy, w, h, theta)`.
///
/// `theta` is measured counter-clockwise from the +x axis to the side
/// labeled `w`. Rectangles have 180-degree symmetry and an ambiguous side
/// labeling, so the constructor canonicalizes: `theta` is wrapped modulo pi,
/// then `w`/`h` are swapped (adding or subtracting pi/2) until
/// `theta` lies in `[-pi/4, pi/4)`. This makes the representation unique,
/// which box equality and the quad round-trip rely on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatedBox {
    cx: f64,
    cy: f64,
    w: f64,
    h: f64,
    theta: f64,
}

impl RotatedBox {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64, theta: f64) -> Result<Self, GeometryError> {
        if !(cx.is_finite() && cy.is_finite() && theta.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if !(w.is_finite() && h.is_finite()) {
            return Err(GeometryError::InvalidSize);
        }
        if w <= 0.0 || h <= 0.0 {
            return Err(GeometryError::InvalidSize);
        }
        let mut t = wrap_angle(theta);
        let (mut w, mut h) = (w, h);
        if t >= FRAC_PI_4 {
            core::mem::swap(&mut w, &mut h);
            t -= FRAC_PI_2;
        } else if t < -FRAC_PI_4 {
            core::mem::swap(&mut w, &mut h);
            t += FRAC_PI_2;
        }
        Ok(Self { cx, cy, w, h, theta: t })
    }

    pub fn cx(&self) -> f64 {
        self.cx
    }

    pub fn cy(&self) -> f64 {
        self.cy
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Corners in counter-clockwise order (not canonically rotated).
    pub fn corners(&self) -> [Point; 4] {
        let (s, c) = (sin(self.theta), cos(self.theta));
        let (hw, hh) = (0.5 * self.w, 0.5 * self.h);
        let local = [(-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh)];
        local.map(|(x, y)| Point::new(self.cx + c * x - s * y, self.cy + s * x + c * y))
    }

    /// Axis-aligned bounding box as `(min_x, min_y, max_x, max_y)`.
    pub fn aabb(&self) -> (f64, f64, f64, f64) {
        let (s, c) = (sin(self.theta), cos(self.theta));
        let ex = (0.5 * self.w * c).abs() + (0.5 * self.h * s).abs();
        let ey = (0.5 * self.w * s).abs() + (0.5 * self.h * c).abs();
        (self.cx - ex, self.cy - ey, self.cx + ex, self.cy + ey)
    }

    /// Total order over `(cx, cy, w, h, theta)` for deterministic sorting.
    pub fn canonical_cmp(&self, other: &Self) -> core::cmp::Ordering {
        self.cx
            .total_cmp(&other.cx)
            .then(self.cy.total_cmp(&other.cy))
            .then(self.w.total_cmp(&other.w))
            .then(self.h.total_cmp(&other.h))
            .then(self.theta.total_cmp(&other.theta))
    }
}

/// Which IoU the association and NMS stages use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum IouMode {
    /// Exact rotated-rectangle IoU via convex clipping.
    #[default]
    Rotated,
    /// IoU of the axis-aligned bounding boxes (cheaper, less precise).
    AxisAligned,
}

/// A small convex polygon in counter-clockwise order.
///
/// Constructed polygons carry 3..=16 vertices; clipping results may be empty
/// or (for extreme inputs) carry up to the sum of the operand vertex counts.
/// The intersection of two rectangles has at most 8 vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    verts: Vec<Point>,
}

impl ConvexPolygon {
    /// Validates counter-clockwise convex input with 3..=16 vertices and
    /// rotates it to the canonical start vertex.
    pub fn new(points: &[Point]) -> Result<Self, GeometryError> {
        if points.len() < 3 || points.len() > 16 {
            return Err(GeometryError::VertexCount(points.len()));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if shoelace2(points) <= 2.0 * DEGENERATE_AREA_EPS {
            return Err(GeometryError::Degenerate);
        }
        let n = points.len();
        for i in 0..n {
            let turn = cross(points[i], points[(i + 1) % n], points[(i + 2) % n]);
            if turn < -COLLINEAR_EPS {
                return Err(GeometryError::NotConvex);
            }
        }
        Ok(Self::from_ring(points))
    }

    /// Wraps an already counter-clockwise ring, canonicalizing the start.
    fn from_ring(points: &[Point]) -> Self {
        let start = canonical_start(points);
        let mut verts = Vec::with_capacity(points.len());
        verts.extend_from_slice(&points[start..]);
        verts.extend_from_slice(&points[..start]);
        Self { verts }
    }

    pub fn empty() -> Self {
        Self { verts: Vec::new() }
    }

    pub fn from_box(b: &RotatedBox) -> Self {
        Self::from_ring(&b.corners())
    }

    pub fn from_quad(q: &Quad) -> Self {
        Self { verts: q.points().to_vec() }
    }

    pub fn points(&self) -> &[Point] {
        &self.verts
    }

    pub fn len(&self) -> usize {
        self.verts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verts.is_empty()
    }
}

/// Shoelace area of a counter-clockwise polygon; 0 for fewer than 3 vertices.
pub fn polygon_area(p: &ConvexPolygon) -> f64 {
    if p.verts.len() < 3 {
        return 0.0;
    }
    (0.5 * shoelace2(&p.verts)).max(0.0)
}

/// Sutherland-Hodgman intersection of two convex counter-clockwise polygons.
///
/// Vertices within [`COLLINEAR_EPS`] of a clip edge count as inside, and
/// output vertices within [`MERGE_EPS`] of each other are merged. The result
/// is empty when the overlap is empty or degenerates to a point or segment.
pub fn convex_intersection(a: &ConvexPolygon, b: &ConvexPolygon) -> ConvexPolygon {
    if a.is_empty() || b.is_empty() {
        return ConvexPolygon::empty();
    }
    let mut cur: Vec<Point> = a.verts.clone();
    let mut next: Vec<Point> = Vec::with_capacity(MAX_POLY_VERTS);
    let nb = b.verts.len();
    for i in 0..nb {
        if cur.is_empty() {
            break;
        }
        let p = b.verts[i];
        let q = b.verts[(i + 1) % nb];
        next.clear();
        let n = cur.len();
        for j in 0..n {
            let s = cur[j];
            let e = cur[(j + 1) % n];
            let side_s = cross(p, q, s);
            let side_e = cross(p, q, e);
            let s_in = side_s >= -COLLINEAR_EPS;
            let e_in = side_e >= -COLLINEAR_EPS;
            if e_in {
                if !s_in {
                    next.push(line_hit(s, e, side_s, side_e));
                }
                next.push(e);
            } else if s_in {
                next.push(line_hit(s, e, side_s, side_e));
            }
        }
        core::mem::swap(&mut cur, &mut next);
    }
    // Merge coincident vertices, including across the wrap-around.
    let mut out: Vec<Point> = Vec::with_capacity(cur.len());
    for pt in &cur {
        if out.last().is_none_or(|l| dist_sq(*l, *pt) >= MERGE_EPS * MERGE_EPS) {
            out.push(*pt);
        }
    }
    while out.len() > 1 && dist_sq(out[0], *out.last().unwrap()) < MERGE_EPS * MERGE_EPS {
        out.pop();
    }
    if out.len() < 3 {
        return ConvexPolygon::empty();
    }
    ConvexPolygon::from_ring(&out)
}

/// Point where segment `s -> e` meets the clip line, given the precomputed
/// signed sides. The parameter is clamped so near-collinear edges cannot
/// shoot the intersection far outside the segment.
fn line_hit(s: Point, e: Point, side_s: f64, side_e: f64) -> Point {
    let denom = side_s - side_e;
    let t = if denom == 0.0 { 0.5 } else { (side_s / denom).clamp(0.0, 1.0) };
    Point::new(s.x + t * (e.x - s.x), s.y + t * (e.y - s.y))
}

/// Rotated IoU: intersection area over union area of two rotated boxes.
///
/// Identical boxes give exactly 1.0 and disjoint boxes exactly 0.0; the
/// union is computed from the same polygon measure as the intersection so
/// the ratio cannot drift past 1. The operands are ordered canonically
/// before clipping, making the function exactly symmetric.
pub fn rotated_iou(a: &RotatedBox, b: &RotatedBox) -> f64 {
    let (ax0, ay0, ax1, ay1) = a.aabb();
    let (bx0, by0, bx1, by1) = b.aabb();
    if ax0 > bx1 || bx0 > ax1 || ay0 > by1 || by0 > ay1 {
        return 0.0;
    }
    let (first, second) = if a.canonical_cmp(b) == core::cmp::Ordering::Greater {
        (b, a)
    } else {
        (a, b)
    };
    let pa = ConvexPolygon::from_box(first);
    let pb = ConvexPolygon::from_box(second);
    let inter = polygon_area(&convex_intersection(&pa, &pb));
    if inter <= 0.0 {
        return 0.0;
    }
    let union = polygon_area(&pa) + polygon_area(&pb) - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// IoU of the axis-aligned bounding boxes of `a` and `b`.
pub fn aabb_iou(a: &RotatedBox, b: &RotatedBox) -> f64 {
    let (ax0, ay0, ax1, ay1) = a.aabb();
    let (bx0, by0, bx1, by1) = b.aabb();
    let iw = (ax1.min(bx1) - ax0.max(bx0)).max(0.0);
    let ih = (ay1.min(by1) - ay0.max(by0)).max(0.0);
    let inter = iw * ih;
    if inter <= 0.0 {
        return 0.0;
    }
    let union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// IoU under the selected mode.
pub fn iou(mode: IouMode, a: &RotatedBox, b: &RotatedBox) -> f64 {
    match mode {
        IouMode::Rotated => rotated_iou(a, b),
        IouMode::AxisAligned => aabb_iou(a, b),
    }
}

/// Corners of a rotated box as a canonical quad.
pub fn rotated_box_to_quad(b: &RotatedBox) -> Quad {
    let corners = b.corners();
    // Corners of a valid box form a simple CCW ring by construction; only
    // the canonical rotation is needed.
    let start = canonical_start(&corners);
    Quad {
        points: [
            corners[start],
            corners[(start + 1) % 4],
            corners[(start + 2) % 4],
            corners[(start + 3) % 4],
        ],
    }
}

/// Minimum-area enclosing rotated box of a quad, via rotating calipers over
/// the convex hull. For a quad that is already a rectangle this reproduces
/// it exactly (up to rounding); the error is "degenerate geometry" when all
/// vertices are collinear.
pub fn quad_to_rotated_box(q: &Quad) -> Result<RotatedBox, GeometryError> {
    let hull = convex_hull(q.points());
    if hull.len() < 3 {
        return Err(GeometryError::Degenerate);
    }
    let n = hull.len();
    let mut best_area = f64::INFINITY;
    let mut best = None;
    for i in 0..n {
        let a = hull[i];
        let b = hull[(i + 1) % n];
        let angle = atan2(b.y - a.y, b.x - a.x);
        let (s, c) = (sin(angle), cos(angle));
        let (mut umin, mut umax) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in &hull {
            let u = c * p.x + s * p.y;
            let v = -s * p.x + c * p.y;
            umin = umin.min(u);
            umax = umax.max(u);
            vmin = vmin.min(v);
            vmax = vmax.max(v);
        }
        let (w, h) = (umax - umin, vmax - vmin);
        let area = w * h;
        if area < best_area {
            let (uc, vc) = (0.5 * (umin + umax), 0.5 * (vmin + vmax));
            let cx = c * uc - s * vc;
            let cy = s * uc + c * vc;
            best_area = area;
            best = Some((cx, cy, w, h, angle));
        }
    }
    let (cx, cy, w, h, angle) = best.expect("hull has at least one edge");
    if w <= 0.0 || h <= 0.0 {
        return Err(GeometryError::Degenerate);
    }
    RotatedBox::new(cx, cy, w, h, angle)
}

/// Andrew monotone-chain convex hull; collinear points are dropped.
fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| dist_sq(*a, *b) < MERGE_EPS * MERGE_EPS);
    let n = pts.len();
    if n < 3 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * n);
    for &p in &pts {
        while hull.len() >= 2
            && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= COLLINEAR_EPS
        {
            hull.pop();
        }
        hull.push(p);
    }
    // Upper chain; never pop back into the finished lower chain.
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower
            && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= COLLINEAR_EPS
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Greedy rotated NMS.
///
/// Boxes are visited by descending score (ties by ascending input index);
/// each kept box suppresses all later boxes whose IoU with it exceeds
/// `iou_threshold` (strictly). Returns kept indices in visit order. The
/// operation is idempotent: rerunning on the kept set keeps everything.
///
/// Panics if `boxes` and `scores` have different lengths.
pub fn rotated_nms(boxes: &[RotatedBox], scores: &[f64], iou_threshold: f64) -> Vec<usize> {
    nms(boxes, scores, iou_threshold, IouMode::Rotated)
}

/// NMS under the selected IoU mode; see [`rotated_nms`].
pub fn nms(boxes: &[RotatedBox], scores: &[f64], iou_threshold: f64, mode: IouMode) -> Vec<usize> {
    assert_eq!(boxes.len(), scores.len(), "boxes and scores must have equal length");
    let mut order: Vec<usize> = (0..boxes.len()).collect();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]).then(i.cmp(&j)));
    let mut suppressed = alloc::vec![false; boxes.len()];
    let mut kept = Vec::new();
    for (pos, &i) in order.iter().enumerate() {
        if suppressed[i] {
            continue;
        }
        kept.push(i);
        for &j in &order[pos + 1..] {
            if !suppressed[j] && iou(mode, &boxes[i], &boxes[j]) > iou_threshold {
                suppressed[j] = true;
            }
        }
    }
    kept
}
