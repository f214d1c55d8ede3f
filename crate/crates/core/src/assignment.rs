//! Minimum-cost assignment and IoU-gated association.
//!
//! The solver is the Jonker-Volgenant shortest-augmenting-path variant of
//! the Hungarian algorithm with dual potentials. Optimal assignments are
//! often non-unique (crowded scenes produce exact cost ties), so a
//! canonicalization pass rewires the matching to the lexicographically
//! smallest optimal `(row, col)` pair set. That makes the tracker's output
//! a pure function of its input, independent of solver internals.

use crate::geometry::{iou, IouMode, RotatedBox};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AssignError {
    /// `data.len() != rows * cols`.
    ShapeMismatch { rows: usize, cols: usize, len: usize },
    /// A cost entry was NaN or infinite.
    NonFinite { row: usize, col: usize },
}

impl fmt::Display for AssignError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ShapeMismatch { rows, cols, len } => {
                write!(f, "cost matrix shape {rows}x{cols} expects {} entries, got {len}", rows * cols)
            }
            Self::NonFinite { row, col } => write!(f, "non-finite cost at ({row}, {col})"),
        }
    }
}

impl core::error::Error for AssignError {}

/// Dense row-major cost matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, AssignError> {
        if data.len() != rows * cols {
            return Err(AssignError::ShapeMismatch { rows, cols, len: data.len() });
        }
        for (k, v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(AssignError::NonFinite { row: k / cols.max(1), col: k % cols.max(1) });
            }
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }
}

const NONE: usize = usize::MAX;

/// Minimum-cost assignment of rows to columns.
///
/// Matches `min(rows, cols)` pairs; the rest stay unmatched. Among all
/// assignments of minimum total cost, returns the lexicographically
/// smallest pair set, sorted by row.
pub fn hungarian(m: &CostMatrix) -> Vec<(usize, usize)> {
    let (rows, cols) = (m.rows, m.cols);
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let n = rows.max(cols);
    // Pad to square with a constant cost above every real entry; dummy
    // rows/cols absorb the surplus without disturbing the real optimum.
    let pad = m.data.iter().cloned().fold(0.0_f64, f64::max) + 1.0;
    let cost = |i: usize, j: usize| -> f64 {
        if i < rows && j < cols {
            m.at(i, j)
        } else {
            pad
        }
    };

    // Jonker-Volgenant shortest augmenting paths with dual potentials.
    // Column n is a virtual starting column.
    let mut u = vec![0.0_f64; n];
    let mut v = vec![0.0_f64; n + 1];
    let mut p = vec![NONE; n + 1]; // p[j] = row matched to column j
    let mut minv = vec![0.0_f64; n + 1];
    let mut way = vec![n; n + 1];
    let mut used = vec![false; n + 1];
    for i in 0..n {
        p[n] = i;
        let mut j0 = n;
        minv[..].fill(f64::INFINITY);
        way[..].fill(n);
        used[..].fill(false);
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = NONE;
            for j in 0..n {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == NONE {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == n {
                break;
            }
        }
    }

    let mut row_to_col = vec![NONE; n];
    let mut col_to_row = vec![NONE; n];
    for j in 0..n {
        if p[j] != NONE {
            row_to_col[p[j]] = j;
            col_to_row[j] = p[j];
        }
    }
    canonicalize_ties(n, rows, cols, &cost, &u, &v, &mut row_to_col, &mut col_to_row);

    let mut out = Vec::new();
    for (i, &j) in row_to_col.iter().enumerate().take(rows) {
        if j != NONE && j < cols {
            out.push((i, j));
        }
    }
    out
}

/// Rewires the optimal matching to the lexicographically smallest optimal
/// pair set, walking rows in ascending order and greedily taking the
/// smallest tight column that still admits a perfect matching on the rest.
///
/// An edge is "tight" when its reduced cost against the duals is zero
/// (within a scale-aware tolerance); every minimum-cost perfect matching
/// uses only tight edges, so rewiring inside the tight subgraph preserves
/// optimality exactly.
fn canonicalize_ties(
    n: usize,
    rows: usize,
    cols: usize,
    cost: &dyn Fn(usize, usize) -> f64,
    u: &[f64],
    v: &[f64],
    row_to_col: &mut [usize],
    col_to_row: &mut [usize],
) {
    let mut max_abs = 1.0_f64;
    for i in 0..n {
        for j in 0..n {
            max_abs = max_abs.max(cost(i, j).abs());
        }
    }
    // Loose enough to absorb the float drift the potential updates
    // accumulate, tight enough that no real cost gap ever looks like a tie.
    let tol = 1e-11 * max_abs;
    let tight = move |i: usize, j: usize| -> bool { (cost(i, j) - u[i] - v[j]).abs() <= tol };

    let mut locked_row = vec![false; n];
    let mut visited = vec![false; n];
    for i in 0..rows {
        let cur = row_to_col[i];
        // Candidate columns strictly better than the current one: all real
        // columns below `cur`, or every real column when `cur` is a dummy.
        let limit = cur.min(cols);
        for j in 0..limit {
            if !tight(i, j) || col_to_row[j] == i {
                continue;
            }
            let displaced = col_to_row[j];
            if displaced != NONE && locked_row[displaced] {
                continue;
            }
            // Tentatively take (i, j) and try to re-seat the displaced row.
            let freed = row_to_col[i];
            row_to_col[i] = j;
            col_to_row[j] = i;
            col_to_row[freed] = NONE;
            let ok = if displaced == NONE {
                true
            } else {
                row_to_col[displaced] = NONE;
                visited[..].fill(false);
                visited[j] = true;
                kuhn_augment(displaced, n, &tight, &locked_row, &mut visited, row_to_col, col_to_row)
            };
            if ok {
                break;
            }
            // Roll back.
            row_to_col[i] = freed;
            col_to_row[freed] = i;
            col_to_row[j] = displaced;
            if displaced != NONE {
                row_to_col[displaced] = j;
            }
        }
        locked_row[i] = true;
    }
}

/// Kuhn-style augmenting search for `row` inside the tight subgraph,
/// refusing to displace locked rows.
fn kuhn_augment(
    row: usize,
    n: usize,
    tight: &dyn Fn(usize, usize) -> bool,
    locked_row: &[bool],
    visited: &mut [bool],
    row_to_col: &mut [usize],
    col_to_row: &mut [usize],
) -> bool {
    for j in 0..n {
        if visited[j] || !tight(row, j) {
            continue;
        }
        visited[j] = true;
        let occupant = col_to_row[j];
        if occupant == NONE
            || (!locked_row[occupant]
                && kuhn_augment(occupant, n, tight, locked_row, visited, row_to_col, col_to_row))
        {
            row_to_col[row] = j;
            col_to_row[j] = row;
            return true;
        }
    }
    false
}

/// Result of gated association: every track and detection index lands in
/// exactly one of the three lists, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Association {
    pub matches: Vec<(usize, usize)>,
    pub unmatched_tracks: Vec<usize>,
    pub unmatched_detections: Vec<usize>,
}

/// Options for [`associate_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct AssocOptions {
    /// Mask sub-gate pairs out of the cost matrix before solving, instead
    /// of demoting them after. Changes which pairs the solver prefers in
    /// crowded scenes; the classic formulation gates after.
    pub gate_before_assign: bool,
    /// IoU flavor used for the costs.
    pub iou_mode: IouMode,
}

/// IoU-gated assignment of predicted track boxes to detection boxes with
/// cost `1 - IoU` and post-assignment gating at `iou_gate`.
pub fn associate(tracks: &[RotatedBox], detections: &[RotatedBox], iou_gate: f64) -> Association {
    associate_with(tracks, detections, iou_gate, AssocOptions::default())
}

/// [`associate`] with explicit gating mode and IoU flavor.
pub fn associate_with(
    tracks: &[RotatedBox],
    detections: &[RotatedBox],
    iou_gate: f64,
    opts: AssocOptions,
) -> Association {
    let (nt, nd) = (tracks.len(), detections.len());
    if nt == 0 || nd == 0 {
        return Association {
            matches: Vec::new(),
            unmatched_tracks: (0..nt).collect(),
            unmatched_detections: (0..nd).collect(),
        };
    }
    // Cost above any real 1 - IoU; marks masked pairs under pre-gating.
    const MASKED: f64 = 2.0;
    let mut ious = vec![0.0_f64; nt * nd];
    let mut costs = vec![0.0_f64; nt * nd];
    for (ti, t) in tracks.iter().enumerate() {
        for (di, d) in detections.iter().enumerate() {
            let o = iou(opts.iou_mode, t, d);
            ious[ti * nd + di] = o;
            costs[ti * nd + di] = if opts.gate_before_assign && o < iou_gate {
                MASKED
            } else {
                1.0 - o
            };
        }
    }
    let matrix = CostMatrix::new(nt, nd, costs).expect("costs are finite by construction");
    let assignment = hungarian(&matrix);

    let mut matches = Vec::with_capacity(assignment.len());
    let mut matched_t = vec![false; nt];
    let mut matched_d = vec![false; nd];
    for (ti, di) in assignment {
        if ious[ti * nd + di] < iou_gate {
            continue; // demoted: overlap below the gate
        }
        matched_t[ti] = true;
        matched_d[di] = true;
        matches.push((ti, di));
    }
    Association {
        matches,
        unmatched_tracks: (0..nt).filter(|&i| !matched_t[i]).collect(),
        unmatched_detections: (0..nd).filter(|&i| !matched_d[i]).collect(),
    }
}
