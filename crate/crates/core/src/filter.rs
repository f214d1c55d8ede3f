//! Constant-velocity Kalman filter over rotated-box observations.
//!
//! State layout: `[cx, cy, s, r, theta, vcx, vcy, vs]` where `s = w*h` is
//! the box area, `r = w/h` the aspect ratio. Center and area carry
//! velocities; aspect and angle are modeled as static with process noise.
//! Observations are `[cx, cy, s, r, theta]` taken from a detection box.
//!
//! The angle residual is wrapped into `[-pi/2, pi/2)` before the update so
//! a box crossing the rectangle-symmetry boundary pulls the state the short
//! way around. Area and aspect are clamped to [`MIN_AREA`] / [`MIN_ASPECT`]
//! after every step, and the covariance is re-symmetrized to keep the
//! filter well-behaved over long runs.

use crate::geometry::{wrap_angle, RotatedBox};
use core::fmt;
use libm::sqrt;

/// Lower bound on the state's area component.
pub const MIN_AREA: f64 = 1e-6;
/// Lower bound on the state's aspect-ratio component.
pub const MIN_ASPECT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FilterError {
    /// Covariance or mean became non-finite, or the innovation covariance
    /// lost positive definiteness.
    DegenerateState,
}

impl fmt::Display for FilterError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DegenerateState => write!(f, "degenerate state"),
        }
    }
}

impl core::error::Error for FilterError {}

/// Noise parameters, all expressed as standard deviations.
///
/// Fields ending in `_frac` scale with the state's area `s` (their sigma is
/// `frac * s`); everything else is absolute. `q_*` feed the per-step process
/// noise, `r_*` the measurement noise, `p0_*` the initial covariance.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct NoiseConfig {
    /// Process noise on the center, px per step.
    pub q_center: f64,
    /// Process noise on the area, as a fraction of the current area.
    pub q_area_frac: f64,
    /// Process noise on the aspect ratio.
    pub q_aspect: f64,
    /// Process noise on the angle, radians.
    pub q_theta: f64,
    /// Process noise on the center velocity.
    pub q_vel_center: f64,
    /// Process noise on the area velocity, as a fraction of the current area.
    pub q_vel_area_frac: f64,
    /// Measurement noise on the center, px.
    pub r_center: f64,
    /// Measurement noise on the area, as a fraction of the predicted area.
    pub r_area_frac: f64,
    /// Measurement noise on the aspect ratio.
    pub r_aspect: f64,
    /// Measurement noise on the angle, radians.
    pub r_theta: f64,
    /// Initial center sigma is `p0_center_factor * sqrt(s)`.
    pub p0_center_factor: f64,
    /// Initial area sigma is `p0_area_frac * s`.
    pub p0_area_frac: f64,
    /// Initial aspect sigma is `p0_aspect_frac * r`.
    pub p0_aspect_frac: f64,
    /// Initial angle sigma, radians.
    pub p0_theta: f64,
    /// Velocity sigmas start at `p0_vel_factor` times the matching position sigma.
    pub p0_vel_factor: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            q_center: 1.0,
            q_area_frac: 0.01,
            q_aspect: 0.01,
            q_theta: 0.01,
            q_vel_center: 0.5,
            q_vel_area_frac: 0.001,
            r_center: 1.0,
            r_area_frac: 0.05,
            r_aspect: 0.1,
            r_theta: 0.02,
            p0_center_factor: 2.0,
            p0_area_frac: 0.5,
            p0_aspect_frac: 0.5,
            p0_theta: 0.1,
            p0_vel_factor: 10.0,
        }
    }
}

impl NoiseConfig {
    /// All sigmas must be finite and non-negative; measurement sigmas must
    /// be strictly positive to keep the innovation covariance invertible.
    /// The error names the offending field.
    pub fn validate(&self) -> Result<(), alloc::string::String> {
        use alloc::format;
        let non_negative = [
            ("q_center", self.q_center),
            ("q_area_frac", self.q_area_frac),
            ("q_aspect", self.q_aspect),
            ("q_theta", self.q_theta),
            ("q_vel_center", self.q_vel_center),
            ("q_vel_area_frac", self.q_vel_area_frac),
            ("p0_center_factor", self.p0_center_factor),
            ("p0_area_frac", self.p0_area_frac),
            ("p0_aspect_frac", self.p0_aspect_frac),
            ("p0_theta", self.p0_theta),
            ("p0_vel_factor", self.p0_vel_factor),
        ];
        for (name, v) in non_negative {
            if !v.is_finite() || v < 0.0 {
                return Err(format!("{name} = {v} must be finite and >= 0"));
            }
        }
        let positive = [
            ("r_center", self.r_center),
            ("r_area_frac", self.r_area_frac),
            ("r_aspect", self.r_aspect),
            ("r_theta", self.r_theta),
        ];
        for (name, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(format!("{name} = {v} must be finite and > 0"));
            }
        }
        Ok(())
    }
}

type Mat8 = [[f64; 8]; 8];

/// Filter state: mean and covariance of the 8-dimensional state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    mean: [f64; 8],
    cov: Mat8,
}

impl KalmanState {
    pub fn mean(&self) -> &[f64; 8] {
        &self.mean
    }

    pub fn cov(&self) -> &Mat8 {
        &self.cov
    }

    fn is_finite(&self) -> bool {
        self.mean.iter().all(|v| v.is_finite())
            && self.cov.iter().all(|row| row.iter().all(|v| v.is_finite()))
    }
}

/// Starts a track from a first observation, with zero velocity and a
/// covariance scaled to the box size.
pub fn initiate(b: &RotatedBox, noise: &NoiseConfig) -> KalmanState {
    let s = (b.w() * b.h()).max(MIN_AREA);
    let r = (b.w() / b.h()).max(MIN_ASPECT);
    let mean = [b.cx(), b.cy(), s, r, b.theta(), 0.0, 0.0, 0.0];
    let sig_c = noise.p0_center_factor * sqrt(s);
    let sig_s = noise.p0_area_frac * s;
    let sig_r = noise.p0_aspect_frac * r;
    let sig_t = noise.p0_theta;
    let sig_vc = noise.p0_vel_factor * sig_c;
    let sig_vs = noise.p0_vel_factor * sig_s;
    let mut cov = [[0.0; 8]; 8];
    let diag = [sig_c, sig_c, sig_s, sig_r, sig_t, sig_vc, sig_vc, sig_vs];
    for (i, d) in diag.iter().enumerate() {
        cov[i][i] = d * d;
    }
    KalmanState { mean, cov }
}

/// Process-noise diagonal, built from the current area estimate.
fn process_noise(s: f64, noise: &NoiseConfig) -> [f64; 8] {
    let qs = noise.q_area_frac * s;
    let qvs = noise.q_vel_area_frac * s;
    [
        noise.q_center * noise.q_center,
        noise.q_center * noise.q_center,
        qs * qs,
        noise.q_aspect * noise.q_aspect,
        noise.q_theta * noise.q_theta,
        noise.q_vel_center * noise.q_vel_center,
        noise.q_vel_center * noise.q_vel_center,
        qvs * qvs,
    ]
}

/// Advances the state one frame under the constant-velocity model.
pub fn predict(state: &mut KalmanState, noise: &NoiseConfig) {
    let q = process_noise(state.mean[2], noise);
    state.mean[0] += state.mean[5];
    state.mean[1] += state.mean[6];
    state.mean[2] += state.mean[7];
    state.mean[2] = state.mean[2].max(MIN_AREA);
    // P <- F P F^T + Q with F = I plus ones at (0,5), (1,6), (2,7).
    let p = &state.cov;
    let mut next = [[0.0; 8]; 8];
    for i in 0..8 {
        for j in 0..8 {
            let mut v = p[i][j];
            if i < 3 {
                v += p[i + 5][j];
            }
            if j < 3 {
                v += p[i][j + 5];
            }
            if i < 3 && j < 3 {
                v += p[i + 5][j + 5];
            }
            next[i][j] = v;
        }
    }
    for (i, qi) in q.iter().enumerate() {
        next[i][i] += qi;
    }
    symmetrize(&mut next);
    state.cov = next;
}

/// Measurement vector of a box: `[cx, cy, s, r, theta]`.
fn measurement(b: &RotatedBox) -> [f64; 5] {
    [b.cx(), b.cy(), b.w() * b.h(), b.w() / b.h(), b.theta()]
}

/// Folds one observation into the state.
///
/// Fails with "degenerate state" when the state has gone non-finite or the
/// innovation covariance is not positive definite.
pub fn update(state: &mut KalmanState, b: &RotatedBox, noise: &NoiseConfig) -> Result<(), FilterError> {
    if !state.is_finite() {
        return Err(FilterError::DegenerateState);
    }
    let z = measurement(b);
    let mut y = [0.0; 5];
    for m in 0..5 {
        y[m] = z[m] - state.mean[m];
    }
    y[4] = wrap_angle(y[4]);

    // Innovation covariance S = H P H^T + R; H selects the first 5 dims.
    let s_pred = state.mean[2];
    let rs = noise.r_area_frac * s_pred;
    let r_diag = [
        noise.r_center * noise.r_center,
        noise.r_center * noise.r_center,
        rs * rs,
        noise.r_aspect * noise.r_aspect,
        noise.r_theta * noise.r_theta,
    ];
    let mut s_mat = [[0.0; 5]; 5];
    for i in 0..5 {
        for j in 0..5 {
            s_mat[i][j] = state.cov[i][j];
        }
        s_mat[i][i] += r_diag[i];
    }
    let chol = cholesky5(&s_mat).ok_or(FilterError::DegenerateState)?;

    // Kalman gain K = P H^T S^-1, one solve per state row.
    let mut k = [[0.0; 5]; 8];
    for i in 0..8 {
        let mut ph = [0.0; 5];
        ph.copy_from_slice(&state.cov[i][..5]);
        k[i] = solve5(&chol, &ph);
    }

    for i in 0..8 {
        let mut dot = 0.0;
        for m in 0..5 {
            dot += k[i][m] * y[m];
        }
        state.mean[i] += dot;
    }
    state.mean[2] = state.mean[2].max(MIN_AREA);
    state.mean[3] = state.mean[3].max(MIN_ASPECT);
    state.mean[4] = wrap_angle(state.mean[4]);

    // P <- (I - K H) P, computed as P - K (H P).
    let p = state.cov;
    let mut next = [[0.0; 8]; 8];
    for i in 0..8 {
        for j in 0..8 {
            let mut dot = 0.0;
            for m in 0..5 {
                dot += k[i][m] * p[m][j];
            }
            next[i][j] = p[i][j] - dot;
        }
    }
    symmetrize(&mut next);
    state.cov = next;
    if !state.is_finite() {
        return Err(FilterError::DegenerateState);
    }
    Ok(())
}

/// Reads the posterior box out of the state.
///
/// Panics if the state is non-finite; `update` guards against that, so
/// states reached through the public API are always convertible.
pub fn state_to_box(state: &KalmanState) -> RotatedBox {
    let s = state.mean[2].max(MIN_AREA);
    let r = state.mean[3].max(MIN_ASPECT);
    let w = sqrt(s * r);
    let h = sqrt(s / r);
    RotatedBox::new(state.mean[0], state.mean[1], w, h, state.mean[4])
        .expect("finite state always yields a valid box")
}

fn symmetrize(m: &mut Mat8) {
    for i in 0..8 {
        for j in (i + 1)..8 {
            let v = 0.5 * (m[i][j] + m[j][i]);
            m[i][j] = v;
            m[j][i] = v;
        }
    }
}

/// Lower-triangular Cholesky factor of a symmetric 5x5 matrix, or `None`
/// when the matrix is not (numerically) positive definite.
fn cholesky5(a: &[[f64; 5]; 5]) -> Option<[[f64; 5]; 5]> {
    let mut l = [[0.0; 5]; 5];
    for j in 0..5 {
        let mut d = a[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let lj = sqrt(d);
        l[j][j] = lj;
        for i in (j + 1)..5 {
            let mut v = a[i][j];
            for k in 0..j {
                v -= l[i][k] * l[j][k];
            }
            l[i][j] = v / lj;
        }
    }
    Some(l)
}

/// Solves `A x = b` given the Cholesky factor of `A`.
fn solve5(l: &[[f64; 5]; 5], b: &[f64; 5]) -> [f64; 5] {
    let mut y = [0.0; 5];
    for i in 0..5 {
        let mut v = b[i];
        for k in 0..i {
            v -= l[i][k] * y[k];
        }
        y[i] = v / l[i][i];
    }
    let mut x = [0.0; 5];
    for i in (0..5).rev() {
        let mut v = y[i];
        for k in (i + 1)..5 {
            v -= l[k][i] * x[k];
        }
        x[i] = v / l[i][i];
    }
    x
}
