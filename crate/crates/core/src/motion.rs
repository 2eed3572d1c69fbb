//! Constant-acceleration Kalman filter, velocity deviation, the moving
//! variability score and the multistage gate.
//!
//! State layout is `(x, y, vx, vy, ax, ay)` in pixels, px/frame and
//! px/frame², one frame per step.

use core::f64::consts::PI;

use nalgebra::{Matrix2, Matrix2x6, Matrix6, Vector2, Vector6};

use crate::config::{GateParams, MotionParams};
use crate::error::{Error, Result};
use crate::types::Measurement;

/// Diagonal loading applied when a covariance is not invertible.
pub const REGULARIZATION: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct MotionState {
    pub state: Vector6<f64>,
    pub covariance: Matrix6<f64>,
    /// Moving variability score, starts at zero.
    pub s_mv: f64,
    /// Depth counter, capped at the tree depth.
    pub n_c: usize,
    /// Sustaining frames (history length, dummies included).
    pub n_s: usize,
    /// Effective emergences: +1 per detection, −1 (floored) per miss.
    pub ic: usize,
    /// Velocity has been initialised from two detections.
    pub velocity_known: bool,
    /// Frames since the last real detection.
    pub frames_since_detection: u32,
}

impl MotionState {
    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.state[0], self.state[1])
    }

    pub fn velocity(&self) -> Vector2<f64> {
        Vector2::new(self.state[2], self.state[3])
    }
}

/// One-step prediction of a state.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub state: Vector6<f64>,
    pub covariance: Matrix6<f64>,
    /// Innovation covariance `H P Hᵀ + R` of the position measurement.
    pub innovation_cov: Matrix2<f64>,
    /// Covariance of the implied-velocity residual `(z − p) − v`, taken from
    /// the velocity block of the filtered state plus measurement noise.
    pub velocity_cov: Matrix2<f64>,
}

impl Prediction {
    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.state[0], self.state[1])
    }

    pub fn velocity(&self) -> Vector2<f64> {
        Vector2::new(self.state[2], self.state[3])
    }
}

fn transition() -> Matrix6<f64> {
    let mut f = Matrix6::identity();
    for axis in 0..2 {
        let (p, v, a) = (axis, axis + 2, axis + 4);
        f[(p, v)] = 1.0;
        f[(p, a)] = 0.5;
        f[(v, a)] = 1.0;
    }
    f
}

/// Discrete white-jerk process noise for a unit step.
fn process_noise(q: f64) -> Matrix6<f64> {
    let block = [
        [1.0 / 20.0, 1.0 / 8.0, 1.0 / 6.0],
        [1.0 / 8.0, 1.0 / 3.0, 1.0 / 2.0],
        [1.0 / 6.0, 1.0 / 2.0, 1.0],
    ];
    let mut m = Matrix6::zeros();
    for axis in 0..2 {
        let idx = [axis, axis + 2, axis + 4];
        for (i, &r) in idx.iter().enumerate() {
            for (j, &c) in idx.iter().enumerate() {
                m[(r, c)] = q * block[i][j];
            }
        }
    }
    m
}

fn observation() -> Matrix2x6<f64> {
    let mut h = Matrix2x6::zeros();
    h[(0, 0)] = 1.0;
    h[(1, 1)] = 1.0;
    h
}

/// Starts a state at the centroid with zero velocity and acceleration.
pub fn kf_init(m: &Measurement, params: &MotionParams) -> Result<MotionState> {
    if m.is_dummy() {
        return Err(Error::DummyMeasurement);
    }
    let mut covariance = Matrix6::zeros();
    for i in 0..2 {
        covariance[(i, i)] = params.p0_position;
    }
    for i in 2..6 {
        covariance[(i, i)] = params.p0_rate;
    }
    Ok(MotionState {
        state: Vector6::new(m.x, m.y, 0.0, 0.0, 0.0, 0.0),
        covariance,
        s_mv: 0.0,
        n_c: 1,
        n_s: 1,
        ic: 1,
        velocity_known: false,
        frames_since_detection: 0,
    })
}

pub fn kf_predict(s: &MotionState, params: &MotionParams) -> Prediction {
    let f = transition();
    let state = f * s.state;
    let covariance = f * s.covariance * f.transpose() + process_noise(params.q);
    let h = observation();
    let r = Matrix2::identity() * params.r;
    let innovation_cov = h * covariance * h.transpose() + r;
    let p = &s.covariance;
    let mut velocity_cov = r;
    for i in 0..2 {
        for j in 0..2 {
            velocity_cov[(i, j)] += p[(i, j)] + p[(i + 2, j + 2)] + p[(i, j + 2)] + p[(i + 2, j)];
        }
    }
    Prediction {
        state,
        covariance,
        innovation_cov,
        velocity_cov,
    }
}

fn inverse_regularized(cov: &Matrix2<f64>) -> Matrix2<f64> {
    cov.try_inverse()
        .filter(|_| cov.determinant().abs() > 1e-300)
        .unwrap_or_else(|| {
            (cov + Matrix2::identity() * REGULARIZATION)
                .try_inverse()
                .unwrap_or_else(|| Matrix2::identity() / REGULARIZATION)
        })
}

/// Mahalanobis length of `diff` under `cov`.
pub fn mahalanobis(diff: Vector2<f64>, cov: &Matrix2<f64>) -> f64 {
    let inv = inverse_regularized(cov);
    libm::sqrt((diff.transpose() * inv * diff)[(0, 0)].max(0.0))
}

/// Frames spanned by the implied velocity. Once the velocity is known the
/// state is propagated through misses, so one step always suffices; before
/// that the position is still the spawn point.
fn implied_steps(s: &MotionState) -> f64 {
    if s.velocity_known {
        1.0
    } else {
        (s.frames_since_detection + 1) as f64
    }
}

/// ΔV: distance between the velocity implied by `m` (centroid minus the
/// last filtered position) and the track velocity.
pub fn velocity_deviation(m: &Measurement, s: &MotionState, pred: &Prediction) -> f64 {
    let implied = (Vector2::new(m.x, m.y) - s.position()) / implied_steps(s);
    mahalanobis(implied - s.velocity(), &pred.velocity_cov)
}

/// Centre and radius of a disc guaranteed to contain every centroid whose
/// deviation from `s` is below `limit`.
pub fn gate_disc(s: &MotionState, pred: &Prediction, limit: f64) -> (Vector2<f64>, f64) {
    let steps = implied_steps(s);
    let c = &pred.velocity_cov;
    let half_trace = 0.5 * (c[(0, 0)] + c[(1, 1)]);
    let half_diff = 0.5 * (c[(0, 0)] - c[(1, 1)]);
    let lambda_max = half_trace + libm::sqrt(half_diff * half_diff + c[(0, 1)] * c[(1, 0)]);
    let centre = s.position() + s.velocity() * steps;
    (
        centre,
        limit.max(0.0) * libm::sqrt(lambda_max.max(0.0)) * steps,
    )
}

/// Log of the Gaussian density of `m` under the predicted position.
pub fn innovation_log_density(m: &Measurement, pred: &Prediction) -> f64 {
    let d = Vector2::new(m.x, m.y) - pred.position();
    let cov = &pred.innovation_cov;
    let det = cov.determinant().max(1e-300);
    let md2 = (d.transpose() * inverse_regularized(cov) * d)[(0, 0)];
    -libm::log(2.0 * PI) - 0.5 * libm::log(det) - 0.5 * md2
}

/// Joseph-form measurement update.
pub fn kf_update(
    pred: &Prediction,
    m: &Measurement,
    params: &MotionParams,
) -> (Vector6<f64>, Matrix6<f64>) {
    let h = observation();
    let r = Matrix2::identity() * params.r;
    let s_inv = inverse_regularized(&pred.innovation_cov);
    let k = pred.covariance * h.transpose() * s_inv;
    let innovation = Vector2::new(m.x, m.y) - h * pred.state;
    let state = pred.state + k * innovation;
    let ikh = Matrix6::identity() - k * h;
    let cov = ikh * pred.covariance * ikh.transpose() + k * r * k.transpose();
    (state, 0.5 * (cov + cov.transpose()))
}

/// Velocity from the displacement between the previous detection and `m`;
/// acceleration reset to zero.
pub fn two_point_init(
    prev: &MotionState,
    m: &Measurement,
    params: &MotionParams,
) -> (Vector6<f64>, Matrix6<f64>) {
    let steps = (prev.frames_since_detection + 1) as f64;
    let vx = (m.x - prev.state[0]) / steps;
    let vy = (m.y - prev.state[1]) / steps;
    let state = Vector6::new(m.x, m.y, vx, vy, 0.0, 0.0);
    let mut cov = Matrix6::zeros();
    for axis in 0..2 {
        let (p, v, a) = (axis, axis + 2, axis + 4);
        cov[(p, p)] = params.r;
        cov[(p, v)] = params.r / steps;
        cov[(v, p)] = params.r / steps;
        cov[(v, v)] = (params.r + prev.covariance[(p, p)]) / (steps * steps);
        cov[(a, a)] = params.p0_rate;
    }
    (state, cov)
}

/// `(S_prev · (N_C − 1) + ΔV) / (N_C + 1)`.
pub fn update_moving_variability(s_prev: f64, n_c: usize, dv: f64) -> f64 {
    let n = n_c as f64;
    (s_prev * (n - 1.0) + dv) / (n + 1.0)
}

/// Weight of the deviation `lag` frames back in the unrolled closed form,
/// `2/(N_C+1) · ((N_C−1)/(N_C+1))^lag`. It is twice the weight the recursion
/// in [`update_moving_variability`] actually applies; the recursion is the
/// one used for tracking.
pub fn closed_form_weights(n_c: usize, lag: u32) -> f64 {
    let n = n_c as f64;
    2.0 / (n + 1.0) * libm::pow((n - 1.0) / (n + 1.0), lag as f64)
}

/// Threshold of the score test: descending while the track is young,
/// constant afterwards.
pub fn multistage_threshold(n_s: usize, p: &GateParams) -> f64 {
    let room = p.alpha - n_s as f64;
    if room > p.gamma {
        room * p.beta
    } else {
        p.delta
    }
}

/// `|ΔV − S_MV| < th(N_s)`.
pub fn gate(dv: f64, s_mv: f64, n_s: usize, p: &GateParams) -> bool {
    (dv - s_mv).abs() < multistage_threshold(n_s, p)
}
