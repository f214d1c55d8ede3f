//! Core algorithms for tracking small, dense, rotated text boxes in video.
//!
//! The crate is `no_std` (with `alloc`) and fully deterministic: identical
//! inputs produce bit-identical outputs on every platform. All transcendental
//! math goes through [`libm`] rather than the platform libm for that reason.
//!
//! Modules mirror the processing pipeline:
//!
//! * [`geometry`] - rotated boxes, quads, convex clipping, rotated IoU, NMS
//! * [`filter`] - constant-velocity Kalman filter over box state
//! * [`assignment`] - Hungarian solver and IoU-based association
//! * [`tracker`] - track lifecycle management (the SORT loop)
//! * [`metrics`] - CLEAR-MOT / IDF1 evaluation and synthetic scenarios
//! * [`rng`] - the seeded PRNG used by generators and tests

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod assignment;
pub mod filter;
pub mod geometry;
pub mod metrics;
pub mod rng;
pub mod tracker;
