//! Detection and tracking of dense, dim small objects in grayscale image
//! sequences.
//!
//! The crate is `no_std` (it needs `alloc`) and holds every algorithm of the
//! toolkit: multi-threshold appearance segmentation, the constant-acceleration
//! motion model and gating test, hypothesis-forest management, the 0-1
//! selection program with its exact solver, and the evaluation metrics.
//! File formats, image decoding and the command line live in the `mastrack`
//! companion crate.
//!
//! Conventions used throughout: frames are numbered from 1, measurement index
//! 0 in every frame is the dummy (missed detection), coordinates are
//! `(x = column, y = row)` with the origin at the top-left pixel, and all
//! logarithms are natural.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod config;
pub mod error;
pub mod image;
pub mod metrics;
pub mod mmht;
pub mod motion;
pub mod segmentation;
pub mod selection;
pub mod tracker;
pub mod types;

pub use config::{PipelineConfig, SelectionMode};
pub use error::{Error, Result};
pub use image::GrayImage;
pub use tracker::{track_all, Tracker, TrackingOutput};
pub use types::{FrameMeasurements, FrameSet, Measurement, MeasurementRef, Trajectory};
