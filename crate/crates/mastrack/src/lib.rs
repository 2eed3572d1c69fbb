//! File formats, synthetic scenes, reference oracles and the end-to-end
//! pipeline around `mastrack-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conf;
pub mod csvio;
pub mod error;
pub mod frames;
pub mod oracle;
pub mod overlay;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};
