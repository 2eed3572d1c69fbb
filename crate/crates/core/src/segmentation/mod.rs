//! Multi-appearance segmentation.
//!
//! The image is mapped to local contrast, binarized at a stack of thresholds
//! centred on a global threshold, and the components of all layers are
//! linked into containment trees. Each tree is then reduced to one threshold
//! per object by the branch adjustment, which minimises the summed
//! appearance score.

mod adjust;
mod components;
mod contrast;
mod forest;
mod score;
mod tophat;

pub use adjust::{adjust_branches, adjust_forest, extract_detections, selected_nodes};
pub use contrast::{contrast_transform, global_threshold, ContrastMap, MIN_SURROUND_MEAN};
pub use forest::{
    appearance_score, build_appearance_forest, layer_thresholds, score_forest, AppearanceForest,
    AppearanceNode,
};
pub use score::{count_bubbles, score_pixels, AppearanceScore};
pub use tophat::{tophat_detect, white_tophat};

use crate::config::SegParams;
use crate::error::Result;
use crate::image::GrayImage;
use crate::types::FrameMeasurements;

/// Full detector: contrast map, forest, scores, adjustment, extraction.
pub fn detect(image: &GrayImage, params: &SegParams, frame: u32) -> Result<FrameMeasurements> {
    let map = contrast_transform(image, params.outer_window, params.inner_window)?;
    let mut forest = build_appearance_forest(&map, params);
    score_forest(&mut forest, &map);
    adjust_forest(&mut forest);
    Ok(extract_detections(&forest, frame))
}
