//! Depth-first branch adjustment and candidate extraction.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use super::forest::AppearanceForest;
use crate::types::{FrameMeasurements, Measurement};

/// Marks candidate nodes under `root` and returns the minimum achievable sum
/// of appearance scores over a selection that takes exactly one node on
/// every root-to-leaf path.
///
/// Leaves are always candidates. An inner node becomes a candidate when its
/// own score is no worse than the best its children can do together.
pub fn adjust_branches(forest: &mut AppearanceForest, root: usize) -> f64 {
    let children = forest.nodes[root].children.clone();
    let own = forest.nodes[root].score.appearance;
    if children.is_empty() {
        forest.nodes[root].is_candidate = true;
        return own;
    }
    let child_sum: f64 = children
        .into_iter()
        .map(|c| adjust_branches(forest, c))
        .sum();
    if child_sum < own {
        forest.nodes[root].is_candidate = false;
        child_sum
    } else {
        forest.nodes[root].is_candidate = true;
        own
    }
}

/// Runs [`adjust_branches`] on every tree of the forest.
pub fn adjust_forest(forest: &mut AppearanceForest) {
    for i in 0..forest.roots.len() {
        let r = forest.roots[i];
        adjust_branches(forest, r);
    }
}

/// Breadth-first from each root, the first candidate met on each path.
pub fn selected_nodes(forest: &AppearanceForest) -> Vec<usize> {
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for &root in &forest.roots {
        queue.push_back(root);
        while let Some(n) = queue.pop_front() {
            let node = &forest.nodes[n];
            if node.is_candidate {
                out.push(n);
            } else {
                queue.extend(node.children.iter().copied());
            }
        }
    }
    out
}

/// One measurement per selected node, plus the frame's dummy.
pub fn extract_detections(forest: &AppearanceForest, frame: u32) -> FrameMeasurements {
    let dets = selected_nodes(forest).into_iter().map(|n| {
        let node = &forest.nodes[n];
        Measurement {
            frame,
            index: 0,
            x: node.centroid.0,
            y: node.centroid.1,
            area: node.area() as u32,
            mean_intensity: node.mean_value,
            source_layer: Some(node.layer),
        }
    });
    FrameMeasurements::from_detections(frame, dets)
}
