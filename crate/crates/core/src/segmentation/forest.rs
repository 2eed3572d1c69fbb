//! The multi-appearance forest: connected components at several threshold
//! layers linked by containment.

use alloc::vec::Vec;

use super::components::Labeler;
use super::contrast::{global_threshold, ContrastMap};
use super::score::{score_pixels, AppearanceScore};
use crate::config::{SegParams, AUTO_INTERVAL_FRACTION};

#[derive(Debug, Clone, PartialEq)]
pub struct AppearanceNode {
    /// Threshold layer, 0 being the lowest threshold.
    pub layer: u8,
    /// Linear pixel indices in raster order.
    pub pixels: Vec<u32>,
    /// Contrast-weighted centroid `(x, y)`.
    pub centroid: (f64, f64),
    /// Mean contrast value over the pixels.
    pub mean_value: f64,
    pub score: AppearanceScore,
    pub parent: Option<usize>,
    /// Components of the next layer contained in this one.
    pub children: Vec<usize>,
    pub is_candidate: bool,
}

impl AppearanceNode {
    pub fn area(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AppearanceForest {
    pub nodes: Vec<AppearanceNode>,
    pub roots: Vec<usize>,
    pub layer_thresholds: Vec<f64>,
}

impl AppearanceForest {
    /// Builds a pixel-less forest from a parent table and appearance scores,
    /// for exercising the branch adjustment on arbitrary shapes.
    pub fn from_parents(parents: &[Option<usize>], scores: &[f64]) -> Self {
        assert_eq!(parents.len(), scores.len());
        let mut nodes: Vec<AppearanceNode> = scores
            .iter()
            .zip(parents)
            .map(|(&s, &parent)| AppearanceNode {
                layer: 0,
                pixels: Vec::new(),
                centroid: (0.0, 0.0),
                mean_value: 0.0,
                score: AppearanceScore {
                    appearance: s,
                    bubble: 1.0,
                    ..Default::default()
                },
                parent,
                children: Vec::new(),
                is_candidate: false,
            })
            .collect();
        let mut roots = Vec::new();
        for (i, p) in parents.iter().enumerate() {
            match p {
                Some(p) => {
                    assert!(*p < i, "parents must precede children");
                    nodes[*p].children.push(i);
                    nodes[i].layer = nodes[*p].layer + 1;
                }
                None => roots.push(i),
            }
        }
        AppearanceForest {
            nodes,
            roots,
            layer_thresholds: Vec::new(),
        }
    }

    /// Node ids of the subtree under `root`, root first.
    pub fn subtree(&self, root: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = alloc::vec![root];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.nodes[n].children.iter().rev());
        }
        out
    }
}

/// Layer thresholds, ascending, centred on the global threshold.
pub fn layer_thresholds(map: &ContrastMap, params: &SegParams) -> Vec<f64> {
    let center = global_threshold(map, params.k);
    let step = params
        .layer_interval
        .unwrap_or(AUTO_INTERVAL_FRACTION * map.std());
    let mid = (params.n_layers / 2) as f64;
    (0..params.n_layers)
        .map(|k| center + (k as f64 - mid) * step)
        .collect()
}

/// Labels every layer and links each component to the one containing it at
/// the layer below. Lowest-layer components outside the area bounds are
/// dropped together with their subtrees; higher-layer components smaller
/// than `min_area` are noise fragments and are dropped as well. Scores are left at zero; see
/// [`score_forest`].
pub fn build_appearance_forest(map: &ContrastMap, params: &SegParams) -> AppearanceForest {
    let thresholds = layer_thresholds(map, params);
    let mut forest = AppearanceForest {
        nodes: Vec::new(),
        roots: Vec::new(),
        layer_thresholds: thresholds.clone(),
    };
    let Some(&lowest) = thresholds.first() else {
        return forest;
    };
    let base: Vec<u32> = map
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > lowest)
        .map(|(i, _)| i as u32)
        .collect();
    let mut labeler = Labeler::new(map.width(), map.height());
    for comp in labeler.components(&base) {
        if comp.len() < params.min_area || comp.len() > params.max_area {
            continue;
        }
        let root = push_node(&mut forest, map, comp, 0, None);
        forest.roots.push(root);
        grow_children(&mut forest, map, &mut labeler, root, params.min_area);
    }
    forest
}

fn grow_children(
    forest: &mut AppearanceForest,
    map: &ContrastMap,
    labeler: &mut Labeler,
    node: usize,
    min_area: usize,
) {
    let layer = forest.nodes[node].layer as usize + 1;
    let Some(&t) = forest.layer_thresholds.get(layer) else {
        return;
    };
    let above: Vec<u32> = forest.nodes[node]
        .pixels
        .iter()
        .copied()
        .filter(|&p| map.at_index(p as usize) > t)
        .collect();
    if above.is_empty() {
        return;
    }
    for comp in labeler.components(&above) {
        if comp.len() < min_area {
            continue;
        }
        let child = push_node(forest, map, comp, layer as u8, Some(node));
        forest.nodes[node].children.push(child);
        grow_children(forest, map, labeler, child, min_area);
    }
}

fn push_node(
    forest: &mut AppearanceForest,
    map: &ContrastMap,
    pixels: Vec<u32>,
    layer: u8,
    parent: Option<usize>,
) -> usize {
    let w = map.width();
    let (mut sw, mut sx, mut sy) = (0.0, 0.0, 0.0);
    let (mut ux, mut uy) = (0.0, 0.0);
    for &p in &pixels {
        let p = p as usize;
        let v = map.at_index(p);
        let (x, y) = ((p % w) as f64, (p / w) as f64);
        sw += v;
        sx += v * x;
        sy += v * y;
        ux += x;
        uy += y;
    }
    let n = pixels.len() as f64;
    let centroid = if sw > 0.0 {
        (sx / sw, sy / sw)
    } else {
        (ux / n, uy / n)
    };
    forest.nodes.push(AppearanceNode {
        layer,
        pixels,
        centroid,
        mean_value: sw / n,
        score: AppearanceScore::default(),
        parent,
        children: Vec::new(),
        is_candidate: false,
    });
    forest.nodes.len() - 1
}

/// Computes the appearance score of every node.
pub fn score_forest(forest: &mut AppearanceForest, map: &ContrastMap) {
    for node in &mut forest.nodes {
        node.score = score_pixels(&node.pixels, map);
    }
}

/// Scores a single node against the map it was built from.
pub fn appearance_score(node: &AppearanceNode, map: &ContrastMap) -> AppearanceScore {
    score_pixels(&node.pixels, map)
}
