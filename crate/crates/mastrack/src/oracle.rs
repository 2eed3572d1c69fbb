//! Exhaustive reference solutions and random instance generators used to
//! cross-check the selection solver and the branch adjustment.

use mastrack_core::config::SelectionParams;
use mastrack_core::segmentation::AppearanceForest;
use mastrack_core::selection::{build_program, Candidate, SelectionProgram};
use mastrack_core::{MeasurementRef, SelectionMode};
use rand::Rng;

pub const MAX_SELECT_VARS: usize = 20;
pub const MAX_TREE_NODES: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSelection {
    /// `None` when no assignment satisfies the constraints.
    pub objective: Option<f64>,
    pub chosen: Vec<bool>,
}

/// Enumerates every assignment. `forced` variables are pinned on, which is
/// the only way a program can become infeasible.
pub fn brute_force_select(prog: &SelectionProgram, forced: &[usize]) -> OracleSelection {
    let n = prog.len();
    assert!(
        n <= MAX_SELECT_VARS,
        "{n} variables is too many to enumerate"
    );
    let pinned: u32 = forced.iter().fold(0, |m, &i| m | 1 << i);
    let mut best = OracleSelection {
        objective: None,
        chosen: vec![false; n],
    };
    for mask in 0u32..(1 << n) {
        if mask & pinned != pinned {
            continue;
        }
        let on: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
        if let Some(v) = prog.objective(&on) {
            if best.objective.is_none_or(|b| v < b) {
                best = OracleSelection {
                    objective: Some(v),
                    chosen: on,
                };
            }
        }
    }
    best
}

/// Minimum summed appearance score over node sets holding exactly one node of
/// every root-to-leaf path of the tree at `root`; returns it with the nodes.
pub fn brute_force_branch_adjust(forest: &AppearanceForest, root: usize) -> (f64, Vec<usize>) {
    let nodes = forest.subtree(root);
    assert!(
        nodes.len() <= MAX_TREE_NODES,
        "{} nodes is too many to enumerate",
        nodes.len()
    );
    let slot = |n: usize| nodes.iter().position(|&m| m == n).expect("node in subtree");
    let paths: Vec<u32> = nodes
        .iter()
        .filter(|&&n| forest.nodes[n].is_leaf())
        .map(|&leaf| {
            let mut bits = 1 << slot(leaf);
            let mut c = leaf;
            while let Some(p) = forest.nodes[c].parent.filter(|_| c != root) {
                bits |= 1 << slot(p);
                c = p;
            }
            bits
        })
        .collect();
    let mut best = (f64::INFINITY, Vec::new());
    for mask in 0u32..(1 << nodes.len()) {
        if paths.iter().all(|p| (p & mask).count_ones() == 1) {
            let picked: Vec<usize> = (0..nodes.len())
                .filter(|k| mask >> k & 1 == 1)
                .map(|k| nodes[k])
                .collect();
            let s: f64 = picked
                .iter()
                .map(|&n| forest.nodes[n].score.appearance)
                .sum();
            if s < best.0 {
                best = (s, picked);
            }
        }
    }
    best.1.sort_unstable();
    best
}

/// Random candidates drawing detections from a small pool so that sharing is
/// common; hypotheses come from a handful of trees.
pub fn random_candidates<R: Rng>(rng: &mut R, n: usize) -> Vec<Candidate> {
    let frames = rng.random_range(6..=20u32);
    let per_frame = rng.random_range(1..=3u32);
    let trees = rng.random_range(n.div_ceil(2)..=n) as u64;
    (0..n)
        .map(|k| {
            let start = rng.random_range(1..=frames);
            let end = rng.random_range(start..=frames);
            let mut detections = Vec::new();
            for frame in start..=end {
                if rng.random_bool(0.85) {
                    detections.push(MeasurementRef {
                        frame,
                        index: rng.random_range(1..=per_frame),
                    });
                }
            }
            Candidate {
                tree_id: rng.random_range(0..trees),
                hypothesis_id: k as u64,
                n_s: detections.len().max(1),
                l_t: rng.random_range(0.0..8.0),
                detections,
            }
        })
        .collect()
}

pub fn random_program<R: Rng>(
    rng: &mut R,
    n: usize,
    p: &SelectionParams,
    mode: SelectionMode,
) -> SelectionProgram {
    build_program(&random_candidates(rng, n), p, mode)
}

/// Random tree of `n` nodes with node 0 as root and integer-valued scores
/// (integers keep sums exact so ties are real ties).
pub fn random_forest<R: Rng>(rng: &mut R, n: usize) -> AppearanceForest {
    let parents: Vec<Option<usize>> = (0..n)
        .map(|i| (i > 0).then(|| rng.random_range(0..i)))
        .collect();
    let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0..20) as f64).collect();
    AppearanceForest::from_parents(&parents, &scores)
}
