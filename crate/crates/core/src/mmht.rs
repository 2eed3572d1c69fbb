//! Track-oriented hypothesis forest: gated growth, births, deletions,
//! merging, scoring, ranking and depth control.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::config::{LoopMergeKeep, PipelineConfig, ScoreParams};
use crate::motion::{
    gate, gate_disc, innovation_log_density, kf_init, kf_predict, kf_update, multistage_threshold,
    two_point_init, update_moving_variability, velocity_deviation, MotionState, Prediction,
};
use crate::types::{FrameMeasurements, Measurement, MeasurementRef};

/// Floor applied to the deviation sum of the short-term score.
pub const STM_EPSILON: f64 = 1e-3;
/// Consecutive misses after which a hypothesis is deleted.
pub const MISS_LIMIT: u32 = 3;
/// Deletion threshold sits this far below the initial track score.
pub const DELETION_MARGIN: f64 = 2.0;
/// Terminated hypotheses kept per tree for ranking.
pub const TERMINATED_KEEP: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub id: u64,
    pub tree_id: u64,
    pub parent: Option<u64>,
    /// Frame at which this node was created.
    pub created: u32,
    /// One entry per frame, dummies included. Entries older than the
    /// consideration window may have been trimmed.
    pub history: Vec<MeasurementRef>,
    pub motion: MotionState,
    pub s_ltm: f64,
    pub s_stm: f64,
    pub s: f64,
    /// Sum of `|ΔV − S_MV|` over real associations.
    pub d_sum: f64,
    /// Sum of the gate thresholds over the same associations.
    pub t_sum: f64,
    /// Trailing dummies.
    pub misses: u32,
    pub terminated: bool,
}

impl Hypothesis {
    pub fn first_frame(&self) -> u32 {
        self.history[0].frame
    }

    pub fn last(&self) -> MeasurementRef {
        *self.history.last().expect("history is never empty")
    }

    pub fn last_frame(&self) -> u32 {
        self.last().frame
    }

    pub fn at(&self, frame: u32) -> Option<MeasurementRef> {
        frame
            .checked_sub(self.first_frame())
            .and_then(|i| self.history.get(i as usize).copied())
    }

    /// Sustaining frames, N_s.
    pub fn n_s(&self) -> usize {
        self.motion.n_s
    }

    /// Real measurements of the history with frame ≥ `from`.
    pub fn detections_from(&self, from: u32) -> impl Iterator<Item = MeasurementRef> + '_ {
        self.history
            .iter()
            .copied()
            .filter(move |r| !r.is_dummy() && r.frame >= from)
    }
}

/// Ordering used for ranking: higher score first, then earlier creation,
/// then lower id.
pub fn rank_order(a: &Hypothesis, b: &Hypothesis) -> Ordering {
    b.s.total_cmp(&a.s)
        .then(a.created.cmp(&b.created))
        .then(a.id.cmp(&b.id))
}

/// Shared real measurements of `a` and `b` at frames ≥ `from`.
pub fn shared_measurements(a: &Hypothesis, b: &Hypothesis, from: u32) -> usize {
    let lo = from.max(a.first_frame()).max(b.first_frame());
    let hi = a.last_frame().min(b.last_frame());
    (lo..=hi)
        .filter(|&f| match (a.at(f), b.at(f)) {
            (Some(x), Some(y)) => !x.is_dummy() && x == y,
            _ => false,
        })
        .count()
}

/// Log-likelihood-ratio increment of one association.
pub fn ltm_increment(m: &Measurement, pred: &Prediction, p: &ScoreParams) -> f64 {
    if m.is_dummy() {
        libm::log(1.0 - p.p_d)
    } else {
        innovation_log_density(m, pred) + libm::log(p.p_d / (p.lambda_fa + p.lambda_nt))
    }
}

/// `IC · ln((T − D)/D)` with the deviation sum floored at [`STM_EPSILON`].
pub fn stm_score(ic: usize, d_sum: f64, t_sum: f64) -> f64 {
    let d = d_sum.max(STM_EPSILON);
    let ic = ic as f64;
    if t_sum <= d {
        ic * libm::log(STM_EPSILON)
    } else {
        ic * libm::log((t_sum - d) / d)
    }
}

pub fn total_score(s_ltm: f64, s_stm: f64, p: &ScoreParams) -> f64 {
    p.w_ltm * s_ltm + p.w_stm * s_stm
}

/// Score given to a newly spawned track.
pub fn initial_ltm(p: &ScoreParams) -> f64 {
    libm::log(p.lambda_nt / p.lambda_fa)
}

pub fn deletion_threshold(p: &ScoreParams) -> f64 {
    initial_ltm(p) - DELETION_MARGIN
}

/// True when the hypothesis should be deleted.
pub fn sqrt_termination(h: &Hypothesis, p: &ScoreParams) -> bool {
    h.s_ltm < deletion_threshold(p) || h.misses >= MISS_LIMIT
}

/// Root hypothesis of a new tree.
pub fn spawn_hypothesis(
    m: &Measurement,
    id: u64,
    tree_id: u64,
    cfg: &PipelineConfig,
) -> Hypothesis {
    let motion = kf_init(m, &cfg.motion).expect("spawned from a real measurement");
    let s_ltm = initial_ltm(&cfg.score);
    let s_stm = stm_score(motion.ic, 0.0, 0.0);
    Hypothesis {
        id,
        tree_id,
        parent: None,
        created: m.frame,
        history: vec![m.reference()],
        motion,
        s_ltm,
        s_stm,
        s: total_score(s_ltm, s_stm, &cfg.score),
        d_sum: 0.0,
        t_sum: 0.0,
        misses: 0,
        terminated: false,
    }
}

/// Child of `parent` associated with `m` (real or dummy). `dv` is the
/// velocity deviation of a real `m`, ignored for the dummy.
pub fn extend(
    parent: &Hypothesis,
    m: &Measurement,
    pred: &Prediction,
    dv: f64,
    id: u64,
    cfg: &PipelineConfig,
) -> Hypothesis {
    let pm = &parent.motion;
    let mut motion = pm.clone();
    motion.n_s = pm.n_s + 1;
    motion.n_c = motion.n_s.min(cfg.tree_depth);
    let mut child = Hypothesis {
        id,
        tree_id: parent.tree_id,
        parent: Some(parent.id),
        created: m.frame,
        history: Vec::with_capacity(parent.history.len() + 1),
        motion: pm.clone(),
        s_ltm: parent.s_ltm + ltm_increment(m, pred, &cfg.score),
        s_stm: 0.0,
        s: 0.0,
        d_sum: parent.d_sum,
        t_sum: parent.t_sum,
        misses: 0,
        terminated: false,
    };
    child.history.extend_from_slice(&parent.history);
    child.history.push(m.reference());
    if m.is_dummy() {
        motion.state = pred.state;
        motion.covariance = pred.covariance;
        motion.ic = pm.ic.saturating_sub(1);
        motion.frames_since_detection = pm.frames_since_detection + 1;
        child.misses = parent.misses + 1;
    } else {
        let (x, p) = if pm.velocity_known {
            kf_update(pred, m, &cfg.motion)
        } else {
            two_point_init(pm, m, &cfg.motion)
        };
        motion.state = x;
        motion.covariance = p;
        motion.velocity_known = true;
        motion.frames_since_detection = 0;
        motion.s_mv = update_moving_variability(pm.s_mv, pm.n_c, dv);
        motion.ic = pm.ic + 1;
        child.d_sum += (dv - pm.s_mv).abs();
        child.t_sum += multistage_threshold(pm.n_s, &cfg.gate);
    }
    child.motion = motion;
    child.s_stm = stm_score(child.motion.ic, child.d_sum, child.t_sum);
    child.s = total_score(child.s_ltm, child.s_stm, &cfg.score);
    child
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisTree {
    pub id: u64,
    /// Current root measurement; advances when depth is enforced.
    pub root: MeasurementRef,
    pub spawn_frame: u32,
    pub leaves: Vec<Hypothesis>,
    /// Deleted leaves kept as selection candidates.
    pub terminated: Vec<Hypothesis>,
    /// Last frame whose point has been written to the output.
    pub committed_upto: u32,
}

impl HypothesisTree {
    /// Frames from the root to the deepest leaf, inclusive.
    pub fn depth(&self) -> usize {
        self.leaves
            .iter()
            .map(|h| (h.last_frame() - self.root.frame + 1) as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn best_leaf(&self) -> Option<&Hypothesis> {
        self.leaves.iter().min_by(|a, b| rank_order(a, b))
    }

    /// Live and terminated hypotheses, best first.
    pub fn score_rank(&self) -> Vec<&Hypothesis> {
        let mut all: Vec<&Hypothesis> = self.leaves.iter().chain(self.terminated.iter()).collect();
        all.sort_by(|a, b| rank_order(a, b));
        all
    }

    /// Best `ceil(fraction · count)` hypotheses, at least one.
    pub fn rank_and_select(&self, fraction: f64) -> Vec<&Hypothesis> {
        let mut ranked = self.score_rank();
        let n = ranked.len();
        let keep = (libm::ceil(fraction * n as f64) as usize).clamp(n.min(1), n);
        ranked.truncate(keep);
        ranked
    }

    /// Keeps one same-tree leaf per current real measurement.
    ///
    /// A branch that coasted through misses has a frozen S_MV, so branches
    /// are first ranked by effective emergences; S_MV decides between
    /// branches that linked the same number of detections.
    pub fn merge_loops(&mut self, frame: u32, keep: LoopMergeKeep) -> usize {
        let before = self.leaves.len();
        let mut order: Vec<usize> = (0..before).collect();
        let better = |a: &Hypothesis, b: &Hypothesis| -> Ordering {
            let by_mv = match keep {
                LoopMergeKeep::Low => a.motion.s_mv.total_cmp(&b.motion.s_mv),
                LoopMergeKeep::High => b.motion.s_mv.total_cmp(&a.motion.s_mv),
            };
            b.motion
                .ic
                .cmp(&a.motion.ic)
                .then(by_mv)
                .then_with(|| rank_order(a, b))
        };
        let leaves = &self.leaves;
        order.sort_by(|&i, &j| {
            let (a, b) = (&leaves[i], &leaves[j]);
            a.last()
                .index
                .cmp(&b.last().index)
                .then_with(|| better(a, b))
        });
        let mut remove = vec![false; before];
        let mut prev: Option<MeasurementRef> = None;
        for &i in &order {
            let r = leaves[i].last();
            if r.frame == frame && !r.is_dummy() && prev == Some(r) {
                remove[i] = true;
            }
            prev = Some(r);
        }
        let mut k = 0;
        self.leaves.retain(|_| {
            k += 1;
            !remove[k - 1]
        });
        before - self.leaves.len()
    }

    /// Moves leaves that fail the deletion test to the terminated list.
    pub fn terminate(&mut self, p: &ScoreParams) -> usize {
        let (dead, live): (Vec<_>, Vec<_>) = core::mem::take(&mut self.leaves)
            .into_iter()
            .partition(|h| sqrt_termination(h, p));
        self.leaves = live;
        let n = dead.len();
        for mut h in dead {
            h.terminated = true;
            self.terminated.push(h);
        }
        if self.terminated.len() > TERMINATED_KEEP {
            self.terminated.sort_by(rank_order);
            self.terminated.truncate(TERMINATED_KEEP);
        }
        n
    }

    /// Advances the root along the best leaf until the tree fits in `depth`
    /// frames, dropping hypotheses that disagree with the new root.
    pub fn enforce_depth(&mut self, depth: usize) -> usize {
        let mut shifts = 0;
        while self.depth() > depth {
            let next = self.root.frame + 1;
            let Some(new_root) = self.best_leaf().and_then(|h| h.at(next)) else {
                break;
            };
            self.leaves.retain(|h| h.at(next) == Some(new_root));
            self.terminated.retain(|h| h.at(next) == Some(new_root));
            self.root = new_root;
            shifts += 1;
        }
        shifts
    }

    /// Drops history entries before `frame`, never past the root.
    pub fn trim_history(&mut self, frame: u32) {
        let keep_from = frame.min(self.root.frame);
        for h in self.leaves.iter_mut().chain(self.terminated.iter_mut()) {
            let first = h.first_frame();
            if keep_from > first {
                let cut = ((keep_from - first) as usize).min(h.history.len() - 1);
                h.history.drain(..cut);
            }
        }
    }
}

/// Counts of one forest step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub frame: u32,
    pub grown: usize,
    pub spawned: usize,
    pub loop_merged: usize,
    pub strong_merged: usize,
    pub terminated: usize,
    pub depth_dropped: usize,
    pub capped: usize,
    pub leaves: usize,
}

/// Per-tree line of the forest dump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeSummary {
    pub tree_id: u64,
    pub leaves: usize,
    pub best_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct HypothesisForest {
    pub trees: Vec<HypothesisTree>,
    next_tree_id: u64,
    next_hyp_id: u64,
}

/// Uniform bucket grid over the detections of one frame.
struct Grid {
    x0: f64,
    y0: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl Grid {
    const CELL: f64 = 32.0;

    fn new(dets: &[Measurement]) -> Grid {
        let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for m in dets {
            x0 = x0.min(m.x);
            y0 = y0.min(m.y);
            x1 = x1.max(m.x);
            y1 = y1.max(m.y);
        }
        if dets.is_empty() {
            (x0, y0, x1, y1) = (0.0, 0.0, 0.0, 0.0);
        }
        let nx = ((x1 - x0) / Self::CELL) as usize + 1;
        let ny = ((y1 - y0) / Self::CELL) as usize + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        for m in dets {
            let cx = ((m.x - x0) / Self::CELL) as usize;
            let cy = ((m.y - y0) / Self::CELL) as usize;
            buckets[cy * nx + cx].push(m.index);
        }
        Grid {
            x0,
            y0,
            cell: Self::CELL,
            nx,
            ny,
            buckets,
        }
    }

    /// Indices of detections inside the disc, in ascending order.
    fn query(&self, dets: &[Measurement], cx: f64, cy: f64, r: f64, out: &mut Vec<u32>) {
        out.clear();
        if !(r.is_finite() && cx.is_finite() && cy.is_finite()) {
            out.extend(dets.iter().map(|m| m.index));
            return;
        }
        let span = |c: f64, o: f64, n: usize| -> (usize, usize) {
            let lo = libm::floor((c - r - o) / self.cell);
            let hi = libm::floor((c + r - o) / self.cell);
            let clamp = |v: f64| v.max(0.0).min((n - 1) as f64) as usize;
            (clamp(lo), clamp(hi))
        };
        if cx + r < self.x0 || cy + r < self.y0 {
            return;
        }
        let (xa, xb) = span(cx, self.x0, self.nx);
        let (ya, yb) = span(cy, self.y0, self.ny);
        let r2 = r * r;
        for gy in ya..=yb {
            for gx in xa..=xb {
                for &i in &self.buckets[gy * self.nx + gx] {
                    let m = &dets[i as usize - 1];
                    let (dx, dy) = (m.x - cx, m.y - cy);
                    if dx * dx + dy * dy <= r2 {
                        out.push(i);
                    }
                }
            }
        }
        out.sort_unstable();
    }
}

impl HypothesisForest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn leaf_count(&self) -> usize {
        self.trees.iter().map(|t| t.leaves.len()).sum()
    }

    pub fn tree(&self, id: u64) -> Option<&HypothesisTree> {
        self.trees.iter().find(|t| t.id == id)
    }

    fn next_id(&mut self) -> u64 {
        self.next_hyp_id += 1;
        self.next_hyp_id
    }

    /// Extends every live leaf with each gated detection and a dummy.
    /// Returns, per measurement index, whether some leaf gated it.
    pub fn grow(&mut self, frame: &FrameMeasurements, cfg: &PipelineConfig) -> Vec<bool> {
        let dets = frame.detections();
        let dummy = frame.all()[0];
        let grid = Grid::new(dets);
        let mut claimed = vec![false; dets.len() + 1];
        let mut near = Vec::new();
        let mut next_id = self.next_hyp_id;
        for tree in &mut self.trees {
            let mut grown = Vec::with_capacity(tree.leaves.len() * 2);
            for leaf in &tree.leaves {
                let pred = kf_predict(&leaf.motion, &cfg.motion);
                let th = multistage_threshold(leaf.n_s(), &cfg.gate);
                let (c, r) = gate_disc(&leaf.motion, &pred, leaf.motion.s_mv + th);
                grid.query(dets, c[0], c[1], r * (1.0 + 1e-9) + 1e-9, &mut near);
                for &i in &near {
                    let m = &dets[i as usize - 1];
                    let dv = velocity_deviation(m, &leaf.motion, &pred);
                    if gate(dv, leaf.motion.s_mv, leaf.n_s(), &cfg.gate) {
                        claimed[i as usize] = true;
                        next_id += 1;
                        grown.push(extend(leaf, m, &pred, dv, next_id, cfg));
                    }
                }
                next_id += 1;
                grown.push(extend(leaf, &dummy, &pred, 0.0, next_id, cfg));
            }
            tree.leaves = grown;
        }
        self.next_hyp_id = next_id;
        claimed
    }

    /// Starts a tree for every detection no leaf gated.
    pub fn spawn(
        &mut self,
        frame: &FrameMeasurements,
        claimed: &[bool],
        cfg: &PipelineConfig,
    ) -> usize {
        let mut n = 0;
        for m in frame.detections() {
            if claimed.get(m.index as usize).copied().unwrap_or(false) {
                continue;
            }
            self.next_tree_id += 1;
            let tree_id = self.next_tree_id;
            let id = self.next_id();
            let root = spawn_hypothesis(m, id, tree_id, cfg);
            self.trees.push(HypothesisTree {
                id: tree_id,
                root: m.reference(),
                spawn_frame: m.frame,
                leaves: vec![root],
                terminated: Vec::new(),
                committed_upto: m.frame - 1,
            });
            n += 1;
        }
        n
    }

    /// For each current measurement, compares the best-scoring leaf with the
    /// leaf of most effective emergences and removes the weaker one when
    /// they share more than `tree_depth` detections in the window.
    pub fn merge_strong(&mut self, frame: u32, cfg: &PipelineConfig) -> usize {
        let from = frame.saturating_sub(cfg.window_length) + 1;
        let mut by_meas: Vec<(u32, usize, usize)> = Vec::new();
        for (ti, t) in self.trees.iter().enumerate() {
            for (li, h) in t.leaves.iter().enumerate() {
                let r = h.last();
                if r.frame == frame && !r.is_dummy() {
                    by_meas.push((r.index, ti, li));
                }
            }
        }
        by_meas.sort_unstable();
        let mut removed: Vec<(usize, usize)> = Vec::new();
        let mut start = 0;
        while start < by_meas.len() {
            let idx = by_meas[start].0;
            let mut end = start;
            while end < by_meas.len() && by_meas[end].0 == idx {
                end += 1;
            }
            let mut group: Vec<(usize, usize)> = by_meas[start..end]
                .iter()
                .map(|&(_, t, l)| (t, l))
                .collect();
            loop {
                let leaf = |&(t, l): &(usize, usize)| &self.trees[t].leaves[l];
                let Some(ms) = group
                    .iter()
                    .copied()
                    .min_by(|a, b| rank_order(leaf(a), leaf(b)))
                else {
                    break;
                };
                let mic = group
                    .iter()
                    .copied()
                    .min_by(|a, b| {
                        let (x, y) = (leaf(a), leaf(b));
                        y.motion.ic.cmp(&x.motion.ic).then_with(|| rank_order(x, y))
                    })
                    .expect("group is not empty");
                if ms == mic || shared_measurements(leaf(&ms), leaf(&mic), from) <= cfg.tree_depth {
                    break;
                }
                let loser = if rank_order(leaf(&ms), leaf(&mic)) == Ordering::Greater {
                    ms
                } else {
                    mic
                };
                removed.push(loser);
                group.retain(|&g| g != loser);
            }
            start = end;
        }
        let n = removed.len();
        removed.sort_unstable();
        for (ti, li) in removed.into_iter().rev() {
            self.trees[ti].leaves.remove(li);
        }
        n
    }

    /// Trims the lowest-scoring leaves when the forest exceeds `cap`.
    pub fn cap(&mut self, cap: usize) -> usize {
        let total = self.leaf_count();
        if total <= cap {
            return 0;
        }
        let mut all: Vec<(f64, u32, u64)> = self
            .trees
            .iter()
            .flat_map(|t| t.leaves.iter().map(|h| (h.s, h.created, h.id)))
            .collect();
        all.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut cut: Vec<u64> = all[cap..].iter().map(|e| e.2).collect();
        cut.sort_unstable();
        for t in &mut self.trees {
            t.leaves.retain(|h| cut.binary_search(&h.id).is_err());
        }
        total - cap
    }

    /// One full frame update.
    pub fn step(&mut self, frame: &FrameMeasurements, cfg: &PipelineConfig) -> StepStats {
        let t = frame.frame();
        let mut stats = StepStats {
            frame: t,
            ..StepStats::default()
        };
        let claimed = self.grow(frame, cfg);
        stats.grown = self.leaf_count();
        stats.spawned = self.spawn(frame, &claimed, cfg);
        for tree in &mut self.trees {
            stats.loop_merged += tree.merge_loops(t, cfg.loop_merge_keep);
        }
        stats.strong_merged = self.merge_strong(t, cfg);
        for tree in &mut self.trees {
            stats.terminated += tree.terminate(&cfg.score);
            let before = tree.leaves.len();
            tree.enforce_depth(cfg.tree_depth);
            stats.depth_dropped += before - tree.leaves.len();
        }
        stats.capped = self.cap(cfg.hypothesis_cap);
        stats.leaves = self.leaf_count();
        stats
    }

    pub fn summary(&self) -> Vec<TreeSummary> {
        self.trees
            .iter()
            .map(|t| TreeSummary {
                tree_id: t.id,
                leaves: t.leaves.len(),
                best_s: t.best_leaf().map_or(f64::NAN, |h| h.s),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::FrameSet;
    use alloc::vec;
    use proptest::prelude::*;

    fn cfg() -> PipelineConfig {
        PipelineConfig::default()
    }

    fn frame(t: u32, pts: &[(f64, f64)]) -> FrameMeasurements {
        FrameMeasurements::from_detections(
            t,
            pts.iter().map(|&(x, y)| Measurement::new(t, 0, x, y)),
        )
    }

    fn chain(tree_id: u64, id: u64, refs: &[(u32, u32)], s: f64, ic: usize) -> Hypothesis {
        let c = cfg();
        let m = Measurement::new(refs[0].0, refs[0].1.max(1), 0.0, 0.0);
        let mut h = spawn_hypothesis(&m, id, tree_id, &c);
        h.history = refs
            .iter()
            .map(|&(frame, index)| MeasurementRef { frame, index })
            .collect();
        h.created = refs.last().unwrap().0;
        h.s = s;
        h.motion.ic = ic;
        h.motion.n_s = refs.len();
        h
    }

    fn tree_of(id: u64, leaves: Vec<Hypothesis>) -> HypothesisTree {
        let root = leaves[0].history[0];
        HypothesisTree {
            id,
            root,
            spawn_frame: root.frame,
            leaves,
            terminated: Vec::new(),
            committed_upto: 0,
        }
    }

    #[test]
    fn spawn_score() {
        let s = initial_ltm(&ScoreParams::default());
        assert!((s - libm::log(0.01)).abs() < 1e-12);
        assert!((s + 4.605170185988091).abs() < 1e-12);
    }

    #[test]
    fn dummy_increment() {
        let c = cfg();
        let h = spawn_hypothesis(&Measurement::new(1, 1, 5.0, 5.0), 1, 1, &c);
        let pred = kf_predict(&h.motion, &c.motion);
        let d = ltm_increment(&Measurement::dummy(2), &pred, &c.score);
        assert!((d - libm::log(0.1)).abs() < 1e-12);
    }

    #[test]
    fn real_increment_matches_density() {
        let c = cfg();
        let mut h = spawn_hypothesis(&Measurement::new(1, 1, 0.0, 0.0), 1, 1, &c);
        h.motion.covariance = nalgebra::Matrix6::zeros();
        let mut mp = c.motion;
        mp.q = 0.0;
        let pred = kf_predict(&h.motion, &mp);
        // innovation covariance is exactly identity
        let oracle = libm::log(1.0 / (2.0 * core::f64::consts::PI) * 0.9 / (1e-6 + 1e-8));
        let got = ltm_increment(&Measurement::new(2, 1, 0.0, 0.0), &pred, &c.score);
        assert!((got - oracle).abs() < 1e-9);
        let mut last = got;
        for d in 1..6 {
            let v = ltm_increment(&Measurement::new(2, 1, d as f64, 0.0), &pred, &c.score);
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn stm_cases() {
        assert_eq!(stm_score(3, 4.0, 8.0), 0.0);
        assert_eq!(stm_score(2, 5.0, 5.0), 2.0 * libm::log(STM_EPSILON));
        assert!((stm_score(1, 0.0, 1.0) - libm::log((1.0 - 1e-3) / 1e-3)).abs() < 1e-12);
        assert!(stm_score(1, 0.0, 1.0) > stm_score(1, 0.1, 1.0));
    }

    #[test]
    fn total_cases() {
        let mut p = ScoreParams::default();
        assert_eq!(total_score(2.0, 3.0, &p), 5.0);
        p.w_stm = 0.0;
        assert_eq!(total_score(2.0, 3.0, &p), 2.0);
        p.w_ltm = 0.0;
        assert_eq!(total_score(2.0, 3.0, &p), 0.0);
    }

    #[test]
    fn termination_rules() {
        let c = cfg();
        let mut h = spawn_hypothesis(&Measurement::new(1, 1, 0.0, 0.0), 1, 1, &c);
        assert!(!sqrt_termination(&h, &c.score));
        h.s_ltm = deletion_threshold(&c.score) - 1.0;
        assert!(sqrt_termination(&h, &c.score));
        h.s_ltm = 50.0;
        h.misses = 3;
        assert!(sqrt_termination(&h, &c.score));
        h.misses = 2;
        assert!(!sqrt_termination(&h, &c.score));
    }

    #[test]
    fn grow_one_leaf_two_gated() {
        let c = cfg();
        let mut f = HypothesisForest::new();
        let claimed = f.grow(&frame(1, &[(50.0, 50.0)]), &c);
        assert_eq!(f.spawn(&frame(1, &[(50.0, 50.0)]), &claimed, &c), 1);
        f.grow(&frame(2, &[(52.0, 50.0), (50.0, 53.0), (400.0, 400.0)]), &c);
        let leaves = &f.trees[0].leaves;
        assert_eq!(leaves.len(), 3);
        assert_eq!(leaves.iter().filter(|h| h.last().is_dummy()).count(), 1);
        for h in leaves {
            assert_eq!(h.history.len(), 2);
        }
    }

    #[test]
    fn grow_nothing_gated() {
        let c = cfg();
        let mut f = HypothesisForest::new();
        let fr = frame(1, &[(10.0, 10.0)]);
        let cl = f.grow(&fr, &c);
        f.spawn(&fr, &cl, &c);
        let claimed = f.grow(&frame(2, &[(600.0, 400.0)]), &c);
        assert_eq!(f.trees[0].leaves.len(), 1);
        assert!(f.trees[0].leaves[0].last().is_dummy());
        assert!(!claimed[1]);
        assert_eq!(f.spawn(&frame(2, &[(600.0, 400.0)]), &claimed, &c), 1);
    }

    #[test]
    fn two_leaves_share_a_gated_measurement() {
        let c = cfg();
        let mut f = HypothesisForest::new();
        let fr = frame(1, &[(10.0, 10.0), (16.0, 10.0)]);
        let cl = f.grow(&fr, &c);
        f.spawn(&fr, &cl, &c);
        f.grow(&frame(2, &[(13.0, 10.0)]), &c);
        for t in &f.trees {
            assert!(t
                .leaves
                .iter()
                .any(|h| h.last() == MeasurementRef { frame: 2, index: 1 }));
        }
    }

    #[test]
    fn spawn_skips_claimed_and_empty() {
        let c = cfg();
        let mut f = HypothesisForest::new();
        assert_eq!(f.spawn(&frame(1, &[]), &[false], &c), 0);
        assert_eq!(f.spawn(&frame(1, &[(1.0, 1.0)]), &[false, true], &c), 0);
    }

    #[test]
    fn loop_merge_keeps_low_variability() {
        let mut a = chain(1, 1, &[(1, 1), (2, 1), (3, 2)], 1.0, 2);
        let mut b = chain(1, 2, &[(1, 1), (2, 2), (3, 2)], 5.0, 2);
        a.motion.s_mv = 0.2;
        b.motion.s_mv = 0.9;
        let mut t = tree_of(1, vec![a, b]);
        let mut t2 = t.clone();
        assert_eq!(t.merge_loops(3, LoopMergeKeep::Low), 1);
        assert_eq!(t.leaves[0].id, 1);
        assert_eq!(t2.merge_loops(3, LoopMergeKeep::High), 1);
        assert_eq!(t2.leaves[0].id, 2);
    }

    #[test]
    fn loop_merge_prefers_linked_detections() {
        let mut real = chain(1, 1, &[(1, 1), (2, 1), (3, 1)], 1.0, 3);
        let mut coast = chain(1, 2, &[(1, 1), (2, 0), (3, 1)], 1.0, 1);
        real.motion.s_mv = 0.5;
        coast.motion.s_mv = 0.1;
        let mut t = tree_of(1, vec![coast, real]);
        t.merge_loops(3, LoopMergeKeep::Low);
        assert_eq!(t.leaves.len(), 1);
        assert_eq!(t.leaves[0].id, 1);
    }

    #[test]
    fn loop_merge_three_way_and_disjoint() {
        let mut hs = Vec::new();
        for (i, mv) in [0.5, 0.1, 0.7].iter().enumerate() {
            let mut h = chain(
                1,
                i as u64 + 1,
                &[(1, 1), (2, i as u32 + 1), (3, 1)],
                0.0,
                2,
            );
            h.motion.s_mv = *mv;
            hs.push(h);
        }
        hs.push(chain(1, 9, &[(1, 1), (2, 1), (3, 4)], 0.0, 2));
        hs.push(chain(1, 10, &[(1, 1), (2, 1), (3, 0)], 0.0, 1));
        hs.push(chain(1, 11, &[(1, 1), (2, 2), (3, 0)], 0.0, 1));
        let mut t = tree_of(1, hs);
        assert_eq!(t.merge_loops(3, LoopMergeKeep::Low), 2);
        let ids: Vec<u64> = t.leaves.iter().map(|h| h.id).collect();
        assert_eq!(ids, vec![2, 9, 10, 11]);
        let again = t.clone();
        assert_eq!(t.merge_loops(3, LoopMergeKeep::Low), 0);
        assert_eq!(t, again);
    }

    fn shared_forest(shared_tail: usize, s_a: f64, s_b: f64) -> HypothesisForest {
        // a: max S, b: max IC
        let n = 10u32;
        let a_refs: Vec<(u32, u32)> = (1..=n).map(|f| (f, 1)).collect();
        let b_refs: Vec<(u32, u32)> = (1..=n)
            .map(|f| {
                if f > n - shared_tail as u32 {
                    (f, 1)
                } else {
                    (f, 2)
                }
            })
            .collect();
        let a = chain(1, 1, &a_refs, s_a, 3);
        let b = chain(2, 2, &b_refs, s_b, 9);
        HypothesisForest {
            trees: vec![tree_of(1, vec![a]), tree_of(2, vec![b])],
            next_tree_id: 2,
            next_hyp_id: 2,
        }
    }

    #[test]
    fn strong_merge_removes_weaker() {
        let c = cfg();
        let mut f = shared_forest(7, 10.0, 8.0);
        assert_eq!(f.merge_strong(10, &c), 1);
        assert_eq!(f.trees[0].leaves.len(), 1);
        assert!(f.trees[1].leaves.is_empty());
        // exactly depth shared is not more than depth
        let mut f = shared_forest(6, 10.0, 8.0);
        assert_eq!(f.merge_strong(10, &c), 0);
        let mut f = shared_forest(3, 10.0, 8.0);
        assert_eq!(f.merge_strong(10, &c), 0);
    }

    #[test]
    fn strong_merge_noop_when_same_leaf_wins_both() {
        let c = cfg();
        let mut f = shared_forest(10, 10.0, 8.0);
        f.trees[1].leaves[0].motion.ic = 1;
        assert_eq!(f.merge_strong(10, &c), 0);
    }

    #[test]
    fn rank_sizes_and_ties() {
        let leaves: Vec<Hypothesis> = (0..10)
            .map(|i| chain(1, i + 1, &[(1, 1)], (i % 3) as f64, 1))
            .collect();
        let t = tree_of(1, leaves);
        let top = t.rank_and_select(0.2);
        assert_eq!(top.len(), 2);
        // S = 2 for ids 3, 6, 9; tie broken by lower id
        assert_eq!(top[0].id, 3);
        assert_eq!(top[1].id, 6);
        let single = tree_of(2, vec![chain(2, 1, &[(1, 1)], 0.0, 1)]);
        assert_eq!(single.rank_and_select(0.2).len(), 1);
        let rank = t.score_rank();
        assert!(rank.windows(2).all(|w| w[0].s >= w[1].s));
    }

    #[test]
    fn depth_chain_shifts_root() {
        let refs: Vec<(u32, u32)> = (1..=7).map(|f| (f, 1)).collect();
        let mut t = tree_of(1, vec![chain(1, 1, &refs, 0.0, 7)]);
        assert_eq!(t.enforce_depth(6), 1);
        assert_eq!(t.root, MeasurementRef { frame: 2, index: 1 });
        let mut same = t.clone();
        assert_eq!(same.enforce_depth(6), 0);
        assert_eq!(same, t);
    }

    #[test]
    fn depth_keeps_better_side() {
        let a: Vec<(u32, u32)> = (1..=7).map(|f| (f, 1)).collect();
        let b: Vec<(u32, u32)> = (1..=7).map(|f| (f, if f == 1 { 1 } else { 2 })).collect();
        let mut t = tree_of(1, vec![chain(1, 1, &a, 3.0, 7), chain(1, 2, &b, 4.0, 7)]);
        t.terminated.push(chain(1, 3, &a[..4], 1.0, 4));
        t.enforce_depth(6);
        assert_eq!(t.leaves.len(), 1);
        assert_eq!(t.leaves[0].id, 2);
        assert!(t.terminated.is_empty());
    }

    #[test]
    fn cap_trims_lowest() {
        let leaves: Vec<Hypothesis> = (0..6)
            .map(|i| chain(1, i + 1, &[(1, 1)], i as f64, 1))
            .collect();
        let mut f = HypothesisForest {
            trees: vec![tree_of(1, leaves)],
            next_tree_id: 1,
            next_hyp_id: 6,
        };
        assert_eq!(f.cap(4), 2);
        let mut ids: Vec<u64> = f.trees[0].leaves.iter().map(|h| h.id).collect();
        ids.sort();
        assert_eq!(ids, vec![3, 4, 5, 6]);
    }

    fn run(points: &[Vec<(f64, f64)>], c: &PipelineConfig) -> (HypothesisForest, Vec<StepStats>) {
        let dets = points.iter().enumerate().flat_map(|(i, pts)| {
            pts.iter()
                .map(move |&(x, y)| Measurement::new(i as u32 + 1, 0, x, y))
        });
        let set = FrameSet::from_detections(dets, Some(points.len() as u32)).unwrap();
        let mut f = HypothesisForest::new();
        let stats = set.frames().iter().map(|fr| f.step(fr, c)).collect();
        (f, stats)
    }

    #[test]
    fn steady_target_builds_one_tree() {
        let c = cfg();
        let pts: Vec<Vec<(f64, f64)>> = (0..30)
            .map(|k| vec![(20.0 + 2.0 * k as f64, 40.0 + k as f64)])
            .collect();
        let (f, _) = run(&pts, &c);
        assert_eq!(f.trees.len(), 1);
        let best = f.trees[0].best_leaf().unwrap();
        assert!(!best.last().is_dummy());
        assert_eq!(best.n_s(), 30);
        assert!(best.s_ltm > 100.0);
        assert!(f.trees[0].depth() <= c.tree_depth);
        let v = best.motion.velocity();
        assert!((v[0] - 2.0).abs() < 0.1 && (v[1] - 1.0).abs() < 0.1);
    }

    proptest! {
        #[test]
        fn forest_invariants(
            seeds in prop::collection::vec(prop::collection::vec((0.0f64..120.0, 0.0f64..120.0), 0..6), 2..12),
        ) {
            let c = cfg();
            let dets = seeds.iter().enumerate().flat_map(|(i, pts)| {
                pts.iter().map(move |&(x, y)| Measurement::new(i as u32 + 1, 0, x, y))
            });
            let set = FrameSet::from_detections(dets, Some(seeds.len() as u32)).unwrap();
            let mut f = HypothesisForest::new();
            for fr in set.frames() {
                let before = f.leaf_count();
                let stats = f.step(fr, &c);
                let t = fr.frame();
                prop_assert!(stats.leaves <= c.hypothesis_cap);
                prop_assert!(stats.grown <= before * (fr.len() + 1));
                for tree in &f.trees {
                    prop_assert!(tree.depth() <= c.tree_depth);
                    let mut seen = Vec::new();
                    for h in &tree.leaves {
                        prop_assert_eq!(h.last_frame(), t);
                        prop_assert_eq!(h.history.len() as u32, t - h.first_frame() + 1);
                        prop_assert_eq!(h.n_s(), h.history.len());
                        prop_assert!(h.motion.ic <= h.n_s());
                        prop_assert!(h.motion.n_c <= c.tree_depth);
                        prop_assert_eq!(h.at(tree.root.frame), Some(tree.root));
                        prop_assert!((h.s - total_score(h.s_ltm, h.s_stm, &c.score)).abs() < 1e-12);
                        let r = h.last();
                        if !r.is_dummy() {
                            prop_assert!(!seen.contains(&r));
                            seen.push(r);
                        }
                    }
                    let mut again = tree.clone();
                    prop_assert_eq!(again.merge_loops(t, c.loop_merge_keep), 0);
                }
            }
        }
    }
}
