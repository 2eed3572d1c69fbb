//! Global hypothesis selection as a 0-1 program with bounded measurement
//! sharing, and its exact solver.
//!
//! Pair variables `I_ij` are never branched on: for fixed `ξ`, the cheapest
//! feasible `I_ij` is `ξ_i ∧ ξ_j`, so the objective reduces to a quadratic
//! pseudo-boolean function of `ξ` plus exclusion constraints.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;
use core::time::Duration;

use crate::config::{PipelineConfig, SelectionMode, SelectionParams};
use crate::mmht::{Hypothesis, HypothesisForest};
use crate::types::MeasurementRef;

/// Stand-in for an infinite incompatibility cost.
pub const BIG_M: f64 = 1e9;
/// Smallest denominator allowed in the hypothesis cost.
pub const COST_EPSILON: f64 = 1e-6;

/// `−K · ln(N_s / (L_t + 1))`.
pub fn hypothesis_cost(n_s: usize, l_t: f64, k: f64) -> f64 {
    let denom = (l_t + 1.0).max(COST_EPSILON);
    -k * libm::log(n_s as f64 / denom)
}

/// Cost of selecting two hypotheses that share `n_i` detections; `None`
/// means the pair may not be selected together.
pub fn incompatibility_cost(n_i: u32, p: &SelectionParams) -> Option<f64> {
    (n_i < p.l_t).then_some(n_i as f64 * p.c_in)
}

/// One selectable hypothesis, reduced to what the program needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub tree_id: u64,
    pub hypothesis_id: u64,
    pub n_s: usize,
    /// Score entering the cost (the moving-variability score).
    pub l_t: f64,
    /// Real detections inside the consideration window, sorted.
    pub detections: Vec<MeasurementRef>,
}

impl Candidate {
    pub fn from_hypothesis(h: &Hypothesis, window_from: u32) -> Self {
        Candidate {
            tree_id: h.tree_id,
            hypothesis_id: h.id,
            n_s: h.n_s(),
            l_t: h.motion.s_mv,
            detections: h.detections_from(window_from).collect(),
        }
    }
}

/// Pair variable `I_ij` for hypotheses sharing detections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Incompatibility {
    pub i: usize,
    pub j: usize,
    pub shared: u32,
    /// `C_Iij`; [`BIG_M`] when the pair is also excluded.
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionProgram {
    pub mode: SelectionMode,
    pub costs: Vec<f64>,
    pub pairs: Vec<Incompatibility>,
    /// Hard `ξ_i + ξ_j ≤ 1` rows, `i < j`.
    pub exclusions: Vec<(usize, usize)>,
}

impl SelectionProgram {
    pub fn len(&self) -> usize {
        self.costs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.costs.is_empty()
    }

    /// Objective of a selection, `None` if it violates an exclusion.
    pub fn objective(&self, chosen: &[bool]) -> Option<f64> {
        if self.exclusions.iter().any(|&(i, j)| chosen[i] && chosen[j]) {
            return None;
        }
        let mut total: f64 = self
            .costs
            .iter()
            .zip(chosen)
            .filter(|(_, &on)| on)
            .map(|(c, _)| c)
            .sum();
        for p in &self.pairs {
            if chosen[p.i] && chosen[p.j] {
                total += p.cost;
            }
        }
        Some(total)
    }

    /// The program in lp_solve text format.
    pub fn lp_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "/* mode {} */", self.mode);
        s.push_str("min:");
        for (i, c) in self.costs.iter().enumerate() {
            let _ = write!(s, " {:+} x{}", c, i);
        }
        for p in &self.pairs {
            let _ = write!(s, " {:+} I{}_{}", p.cost, p.i, p.j);
        }
        s.push_str(";\n");
        for p in &self.pairs {
            let _ = writeln!(s, "I{0}_{1} - x{0} - x{1} >= -1;", p.i, p.j);
            let _ = writeln!(s, "2 I{0}_{1} - x{0} - x{1} <= 0;", p.i, p.j);
        }
        for (i, j) in &self.exclusions {
            let _ = writeln!(s, "x{i} + x{j} <= 1;");
        }
        let mut names: Vec<String> = (0..self.len()).map(|i| alloc::format!("x{i}")).collect();
        names.extend(
            self.pairs
                .iter()
                .map(|p| alloc::format!("I{}_{}", p.i, p.j)),
        );
        if !names.is_empty() {
            let _ = writeln!(s, "bin {};", names.join(", "));
        }
        s
    }
}

/// Builds the program. Hypotheses of one tree are always mutually exclusive.
pub fn build_program(
    cands: &[Candidate],
    p: &SelectionParams,
    mode: SelectionMode,
) -> SelectionProgram {
    let costs = cands
        .iter()
        .map(|c| hypothesis_cost(c.n_s, c.l_t, p.k))
        .collect();
    let mut users: BTreeMap<MeasurementRef, Vec<usize>> = BTreeMap::new();
    for (i, c) in cands.iter().enumerate() {
        for r in &c.detections {
            users.entry(*r).or_default().push(i);
        }
    }
    let mut shared: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    for list in users.values() {
        for (a, &i) in list.iter().enumerate() {
            for &j in &list[a + 1..] {
                *shared.entry((i.min(j), i.max(j))).or_default() += 1;
            }
        }
    }
    let mut excl: BTreeMap<(usize, usize), ()> = BTreeMap::new();
    let mut pairs = Vec::new();
    for (&(i, j), &n) in &shared {
        match (mode, incompatibility_cost(n, p)) {
            (SelectionMode::OneToOne, _) => {
                excl.insert((i, j), ());
            }
            (SelectionMode::OneToMany, Some(cost)) => pairs.push(Incompatibility {
                i,
                j,
                shared: n,
                cost,
            }),
            (SelectionMode::OneToMany, None) => {
                pairs.push(Incompatibility {
                    i,
                    j,
                    shared: n,
                    cost: BIG_M,
                });
                excl.insert((i, j), ());
            }
        }
    }
    let mut by_tree: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, c) in cands.iter().enumerate() {
        by_tree.entry(c.tree_id).or_default().push(i);
    }
    for list in by_tree.values() {
        for (a, &i) in list.iter().enumerate() {
            for &j in &list[a + 1..] {
                excl.insert((i.min(j), i.max(j)), ());
            }
        }
    }
    SelectionProgram {
        mode,
        costs,
        pairs,
        exclusions: excl.into_keys().collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// Indices of chosen hypotheses, ascending.
    pub chosen: Vec<usize>,
    pub objective: f64,
    pub nodes: u64,
    /// False when the node budget ran out before optimality was proven.
    pub optimal: bool,
    /// Filled in by callers that have a clock.
    pub elapsed: Option<Duration>,
}

struct Component {
    /// Variables in branching order (ascending cost).
    vars: Vec<usize>,
}

struct Search<'a> {
    costs: &'a [f64],
    soft: &'a [Vec<(usize, f64)>],
    hard: &'a [Vec<usize>],
    on: Vec<bool>,
    blocked: Vec<u32>,
    penalty: Vec<f64>,
    best: f64,
    best_on: Vec<usize>,
    nodes: u64,
    budget: u64,
    exhausted: bool,
}

impl Search<'_> {
    fn toggle(&mut self, v: usize, on: bool) {
        self.on[v] = on;
        let sign = if on { 1.0 } else { -1.0 };
        for &(u, w) in &self.soft[v] {
            self.penalty[u] += sign * w;
        }
        for &u in &self.hard[v] {
            if on {
                self.blocked[u] += 1;
            } else {
                self.blocked[u] -= 1;
            }
        }
    }

    fn gain(&self, v: usize) -> Option<f64> {
        (self.blocked[v] == 0).then(|| self.costs[v] + self.penalty[v])
    }

    fn bound(&self, order: &[usize], pos: usize, value: f64) -> f64 {
        value
            + order[pos..]
                .iter()
                .filter_map(|&v| self.gain(v))
                .filter(|g| *g < 0.0)
                .sum::<f64>()
    }

    fn dfs(&mut self, order: &[usize], pos: usize, value: f64) {
        if self.nodes >= self.budget {
            self.exhausted = true;
            return;
        }
        self.nodes += 1;
        if value < self.best {
            self.best = value;
            self.best_on = order[..pos]
                .iter()
                .copied()
                .filter(|&v| self.on[v])
                .collect();
        }
        if pos == order.len() || self.bound(order, pos, value) >= self.best {
            return;
        }
        let v = order[pos];
        match self.gain(v) {
            Some(g) if g < 0.0 => {
                self.toggle(v, true);
                self.dfs(order, pos + 1, value + g);
                self.toggle(v, false);
                self.dfs(order, pos + 1, value);
            }
            // selecting v can never lower the objective
            _ => self.dfs(order, pos + 1, value),
        }
    }
}

/// Exact minimisation by depth-first branch and bound on each connected
/// component of the conflict graph.
pub fn solve(prog: &SelectionProgram, node_budget: u64) -> SelectionResult {
    let n = prog.len();
    let mut soft: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut hard: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let excluded: BTreeMap<(usize, usize), ()> = prog.exclusions.iter().map(|&e| (e, ())).collect();
    for p in &prog.pairs {
        if excluded.contains_key(&(p.i.min(p.j), p.i.max(p.j))) {
            continue;
        }
        soft[p.i].push((p.j, p.cost));
        soft[p.j].push((p.i, p.cost));
        let (a, b) = (find(&mut parent, p.i), find(&mut parent, p.j));
        parent[a.max(b)] = a.min(b);
    }
    for &(i, j) in &prog.exclusions {
        hard[i].push(j);
        hard[j].push(i);
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        parent[a.max(b)] = a.min(b);
    }
    let mut comps: BTreeMap<usize, Component> = BTreeMap::new();
    for v in 0..n {
        // a non-negative cost can only add to the objective
        if prog.costs[v] < 0.0 {
            let r = find(&mut parent, v);
            comps
                .entry(r)
                .or_insert(Component { vars: Vec::new() })
                .vars
                .push(v);
        }
    }
    let mut search = Search {
        costs: &prog.costs,
        soft: &soft,
        hard: &hard,
        on: vec![false; n],
        blocked: vec![0; n],
        penalty: vec![0.0; n],
        best: 0.0,
        best_on: Vec::new(),
        nodes: 0,
        budget: node_budget,
        exhausted: false,
    };
    let mut chosen = Vec::new();
    for comp in comps.values_mut() {
        comp.vars
            .sort_by(|&a, &b| prog.costs[a].total_cmp(&prog.costs[b]).then(a.cmp(&b)));
        let order = &comp.vars;
        // greedy incumbent
        let mut value = 0.0;
        let mut picked = Vec::new();
        for &v in order {
            if let Some(g) = search.gain(v).filter(|g| *g < 0.0) {
                search.toggle(v, true);
                value += g;
                picked.push(v);
            }
        }
        for &v in &picked {
            search.toggle(v, false);
        }
        search.best = value;
        search.best_on = picked;
        search.dfs(order, 0, 0.0);
        chosen.extend_from_slice(&search.best_on);
    }
    chosen.sort_unstable();
    // re-sum in index order so the value does not depend on search order
    let mut on = vec![false; n];
    for &i in &chosen {
        on[i] = true;
    }
    let objective = prog.objective(&on).unwrap_or(f64::INFINITY);
    SelectionResult {
        chosen,
        objective,
        nodes: search.nodes,
        optimal: !search.exhausted,
        elapsed: None,
    }
}

/// Everything a batch boundary produced.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutcome {
    pub frame: u32,
    pub program: SelectionProgram,
    pub candidates: Vec<Candidate>,
    pub result: SelectionResult,
    /// Optimum of the same candidates under the other mode, when requested.
    pub alternate_objective: Option<f64>,
    /// Newly final detections per track id.
    pub commits: Vec<(u64, Vec<MeasurementRef>)>,
    pub pruned_trees: usize,
}

/// Selects hypotheses, commits their detections up to `commit_upto`,
/// prunes the forest against the selection and trims old history.
///
/// Trees without live leaves are flushed completely and removed. In unchosen
/// trees, hypotheses that cannot coexist with a chosen one are dropped.
pub fn resolve_batch(
    forest: &mut HypothesisForest,
    frame: u32,
    commit_upto: u32,
    cfg: &PipelineConfig,
    compare_modes: bool,
) -> BatchOutcome {
    let window_from = frame.saturating_sub(cfg.window_length) + 1;
    let mut cands = Vec::new();
    let mut owner = Vec::new();
    for (ti, tree) in forest.trees.iter().enumerate() {
        for h in tree.rank_and_select(cfg.rank_fraction) {
            cands.push(Candidate::from_hypothesis(h, window_from));
            owner.push((ti, h.id));
        }
    }
    let program = build_program(&cands, &cfg.sel, cfg.mode);
    let result = solve(&program, cfg.sel.node_budget);
    let alternate_objective = compare_modes.then(|| {
        let other = match cfg.mode {
            SelectionMode::OneToMany => SelectionMode::OneToOne,
            SelectionMode::OneToOne => SelectionMode::OneToMany,
        };
        solve(&build_program(&cands, &cfg.sel, other), cfg.sel.node_budget).objective
    });

    let mut chosen_of_tree: BTreeMap<usize, usize> = BTreeMap::new();
    for &c in &result.chosen {
        chosen_of_tree.insert(owner[c].0, c);
    }
    let mut commits = Vec::new();
    for (&ti, &c) in &chosen_of_tree {
        let tree = &mut forest.trees[ti];
        let h = tree
            .leaves
            .iter()
            .chain(tree.terminated.iter())
            .find(|h| h.id == owner[c].1)
            .expect("candidate belongs to its tree");
        let limit = if tree.leaves.is_empty() {
            frame
        } else {
            commit_upto
        };
        let refs: Vec<MeasurementRef> = h
            .history
            .iter()
            .copied()
            .filter(|r| !r.is_dummy() && r.frame > tree.committed_upto && r.frame <= limit)
            .collect();
        tree.committed_upto = tree.committed_upto.max(limit);
        if !refs.is_empty() {
            commits.push((tree.id, refs));
        }
    }

    // detections of chosen hypotheses, for conflict checks
    let mut owners_of: BTreeMap<MeasurementRef, Vec<usize>> = BTreeMap::new();
    for &c in &result.chosen {
        for r in &cands[c].detections {
            owners_of.entry(*r).or_default().push(c);
        }
    }
    let limit = match cfg.mode {
        SelectionMode::OneToOne => 1,
        SelectionMode::OneToMany => cfg.sel.l_t.max(1),
    };
    let conflicts = |h: &Hypothesis| -> bool {
        let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
        for r in h.detections_from(window_from) {
            if let Some(list) = owners_of.get(&r) {
                for &c in list {
                    let n = counts.entry(c).or_default();
                    *n += 1;
                    if *n >= limit {
                        return true;
                    }
                }
            }
        }
        false
    };
    let before = forest.trees.len();
    for (ti, tree) in forest.trees.iter_mut().enumerate() {
        if chosen_of_tree.contains_key(&ti) || owners_of.is_empty() {
            continue;
        }
        tree.leaves.retain(|h| !conflicts(h));
        tree.terminated.retain(|h| !conflicts(h));
    }
    forest.trees.retain(|t| !t.leaves.is_empty());
    let pruned_trees = before - forest.trees.len();
    for tree in &mut forest.trees {
        tree.trim_history(window_from);
    }
    BatchOutcome {
        frame,
        program,
        candidates: cands,
        result,
        alternate_objective,
        commits,
        pruned_trees,
    }
}
