//! Pipeline parameters and their defaults.
//!
//! The textual `key=value` representation lives here too (as pure string
//! handling) so that the key table has exactly one definition; reading
//! files is left to the `mastrack` crate.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::str::FromStr;

use crate::error::{Error, Result};

/// Segmentation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegParams {
    /// Global threshold multiplier on the contrast-map standard deviation.
    pub k: f64,
    /// Number of threshold layers (odd, the global threshold is the middle one).
    pub n_layers: usize,
    /// Step between adjacent layer thresholds; `None` selects
    /// `AUTO_INTERVAL_FRACTION` of the contrast-map standard deviation.
    pub layer_interval: Option<f64>,
    pub outer_window: usize,
    pub inner_window: usize,
    pub min_area: usize,
    pub max_area: usize,
    /// Threshold multiplier of the top-hat comparator.
    pub tophat_k: f64,
    pub tophat_radius: usize,
}

/// Fraction of the contrast standard deviation used as the automatic layer step.
pub const AUTO_INTERVAL_FRACTION: f64 = 0.25;

impl Default for SegParams {
    fn default() -> Self {
        SegParams {
            k: 3.5,
            n_layers: 5,
            layer_interval: None,
            outer_window: 9,
            inner_window: 3,
            min_area: 2,
            max_area: 100,
            tophat_k: 5.8,
            tophat_radius: 5,
        }
    }
}

/// Multistage gating thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl Default for GateParams {
    fn default() -> Self {
        GateParams {
            alpha: 20.0,
            beta: 0.8,
            gamma: 10.0,
            delta: 6.0,
        }
    }
}

/// Track score parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreParams {
    pub p_d: f64,
    /// Clutter density per px² per frame.
    pub lambda_fa: f64,
    /// New-target density per px² per frame.
    pub lambda_nt: f64,
    pub w_ltm: f64,
    pub w_stm: f64,
}

impl Default for ScoreParams {
    fn default() -> Self {
        ScoreParams {
            p_d: 0.9,
            lambda_fa: 1e-6,
            lambda_nt: 1e-8,
            w_ltm: 1.0,
            w_stm: 1.0,
        }
    }
}

/// Selection program parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionParams {
    /// Hypothesis cost coefficient.
    pub k: f64,
    /// Cost per shared measurement.
    pub c_in: f64,
    /// Sharing count at which a pair becomes mutually exclusive.
    pub l_t: u32,
    /// Branch-and-bound node limit.
    pub node_budget: u64,
}

impl Default for SelectionParams {
    fn default() -> Self {
        SelectionParams {
            k: 5.0,
            c_in: 1.0,
            l_t: 5,
            node_budget: 1_000_000,
        }
    }
}

/// Kalman filter noise model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionParams {
    /// White-jerk spectral density, px²/frame⁵.
    pub q: f64,
    /// Measurement noise variance per axis, px².
    pub r: f64,
    /// Initial position variance.
    pub p0_position: f64,
    /// Initial velocity and acceleration variance.
    pub p0_rate: f64,
}

impl Default for MotionParams {
    fn default() -> Self {
        MotionParams {
            q: 0.5,
            r: 1.0,
            p0_position: 4.0,
            p0_rate: 25.0,
        }
    }
}

/// Which of two same-tree hypotheses ending on one measurement survives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoopMergeKeep {
    /// Keep the lower moving-variability score (steadier track).
    #[default]
    Low,
    /// Keep the higher one.
    High,
}

/// Global hypothesis selection constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelectionMode {
    /// Bounded measurement sharing with incompatibility costs.
    #[default]
    OneToMany,
    /// Classical exclusive assignment.
    OneToOne,
}

impl FromStr for SelectionMode {
    type Err = String;

    fn from_str(s: &str) -> core::result::Result<Self, String> {
        match s {
            "one-to-many" => Ok(SelectionMode::OneToMany),
            "one-to-one" => Ok(SelectionMode::OneToOne),
            other => Err(format!("expected one-to-many or one-to-one, got `{other}`")),
        }
    }
}

impl core::fmt::Display for SelectionMode {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            SelectionMode::OneToMany => "one-to-many",
            SelectionMode::OneToOne => "one-to-one",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seg: SegParams,
    pub gate: GateParams,
    pub score: ScoreParams,
    pub sel: SelectionParams,
    pub motion: MotionParams,
    /// Frames between selections.
    pub batch_length: u32,
    /// Trailing frames considered by each selection.
    pub window_length: u32,
    pub tree_depth: usize,
    /// Share of each tree's ranked hypotheses handed to selection.
    pub rank_fraction: f64,
    /// Match radius in pixels for evaluation and TCF/TF.
    pub match_tolerance: f64,
    /// Hard limit on live hypotheses in the forest.
    pub hypothesis_cap: usize,
    pub loop_merge_keep: LoopMergeKeep,
    pub mode: SelectionMode,
    /// Fill missed frames of output trajectories by linear interpolation.
    pub interpolate: bool,
    pub ospa_c: f64,
    pub ospa_l: f64,
    pub ospa_p: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seg: SegParams::default(),
            gate: GateParams::default(),
            score: ScoreParams::default(),
            sel: SelectionParams::default(),
            motion: MotionParams::default(),
            batch_length: 20,
            window_length: 40,
            tree_depth: 6,
            rank_fraction: 0.2,
            match_tolerance: 15.0,
            hypothesis_cap: 5000,
            loop_merge_keep: LoopMergeKeep::Low,
            mode: SelectionMode::OneToMany,
            interpolate: false,
            ospa_c: 25.0,
            ospa_l: 25.0,
            ospa_p: 2.0,
        }
    }
}

fn invalid(key: &'static str, reason: impl Into<String>) -> Error {
    Error::Validation {
        key,
        reason: reason.into(),
    }
}

fn parse<T: FromStr>(key: &'static str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| invalid(key, format!("cannot parse `{}`", value.trim())))
}

fn parse_bool(key: &'static str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(invalid(key, format!("expected a boolean, got `{other}`"))),
    }
}

/// Every recognised key, in serialization order.
pub const KEYS: &[&str] = &[
    "seg.k",
    "seg.n_layers",
    "seg.layer_interval",
    "seg.outer_window",
    "seg.inner_window",
    "seg.min_area",
    "seg.max_area",
    "seg.tophat_k",
    "seg.tophat_radius",
    "gate.alpha",
    "gate.beta",
    "gate.gamma",
    "gate.delta",
    "score.p_d",
    "score.lambda_fa",
    "score.lambda_nt",
    "score.w_ltm",
    "score.w_stm",
    "sel.k",
    "sel.c_in",
    "sel.l_t",
    "sel.node_budget",
    "motion.q",
    "motion.r",
    "motion.p0_position",
    "motion.p0_rate",
    "batch_length",
    "window_length",
    "tree_depth",
    "rank_fraction",
    "match_tolerance",
    "hypothesis_cap",
    "loop_merge_keep",
    "mode",
    "interpolate",
    "ospa.c",
    "ospa.l",
    "ospa.p",
];

impl PipelineConfig {
    /// Assigns one key from its textual value. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let Some(&k) = KEYS.iter().find(|k| **k == key) else {
            return Err(invalid("<key>", format!("unknown key `{key}`")));
        };
        match k {
            "seg.k" => self.seg.k = parse(k, value)?,
            "seg.n_layers" => self.seg.n_layers = parse(k, value)?,
            "seg.layer_interval" => {
                self.seg.layer_interval = match value.trim() {
                    "auto" => None,
                    v => Some(parse(k, v)?),
                }
            }
            "seg.outer_window" => self.seg.outer_window = parse(k, value)?,
            "seg.inner_window" => self.seg.inner_window = parse(k, value)?,
            "seg.min_area" => self.seg.min_area = parse(k, value)?,
            "seg.max_area" => self.seg.max_area = parse(k, value)?,
            "seg.tophat_k" => self.seg.tophat_k = parse(k, value)?,
            "seg.tophat_radius" => self.seg.tophat_radius = parse(k, value)?,
            "gate.alpha" => self.gate.alpha = parse(k, value)?,
            "gate.beta" => self.gate.beta = parse(k, value)?,
            "gate.gamma" => self.gate.gamma = parse(k, value)?,
            "gate.delta" => self.gate.delta = parse(k, value)?,
            "score.p_d" => self.score.p_d = parse(k, value)?,
            "score.lambda_fa" => self.score.lambda_fa = parse(k, value)?,
            "score.lambda_nt" => self.score.lambda_nt = parse(k, value)?,
            "score.w_ltm" => self.score.w_ltm = parse(k, value)?,
            "score.w_stm" => self.score.w_stm = parse(k, value)?,
            "sel.k" => self.sel.k = parse(k, value)?,
            "sel.c_in" => self.sel.c_in = parse(k, value)?,
            "sel.l_t" => self.sel.l_t = parse(k, value)?,
            "sel.node_budget" => self.sel.node_budget = parse(k, value)?,
            "motion.q" => self.motion.q = parse(k, value)?,
            "motion.r" => self.motion.r = parse(k, value)?,
            "motion.p0_position" => self.motion.p0_position = parse(k, value)?,
            "motion.p0_rate" => self.motion.p0_rate = parse(k, value)?,
            "batch_length" => self.batch_length = parse(k, value)?,
            "window_length" => self.window_length = parse(k, value)?,
            "tree_depth" => self.tree_depth = parse(k, value)?,
            "rank_fraction" => self.rank_fraction = parse(k, value)?,
            "match_tolerance" => self.match_tolerance = parse(k, value)?,
            "hypothesis_cap" => self.hypothesis_cap = parse(k, value)?,
            "loop_merge_keep" => {
                self.loop_merge_keep = match value.trim() {
                    "low" => LoopMergeKeep::Low,
                    "high" => LoopMergeKeep::High,
                    other => {
                        return Err(invalid(k, format!("expected low or high, got `{other}`")))
                    }
                }
            }
            "mode" => self.mode = value.trim().parse().map_err(|e: String| invalid(k, e))?,
            "interpolate" => self.interpolate = parse_bool(k, value)?,
            "ospa.c" => self.ospa_c = parse(k, value)?,
            "ospa.l" => self.ospa_l = parse(k, value)?,
            "ospa.p" => self.ospa_p = parse(k, value)?,
            _ => unreachable!("key table and match arms disagree"),
        }
        Ok(())
    }

    /// The configuration as `(key, value)` pairs in `KEYS` order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        KEYS.iter()
            .map(|&k| {
                let v = match k {
                    "seg.k" => self.seg.k.to_string(),
                    "seg.n_layers" => self.seg.n_layers.to_string(),
                    "seg.layer_interval" => match self.seg.layer_interval {
                        None => "auto".to_string(),
                        Some(v) => v.to_string(),
                    },
                    "seg.outer_window" => self.seg.outer_window.to_string(),
                    "seg.inner_window" => self.seg.inner_window.to_string(),
                    "seg.min_area" => self.seg.min_area.to_string(),
                    "seg.max_area" => self.seg.max_area.to_string(),
                    "seg.tophat_k" => self.seg.tophat_k.to_string(),
                    "seg.tophat_radius" => self.seg.tophat_radius.to_string(),
                    "gate.alpha" => self.gate.alpha.to_string(),
                    "gate.beta" => self.gate.beta.to_string(),
                    "gate.gamma" => self.gate.gamma.to_string(),
                    "gate.delta" => self.gate.delta.to_string(),
                    "score.p_d" => self.score.p_d.to_string(),
                    "score.lambda_fa" => self.score.lambda_fa.to_string(),
                    "score.lambda_nt" => self.score.lambda_nt.to_string(),
                    "score.w_ltm" => self.score.w_ltm.to_string(),
                    "score.w_stm" => self.score.w_stm.to_string(),
                    "sel.k" => self.sel.k.to_string(),
                    "sel.c_in" => self.sel.c_in.to_string(),
                    "sel.l_t" => self.sel.l_t.to_string(),
                    "sel.node_budget" => self.sel.node_budget.to_string(),
                    "motion.q" => self.motion.q.to_string(),
                    "motion.r" => self.motion.r.to_string(),
                    "motion.p0_position" => self.motion.p0_position.to_string(),
                    "motion.p0_rate" => self.motion.p0_rate.to_string(),
                    "batch_length" => self.batch_length.to_string(),
                    "window_length" => self.window_length.to_string(),
                    "tree_depth" => self.tree_depth.to_string(),
                    "rank_fraction" => self.rank_fraction.to_string(),
                    "match_tolerance" => self.match_tolerance.to_string(),
                    "hypothesis_cap" => self.hypothesis_cap.to_string(),
                    "loop_merge_keep" => match self.loop_merge_keep {
                        LoopMergeKeep::Low => "low".to_string(),
                        LoopMergeKeep::High => "high".to_string(),
                    },
                    "mode" => self.mode.to_string(),
                    "interpolate" => self.interpolate.to_string(),
                    "ospa.c" => self.ospa_c.to_string(),
                    "ospa.l" => self.ospa_l.to_string(),
                    "ospa.p" => self.ospa_p.to_string(),
                    _ => unreachable!("key table and match arms disagree"),
                };
                (k, v)
            })
            .collect()
    }

    /// Checks every range constraint, naming the first offending key.
    pub fn validate(&self) -> Result<()> {
        let s = &self.seg;
        if !(s.k.is_finite()) {
            return Err(invalid("seg.k", "must be finite"));
        }
        if s.n_layers == 0 || s.n_layers.is_multiple_of(2) {
            return Err(invalid("seg.n_layers", "must be odd and at least 1"));
        }
        if let Some(iv) = s.layer_interval {
            if !(iv > 0.0 && iv.is_finite()) {
                return Err(invalid("seg.layer_interval", "must be positive"));
            }
        }
        if s.outer_window.is_multiple_of(2) {
            return Err(invalid("seg.outer_window", "must be odd"));
        }
        if s.inner_window.is_multiple_of(2) {
            return Err(invalid("seg.inner_window", "must be odd"));
        }
        if s.outer_window <= s.inner_window {
            return Err(invalid("seg.outer_window", "must exceed seg.inner_window"));
        }
        if s.min_area > s.max_area {
            return Err(invalid("seg.min_area", "must not exceed seg.max_area"));
        }
        if !(s.tophat_k.is_finite()) {
            return Err(invalid("seg.tophat_k", "must be finite"));
        }
        if s.tophat_radius == 0 {
            return Err(invalid("seg.tophat_radius", "must be at least 1"));
        }

        let g = &self.gate;
        for (key, v) in [
            ("gate.alpha", g.alpha),
            ("gate.beta", g.beta),
            ("gate.gamma", g.gamma),
            ("gate.delta", g.delta),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(key, "must be positive"));
            }
        }
        if g.delta > g.alpha * g.beta {
            return Err(invalid(
                "gate.delta",
                "must not exceed gate.alpha * gate.beta",
            ));
        }

        let sc = &self.score;
        if !(sc.p_d > 0.0 && sc.p_d < 1.0) {
            return Err(invalid("score.p_d", "must lie strictly between 0 and 1"));
        }
        if !(sc.lambda_fa > 0.0) {
            return Err(invalid("score.lambda_fa", "must be positive"));
        }
        if !(sc.lambda_nt > 0.0) {
            return Err(invalid("score.lambda_nt", "must be positive"));
        }
        if !(sc.w_ltm >= 0.0 && sc.w_stm >= 0.0) {
            return Err(invalid("score.w_ltm", "weights must be non-negative"));
        }

        if !(self.sel.k > 0.0) {
            return Err(invalid("sel.k", "must be positive"));
        }
        if !(self.sel.c_in >= 0.0) {
            return Err(invalid("sel.c_in", "must be non-negative"));
        }
        if self.sel.l_t < 1 {
            return Err(invalid("sel.l_t", "must be at least 1"));
        }
        if self.sel.node_budget == 0 {
            return Err(invalid("sel.node_budget", "must be positive"));
        }

        let m = &self.motion;
        for (key, v) in [
            ("motion.q", m.q),
            ("motion.r", m.r),
            ("motion.p0_position", m.p0_position),
            ("motion.p0_rate", m.p0_rate),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(key, "must be positive"));
            }
        }

        if self.batch_length == 0 {
            return Err(invalid("batch_length", "must be at least 1"));
        }
        if self.window_length < self.batch_length {
            return Err(invalid("window_length", "must be at least batch_length"));
        }
        if self.tree_depth < 2 {
            return Err(invalid("tree_depth", "must be at least 2"));
        }
        if !(self.rank_fraction > 0.0 && self.rank_fraction <= 1.0) {
            return Err(invalid("rank_fraction", "must lie in (0, 1]"));
        }
        if !(self.match_tolerance > 0.0) {
            return Err(invalid("match_tolerance", "must be positive"));
        }
        if self.hypothesis_cap == 0 {
            return Err(invalid("hypothesis_cap", "must be positive"));
        }
        if !(self.ospa_c > 0.0 && self.ospa_l >= 0.0 && self.ospa_p >= 1.0) {
            return Err(invalid("ospa.c", "need c > 0, l >= 0, p >= 1"));
        }
        Ok(())
    }
}
