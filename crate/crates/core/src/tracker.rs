//! Frame-by-frame driver: forest updates, batch selection and trajectory
//! output.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::time::Duration;

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::mmht::{HypothesisForest, StepStats, TreeSummary};
use crate::selection::{resolve_batch, BatchOutcome};
use crate::types::{FrameMeasurements, TrackPoint, Trajectory};

/// Summary of one selection.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchStats {
    pub frame: u32,
    pub candidates: usize,
    pub pairs: usize,
    pub exclusions: usize,
    pub chosen: usize,
    pub objective: f64,
    pub alternate_objective: Option<f64>,
    pub nodes: u64,
    pub optimal: bool,
    pub pruned_trees: usize,
    pub elapsed: Option<Duration>,
}

impl BatchStats {
    fn from_outcome(o: &BatchOutcome) -> Self {
        BatchStats {
            frame: o.frame,
            candidates: o.candidates.len(),
            pairs: o.program.pairs.len(),
            exclusions: o.program.exclusions.len(),
            chosen: o.result.chosen.len(),
            objective: o.result.objective,
            alternate_objective: o.alternate_objective,
            nodes: o.result.nodes,
            optimal: o.result.optimal,
            pruned_trees: o.pruned_trees,
            elapsed: o.result.elapsed,
        }
    }
}

/// Accumulated wall time, available when a clock was supplied.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Timing {
    pub hypotheses: Duration,
    pub selection: Duration,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrackingOutput {
    /// Non-empty trajectories ordered by track id.
    pub trajectories: Vec<Trajectory>,
    pub batches: Vec<BatchStats>,
    pub steps: Vec<StepStats>,
    /// `(frame, lp text)` per selection, when requested.
    pub programs: Vec<(u32, String)>,
    /// `(frame, tree summary)` per frame, when requested.
    pub forest_log: Vec<(u32, TreeSummary)>,
    pub timing: Timing,
}

#[derive(Debug, Clone)]
pub struct Tracker {
    cfg: PipelineConfig,
    forest: HypothesisForest,
    /// Recent frames, oldest first.
    recent: Vec<FrameMeasurements>,
    tracks: BTreeMap<u64, Trajectory>,
    last_frame: u32,
    out: TrackingOutput,
    clock: Option<fn() -> Duration>,
    compare_modes: bool,
    keep_programs: bool,
    log_forest: bool,
}

impl Tracker {
    pub fn new(cfg: PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Tracker {
            cfg,
            forest: HypothesisForest::new(),
            recent: Vec::new(),
            tracks: BTreeMap::new(),
            last_frame: 0,
            out: TrackingOutput::default(),
            clock: None,
            compare_modes: false,
            keep_programs: false,
            log_forest: false,
        })
    }

    /// Monotonic time source used for stage timing.
    pub fn with_clock(mut self, clock: fn() -> Duration) -> Self {
        self.clock = Some(clock);
        self
    }

    /// Also solve every batch under the other selection mode and record its
    /// objective.
    pub fn with_mode_comparison(mut self, on: bool) -> Self {
        self.compare_modes = on;
        self
    }

    pub fn with_program_dump(mut self, on: bool) -> Self {
        self.keep_programs = on;
        self
    }

    pub fn with_forest_log(mut self, on: bool) -> Self {
        self.log_forest = on;
        self
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn forest(&self) -> &HypothesisForest {
        &self.forest
    }

    fn now(&self) -> Option<Duration> {
        self.clock.map(|c| c())
    }

    fn since(&self, start: Option<Duration>) -> Duration {
        match (start, self.now()) {
            (Some(a), Some(b)) => b.saturating_sub(a),
            _ => Duration::ZERO,
        }
    }

    /// Feeds the next frame; frames must arrive as 1, 2, 3, …
    pub fn push_frame(&mut self, frame: &FrameMeasurements) -> Result<StepStats> {
        let t = frame.frame();
        if t != self.last_frame + 1 {
            return Err(Error::Frames(format!(
                "expected frame {}, got {t}",
                self.last_frame + 1
            )));
        }
        let start = self.now();
        let stats = self.forest.step(frame, &self.cfg);
        self.out.timing.hypotheses += self.since(start);
        self.last_frame = t;
        self.recent.push(frame.clone());
        let keep = (self.cfg.window_length + self.cfg.batch_length + 1) as usize;
        if self.recent.len() > keep {
            let excess = self.recent.len() - keep;
            self.recent.drain(..excess);
        }
        if self.log_forest {
            for s in self.forest.summary() {
                self.out.forest_log.push((t, s));
            }
        }
        self.out.steps.push(stats);
        if t.is_multiple_of(self.cfg.batch_length) {
            let upto = (t + self.cfg.batch_length).saturating_sub(self.cfg.window_length);
            self.resolve(upto);
        }
        Ok(stats)
    }

    fn resolve(&mut self, commit_upto: u32) {
        let start = self.now();
        let mut outcome = resolve_batch(
            &mut self.forest,
            self.last_frame,
            commit_upto,
            &self.cfg,
            self.compare_modes,
        );
        let spent = self.since(start);
        if self.clock.is_some() {
            outcome.result.elapsed = Some(spent);
        }
        self.out.timing.selection += spent;
        let first = self.recent.first().map_or(1, |f| f.frame());
        for (id, refs) in &outcome.commits {
            let track = self
                .tracks
                .entry(*id)
                .or_insert_with(|| Trajectory::new(*id));
            for r in refs {
                let Some(m) = r
                    .frame
                    .checked_sub(first)
                    .and_then(|i| self.recent.get(i as usize))
                    .and_then(|f| f.get(r.index))
                else {
                    continue;
                };
                track.push(TrackPoint {
                    frame: r.frame,
                    x: m.x,
                    y: m.y,
                });
            }
        }
        if self.keep_programs {
            self.out
                .programs
                .push((outcome.frame, outcome.program.lp_text()));
        }
        self.out.batches.push(BatchStats::from_outcome(&outcome));
    }

    /// Final selection committing everything still pending.
    pub fn finish(mut self) -> TrackingOutput {
        if self.last_frame > 0 {
            self.resolve(self.last_frame);
        }
        let interpolate = self.cfg.interpolate;
        self.out.trajectories = self
            .tracks
            .into_values()
            .filter(|t| !t.points.is_empty())
            .map(|t| if interpolate { t.interpolated() } else { t })
            .collect();
        self.out
    }
}

/// Runs a whole sequence.
pub fn track_all(frames: &[FrameMeasurements], cfg: &PipelineConfig) -> Result<TrackingOutput> {
    let mut tracker = Tracker::new(cfg.clone())?;
    for f in frames {
        tracker.push_frame(f)?;
    }
    Ok(tracker.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SelectionMode;
    use crate::types::{FrameSet, Measurement, MeasurementRef};
    use alloc::vec;
    use alloc::vec::Vec;

    fn frames(tracks: &[Vec<(f64, f64)>], n: u32) -> Vec<FrameMeasurements> {
        let dets = (1..=n).flat_map(|t| {
            tracks
                .iter()
                .filter_map(move |tr| tr.get(t as usize - 1))
                .map(move |&(x, y)| Measurement::new(t, 0, x, y))
        });
        FrameSet::from_detections(dets, Some(n))
            .unwrap()
            .into_frames()
    }

    fn line(x0: f64, y0: f64, vx: f64, vy: f64, n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|k| (x0 + vx * k as f64, y0 + vy * k as f64))
            .collect()
    }

    #[test]
    fn single_chain_is_one_trajectory() {
        let c = PipelineConfig::default();
        let fs = frames(&[line(10.0, 10.0, 1.5, 0.5, 20)], 20);
        let out = track_all(&fs, &c).unwrap();
        assert_eq!(out.trajectories.len(), 1);
        assert_eq!(out.trajectories[0].points.len(), 20);
        assert_eq!(out.batches.len(), 2);
    }

    #[test]
    fn long_sequence_spans_batches() {
        let c = PipelineConfig::default();
        let fs = frames(
            &[
                line(10.0, 10.0, 1.0, 0.0, 95),
                line(10.0, 200.0, 0.0, 1.0, 95),
            ],
            95,
        );
        let out = track_all(&fs, &c).unwrap();
        assert_eq!(out.trajectories.len(), 2);
        for t in &out.trajectories {
            assert_eq!(t.points.len(), 95);
            assert!(t.points.windows(2).all(|w| w[0].frame + 1 == w[1].frame));
        }
    }

    #[test]
    fn nothing_to_track() {
        let c = PipelineConfig::default();
        let fs = frames(&[], 25);
        let out = track_all(&fs, &c).unwrap();
        assert!(out.trajectories.is_empty());
    }

    #[test]
    fn frames_must_be_sequential() {
        let mut tr = Tracker::new(PipelineConfig::default()).unwrap();
        let fs = frames(&[line(0.0, 0.0, 1.0, 1.0, 3)], 3);
        assert!(tr.push_frame(&fs[1]).is_err());
        assert!(tr.push_frame(&fs[0]).is_ok());
    }

    #[test]
    fn crossing_shares_the_merged_point() {
        // straight lines crossing at a shallow angle; while closer than two
        // pixels the pair yields a single merged detection
        let n = 40usize;
        let jitter = |k: usize, phase: f64| 0.3 * libm::sin(1.7 * k as f64 + phase);
        let dets = (0..n).flat_map(|k| {
            let x = 20.0 + 2.0 * k as f64;
            let off = 0.5 * (k as f64 - 20.0);
            let t = k as u32 + 1;
            let a = (x + jitter(k, 0.0), 100.0 + off + jitter(k, 1.0));
            let b = (x + jitter(k, 2.0), 100.0 - off + jitter(k, 3.0));
            let pts = if (2.0 * off).abs() < 2.0 {
                vec![((a.0 + b.0) / 2.0, (a.1 + b.1) / 2.0)]
            } else {
                vec![a, b]
            };
            pts.into_iter()
                .map(move |(x, y)| Measurement::new(t, 0, x, y))
        });
        let fs = FrameSet::from_detections(dets, Some(n as u32))
            .unwrap()
            .into_frames();
        let mut c = PipelineConfig::default();
        let many = track_all(&fs, &c).unwrap();
        c.mode = SelectionMode::OneToOne;
        let one = track_all(&fs, &c).unwrap();
        let long = |o: &TrackingOutput| {
            o.trajectories
                .iter()
                .filter(|t| t.points.len() >= n - 2)
                .count()
        };
        assert_eq!(long(&many), 2);
        let merged = MeasurementRef {
            frame: 21,
            index: 1,
        };
        let at = |o: &TrackingOutput| {
            o.trajectories
                .iter()
                .filter(|t| t.point_at(merged.frame).is_some())
                .count()
        };
        assert_eq!(at(&many), 2);
        assert!(long(&one) < 2);
    }
}
