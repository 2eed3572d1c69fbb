//! Detection and tracking over whole sequences, with per-stage timing and
//! the report and debug files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use mastrack_core::config::SegParams;
use mastrack_core::metrics::MetricsReport;
use mastrack_core::mmht::TreeSummary;
use mastrack_core::segmentation::detect;
use mastrack_core::{FrameMeasurements, GrayImage, PipelineConfig, Tracker, TrackingOutput};

use crate::error::{Error, Result};
use crate::frames;

/// Monotonic time since the first call.
pub fn clock() -> Duration {
    static START: OnceLock<Instant> = OnceLock::new();
    START.get_or_init(Instant::now).elapsed()
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimes {
    pub frames: usize,
    pub load: Duration,
    pub detect: Duration,
    pub hypotheses: Duration,
    pub selection: Duration,
}

impl StageTimes {
    /// Detection plus tracking; image decoding is reported but not counted.
    pub fn processing(&self) -> Duration {
        self.detect + self.hypotheses + self.selection
    }

    pub fn ms_per_frame(&self) -> f64 {
        if self.frames == 0 {
            0.0
        } else {
            self.processing().as_secs_f64() * 1e3 / self.frames as f64
        }
    }

    pub fn selection_share(&self) -> f64 {
        let total = self.processing().as_secs_f64();
        if total > 0.0 {
            self.selection.as_secs_f64() / total
        } else {
            0.0
        }
    }

    pub fn log(&self) -> String {
        let ms = |d: Duration| d.as_secs_f64() * 1e3;
        let mut s = String::new();
        let _ = writeln!(s, "frames      {}", self.frames);
        let _ = writeln!(s, "load        {:10.1} ms", ms(self.load));
        let _ = writeln!(s, "detect      {:10.1} ms", ms(self.detect));
        let _ = writeln!(s, "hypotheses  {:10.1} ms", ms(self.hypotheses));
        let _ = writeln!(
            s,
            "selection   {:10.1} ms ({:.1}%)",
            ms(self.selection),
            100.0 * self.selection_share()
        );
        let _ = writeln!(s, "per frame   {:10.2} ms", self.ms_per_frame());
        s
    }
}

/// Runs the detector over images in order; frame numbers start at 1.
pub fn detect_images<I>(
    images: I,
    seg: &SegParams,
    times: &mut StageTimes,
) -> Result<Vec<FrameMeasurements>>
where
    I: IntoIterator<Item = Result<GrayImage>>,
{
    let mut out = Vec::new();
    let mut last = clock();
    for (k, img) in images.into_iter().enumerate() {
        let img = img?;
        let loaded = clock();
        times.load += loaded - last;
        out.push(detect(&img, seg, k as u32 + 1)?);
        last = clock();
        times.detect += last - loaded;
    }
    times.frames = times.frames.max(out.len());
    Ok(out)
}

pub fn detect_dir(
    dir: &Path,
    seg: &SegParams,
    times: &mut StageTimes,
) -> Result<(Vec<PathBuf>, Vec<FrameMeasurements>)> {
    let files = frames::list_frames(dir)?;
    let dets = detect_images(files.iter().map(|f| frames::load_gray(f)), seg, times)?;
    Ok((files, dets))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrackOptions {
    pub compare_modes: bool,
    pub keep_programs: bool,
    pub log_forest: bool,
}

pub fn track(
    frames: &[FrameMeasurements],
    cfg: &PipelineConfig,
    opts: TrackOptions,
    times: &mut StageTimes,
) -> Result<TrackingOutput> {
    let mut tracker = Tracker::new(cfg.clone())?
        .with_clock(clock)
        .with_mode_comparison(opts.compare_modes)
        .with_program_dump(opts.keep_programs)
        .with_forest_log(opts.log_forest);
    for f in frames {
        tracker.push_frame(f)?;
    }
    let out = tracker.finish();
    times.frames = times.frames.max(frames.len());
    times.hypotheses += out.timing.hypotheses;
    times.selection += out.timing.selection;
    Ok(out)
}

/// One `batch_NNNNN.lp` file per selection.
pub fn write_programs(dir: &Path, programs: &[(u32, String)]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (frame, text) in programs {
        let p = dir.join(format!("batch_{frame:05}.lp"));
        std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
    }
    Ok(())
}

pub fn forest_csv(log: &[(u32, TreeSummary)]) -> String {
    let mut s = String::from("frame,tree_id,leaves,best_S\n");
    for (f, t) in log {
        let _ = writeln!(s, "{f},{},{},{:.6}", t.tree_id, t.leaves, t.best_s);
    }
    s
}

fn fmt_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v:.0}")
    } else {
        format!("{v:.6}")
    }
}

/// Header line plus one row.
pub fn report_csv(r: &MetricsReport) -> String {
    let mut s = MetricsReport::COLUMNS.join(",");
    s.push('\n');
    s.push_str(
        &r.values()
            .iter()
            .map(|&v| fmt_value(v))
            .collect::<Vec<_>>()
            .join(","),
    );
    s.push('\n');
    s
}

pub fn report_table(r: &MetricsReport) -> String {
    let mut s = String::new();
    for (k, v) in MetricsReport::COLUMNS.iter().zip(r.values()) {
        let _ = writeln!(s, "{k:<8} {}", fmt_value(v));
    }
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
