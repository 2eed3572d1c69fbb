use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mastrack::pipeline::{self, StageTimes, TrackOptions};
use mastrack::synth::{Scenario, ScenarioSpec};
use mastrack::{conf, csvio, overlay, Error, Result};
use mastrack_core::metrics::evaluate;
use mastrack_core::{FrameMeasurements, PipelineConfig, SelectionMode};

#[derive(Parser)]
#[command(
    name = "mastrack",
    version,
    about = "Detect and track many small objects in image sequences"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct ConfigArgs {
    /// Configuration file of `key=value` lines.
    #[arg(short = 'c', long = "config", value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = conf::parse_override)]
    set: Vec<(String, String)>,
}

impl ConfigArgs {
    fn load(&self, mode: Option<SelectionMode>) -> Result<PipelineConfig> {
        let mut cfg = conf::load_config(self.config.as_deref(), &self.set)?;
        if let Some(m) = mode {
            cfg.mode = m;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct TrackFlags {
    /// Selection mode.
    #[arg(long, value_name = "one-to-many|one-to-one")]
    mode: Option<SelectionMode>,
    /// Write frames with the last 30 frames of every trajectory drawn on them.
    #[arg(long, value_name = "DIR")]
    overlay: Option<PathBuf>,
    /// Write the 0-1 program of every selection as an LP file.
    #[arg(long = "dump-lp", value_name = "DIR")]
    dump_lp: Option<PathBuf>,
    /// Write per-frame tree sizes and best scores as CSV.
    #[arg(long = "dump-forest", value_name = "FILE")]
    dump_forest: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Segment every frame of an image directory into detections.
    Detect {
        img_dir: PathBuf,
        #[arg(short, long, value_name = "FILE")]
        out: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Link detections (a CSV file or an image directory) into trajectories.
    Track {
        input: PathBuf,
        #[arg(short, long, value_name = "FILE")]
        out: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        flags: TrackFlags,
    },
    /// Score trajectories against ground truth.
    Eval {
        gt: PathBuf,
        tracks: PathBuf,
        /// Metrics as a one-row CSV.
        #[arg(short, long, value_name = "FILE")]
        out: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Generate a synthetic scene: frames, ground truth and a manifest.
    Synth {
        /// Scenario file of `key=value` lines; defaults when omitted.
        spec: Option<PathBuf>,
        #[arg(short, long, value_name = "DIR")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Override one scenario key; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE", value_parser = conf::parse_override)]
        set: Vec<(String, String)>,
    },
    /// Detect, track and evaluate in one go.
    Pipeline {
        img_dir: PathBuf,
        gt: PathBuf,
        /// Directory for tracks.csv, report.csv and timing.txt.
        #[arg(short, long, value_name = "DIR", default_value = "mastrack_out")]
        out: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        flags: TrackFlags,
    },
}

fn run_tracking(
    dets: &[FrameMeasurements],
    frame_files: Option<&[PathBuf]>,
    cfg: &PipelineConfig,
    flags: &TrackFlags,
    times: &mut StageTimes,
) -> Result<Vec<mastrack_core::Trajectory>> {
    let opts = TrackOptions {
        compare_modes: false,
        keep_programs: flags.dump_lp.is_some(),
        log_forest: flags.dump_forest.is_some(),
    };
    let out = pipeline::track(dets, cfg, opts, times)?;
    if let Some(dir) = &flags.dump_lp {
        pipeline::write_programs(dir, &out.programs)?;
    }
    if let Some(p) = &flags.dump_forest {
        pipeline::write_text(p, &pipeline::forest_csv(&out.forest_log))?;
    }
    if let Some(dir) = &flags.overlay {
        let files = frame_files
            .ok_or_else(|| Error::Invalid("--overlay needs an image directory as input".into()))?;
        overlay::write_overlays(files, &out.trajectories, dir)?;
    }
    Ok(out.trajectories)
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Detect { img_dir, out, cfg } => {
            let cfg = cfg.load(None)?;
            let mut times = StageTimes::default();
            let (_, dets) = pipeline::detect_dir(&img_dir, &cfg.seg, &mut times)?;
            csvio::write_detections(&out, &dets)?;
            eprint!("{}", times.log());
        }
        Cmd::Track {
            input,
            out,
            cfg,
            flags,
        } => {
            let cfg = cfg.load(flags.mode)?;
            let mut times = StageTimes::default();
            let (files, dets) = if input.is_dir() {
                let (f, d) = pipeline::detect_dir(&input, &cfg.seg, &mut times)?;
                (Some(f), d)
            } else {
                (None, csvio::read_detections(&input, None)?.into_frames())
            };
            let tracks = run_tracking(&dets, files.as_deref(), &cfg, &flags, &mut times)?;
            csvio::write_trajectories(&out, &tracks)?;
            eprint!("{}", times.log());
        }
        Cmd::Eval {
            gt,
            tracks,
            out,
            cfg,
        } => {
            let cfg = cfg.load(None)?;
            let gt = csvio::read_trajectories(&gt)?;
            let est = csvio::read_trajectories(&tracks)?;
            let report = evaluate(&gt, &est, &cfg);
            print!("{}", pipeline::report_table(&report));
            if let Some(p) = out {
                pipeline::write_text(&p, &pipeline::report_csv(&report))?;
            }
        }
        Cmd::Synth {
            spec,
            out,
            seed,
            set,
        } => {
            let mut s = match &spec {
                Some(p) => ScenarioSpec::load(p)?,
                None => ScenarioSpec::default(),
            };
            for (k, v) in &set {
                s.set(k, v)
                    .map_err(|e| Error::Invalid(format!("--set {k}={v}: {e}")))?;
            }
            if let Some(seed) = seed {
                s.seed = seed;
            }
            s.validate().map_err(Error::Invalid)?;
            let scene = Scenario::generate(&s)?;
            scene.write(&out)?;
            eprintln!(
                "{} objects, {} frames, {} verified crossings",
                scene.truth.len(),
                s.n_frames,
                scene.crossings.len()
            );
        }
        Cmd::Pipeline {
            img_dir,
            gt,
            out,
            cfg,
            flags,
        } => {
            let cfg = cfg.load(flags.mode)?;
            let truth = csvio::read_trajectories(&gt)?;
            let mut times = StageTimes::default();
            let (files, dets) = pipeline::detect_dir(&img_dir, &cfg.seg, &mut times)?;
            let tracks = run_tracking(&dets, Some(&files), &cfg, &flags, &mut times)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            csvio::write_trajectories(&out.join("tracks.csv"), &tracks)?;
            let report = evaluate(&truth, &tracks, &cfg);
            pipeline::write_text(&out.join("report.csv"), &pipeline::report_csv(&report))?;
            pipeline::write_text(&out.join("timing.txt"), &times.log())?;
            print!("{}", pipeline::report_table(&report));
            eprint!("{}", times.log());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mastrack: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
