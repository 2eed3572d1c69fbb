//! Synthetic scenes: sampled ground truth and rendered frames.
//!
//! Objects wander with a random-walk acceleration and bounce off the image
//! border. Crossing events are planted by launching the second object of a
//! pair from (almost) the position of the first at a chosen frame with a
//! fixed relative velocity, then integrating it forwards and backwards in
//! time; whether the pair really came close is checked afterwards.
//! Frames are Gaussian blobs on a noisy background.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use mastrack_core::types::TrackPoint;
use mastrack_core::{GrayImage, Trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::csvio;
use crate::error::{Error, Result};
use crate::frames;

/// Distance under which two ground-truth objects count as crossing.
pub const CROSSING_DISTANCE: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub n_objects: usize,
    pub n_frames: u32,
    pub width: usize,
    pub height: usize,
    /// Gray level added at a blob centre.
    pub peak: f64,
    pub sigma: f64,
    pub background: f64,
    pub noise_sigma: f64,
    /// Per-frame standard deviation of the acceleration increments, px/frame².
    pub accel_sigma: f64,
    pub speed_min: f64,
    pub speed_max: f64,
    pub crossing_events: usize,
    /// Speed of the second object of a planted crossing relative to the first.
    pub crossing_speed: f64,
    /// Probability that an object is invisible (and absent from the ground
    /// truth) at a frame.
    pub dropout: f64,
    /// Amplitude of a slow sinusoidal background bias; 0 disables it.
    pub ripple: f64,
    pub seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            n_objects: 100,
            n_frames: 100,
            width: 640,
            height: 480,
            peak: 40.0,
            sigma: 2.5,
            background: 40.0,
            noise_sigma: 4.0,
            accel_sigma: 0.03,
            speed_min: 0.5,
            speed_max: 2.5,
            crossing_events: 0,
            crossing_speed: 4.0,
            dropout: 0.0,
            ripple: 0.0,
            seed: 1,
        }
    }
}

const SPEC_KEYS: &[&str] = &[
    "n_objects",
    "n_frames",
    "width",
    "height",
    "peak",
    "sigma",
    "background",
    "noise_sigma",
    "accel_sigma",
    "speed_min",
    "speed_max",
    "crossing_events",
    "crossing_speed",
    "dropout",
    "ripple",
    "seed",
];

fn num<T: FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
    v.trim()
        .parse()
        .map_err(|_| format!("bad value `{}` for {key}", v.trim()))
}

impl ScenarioSpec {
    pub fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        match key {
            "n_objects" => self.n_objects = num(key, v)?,
            "n_frames" => self.n_frames = num(key, v)?,
            "width" => self.width = num(key, v)?,
            "height" => self.height = num(key, v)?,
            "peak" => self.peak = num(key, v)?,
            "sigma" => self.sigma = num(key, v)?,
            "background" => self.background = num(key, v)?,
            "noise_sigma" => self.noise_sigma = num(key, v)?,
            "accel_sigma" => self.accel_sigma = num(key, v)?,
            "speed_min" => self.speed_min = num(key, v)?,
            "speed_max" => self.speed_max = num(key, v)?,
            "crossing_events" => self.crossing_events = num(key, v)?,
            "crossing_speed" => self.crossing_speed = num(key, v)?,
            "dropout" => self.dropout = num(key, v)?,
            "ripple" => self.ripple = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            other => return Err(format!("unknown scenario key `{other}`")),
        }
        Ok(())
    }

    pub fn entries(&self) -> Vec<(&'static str, String)> {
        SPEC_KEYS
            .iter()
            .map(|&k| {
                let v = match k {
                    "n_objects" => self.n_objects.to_string(),
                    "n_frames" => self.n_frames.to_string(),
                    "width" => self.width.to_string(),
                    "height" => self.height.to_string(),
                    "peak" => self.peak.to_string(),
                    "sigma" => self.sigma.to_string(),
                    "background" => self.background.to_string(),
                    "noise_sigma" => self.noise_sigma.to_string(),
                    "accel_sigma" => self.accel_sigma.to_string(),
                    "speed_min" => self.speed_min.to_string(),
                    "speed_max" => self.speed_max.to_string(),
                    "crossing_events" => self.crossing_events.to_string(),
                    "crossing_speed" => self.crossing_speed.to_string(),
                    "dropout" => self.dropout.to_string(),
                    "ripple" => self.ripple.to_string(),
                    "seed" => self.seed.to_string(),
                    _ => unreachable!(),
                };
                (k, v)
            })
            .collect()
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        let margin = self.margin();
        if self.n_frames == 0 {
            return Err("n_frames must be at least 1".into());
        }
        if (self.width as f64) <= 2.0 * margin + 1.0 || (self.height as f64) <= 2.0 * margin + 1.0 {
            return Err("image too small for the blob size".into());
        }
        if !(self.sigma > 0.0) {
            return Err("sigma must be positive".into());
        }
        for (k, v) in [
            ("peak", self.peak),
            ("background", self.background),
            ("noise_sigma", self.noise_sigma),
            ("accel_sigma", self.accel_sigma),
            ("speed_min", self.speed_min),
            ("crossing_speed", self.crossing_speed),
            ("ripple", self.ripple),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(format!("{k} must be finite and non-negative"));
            }
        }
        if !(self.speed_max >= self.speed_min && self.speed_max.is_finite()) {
            return Err("speed_max must be at least speed_min".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err("dropout must lie in [0, 1)".into());
        }
        if 2 * self.crossing_events > self.n_objects {
            return Err("crossing_events needs two objects per event".into());
        }
        Ok(())
    }

    /// Objects stay this far inside the image.
    pub fn margin(&self) -> f64 {
        (3.0 * self.sigma).max(2.0)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    pub fn from_text(text: &str, origin: &Path) -> Result<Self> {
        let mut spec = ScenarioSpec::default();
        for (n, line) in text.lines().enumerate() {
            let line_no = n as u64 + 1;
            match crate::conf::split_line(line) {
                None => {}
                Some(Err(msg)) => return Err(Error::parse(origin, line_no, msg)),
                Some(Ok((k, v))) => spec
                    .set(k, v)
                    .map_err(|m| Error::parse(origin, line_no, m))?,
            }
        }
        spec.validate()
            .map_err(|m| Error::Invalid(format!("{}: {m}", origin.display())))?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, path)
    }
}

/// Two ground-truth objects closer than `CROSSING_DISTANCE`; one event per
/// contiguous run of close frames, reported at its closest frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingEvent {
    pub frame: u32,
    pub a: u64,
    pub b: u64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    /// Track ids `1..=n_objects`.
    pub truth: Vec<Trajectory>,
    pub crossings: Vec<CrossingEvent>,
    /// Objects paired by a planted crossing, with the planted frame.
    pub planted: Vec<(u64, u64, u32)>,
}

#[derive(Debug, Clone, Copy)]
struct Body {
    p: [f64; 2],
    v: [f64; 2],
    a: [f64; 2],
}

struct Walker<'a> {
    spec: &'a ScenarioSpec,
    accel: Normal<f64>,
    lo: [f64; 2],
    hi: [f64; 2],
}

impl Walker<'_> {
    fn step(&self, b: &mut Body, cap: f64, rng: &mut ChaCha8Rng) {
        for k in 0..2 {
            b.a[k] += self.accel.sample(rng);
            b.v[k] += b.a[k];
        }
        let speed = b.v[0].hypot(b.v[1]);
        if speed > cap {
            b.v = [b.v[0] * cap / speed, b.v[1] * cap / speed];
            b.a = [0.0; 2];
        } else if speed < self.spec.speed_min && speed > 0.0 {
            b.a = [0.0; 2];
        }
        for k in 0..2 {
            b.p[k] += b.v[k];
            if b.p[k] < self.lo[k] {
                b.p[k] = 2.0 * self.lo[k] - b.p[k];
                b.v[k] = -b.v[k];
                b.a[k] = -b.a[k];
            } else if b.p[k] > self.hi[k] {
                b.p[k] = 2.0 * self.hi[k] - b.p[k];
                b.v[k] = -b.v[k];
                b.a[k] = -b.a[k];
            }
            b.p[k] = b.p[k].clamp(self.lo[k], self.hi[k]);
        }
    }

    /// Positions at `count` consecutive frames starting from `b`.
    fn run(&self, mut b: Body, count: usize, cap: f64, rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
        let mut out = Vec::with_capacity(count);
        for i in 0..count {
            if i > 0 {
                self.step(&mut b, cap, rng);
            }
            out.push(b.p);
        }
        out
    }
}

fn launch(speed: f64, rng: &mut ChaCha8Rng) -> [f64; 2] {
    let th = rng.random_range(0.0..TAU);
    [speed * th.cos(), speed * th.sin()]
}

impl Scenario {
    pub fn generate(spec: &ScenarioSpec) -> Result<Self> {
        spec.validate().map_err(Error::Invalid)?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let m = spec.margin();
        let walker = Walker {
            spec,
            accel: Normal::new(0.0, spec.accel_sigma).expect("non-negative sigma"),
            lo: [m, m],
            hi: [spec.width as f64 - 1.0 - m, spec.height as f64 - 1.0 - m],
        };
        let n = spec.n_frames as usize;
        let mut paths: Vec<Vec<[f64; 2]>> = Vec::with_capacity(spec.n_objects);
        let mut planted = Vec::new();
        let mut i = 0;
        while i < spec.n_objects {
            let start = Body {
                p: [
                    rng.random_range(walker.lo[0]..=walker.hi[0]),
                    rng.random_range(walker.lo[1]..=walker.hi[1]),
                ],
                v: launch(rng.random_range(spec.speed_min..=spec.speed_max), &mut rng),
                a: [0.0; 2],
            };
            let first = walker.run(start, n, spec.speed_max, &mut rng);
            if planted.len() < spec.crossing_events {
                // the partner passes through `first` at frame `tc`
                let lo = n / 4;
                let tc = rng.random_range(lo..=(n - 1 - lo).max(lo));
                let here = first[tc];
                let v_first = if tc + 1 < n {
                    [first[tc + 1][0] - here[0], first[tc + 1][1] - here[1]]
                } else {
                    [0.0; 2]
                };
                let rel = launch(spec.crossing_speed, &mut rng);
                let off = launch(rng.random_range(0.0..=1.0), &mut rng);
                let p = [
                    (here[0] + off[0]).clamp(walker.lo[0], walker.hi[0]),
                    (here[1] + off[1]).clamp(walker.lo[1], walker.hi[1]),
                ];
                let v = [v_first[0] + rel[0], v_first[1] + rel[1]];
                let cap = spec.speed_max.max(v[0].hypot(v[1]));
                let fwd = walker.run(Body { p, v, a: [0.0; 2] }, n - tc, cap, &mut rng);
                let mut back = walker.run(
                    Body {
                        p,
                        v: [-v[0], -v[1]],
                        a: [0.0; 2],
                    },
                    tc + 1,
                    cap,
                    &mut rng,
                );
                back.reverse();
                back.pop();
                back.extend(fwd);
                paths.push(first);
                paths.push(back);
                planted.push((i as u64 + 1, i as u64 + 2, tc as u32 + 1));
                i += 2;
            } else {
                paths.push(first);
                i += 1;
            }
        }
        let truth: Vec<Trajectory> = paths
            .iter()
            .enumerate()
            .map(|(k, path)| Trajectory {
                track_id: k as u64 + 1,
                points: path
                    .iter()
                    .enumerate()
                    .filter(|_| spec.dropout == 0.0 || rng.random::<f64>() >= spec.dropout)
                    .map(|(t, p)| TrackPoint {
                        frame: t as u32 + 1,
                        x: p[0],
                        y: p[1],
                    })
                    .collect(),
            })
            .collect();
        let crossings = find_crossings(&truth, CROSSING_DISTANCE);
        Ok(Scenario {
            spec: spec.clone(),
            truth,
            crossings,
            planted,
        })
    }

    /// Ground-truth points of one frame.
    pub fn points_at(&self, frame: u32) -> Vec<(f64, f64)> {
        self.truth
            .iter()
            .filter_map(|t| t.point_at(frame))
            .map(|p| (p.x, p.y))
            .collect()
    }

    /// Renders one frame. Noise is drawn from a stream of its own so any
    /// frame can be produced independently of the others.
    pub fn render(&self, frame: u32) -> GrayImage {
        let s = &self.spec;
        let (w, h) = (s.width, s.height);
        let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
        rng.set_stream(frame as u64);
        let noise = Normal::new(0.0, s.noise_sigma).expect("non-negative sigma");
        let mut buf = vec![0f64; w * h];
        for y in 0..h {
            for x in 0..w {
                let mut v = s.background + noise.sample(&mut rng);
                if s.ripple > 0.0 {
                    v += s.ripple
                        * (TAU * (x as f64 / 97.0 + y as f64 / 131.0) + 0.05 * frame as f64).sin();
                }
                buf[y * w + x] = v;
            }
        }
        let reach = (4.0 * s.sigma).ceil();
        let inv = 1.0 / (2.0 * s.sigma * s.sigma);
        for (cx, cy) in self.points_at(frame) {
            let x0 = (cx - reach).max(0.0) as usize;
            let x1 = ((cx + reach) as usize).min(w - 1);
            let y0 = (cy - reach).max(0.0) as usize;
            let y1 = ((cy + reach) as usize).min(h - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                    buf[y * w + x] += s.peak * (-d2 * inv).exp();
                }
            }
        }
        let data = buf
            .iter()
            .map(|v| v.round().clamp(0.0, 255.0) as u8)
            .collect();
        GrayImage::from_raw(w, h, data).expect("buffer matches dimensions")
    }

    /// Writes `frames/`, `gt.csv`, `scenario.txt` and `crossings.csv` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let fdir = dir.join("frames");
        std::fs::create_dir_all(&fdir).map_err(|e| Error::io(&fdir, e))?;
        for t in 1..=self.spec.n_frames {
            frames::save_pgm(&fdir.join(frames::frame_name(t, "pgm")), &self.render(t))?;
        }
        csvio::write_trajectories(&dir.join("gt.csv"), &self.truth)?;
        let mut manifest = self.spec.to_text();
        let _ = writeln!(manifest, "# verified crossings: {}", self.crossings.len());
        let p = dir.join("scenario.txt");
        std::fs::write(&p, manifest).map_err(|e| Error::io(&p, e))?;
        let mut c = String::from("frame,a,b,distance\n");
        for e in &self.crossings {
            let _ = writeln!(c, "{},{},{},{:.3}", e.frame, e.a, e.b, e.distance);
        }
        let p = dir.join("crossings.csv");
        std::fs::write(&p, c).map_err(|e| Error::io(&p, e))
    }
}

/// All close approaches between pairs of tracks.
pub fn find_crossings(tracks: &[Trajectory], limit: f64) -> Vec<CrossingEvent> {
    let mut out = Vec::new();
    for (i, a) in tracks.iter().enumerate() {
        for b in &tracks[i + 1..] {
            let mut run: Option<CrossingEvent> = None;
            let mut last_frame = 0;
            for p in &a.points {
                let close = b
                    .point_at(p.frame)
                    .map(|q| (p.x - q.x).hypot(p.y - q.y))
                    .filter(|&d| d < limit);
                match (close, run.as_mut()) {
                    (Some(d), Some(ev)) if p.frame == last_frame + 1 => {
                        if d < ev.distance {
                            ev.frame = p.frame;
                            ev.distance = d;
                        }
                    }
                    (Some(d), _) => {
                        out.extend(run.take());
                        run = Some(CrossingEvent {
                            frame: p.frame,
                            a: a.track_id,
                            b: b.track_id,
                            distance: d,
                        });
                    }
                    (None, _) => out.extend(run.take()),
                }
                if close.is_some() {
                    last_frame = p.frame;
                }
            }
            out.extend(run);
        }
    }
    out.sort_by_key(|x| (x.frame, x.a, x.b));
    out
}
