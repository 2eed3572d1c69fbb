//! Detection and trajectory CSV files.
//!
//! Coordinates are written with three decimals so that output is
//! byte-stable across runs and platforms.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use mastrack_core::types::TrackPoint;
use mastrack_core::{FrameMeasurements, FrameSet, Measurement, Trajectory};

use crate::error::{Error, Result};

pub const DETECTION_HEADER: [&str; 6] = ["frame", "index", "x", "y", "area", "mean_intensity"];
pub const TRAJECTORY_HEADER: [&str; 4] = ["frame", "track_id", "x", "y"];

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(r)
}

fn check_header<R: Read>(rd: &mut csv::Reader<R>, want: &[&str], path: &Path) -> Result<()> {
    let h = rd.headers().map_err(|e| Error::csv(path, e))?;
    if h.iter().ne(want.iter().copied()) {
        return Err(Error::parse(
            path,
            1,
            format!(
                "expected header `{}`, found `{}`",
                want.join(","),
                h.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    Ok(())
}

fn field<T: FromStr>(rec: &csv::StringRecord, i: usize, name: &str, path: &Path) -> Result<T> {
    let line = rec.position().map_or(0, |p| p.line());
    let raw = rec.get(i).unwrap_or("");
    raw.parse()
        .map_err(|_| Error::parse(path, line, format!("bad {name} `{raw}`")))
}

fn finite(v: f64, name: &str, rec: &csv::StringRecord, path: &Path) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        let line = rec.position().map_or(0, |p| p.line());
        Err(Error::parse(path, line, format!("{name} must be finite")))
    }
}

/// Reads detections. Rows may come in any order; within a frame they are
/// ordered by their `index` column, which must be ≥ 1 and unique.
pub fn read_detections_from<R: Read>(r: R, path: &Path, n_frames: Option<u32>) -> Result<FrameSet> {
    let mut rd = reader(r);
    check_header(&mut rd, &DETECTION_HEADER, path)?;
    let mut seen = std::collections::BTreeSet::new();
    let mut dets = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let frame: u32 = field(&rec, 0, "frame", path)?;
        let index: u32 = field(&rec, 1, "index", path)?;
        if frame == 0 || index == 0 {
            return Err(Error::parse(path, line, "frame and index start at 1"));
        }
        if !seen.insert((frame, index)) {
            return Err(Error::parse(
                path,
                line,
                format!("duplicate measurement {frame}/{index}"),
            ));
        }
        let x = finite(field(&rec, 2, "x", path)?, "x", &rec, path)?;
        let y = finite(field(&rec, 3, "y", path)?, "y", &rec, path)?;
        let mut m = Measurement::new(frame, index, x, y);
        m.area = field(&rec, 4, "area", path)?;
        m.mean_intensity = finite(
            field(&rec, 5, "mean_intensity", path)?,
            "mean_intensity",
            &rec,
            path,
        )?;
        dets.push(m);
    }
    Ok(FrameSet::from_detections(dets, n_frames)?)
}

pub fn read_detections(path: &Path, n_frames: Option<u32>) -> Result<FrameSet> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_detections_from(std::io::BufReader::new(f), path, n_frames)
}

pub fn write_detections_to<W: Write>(w: W, frames: &[FrameMeasurements]) -> csv::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(DETECTION_HEADER)?;
    for f in frames {
        for m in f.detections() {
            wr.write_record([
                m.frame.to_string(),
                m.index.to_string(),
                format!("{:.3}", m.x),
                format!("{:.3}", m.y),
                m.area.to_string(),
                format!("{:.3}", m.mean_intensity),
            ])?;
        }
    }
    wr.flush()?;
    Ok(())
}

pub fn write_detections(path: &Path, frames: &[FrameMeasurements]) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_detections_to(std::io::BufWriter::new(f), frames).map_err(|e| Error::csv(path, e))
}

/// Reads trajectories, returned ordered by track id with points ordered by
/// frame. A track visiting one frame twice is an error.
pub fn read_trajectories_from<R: Read>(r: R, path: &Path) -> Result<Vec<Trajectory>> {
    let mut rd = reader(r);
    check_header(&mut rd, &TRAJECTORY_HEADER, path)?;
    let mut tracks: BTreeMap<u64, Vec<(TrackPoint, u64)>> = BTreeMap::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let frame: u32 = field(&rec, 0, "frame", path)?;
        if frame == 0 {
            return Err(Error::parse(path, line, "frame numbers start at 1"));
        }
        let id: u64 = field(&rec, 1, "track_id", path)?;
        let x = finite(field(&rec, 2, "x", path)?, "x", &rec, path)?;
        let y = finite(field(&rec, 3, "y", path)?, "y", &rec, path)?;
        tracks
            .entry(id)
            .or_default()
            .push((TrackPoint { frame, x, y }, line));
    }
    let mut out = Vec::with_capacity(tracks.len());
    for (id, mut pts) in tracks {
        pts.sort_by_key(|(p, _)| p.frame);
        if let Some(w) = pts.windows(2).find(|w| w[0].0.frame == w[1].0.frame) {
            return Err(Error::parse(
                path,
                w[1].1,
                format!("track {id} has two points at frame {}", w[1].0.frame),
            ));
        }
        out.push(Trajectory {
            track_id: id,
            points: pts.into_iter().map(|(p, _)| p).collect(),
        });
    }
    Ok(out)
}

pub fn read_trajectories(path: &Path) -> Result<Vec<Trajectory>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_trajectories_from(std::io::BufReader::new(f), path)
}

/// Writes rows sorted by `(frame, track_id)`.
pub fn write_trajectories_to<W: Write>(w: W, tracks: &[Trajectory]) -> csv::Result<()> {
    let mut rows: Vec<(u32, u64, f64, f64)> = tracks
        .iter()
        .flat_map(|t| {
            t.points
                .iter()
                .map(move |p| (p.frame, t.track_id, p.x, p.y))
        })
        .collect();
    rows.sort_by_key(|r| (r.0, r.1));
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(TRAJECTORY_HEADER)?;
    for (f, id, x, y) in rows {
        wr.write_record([
            f.to_string(),
            id.to_string(),
            format!("{x:.3}"),
            format!("{y:.3}"),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_trajectories(path: &Path, tracks: &[Trajectory]) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_trajectories_to(std::io::BufWriter::new(f), tracks).map_err(|e| Error::csv(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("t.csv")
    }

    #[test]
    fn detections_round_trip() {
        let text = "frame,index,x,y,area,mean_intensity\n2,1,3.5,4.25,7,80.000\n1,2,10,11,3,50\n1,1,1,2,4,60\n";
        let fs = read_detections_from(text.as_bytes(), p(), Some(3)).unwrap();
        assert_eq!(fs.len(), 3);
        assert_eq!(fs.frames()[0].len(), 2);
        assert_eq!(fs.frames()[0].detections()[0].x, 1.0);
        assert!(fs.frames()[2].is_empty());
        let mut buf = Vec::new();
        write_detections_to(&mut buf, fs.frames()).unwrap();
        let again = read_detections_from(buf.as_slice(), p(), Some(3)).unwrap();
        assert_eq!(fs, again);
    }

    #[test]
    fn bad_rows_name_their_line() {
        let text = "frame,index,x,y,area,mean_intensity\n1,1,1,2,4,60\n1,2,oops,2,4,60\n";
        let e = read_detections_from(text.as_bytes(), p(), None).unwrap_err();
        assert_eq!(e.to_string(), "t.csv:3: bad x `oops`");
        let text = "frame,index,x,y,area,mean_intensity\n1,1,1,2,4,60\n1,1,1,2,4,60\n";
        let e = read_detections_from(text.as_bytes(), p(), None).unwrap_err();
        assert!(e.to_string().starts_with("t.csv:3:"), "{e}");
        let e = read_detections_from("frame,x\n".as_bytes(), p(), None).unwrap_err();
        assert!(e.to_string().starts_with("t.csv:1: expected header"));
        let text = "frame,index,x,y,area,mean_intensity\n1,1,1\n";
        let e = read_detections_from(text.as_bytes(), p(), None).unwrap_err();
        assert!(e.to_string().starts_with("t.csv:2:"), "{e}");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn trajectories_sorted_on_write() {
        let tracks = vec![
            Trajectory {
                track_id: 9,
                points: vec![
                    TrackPoint {
                        frame: 1,
                        x: 1.0,
                        y: 2.0,
                    },
                    TrackPoint {
                        frame: 2,
                        x: 1.5,
                        y: 2.0,
                    },
                ],
            },
            Trajectory {
                track_id: 3,
                points: vec![TrackPoint {
                    frame: 2,
                    x: 0.12345,
                    y: 7.0,
                }],
            },
        ];
        let mut buf = Vec::new();
        write_trajectories_to(&mut buf, &tracks).unwrap();
        let s = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            s,
            "frame,track_id,x,y\n1,9,1.000,2.000\n2,3,0.123,7.000\n2,9,1.500,2.000\n"
        );
        let back = read_trajectories_from(buf.as_slice(), p()).unwrap();
        assert_eq!(
            back.iter().map(|t| t.track_id).collect::<Vec<_>>(),
            vec![3, 9]
        );
        assert_eq!(back[1].points.len(), 2);
    }

    #[test]
    fn duplicate_track_frame_rejected() {
        let text = "frame,track_id,x,y\n1,1,0,0\n1,1,2,2\n";
        let e = read_trajectories_from(text.as_bytes(), p()).unwrap_err();
        assert_eq!(e.to_string(), "t.csv:3: track 1 has two points at frame 1");
    }
}
