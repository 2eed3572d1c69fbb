//! Shared domain types.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// One detected blob at a frame, or the frame's dummy (missed detection).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    /// 1-based frame number.
    pub frame: u32,
    /// Position within the frame; 0 is reserved for the dummy.
    pub index: u32,
    pub x: f64,
    pub y: f64,
    /// Pixel count (0 for the dummy).
    pub area: u32,
    pub mean_intensity: f64,
    /// Threshold layer the blob was taken from, when produced by segmentation.
    pub source_layer: Option<u8>,
}

impl Measurement {
    pub fn dummy(frame: u32) -> Self {
        Measurement {
            frame,
            index: 0,
            x: 0.0,
            y: 0.0,
            area: 0,
            mean_intensity: 0.0,
            source_layer: None,
        }
    }

    pub fn new(frame: u32, index: u32, x: f64, y: f64) -> Self {
        Measurement {
            frame,
            index,
            x,
            y,
            area: 1,
            mean_intensity: 0.0,
            source_layer: None,
        }
    }

    pub fn is_dummy(&self) -> bool {
        self.index == 0
    }

    pub fn reference(&self) -> MeasurementRef {
        MeasurementRef {
            frame: self.frame,
            index: self.index,
        }
    }
}

/// Compact `(frame, index)` handle used inside hypothesis histories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MeasurementRef {
    pub frame: u32,
    pub index: u32,
}

impl MeasurementRef {
    pub fn is_dummy(&self) -> bool {
        self.index == 0
    }
}

/// Measurements of one frame; slot 0 is always the dummy.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMeasurements {
    frame: u32,
    items: Vec<Measurement>,
}

impl FrameMeasurements {
    /// Builds a frame from detections, renumbering them `1..=n` in the given
    /// order and prepending the dummy.
    pub fn from_detections(frame: u32, detections: impl IntoIterator<Item = Measurement>) -> Self {
        let mut items = Vec::new();
        items.push(Measurement::dummy(frame));
        for (i, mut m) in detections.into_iter().enumerate() {
            m.frame = frame;
            m.index = i as u32 + 1;
            items.push(m);
        }
        FrameMeasurements { frame, items }
    }

    pub fn frame(&self) -> u32 {
        self.frame
    }

    /// All measurements including the dummy at position 0.
    pub fn all(&self) -> &[Measurement] {
        &self.items
    }

    /// Real detections only.
    pub fn detections(&self) -> &[Measurement] {
        &self.items[1..]
    }

    pub fn get(&self, index: u32) -> Option<&Measurement> {
        self.items.get(index as usize)
    }

    /// N_t, the number of real detections.
    pub fn len(&self) -> usize {
        self.items.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Checks the non-dummy centroids against the image bounds.
    pub fn check_bounds(&self, width: usize, height: usize) -> Result<()> {
        for m in self.detections() {
            let inside = m.x >= 0.0 && m.y >= 0.0 && m.x < width as f64 && m.y < height as f64;
            if !inside {
                return Err(Error::Frames(format!(
                    "frame {} measurement {} at ({}, {}) lies outside {}x{}",
                    m.frame, m.index, m.x, m.y, width, height
                )));
            }
        }
        Ok(())
    }
}

/// Ordered per-frame measurement lists for frames `1..=N`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameSet {
    frames: Vec<FrameMeasurements>,
}

impl FrameSet {
    pub fn new(frames: Vec<FrameMeasurements>) -> Result<Self> {
        for (i, f) in frames.iter().enumerate() {
            let expected = i as u32 + 1;
            if f.frame != expected {
                return Err(Error::Frames(format!(
                    "expected frame {expected}, found {}",
                    f.frame
                )));
            }
            let dummies = f.items.iter().filter(|m| m.is_dummy()).count();
            if dummies != 1 || !f.items[0].is_dummy() || f.items[0].area != 0 {
                return Err(Error::Frames(format!(
                    "frame {expected} must hold exactly one dummy at index 0"
                )));
            }
            for (k, m) in f.items.iter().enumerate() {
                if m.index as usize != k || m.frame != expected {
                    return Err(Error::Frames(format!(
                        "frame {expected}: measurement slot {k} carries index {} of frame {}",
                        m.index, m.frame
                    )));
                }
            }
        }
        Ok(FrameSet { frames })
    }

    /// Groups raw detections by frame. Frames with no detection are filled
    /// in up to `n_frames` (or the last frame seen).
    pub fn from_detections(
        detections: impl IntoIterator<Item = Measurement>,
        n_frames: Option<u32>,
    ) -> Result<Self> {
        let mut per_frame: Vec<Vec<Measurement>> = Vec::new();
        for m in detections {
            if m.frame == 0 {
                return Err(Error::Frames("frame numbers start at 1".into()));
            }
            let slot = m.frame as usize - 1;
            if per_frame.len() <= slot {
                per_frame.resize_with(slot + 1, Vec::new);
            }
            per_frame[slot].push(m);
        }
        if let Some(n) = n_frames {
            if per_frame.len() > n as usize {
                return Err(Error::Frames(format!(
                    "detections reference frame {} beyond the {n} frames",
                    per_frame.len()
                )));
            }
            per_frame.resize_with(n as usize, Vec::new);
        }
        let frames = per_frame
            .into_iter()
            .enumerate()
            .map(|(i, mut dets)| {
                dets.sort_by_key(|m| m.index);
                FrameMeasurements::from_detections(i as u32 + 1, dets)
            })
            .collect();
        Ok(FrameSet { frames })
    }

    pub fn frames(&self) -> &[FrameMeasurements] {
        &self.frames
    }

    /// N, the number of frames.
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn get(&self, frame: u32) -> Option<&FrameMeasurements> {
        frame
            .checked_sub(1)
            .and_then(|i| self.frames.get(i as usize))
    }

    pub fn measurement(&self, r: MeasurementRef) -> Option<&Measurement> {
        self.get(r.frame).and_then(|f| f.get(r.index))
    }

    pub fn into_frames(self) -> Vec<FrameMeasurements> {
        self.frames
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    pub frame: u32,
    pub x: f64,
    pub y: f64,
}

/// An output track. Frames are strictly increasing; gaps are allowed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub track_id: u64,
    pub points: Vec<TrackPoint>,
}

impl Trajectory {
    pub fn new(track_id: u64) -> Self {
        Trajectory {
            track_id,
            points: Vec::new(),
        }
    }

    /// Appends a point; points at or before the last frame are ignored so the
    /// frame order stays strict.
    pub fn push(&mut self, p: TrackPoint) -> bool {
        match self.points.last() {
            Some(last) if last.frame >= p.frame => false,
            _ => {
                self.points.push(p);
                true
            }
        }
    }

    pub fn point_at(&self, frame: u32) -> Option<&TrackPoint> {
        self.points
            .binary_search_by_key(&frame, |p| p.frame)
            .ok()
            .map(|i| &self.points[i])
    }

    /// Fills single- or multi-frame gaps by linear interpolation.
    pub fn interpolated(&self) -> Trajectory {
        let mut out = Trajectory::new(self.track_id);
        for w in self.points.windows(2) {
            let (a, b) = (w[0], w[1]);
            out.points.push(a);
            let span = (b.frame - a.frame) as f64;
            for f in a.frame + 1..b.frame {
                let s = (f - a.frame) as f64 / span;
                out.points.push(TrackPoint {
                    frame: f,
                    x: a.x + s * (b.x - a.x),
                    y: a.y + s * (b.y - a.y),
                });
            }
        }
        if let Some(last) = self.points.last() {
            out.points.push(*last);
        }
        out
    }
}
