//! Track overlays: recent trail and id label of every track drawn over the
//! frame.

use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};
use mastrack_core::types::TrackPoint;
use mastrack_core::{GrayImage, Trajectory};

use crate::error::{Error, Result};
use crate::frames;

/// Frames of history drawn behind each track head.
pub const TRAIL_FRAMES: u32 = 30;

const PALETTE: [[u8; 3]; 8] = [
    [255, 64, 64],
    [64, 255, 64],
    [80, 120, 255],
    [255, 255, 0],
    [255, 0, 255],
    [0, 255, 255],
    [255, 140, 0],
    [170, 90, 255],
];

// 3x5 digits, one row per entry, bit 2 is the left column
const DIGITS: [[u8; 5]; 10] = [
    [7, 5, 5, 5, 7],
    [2, 6, 2, 2, 7],
    [7, 1, 7, 4, 7],
    [7, 1, 7, 1, 7],
    [5, 5, 7, 1, 1],
    [7, 4, 7, 1, 7],
    [7, 4, 7, 5, 7],
    [7, 1, 1, 1, 1],
    [7, 5, 7, 5, 7],
    [7, 5, 7, 1, 7],
];

pub fn color(track_id: u64) -> Rgb<u8> {
    Rgb(PALETTE[(track_id % PALETTE.len() as u64) as usize])
}

/// Points of `t` inside the trail window ending at `frame`.
pub fn trail(t: &Trajectory, frame: u32) -> &[TrackPoint] {
    let end = t.points.partition_point(|p| p.frame <= frame);
    let start = t
        .points
        .partition_point(|p| p.frame + TRAIL_FRAMES <= frame);
    &t.points[start.min(end)..end]
}

fn put(img: &mut RgbImage, x: i64, y: i64, c: Rgb<u8>) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, c);
    }
}

fn line(img: &mut RgbImage, a: (i64, i64), b: (i64, i64), c: Rgb<u8>) {
    let (dx, dy) = ((b.0 - a.0).abs(), -(b.1 - a.1).abs());
    let (sx, sy) = ((b.0 - a.0).signum(), (b.1 - a.1).signum());
    let (mut x, mut y, mut err) = (a.0, a.1, dx + dy);
    loop {
        put(img, x, y, c);
        if (x, y) == b {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

fn label(img: &mut RgbImage, x: i64, y: i64, id: u64, c: Rgb<u8>) {
    for (k, ch) in id.to_string().bytes().enumerate() {
        let glyph = DIGITS[(ch - b'0') as usize];
        for (row, bits) in glyph.iter().enumerate() {
            for col in 0..3 {
                if bits >> (2 - col) & 1 == 1 {
                    put(img, x + 4 * k as i64 + col, y + row as i64, c);
                }
            }
        }
    }
}

fn px(p: &TrackPoint) -> (i64, i64) {
    (p.x.round() as i64, p.y.round() as i64)
}

/// Colour copy of `frame_image` with the tracks alive at `frame` drawn on it.
pub fn render_overlay(frame_image: &GrayImage, tracks: &[Trajectory], frame: u32) -> RgbImage {
    let (w, h) = (frame_image.width() as u32, frame_image.height() as u32);
    let mut img = RgbImage::from_fn(w, h, |x, y| {
        let v = frame_image.get(x as usize, y as usize);
        Rgb([v, v, v])
    });
    for t in tracks {
        let pts = trail(t, frame);
        let Some(head) = pts.last() else { continue };
        let c = color(t.track_id);
        for w in pts.windows(2) {
            line(&mut img, px(&w[0]), px(&w[1]), c);
        }
        put(&mut img, px(head).0, px(head).1, c);
        if head.frame == frame {
            label(&mut img, px(head).0 + 3, px(head).1 - 8, t.track_id, c);
        }
    }
    img
}

/// Writes one PNG per frame file into `out_dir`, named after the input.
pub fn write_overlays(
    frame_files: &[PathBuf],
    tracks: &[Trajectory],
    out_dir: &Path,
) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    for (k, f) in frame_files.iter().enumerate() {
        let img = frames::load_gray(f)?;
        let out = render_overlay(&img, tracks, k as u32 + 1);
        let name = f.file_stem().map_or_else(
            || frames::frame_name(k as u32 + 1, "png"),
            |s| format!("{}.png", s.to_string_lossy()),
        );
        let path = out_dir.join(name);
        out.save(&path)
            .map_err(|source| Error::Image { path, source })?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn walker(id: u64, frames: u32) -> Trajectory {
        Trajectory {
            track_id: id,
            points: (1..=frames)
                .map(|f| TrackPoint {
                    frame: f,
                    x: 5.0 + f as f64,
                    y: 20.0,
                })
                .collect(),
        }
    }

    fn colored(img: &RgbImage) -> Vec<(u32, u32)> {
        img.enumerate_pixels()
            .filter(|(_, _, p)| !(p[0] == p[1] && p[1] == p[2]))
            .map(|(x, y, _)| (x, y))
            .collect()
    }

    #[test]
    fn no_tracks_leaves_frame_unchanged() {
        let mut g = GrayImage::filled(16, 8, 30);
        g.set(3, 3, 200);
        let img = render_overlay(&g, &[], 1);
        for (x, y, p) in img.enumerate_pixels() {
            assert_eq!(p.0, [g.get(x as usize, y as usize); 3]);
        }
    }

    #[test]
    fn one_track_one_labelled_trail() {
        let g = GrayImage::filled(80, 40, 0);
        let img = render_overlay(&g, &[walker(7, 10)], 10);
        let px = colored(&img);
        assert!(px.iter().all(|&(_, _)| true));
        let trail_px = px.iter().filter(|p| p.1 == 20).count();
        assert_eq!(trail_px, 10);
        let label_px: Vec<_> = px.iter().filter(|p| p.1 < 20).collect();
        assert_eq!(label_px.len(), 3 + 1 + 1 + 1 + 1);
        assert!(label_px.iter().all(|p| p.0 >= 18 && p.0 <= 20));
    }

    #[test]
    fn trail_is_capped() {
        let g = GrayImage::filled(120, 40, 0);
        let img = render_overlay(&g, &[walker(2, 80)], 80);
        let on_row = colored(&img).into_iter().filter(|p| p.1 == 20).count();
        assert_eq!(on_row, TRAIL_FRAMES as usize);
        assert_eq!(trail(&walker(2, 80), 80).len(), 30);
        assert_eq!(trail(&walker(2, 80), 10).len(), 10);
        assert!(trail(&walker(2, 5), 40).is_empty());
    }
}
