//! White top-hat comparator detector.

use alloc::vec;
use alloc::vec::Vec;

use super::components::Labeler;
use super::contrast::{global_threshold, ContrastMap};
use crate::config::SegParams;
use crate::image::GrayImage;
use crate::types::{FrameMeasurements, Measurement};

/// Half-widths of the disk rows for offsets `-r..=r`.
fn disk_rows(radius: usize) -> Vec<usize> {
    let r = radius as i64;
    (-r..=r)
        .map(|dy| libm::floor(libm::sqrt((r * r - dy * dy) as f64)) as usize)
        .collect()
}

/// Flat disk erosion (`min`) or dilation (`max`), ignoring out-of-image pixels.
fn morph(src: &[u8], w: usize, h: usize, radius: usize, take_min: bool) -> Vec<u8> {
    let rows = disk_rows(radius);
    let mut widths = rows.clone();
    widths.sort_unstable();
    widths.dedup();
    let pick = |a: u8, b: u8| if take_min { a.min(b) } else { a.max(b) };
    let neutral = if take_min { u8::MAX } else { u8::MIN };
    // horizontal extrema for every distinct half-width
    let mut horiz: Vec<Vec<u8>> = Vec::with_capacity(widths.len());
    for &hw in &widths {
        let mut out = vec![neutral; w * h];
        for y in 0..h {
            let row = &src[y * w..(y + 1) * w];
            for x in 0..w {
                let lo = x.saturating_sub(hw);
                let hi = (x + hw + 1).min(w);
                out[y * w + x] = row[lo..hi].iter().fold(neutral, |a, &b| pick(a, b));
            }
        }
        horiz.push(out);
    }
    let mut out = vec![neutral; w * h];
    let r = radius as i64;
    for (k, &hw) in rows.iter().enumerate() {
        let dy = k as i64 - r;
        let plane = &horiz[widths.binary_search(&hw).unwrap()];
        for y in 0..h {
            let sy = y as i64 + dy;
            if sy < 0 || sy >= h as i64 {
                continue;
            }
            let srow = &plane[sy as usize * w..(sy as usize + 1) * w];
            let drow = &mut out[y * w..(y + 1) * w];
            for (d, &s) in drow.iter_mut().zip(srow) {
                *d = pick(*d, s);
            }
        }
    }
    out
}

/// `image − opening(image)` with a disk of the given radius.
pub fn white_tophat(image: &GrayImage, radius: usize) -> ContrastMap {
    let (w, h) = (image.width(), image.height());
    let eroded = morph(image.as_raw(), w, h, radius, true);
    let opened = morph(&eroded, w, h, radius, false);
    let values = image
        .as_raw()
        .iter()
        .zip(&opened)
        .map(|(&a, &b)| a.saturating_sub(b) as f64)
        .collect();
    ContrastMap::from_values(w, h, values)
}

/// Top-hat filter, global threshold `mean + k·std`, 8-connected components
/// within the area bounds of `params`.
pub fn tophat_detect(
    image: &GrayImage,
    k: f64,
    params: &SegParams,
    frame: u32,
) -> FrameMeasurements {
    let th = white_tophat(image, params.tophat_radius);
    let t = global_threshold(&th, k);
    let above: Vec<u32> = th
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > t)
        .map(|(i, _)| i as u32)
        .collect();
    let w = image.width();
    let mut labeler = Labeler::new(w, image.height());
    let dets = labeler
        .components(&above)
        .into_iter()
        .filter(|c| c.len() >= params.min_area && c.len() <= params.max_area)
        .map(|c| {
            let (mut sw, mut sx, mut sy) = (0.0, 0.0, 0.0);
            for &p in &c {
                let v = th.at_index(p as usize);
                sw += v;
                sx += v * (p as usize % w) as f64;
                sy += v * (p as usize / w) as f64;
            }
            Measurement {
                frame,
                index: 0,
                x: sx / sw,
                y: sy / sw,
                area: c.len() as u32,
                mean_intensity: sw / c.len() as f64,
                source_layer: None,
            }
        })
        .collect::<Vec<_>>();
    FrameMeasurements::from_detections(frame, dets)
}
