use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::image::GrayImage;

/// Surround means below this are clamped, so black surrounds do not blow up.
pub const MIN_SURROUND_MEAN: f64 = 1.0;

/// Per-pixel local contrast `C = I² / MI`, where `MI` is the mean gray level of
/// the ring between the outer and inner square windows.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
    mean: f64,
    std: f64,
}

impl ContrastMap {
    /// Wraps precomputed values; statistics are derived here.
    pub fn from_values(width: usize, height: usize, values: Vec<f64>) -> Self {
        assert_eq!(
            values.len(),
            width * height,
            "value count must match dimensions"
        );
        let (mean, std) = mean_std(&values);
        ContrastMap {
            width,
            height,
            values,
            mean,
            std,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    #[inline]
    pub fn at_index(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Population standard deviation.
    pub fn std(&self) -> f64 {
        self.std
    }
}

pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, libm::sqrt(var))
}

/// Summed-area table with one row/column of zero padding.
struct Integral {
    stride: usize,
    sums: Vec<u64>,
}

impl Integral {
    fn new(image: &GrayImage) -> Self {
        let (w, h) = (image.width(), image.height());
        let stride = w + 1;
        let mut sums = vec![0u64; stride * (h + 1)];
        for y in 0..h {
            let mut row = 0u64;
            for x in 0..w {
                row += image.get(x, y) as u64;
                sums[(y + 1) * stride + x + 1] = sums[y * stride + x + 1] + row;
            }
        }
        Integral { stride, sums }
    }

    /// Sum over the half-open box `[x0, x1) × [y0, y1)`.
    #[inline]
    fn sum(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> u64 {
        let s = self.stride;
        self.sums[y1 * s + x1] + self.sums[y0 * s + x0]
            - self.sums[y0 * s + x1]
            - self.sums[y1 * s + x0]
    }
}

/// Computes the contrast map. Windows are clipped to the image at borders.
pub fn contrast_transform(
    image: &GrayImage,
    outer_window: usize,
    inner_window: usize,
) -> Result<ContrastMap> {
    let (w, h) = (image.width(), image.height());
    if w < outer_window || h < outer_window {
        return Err(Error::Dimension {
            width: w,
            height: h,
            required: outer_window,
        });
    }
    let integral = Integral::new(image);
    let ro = outer_window / 2;
    let ri = inner_window / 2;
    let mut values = Vec::with_capacity(w * h);
    for y in 0..h {
        let (oy0, oy1) = (y.saturating_sub(ro), (y + ro + 1).min(h));
        let (iy0, iy1) = (y.saturating_sub(ri), (y + ri + 1).min(h));
        for x in 0..w {
            let (ox0, ox1) = (x.saturating_sub(ro), (x + ro + 1).min(w));
            let (ix0, ix1) = (x.saturating_sub(ri), (x + ri + 1).min(w));
            let outer = integral.sum(ox0, oy0, ox1, oy1);
            let inner = integral.sum(ix0, iy0, ix1, iy1);
            let count = (ox1 - ox0) * (oy1 - oy0) - (ix1 - ix0) * (iy1 - iy0);
            let ring_mean = (outer - inner) as f64 / count as f64;
            let i = image.get(x, y) as f64;
            values.push(i * i / ring_mean.max(MIN_SURROUND_MEAN));
        }
    }
    Ok(ContrastMap::from_values(w, h, values))
}

/// `mean + k · std` of the map.
pub fn global_threshold(map: &ContrastMap, k: f64) -> f64 {
    map.mean() + k * map.std()
}
