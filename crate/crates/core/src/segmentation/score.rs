//! Appearance scores of a segmented component. Lower is better.

use alloc::vec;

use super::contrast::ContrastMap;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AppearanceScore {
    /// Variance of the contrast values over the component.
    pub intensity: f64,
    /// Mean squared distance of the pixels from their centroid.
    pub shape: f64,
    /// Interior pixels enclosed by the component but not part of it.
    pub n_bubble: usize,
    /// `n_bubble + 1`.
    pub bubble: f64,
    /// `intensity · shape · bubble`.
    pub appearance: f64,
}

/// Scores a pixel set (linear indices into `map`).
pub fn score_pixels(pixels: &[u32], map: &ContrastMap) -> AppearanceScore {
    if pixels.is_empty() {
        return AppearanceScore {
            bubble: 1.0,
            ..Default::default()
        };
    }
    let w = map.width();
    let n = pixels.len() as f64;
    let (mut si, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for &p in pixels {
        let p = p as usize;
        si += map.at_index(p);
        sx += (p % w) as f64;
        sy += (p / w) as f64;
    }
    let (mi, mx, my) = (si / n, sx / n, sy / n);
    let (mut vi, mut vs) = (0.0, 0.0);
    for &p in pixels {
        let p = p as usize;
        let di = map.at_index(p) - mi;
        let dx = (p % w) as f64 - mx;
        let dy = (p / w) as f64 - my;
        vi += di * di;
        vs += dx * dx + dy * dy;
    }
    let intensity = vi / n;
    let shape = vs / n;
    let n_bubble = count_bubbles(pixels, w);
    let bubble = n_bubble as f64 + 1.0;
    AppearanceScore {
        intensity,
        shape,
        n_bubble,
        bubble,
        appearance: intensity * shape * bubble,
    }
}

/// Non-member pixels of the bounding box that a 4-connected flood fill from
/// the box border cannot reach.
pub fn count_bubbles(pixels: &[u32], width: usize) -> usize {
    let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
    for &p in pixels {
        let (x, y) = (p as usize % width, p as usize / width);
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    let (bw, bh) = (x1 - x0 + 1, y1 - y0 + 1);
    if bw < 3 || bh < 3 {
        return 0;
    }
    // 0 = free, 1 = member, 2 = reached from outside
    let mut grid = vec![0u8; bw * bh];
    for &p in pixels {
        let (x, y) = (p as usize % width - x0, p as usize / width - y0);
        grid[y * bw + x] = 1;
    }
    let mut stack = alloc::vec::Vec::new();
    for x in 0..bw {
        stack.push(x);
        stack.push((bh - 1) * bw + x);
    }
    for y in 0..bh {
        stack.push(y * bw);
        stack.push(y * bw + bw - 1);
    }
    while let Some(c) = stack.pop() {
        if grid[c] != 0 {
            continue;
        }
        grid[c] = 2;
        let (x, y) = (c % bw, c / bw);
        if x > 0 {
            stack.push(c - 1);
        }
        if x + 1 < bw {
            stack.push(c + 1);
        }
        if y > 0 {
            stack.push(c - bw);
        }
        if y + 1 < bh {
            stack.push(c + bw);
        }
    }
    grid.iter().filter(|&&g| g == 0).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn map(w: usize, h: usize, v: f64) -> ContrastMap {
        ContrastMap::from_values(w, h, vec![v; w * h])
    }

    fn idx(w: usize, pts: &[(usize, usize)]) -> Vec<u32> {
        pts.iter().map(|&(x, y)| (y * w + x) as u32).collect()
    }

    #[test]
    fn single_pixel() {
        let m = map(5, 5, 3.0);
        let s = score_pixels(&idx(5, &[(2, 2)]), &m);
        assert_eq!(
            (s.intensity, s.shape, s.bubble, s.appearance),
            (0.0, 0.0, 1.0, 0.0)
        );
    }

    #[test]
    fn solid_square_uniform() {
        let m = map(5, 5, 7.0);
        let s = score_pixels(&idx(5, &[(1, 1), (2, 1), (1, 2), (2, 2)]), &m);
        assert_eq!(s.intensity, 0.0);
        assert_eq!(s.n_bubble, 0);
        assert_eq!(s.appearance, 0.0);
    }

    #[test]
    fn ring_has_one_bubble() {
        let m = map(5, 5, 10.0);
        let ring: Vec<(usize, usize)> = (1..4)
            .flat_map(|y| (1..4).map(move |x| (x, y)))
            .filter(|&(x, y)| (x, y) != (2, 2))
            .collect();
        let pix = idx(5, &ring);
        let s = score_pixels(&pix, &m);
        // brute force over the 8 offsets around the hole
        let d2: f64 = ring
            .iter()
            .map(|&(x, y)| {
                let (dx, dy) = (x as f64 - 2.0, y as f64 - 2.0);
                dx * dx + dy * dy
            })
            .sum::<f64>()
            / 8.0;
        assert_eq!(d2, 1.5);
        assert_eq!(s.shape, d2);
        assert_eq!(s.n_bubble, 1);
        assert_eq!(s.bubble, 2.0);
        assert_eq!(s.intensity, 0.0);
        assert_eq!(s.appearance, 0.0);
    }

    #[test]
    fn diagonal_gap_does_not_leak() {
        // a diamond: 8-connected ring around (2,2) with diagonal-only links
        let pix = idx(5, &[(2, 1), (1, 2), (3, 2), (2, 3)]);
        assert_eq!(count_bubbles(&pix, 5), 1);
    }

    #[test]
    fn c_shape_has_no_bubble() {
        let pix = idx(5, &[(1, 1), (2, 1), (3, 1), (1, 2), (1, 3), (2, 3), (3, 3)]);
        assert_eq!(count_bubbles(&pix, 5), 0);
    }

    proptest! {
        #[test]
        fn product_of_components(vals in prop::collection::vec(0.0f64..100.0, 25)) {
            let m = ContrastMap::from_values(5, 5, vals);
            let pix: Vec<u32> = (0..25).filter(|i| i % 3 != 1).collect();
            let s = score_pixels(&pix, &m);
            prop_assert_eq!(s.appearance, s.intensity * s.shape * s.bubble);
            prop_assert!(s.bubble >= 1.0);
        }

        #[test]
        fn extra_bubble_raises_score(i in 0.01f64..50.0, sh in 0.01f64..50.0, nb in 0usize..20) {
            let with = i * sh * (nb as f64 + 2.0);
            let without = i * sh * (nb as f64 + 1.0);
            prop_assert!(with > without);
        }
    }
}
