//! 8-connected component labeling over sparse pixel sets.

use alloc::vec;
use alloc::vec::Vec;

/// Reusable scratch buffers; pixels are linear indices `y * width + x`.
pub(crate) struct Labeler {
    width: usize,
    height: usize,
    stamp: Vec<u32>,
    epoch: u32,
    queue: Vec<u32>,
}

impl Labeler {
    pub(crate) fn new(width: usize, height: usize) -> Self {
        Labeler {
            width,
            height,
            stamp: vec![0; width * height],
            epoch: 0,
            queue: Vec::new(),
        }
    }

    /// Splits `pixels` into 8-connected components. Components come out in
    /// raster order of their first pixel, each sorted in raster order.
    pub(crate) fn components(&mut self, pixels: &[u32]) -> Vec<Vec<u32>> {
        if self.epoch >= u32::MAX - 2 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 0;
        }
        let member = self.epoch + 1;
        let visited = self.epoch + 2;
        self.epoch += 2;
        for &p in pixels {
            self.stamp[p as usize] = member;
        }
        let (w, h) = (self.width as i64, self.height as i64);
        let mut out = Vec::new();
        let mut ordered: Vec<u32> = pixels.to_vec();
        ordered.sort_unstable();
        for &seed in &ordered {
            if self.stamp[seed as usize] != member {
                continue;
            }
            self.stamp[seed as usize] = visited;
            self.queue.clear();
            self.queue.push(seed);
            let mut head = 0;
            while head < self.queue.len() {
                let p = self.queue[head] as i64;
                head += 1;
                let (x, y) = (p % w, p / w);
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let (nx, ny) = (x + dx, y + dy);
                        if (dx == 0 && dy == 0) || nx < 0 || ny < 0 || nx >= w || ny >= h {
                            continue;
                        }
                        let q = (ny * w + nx) as usize;
                        if self.stamp[q] == member {
                            self.stamp[q] = visited;
                            self.queue.push(q as u32);
                        }
                    }
                }
            }
            let mut comp = self.queue.clone();
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}
