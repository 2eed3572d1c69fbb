//! Evaluation against ground truth: detection rates, CLEAR MOT, OSPA-T and
//! track completeness / fragmentation.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use crate::config::PipelineConfig;
use crate::types::Trajectory;

/// Cost standing in for a forbidden pairing.
const FORBIDDEN: f64 = 1e12;

/// Minimum-cost assignment of rows to columns. Every row is assigned when
/// there are at least as many columns, otherwise every column is.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<Option<usize>> {
    let n = cost.len();
    let m = cost.first().map_or(0, |r| r.len());
    if n == 0 || m == 0 {
        return vec![None; n];
    }
    if n > m {
        let t: Vec<Vec<f64>> = (0..m)
            .map(|j| (0..n).map(|i| cost[i][j]).collect())
            .collect();
        let cols = hungarian(&t);
        let mut rows = vec![None; n];
        for (j, i) in cols.into_iter().enumerate() {
            if let Some(i) = i {
                rows[i] = Some(j);
            }
        }
        return rows;
    }
    // potentials method, 1-based with a virtual column 0
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut rows = vec![None; n];
    for j in 1..=m {
        if p[j] != 0 {
            rows[p[j] - 1] = Some(j - 1);
        }
    }
    rows
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    libm::hypot(a.0 - b.0, a.1 - b.1)
}

/// Optimal one-to-one matching among pairs closer than `tol`: the number of
/// matches is maximised first, then the total distance minimised.
/// Returns `(gt index, est index, distance)` sorted by gt index.
pub fn match_frame(gt: &[(f64, f64)], est: &[(f64, f64)], tol: f64) -> Vec<(usize, usize, f64)> {
    let cost: Vec<Vec<f64>> = gt
        .iter()
        .map(|&g| {
            est.iter()
                .map(|&e| {
                    let d = dist(g, e);
                    if d <= tol {
                        d
                    } else {
                        FORBIDDEN
                    }
                })
                .collect()
        })
        .collect();
    hungarian(&cost)
        .into_iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| (i, j, cost[i][j])))
        .filter(|&(_, _, d)| d < FORBIDDEN)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DetectionMetrics {
    /// ΣNC / ΣNT.
    pub dr: f64,
    /// False detections per frame.
    pub fa: f64,
    /// Population standard deviation of the per-frame detection rate.
    pub dr_std: f64,
    pub f_score: f64,
    pub correct: usize,
    pub targets: usize,
    pub false_alarms: usize,
    pub frames: usize,
}

/// Per-frame point sets, frame `i + 1` at index `i`.
pub fn detection_metrics(
    gt: &[Vec<(f64, f64)>],
    det: &[Vec<(f64, f64)>],
    tol: f64,
) -> DetectionMetrics {
    let frames = gt.len().max(det.len());
    let empty = Vec::new();
    let mut out = DetectionMetrics {
        frames,
        ..DetectionMetrics::default()
    };
    let mut rates = Vec::new();
    let mut detections = 0;
    for t in 0..frames {
        let g = gt.get(t).unwrap_or(&empty);
        let d = det.get(t).unwrap_or(&empty);
        let nc = match_frame(g, d, tol).len();
        out.correct += nc;
        out.targets += g.len();
        out.false_alarms += d.len() - nc;
        detections += d.len();
        if !g.is_empty() {
            rates.push(nc as f64 / g.len() as f64);
        }
    }
    out.dr = ratio(out.correct, out.targets);
    out.fa = if frames == 0 {
        0.0
    } else {
        out.false_alarms as f64 / frames as f64
    };
    if !rates.is_empty() {
        let mean = rates.iter().sum::<f64>() / rates.len() as f64;
        let var = rates.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / rates.len() as f64;
        out.dr_std = libm::sqrt(var);
    }
    let precision = ratio(out.correct, detections);
    out.f_score = if out.dr + precision > 0.0 {
        2.0 * out.dr * precision / (out.dr + precision)
    } else {
        0.0
    };
    out
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Point sets per frame from trajectories, covering frames `1..=frames`.
pub fn points_per_frame(tracks: &[Trajectory], frames: usize) -> Vec<Vec<(f64, f64)>> {
    let mut out = vec![Vec::new(); frames];
    for t in tracks {
        for p in &t.points {
            if p.frame >= 1 && (p.frame as usize) <= frames {
                out[p.frame as usize - 1].push((p.x, p.y));
            }
        }
    }
    out
}

/// Last frame present in any trajectory.
pub fn last_frame(tracks: &[Trajectory]) -> u32 {
    tracks
        .iter()
        .filter_map(|t| t.points.last())
        .map(|p| p.frame)
        .max()
        .unwrap_or(0)
}

type FramePoints = Vec<(u64, (f64, f64))>;

/// Per frame, `(track id, position)` of every track present.
fn by_frame(tracks: &[Trajectory]) -> BTreeMap<u32, FramePoints> {
    let mut out: BTreeMap<u32, FramePoints> = BTreeMap::new();
    for t in tracks {
        for p in &t.points {
            out.entry(p.frame)
                .or_default()
                .push((t.track_id, (p.x, p.y)));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClearMot {
    pub gt_total: usize,
    pub matches: usize,
    pub misses: usize,
    pub false_positives: usize,
    pub id_switches: usize,
    pub distance_sum: f64,
    pub tol: f64,
}

impl ClearMot {
    /// `1 − (FN + FP + IDSW) / ΣGT`.
    pub fn mota(&self) -> f64 {
        mota_from_counts(
            self.gt_total,
            self.misses,
            self.false_positives,
            self.id_switches,
        )
    }

    /// Mean distance of matched pairs in pixels.
    pub fn motp_px(&self) -> f64 {
        if self.matches == 0 {
            0.0
        } else {
            self.distance_sum / self.matches as f64
        }
    }

    /// `100 · (1 − MOTP_px / tol)`.
    pub fn motp(&self) -> f64 {
        if self.matches == 0 {
            0.0
        } else {
            100.0 * (1.0 - self.motp_px() / self.tol)
        }
    }

    pub fn recall(&self) -> f64 {
        ratio(self.matches, self.gt_total)
    }

    pub fn precision(&self) -> f64 {
        ratio(self.matches, self.matches + self.false_positives)
    }
}

pub fn mota_from_counts(
    gt_total: usize,
    misses: usize,
    false_positives: usize,
    id_switches: usize,
) -> f64 {
    let errors = (misses + false_positives + id_switches) as f64;
    if gt_total == 0 {
        if errors == 0.0 {
            1.0
        } else {
            -errors
        }
    } else {
        1.0 - errors / gt_total as f64
    }
}

/// Frame-sequential CLEAR MOT evaluation.
pub fn clear_mot(gt: &[Trajectory], est: &[Trajectory], tol: f64) -> ClearMot {
    let g_frames = by_frame(gt);
    let e_frames = by_frame(est);
    let frames: BTreeSet<u32> = g_frames.keys().chain(e_frames.keys()).copied().collect();
    let empty = Vec::new();
    let mut out = ClearMot {
        tol,
        ..ClearMot::default()
    };
    let mut previous: BTreeMap<u64, u64> = BTreeMap::new();
    let mut last_known: BTreeMap<u64, u64> = BTreeMap::new();
    for t in frames {
        let g = g_frames.get(&t).unwrap_or(&empty);
        let e = e_frames.get(&t).unwrap_or(&empty);
        let mut g_used = vec![false; g.len()];
        let mut e_used = vec![false; e.len()];
        let mut current: BTreeMap<u64, u64> = BTreeMap::new();
        for (gi, (gid, gp)) in g.iter().enumerate() {
            let Some(eid) = previous.get(gid) else {
                continue;
            };
            if let Some(ei) = e.iter().position(|(id, _)| id == eid) {
                let d = dist(*gp, e[ei].1);
                if d <= tol && !e_used[ei] {
                    g_used[gi] = true;
                    e_used[ei] = true;
                    current.insert(*gid, *eid);
                    out.distance_sum += d;
                }
            }
        }
        let g_free: Vec<usize> = (0..g.len()).filter(|&i| !g_used[i]).collect();
        let e_free: Vec<usize> = (0..e.len()).filter(|&i| !e_used[i]).collect();
        let gp: Vec<(f64, f64)> = g_free.iter().map(|&i| g[i].1).collect();
        let ep: Vec<(f64, f64)> = e_free.iter().map(|&i| e[i].1).collect();
        for (a, b, d) in match_frame(&gp, &ep, tol) {
            let (gid, eid) = (g[g_free[a]].0, e[e_free[b]].0);
            if last_known.get(&gid).is_some_and(|&k| k != eid) {
                out.id_switches += 1;
            }
            current.insert(gid, eid);
            out.distance_sum += d;
        }
        out.gt_total += g.len();
        out.matches += current.len();
        out.misses += g.len() - current.len();
        out.false_positives += e.len() - current.len();
        for (&gid, &eid) in &current {
            last_known.insert(gid, eid);
        }
        previous = current;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OspaT {
    /// `(frame, distance)` for every frame where either set is non-empty.
    pub per_frame: Vec<(u32, f64)>,
    pub mean: f64,
}

/// Sequence-level labelling: each estimated track takes the label of the
/// ground-truth track it overlaps most (within `c`), by optimal assignment.
fn ospa_labels(gt: &[Trajectory], est: &[Trajectory], c: f64) -> BTreeMap<u64, u64> {
    let mut overlap = vec![vec![0.0; est.len()]; gt.len()];
    for (gi, g) in gt.iter().enumerate() {
        for (ei, e) in est.iter().enumerate() {
            let n = g
                .points
                .iter()
                .filter(|p| {
                    e.point_at(p.frame)
                        .is_some_and(|q| dist((p.x, p.y), (q.x, q.y)) <= c)
                })
                .count();
            overlap[gi][ei] = -(n as f64);
        }
    }
    let mut labels = BTreeMap::new();
    for (gi, ei) in hungarian(&overlap).into_iter().enumerate() {
        if let Some(ei) = ei {
            if overlap[gi][ei] < 0.0 {
                labels.insert(est[ei].track_id, gt[gi].track_id);
            }
        }
    }
    labels
}

/// OSPA for labelled tracks with cutoff `c`, label penalty `l` and order `p`.
pub fn ospa_t(gt: &[Trajectory], est: &[Trajectory], c: f64, l: f64, p: f64) -> OspaT {
    let labels = ospa_labels(gt, est, c);
    let g_frames = by_frame(gt);
    let e_frames = by_frame(est);
    let frames: BTreeSet<u32> = g_frames.keys().chain(e_frames.keys()).copied().collect();
    let empty = Vec::new();
    let mut out = OspaT::default();
    for t in frames {
        let g = g_frames.get(&t).unwrap_or(&empty);
        let e = e_frames.get(&t).unwrap_or(&empty);
        let base = |gi: usize, ei: usize| -> f64 {
            let (gid, gp) = g[gi];
            let (eid, ep) = e[ei];
            let penalty = if labels.get(&eid) == Some(&gid) {
                0.0
            } else {
                l
            };
            let d = libm::pow(libm::pow(dist(gp, ep), p) + libm::pow(penalty, p), 1.0 / p);
            libm::pow(d.min(c), p)
        };
        let (n, m) = (g.len(), e.len());
        let cost: Vec<Vec<f64>> = (0..n)
            .map(|gi| (0..m).map(|ei| base(gi, ei)).collect())
            .collect();
        let matched: f64 = hungarian(&cost)
            .into_iter()
            .enumerate()
            .filter_map(|(gi, ei)| ei.map(|ei| cost[gi][ei]))
            .sum();
        let big = n.max(m) as f64;
        let small = n.min(m) as f64;
        let d = libm::pow((matched + libm::pow(c, p) * (big - small)) / big, 1.0 / p);
        out.per_frame.push((t, d));
    }
    if !out.per_frame.is_empty() {
        out.mean = out.per_frame.iter().map(|f| f.1).sum::<f64>() / out.per_frame.len() as f64;
    }
    out
}

/// Track fragmentation and track completeness factor, from per-frame
/// optimal matching.
pub fn tf_tcf(gt: &[Trajectory], est: &[Trajectory], tol: f64) -> (f64, f64) {
    let g_frames = by_frame(gt);
    let e_frames = by_frame(est);
    let empty = Vec::new();
    let mut covered: BTreeMap<u64, usize> = BTreeMap::new();
    let mut associated: BTreeMap<u64, BTreeSet<u64>> = BTreeMap::new();
    for (t, g) in &g_frames {
        let e = e_frames.get(t).unwrap_or(&empty);
        let gp: Vec<(f64, f64)> = g.iter().map(|x| x.1).collect();
        let ep: Vec<(f64, f64)> = e.iter().map(|x| x.1).collect();
        for (a, b, _) in match_frame(&gp, &ep, tol) {
            *covered.entry(g[a].0).or_default() += 1;
            associated.entry(g[a].0).or_default().insert(e[b].0);
        }
    }
    let gt_points: usize = gt.iter().map(|t| t.points.len()).sum();
    let tcf = ratio(covered.values().sum(), gt_points);
    let tf = if associated.is_empty() {
        0.0
    } else {
        associated.values().map(|s| s.len()).sum::<usize>() as f64 / associated.len() as f64
    };
    (tf, tcf)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricsReport {
    pub dr: f64,
    pub fa: f64,
    pub dr_std: f64,
    pub f_score: f64,
    pub ospa_t: f64,
    pub tf: f64,
    pub tcf: f64,
    pub mota: f64,
    pub motp: f64,
    pub motp_px: f64,
    pub idsw: usize,
    pub fn_: usize,
    pub fp: usize,
    pub rec: f64,
    pub prc: f64,
}

impl MetricsReport {
    /// Column names, in the order of [`MetricsReport::values`].
    pub const COLUMNS: [&'static str; 15] = [
        "DR", "FA", "DR_STD", "F_score", "OSPA_T", "TF", "TCF", "MOTA", "MOTP", "MOTP_px", "IDSW",
        "FN", "FP", "REC", "PRC",
    ];

    pub fn values(&self) -> [f64; 15] {
        [
            self.dr,
            self.fa,
            self.dr_std,
            self.f_score,
            self.ospa_t,
            self.tf,
            self.tcf,
            self.mota,
            self.motp,
            self.motp_px,
            self.idsw as f64,
            self.fn_ as f64,
            self.fp as f64,
            self.rec,
            self.prc,
        ]
    }
}

/// Every metric of estimated tracks against ground truth.
pub fn evaluate(gt: &[Trajectory], est: &[Trajectory], cfg: &PipelineConfig) -> MetricsReport {
    let tol = cfg.match_tolerance;
    let frames = last_frame(gt).max(last_frame(est)) as usize;
    let det = detection_metrics(
        &points_per_frame(gt, frames),
        &points_per_frame(est, frames),
        tol,
    );
    let mot = clear_mot(gt, est, tol);
    let ospa = ospa_t(gt, est, cfg.ospa_c, cfg.ospa_l, cfg.ospa_p);
    let (tf, tcf) = tf_tcf(gt, est, tol);
    MetricsReport {
        dr: det.dr,
        fa: det.fa,
        dr_std: det.dr_std,
        f_score: det.f_score,
        ospa_t: ospa.mean,
        tf,
        tcf,
        mota: mot.mota(),
        motp: mot.motp(),
        motp_px: mot.motp_px(),
        idsw: mot.id_switches,
        fn_: mot.misses,
        fp: mot.false_positives,
        rec: mot.recall(),
        prc: mot.precision(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::TrackPoint;
    use proptest::prelude::*;

    fn track(id: u64, pts: &[(u32, f64, f64)]) -> Trajectory {
        Trajectory {
            track_id: id,
            points: pts
                .iter()
                .map(|&(frame, x, y)| TrackPoint { frame, x, y })
                .collect(),
        }
    }

    fn line(id: u64, frames: core::ops::RangeInclusive<u32>, x0: f64, y: f64) -> Trajectory {
        track(
            id,
            &frames.map(|f| (f, x0 + f as f64, y)).collect::<Vec<_>>(),
        )
    }

    fn brute_assign(cost: &[Vec<f64>]) -> f64 {
        // rows ≤ cols; try every injection
        fn go(cost: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
            if row == cost.len() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..used.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.min(cost[row][j] + go(cost, row + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        let mut used = vec![false; cost[0].len()];
        go(cost, 0, &mut used)
    }

    proptest! {
        #[test]
        fn hungarian_is_optimal(n in 1usize..6, extra in 0usize..3, seed in prop::collection::vec(0.0f64..100.0, 64)) {
            let m = n + extra;
            let cost: Vec<Vec<f64>> = (0..n).map(|i| (0..m).map(|j| seed[(i * m + j) % 64]).collect()).collect();
            let a = hungarian(&cost);
            let total: f64 = a.iter().enumerate().map(|(i, j)| cost[i][j.unwrap()]).sum();
            prop_assert!((total - brute_assign(&cost)).abs() < 1e-9);
            let t: Vec<Vec<f64>> = (0..m).map(|j| (0..n).map(|i| cost[i][j]).collect()).collect();
            let at = hungarian(&t);
            prop_assert_eq!(at.iter().filter(|x| x.is_some()).count(), n);
        }

        #[test]
        fn ospa_symmetric_and_triangle(
            a in prop::collection::vec((0.0f64..60.0, 0.0f64..60.0), 3),
            b in prop::collection::vec((0.0f64..60.0, 0.0f64..60.0), 3),
            c in prop::collection::vec((0.0f64..60.0, 0.0f64..60.0), 3),
        ) {
            let mk = |pts: &[(f64, f64)]| -> Vec<Trajectory> {
                pts.iter().enumerate().map(|(i, &(x, y))| track(i as u64 + 1, &[(1, x, y)])).collect()
            };
            let (ta, tb, tc) = (mk(&a), mk(&b), mk(&c));
            let d = |x: &[Trajectory], y: &[Trajectory]| ospa_t(x, y, 25.0, 0.0, 2.0).mean;
            prop_assert!((d(&ta, &tb) - d(&tb, &ta)).abs() < 1e-9);
            prop_assert!(d(&ta, &tc) <= d(&ta, &tb) + d(&tb, &tc) + 1e-9);
        }

        #[test]
        fn mota_ignores_track_ids(perm in Just(()).prop_perturb(|_, mut rng| {
            let mut ids = [1u64, 2, 3];
            for i in (1..3).rev() {
                let j = (rng.next_u32() as usize) % (i + 1);
                ids.swap(i, j);
            }
            ids
        })) {
            let gt = [line(1, 1..=10, 0.0, 0.0), line(2, 1..=10, 0.0, 30.0), line(3, 1..=10, 0.0, 60.0)];
            let est = [line(7, 1..=5, 0.0, 1.0), line(8, 6..=10, 0.0, 1.0), line(9, 1..=10, 0.0, 31.0)];
            let renamed: Vec<Trajectory> = est.iter().zip(perm).map(|(t, id)| Trajectory { track_id: id + 100, ..t.clone() }).collect();
            let a = clear_mot(&gt, &est, 15.0);
            let b = clear_mot(&gt, &renamed, 15.0);
            prop_assert_eq!(a.mota(), b.mota());
            prop_assert_eq!(a.id_switches, b.id_switches);
        }
    }

    #[test]
    fn matching_cases() {
        let g = [(0.0, 0.0), (10.0, 0.0)];
        assert_eq!(match_frame(&g, &g, 15.0).len(), 2);
        assert!(match_frame(&[(0.0, 0.0)], &[(16.0, 0.0)], 15.0).is_empty());
        // crossed candidates: straight pairing totals 2, swapped totals 18
        let e = [(9.0, 0.0), (1.0, 0.0)];
        let m = match_frame(&g, &e, 15.0);
        assert_eq!(
            m.iter().map(|x| (x.0, x.1)).collect::<Vec<_>>(),
            vec![(0, 1), (1, 0)]
        );
    }

    #[test]
    fn matching_prefers_more_pairs() {
        // a greedy nearest pairing would match only one
        let g = [(0.0, 0.0), (14.0, 0.0)];
        let e = [(7.0, 0.0), (-7.0, 0.0)];
        assert_eq!(match_frame(&g, &e, 10.0).len(), 2);
    }

    #[test]
    fn detection_cases() {
        let gt: Vec<Vec<(f64, f64)>> = (0..10)
            .map(|i| (0..10).map(|k| (k as f64 * 30.0, i as f64)).collect())
            .collect();
        let d = detection_metrics(&gt, &gt, 15.0);
        assert_eq!((d.dr, d.fa, d.f_score, d.dr_std), (1.0, 0.0, 1.0, 0.0));

        let missing: Vec<Vec<(f64, f64)>> = gt.iter().map(|f| f[1..].to_vec()).collect();
        let d = detection_metrics(&gt, &missing, 15.0);
        assert_eq!(d.correct, 90);
        assert_eq!(d.dr, 0.9);

        let noisy: Vec<Vec<(f64, f64)>> = gt
            .iter()
            .map(|f| {
                let mut v = f.clone();
                v.extend([(500.0, 500.0), (600.0, 500.0), (700.0, 500.0)]);
                v
            })
            .collect();
        let d = detection_metrics(&gt, &noisy, 15.0);
        assert_eq!(d.fa, 3.0);
    }

    #[test]
    fn perfect_tracking() {
        let gt = [line(1, 1..=20, 0.0, 0.0), line(2, 1..=20, 0.0, 40.0)];
        let m = clear_mot(&gt, &gt, 15.0);
        assert_eq!(m.mota(), 1.0);
        assert_eq!(m.id_switches, 0);
        assert_eq!(m.motp(), 100.0);
    }

    #[test]
    fn mota_counts() {
        assert!((mota_from_counts(200, 20, 10, 4) - 0.83).abs() < 1e-15);
    }

    #[test]
    fn split_track_switches_once() {
        let gt = [line(1, 1..=20, 0.0, 0.0)];
        let est = [line(5, 1..=10, 0.0, 1.0), line(6, 11..=20, 0.0, 1.0)];
        let m = clear_mot(&gt, &est, 15.0);
        assert_eq!(m.id_switches, 1);
        assert_eq!(m.matches, 20);
        assert!((m.motp_px() - 1.0).abs() < 1e-12);
        let (tf, tcf) = tf_tcf(&gt, &est, 15.0);
        assert_eq!((tf, tcf), (2.0, 1.0));
    }

    #[test]
    fn recall_and_precision_agree_with_counts() {
        let gt = [line(1, 1..=20, 0.0, 0.0), line(2, 1..=20, 0.0, 50.0)];
        let est = [line(3, 5..=20, 0.0, 2.0), line(4, 1..=20, 0.0, 200.0)];
        let m = clear_mot(&gt, &est, 15.0);
        assert_eq!(m.matches, 16);
        assert_eq!(m.false_positives, 20);
        assert_eq!(m.misses, 24);
        assert_eq!(m.recall(), 16.0 / 40.0);
        assert_eq!(m.precision(), 16.0 / 36.0);
    }

    #[test]
    fn ospa_cases() {
        let gt = [line(1, 1..=10, 0.0, 0.0), line(2, 1..=10, 0.0, 40.0)];
        assert_eq!(ospa_t(&gt, &gt, 25.0, 25.0, 2.0).mean, 0.0);
        let single = [track(1, &[(1, 3.0, 4.0)])];
        assert_eq!(ospa_t(&single, &[], 25.0, 25.0, 2.0).mean, 25.0);
        // identical points whose labels cannot match: per-point distance min(c, l)
        let est = [line(1, 1..=5, 0.0, 0.0), line(9, 6..=10, 0.0, 0.0)];
        let gt1 = [line(1, 1..=10, 0.0, 0.0)];
        let o = ospa_t(&gt1, &est, 25.0, 25.0, 2.0);
        let relabelled: Vec<_> = o.per_frame.iter().filter(|f| f.1 == 25.0).collect();
        assert_eq!(relabelled.len(), 5);
    }

    #[test]
    fn undetected_track_excluded_from_tf() {
        let gt = [line(1, 1..=10, 0.0, 0.0), line(2, 1..=10, 0.0, 100.0)];
        let est = [line(3, 1..=10, 0.0, 0.0)];
        assert_eq!(tf_tcf(&gt, &est, 15.0), (1.0, 0.5));
    }

    #[test]
    fn report_is_consistent() {
        let gt = [line(1, 1..=20, 0.0, 0.0)];
        let r = evaluate(&gt, &gt, &PipelineConfig::default());
        assert_eq!(r.mota, 1.0);
        assert_eq!(r.dr, 1.0);
        assert_eq!(r.ospa_t, 0.0);
        assert_eq!(MetricsReport::COLUMNS.len(), r.values().len());
    }
}
