//! Correspondence criteria, repeatability and matching metrics.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::matching::{AffineMap, LJunction, MatchPair};
use crate::math;
use crate::scale::ASJunction;

/// Tolerances for calling two junctions the same.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrespondenceCriteria {
    pub loc_tol: f64,
    pub scale_tol: f64,
    pub angle_tol: f64,
}

impl Default for CorrespondenceCriteria {
    fn default() -> Self {
        Self { loc_tol: 3.0, scale_tol: 3.0, angle_tol: PI / 20.0 }
    }
}

/// `max_{a ∈ A} min_{b ∈ B} d(a, b)`.
fn max_min(a: impl Iterator<Item = f64> + Clone, b: impl Iterator<Item = f64> + Clone, d: impl Fn(f64, f64) -> f64) -> f64 {
    a.map(|x| b.clone().map(|y| d(x, y)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
}

/// Largest angular gap from the branches of `a` to their nearest branch of `b`.
pub fn orientation_gap(a: &ASJunction, b: &ASJunction) -> f64 {
    max_min(a.branches.iter().map(|x| x.orientation), b.branches.iter().map(|x| x.orientation), math::angular_distance)
}

/// Largest gap from the scaled lengths of `a` to their nearest length in `b`.
pub fn scale_gap(a: &ASJunction, b: &ASJunction, s: f64) -> f64 {
    max_min(a.branches.iter().map(|x| s * x.scale), b.branches.iter().map(|x| x.scale), |x, y| math::abs(x - y))
}

/// Outcome of a repeatability comparison.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Repeatability {
    /// Junctions of the first set.
    pub total: usize,
    /// Pairs passing the location, branch-count and orientation criteria.
    pub matched: usize,
    /// Matched pairs that also pass the scale criterion.
    pub scale_consistent: usize,
}

impl Repeatability {
    /// Fraction of the first set with a fully consistent counterpart.
    pub fn rate(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.scale_consistent as f64 / self.total as f64
        }
    }

    /// Fraction of matched pairs whose scales agree.
    pub fn scale_rate(&self) -> f64 {
        if self.matched == 0 {
            0.0
        } else {
            self.scale_consistent as f64 / self.matched as f64
        }
    }
}

/// Compares detections on an image (`det_a`) with those on its rescaling by
/// `s` (`det_b`). Pairs are assigned greedily by location distance, one to
/// one, among those passing location, branch count and orientation.
pub fn repeatability(det_a: &[ASJunction], det_b: &[ASJunction], s: f64, criteria: &CorrespondenceCriteria) -> Repeatability {
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (i, a) in det_a.iter().enumerate() {
        let p = (s * a.center.0, s * a.center.1);
        for (j, b) in det_b.iter().enumerate() {
            let d = math::hypot(p.0 - b.center.0, p.1 - b.center.1);
            if d < criteria.loc_tol
                && a.branches.len() == b.branches.len()
                && orientation_gap(a, b) < criteria.angle_tol
            {
                candidates.push((d, i, j));
            }
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used_a = alloc::vec![false; det_a.len()];
    let mut used_b = alloc::vec![false; det_b.len()];
    let mut out = Repeatability { total: det_a.len(), ..Default::default() };
    for (_, i, j) in candidates {
        if used_a[i] || used_b[j] {
            continue;
        }
        used_a[i] = true;
        used_b[j] = true;
        out.matched += 1;
        if scale_gap(&det_a[i], &det_b[j], s) < criteria.scale_tol {
            out.scale_consistent += 1;
        }
    }
    out
}

/// Whether `lq` is where `gt` sends `lp`: mapped center within the location
/// tolerance and mapped branch directions within the angle tolerance.
pub fn corresponds(lp: &LJunction, lq: &LJunction, gt: &AffineMap, criteria: &CorrespondenceCriteria) -> bool {
    let c = gt.apply(lp.center);
    if math::hypot(c.0 - lq.center.0, c.1 - lq.center.1) >= criteria.loc_tol {
        return false;
    }
    let mapped = [gt.map_direction(lp.branch1.orientation), gt.map_direction(lp.branch2.orientation)];
    let target = [lq.branch1.orientation, lq.branch2.orientation];
    let gap = max_min(mapped.iter().copied(), target.iter().copied(), math::angular_distance)
        .max(max_min(target.iter().copied(), mapped.iter().copied(), math::angular_distance));
    gap < criteria.angle_tol
}

/// Precision and recall of a match list against a known map.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MatchMetrics {
    pub precision: f64,
    pub recall: f64,
    pub correct: usize,
    pub total: usize,
    /// First-image L-junctions with at least one true counterpart.
    pub matchable: usize,
    /// Set when there are no matches, so precision is undefined.
    pub empty: bool,
}

pub fn match_metrics(
    matches: &[MatchPair],
    lp: &[LJunction],
    lq: &[LJunction],
    gt: &AffineMap,
    criteria: &CorrespondenceCriteria,
) -> MatchMetrics {
    let correct_flags: Vec<bool> =
        matches.iter().map(|m| corresponds(&lp[m.index_p], &lq[m.index_q], gt, criteria)).collect();
    let correct = correct_flags.iter().filter(|c| **c).count();
    let matchable = lp.iter().filter(|a| lq.iter().any(|b| corresponds(a, b, gt, criteria))).count();
    let mut found: Vec<usize> = matches.iter().zip(&correct_flags).filter(|(_, c)| **c).map(|(m, _)| m.index_p).collect();
    found.sort_unstable();
    found.dedup();
    let total = matches.len();
    MatchMetrics {
        precision: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
        recall: if matchable == 0 { 0.0 } else { found.len() as f64 / matchable as f64 },
        correct,
        total,
        matchable,
        empty: total == 0,
    }
}

/// Ground-truth branches recovered by a detection near their junction:
/// returns `(recovered, total)`. A branch counts when some detection within
/// `loc_tol` of the junction has a branch within `angle_tol` in orientation
/// and `scale_tol` in length.
pub fn branch_recovery(
    gt: &[ASJunction],
    detected: &[ASJunction],
    loc_tol: f64,
    scale_tol: f64,
    angle_tol: f64,
) -> (usize, usize) {
    let mut recovered = 0;
    let mut total = 0;
    for g in gt {
        let near: Vec<&ASJunction> = detected
            .iter()
            .filter(|d| math::hypot(d.center.0 - g.center.0, d.center.1 - g.center.1) < loc_tol)
            .collect();
        for b in &g.branches {
            total += 1;
            let hit = near.iter().any(|d| {
                d.branches.iter().any(|e| {
                    math::angular_distance(e.orientation, b.orientation) < angle_tol && math::abs(e.scale - b.scale) < scale_tol
                })
            });
            if hit {
                recovered += 1;
            }
        }
    }
    (recovered, total)
}
