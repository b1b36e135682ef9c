//! Junction correspondence through the affine maps induced by pairs of
//! L-junctions.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::math;
use crate::par;
use crate::scale::{ASJunction, Branch};

/// Branch pairs closer than this to a straight angle are not L-junctions.
pub const COLLINEAR_TOLERANCE: f64 = PI / 18.0;

/// Two-branch junction with branches in canonical order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LJunction {
    pub center: (f64, f64),
    pub branch1: Branch,
    pub branch2: Branch,
    /// Index of the junction it was decomposed from.
    pub parent: usize,
}

/// `H = [[h1, h2, h3], [h4, h5, h6], [0, 0, 1]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineMap {
    pub h: [f64; 6],
}

impl AffineMap {
    pub const IDENTITY: AffineMap = AffineMap { h: [1.0, 0.0, 0.0, 0.0, 1.0, 0.0] };

    pub fn new(h: [f64; 6]) -> Self {
        Self { h }
    }

    /// Rotation by `angle`, uniform scale, then translation.
    pub fn similarity(angle: f64, scale: f64, tx: f64, ty: f64) -> Self {
        let (c, s) = (scale * math::cos(angle), scale * math::sin(angle));
        Self { h: [c, -s, tx, s, c, ty] }
    }

    #[inline]
    pub fn apply(&self, p: (f64, f64)) -> (f64, f64) {
        let h = &self.h;
        (h[0] * p.0 + h[1] * p.1 + h[2], h[3] * p.0 + h[4] * p.1 + h[5])
    }

    /// The linear part applied to a vector.
    #[inline]
    pub fn apply_linear(&self, v: (f64, f64)) -> (f64, f64) {
        let h = &self.h;
        (h[0] * v.0 + h[1] * v.1, h[3] * v.0 + h[4] * v.1)
    }

    pub fn det(&self) -> f64 {
        self.h[0] * self.h[4] - self.h[1] * self.h[3]
    }

    pub fn inverse(&self) -> Result<Self> {
        let d = self.det();
        if !(math::abs(d) > 1e-12) || !d.is_finite() {
            return Err(Error::Degenerate("singular affine map"));
        }
        let h = &self.h;
        let (a, b, c, e) = (h[4] / d, -h[1] / d, -h[3] / d, h[0] / d);
        Ok(Self { h: [a, b, -(a * h[2] + b * h[5]), c, e, -(c * h[2] + e * h[5])] })
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        let (a, b) = (&self.h, &other.h);
        Self {
            h: [
                a[0] * b[0] + a[1] * b[3],
                a[0] * b[1] + a[1] * b[4],
                a[0] * b[2] + a[1] * b[5] + a[2],
                a[3] * b[0] + a[4] * b[3],
                a[3] * b[1] + a[4] * b[4],
                a[3] * b[2] + a[4] * b[5] + a[5],
            ],
        }
    }

    /// Direction of the image of a unit vector at angle `theta`.
    pub fn map_direction(&self, theta: f64) -> f64 {
        let (x, y) = self.apply_linear((math::cos(theta), math::sin(theta)));
        math::direction(x, y)
    }
}

/// A scored correspondence between L-junction `index_p` of the first image
/// and `index_q` of the second.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatchPair {
    pub index_p: usize,
    pub index_q: usize,
    pub dissimilarity: f64,
    pub forward_map: AffineMap,
}

/// Orders two branches so the counter-clockwise sweep from the first to the
/// second is below π.
pub fn canonical_order(b1: Branch, b2: Branch) -> Result<(Branch, Branch)> {
    let sweep = math::ccw_sweep(b1.orientation, b2.orientation);
    if sweep == 0.0 || sweep == PI {
        return Err(Error::Degenerate("branches are parallel"));
    }
    Ok(if sweep < PI { (b1, b2) } else { (b2, b1) })
}

/// All non-collinear branch pairs of a junction as L-junctions.
pub fn decompose(asj: &ASJunction, parent: usize) -> Vec<LJunction> {
    let b = &asj.branches;
    let mut out = Vec::new();
    for i in 0..b.len() {
        for j in i + 1..b.len() {
            let d = math::angular_distance(b[i].orientation, b[j].orientation);
            if d <= COLLINEAR_TOLERANCE || d >= PI - COLLINEAR_TOLERANCE {
                continue;
            }
            if let Ok((first, second)) = canonical_order(b[i], b[j]) {
                out.push(LJunction { center: asj.center, branch1: first, branch2: second, parent });
            }
        }
    }
    out
}

/// Center and the two branch endpoints.
pub fn endpoints(l: &LJunction) -> [(f64, f64); 3] {
    let end = |b: &Branch| {
        (l.center.0 + b.scale * math::cos(b.orientation), l.center.1 + b.scale * math::sin(b.orientation))
    };
    [l.center, end(&l.branch1), end(&l.branch2)]
}

/// Affine map taking the three defining points of `lp` onto those of `lq`.
pub fn estimate_affine(lp: &LJunction, lq: &LJunction) -> Result<AffineMap> {
    affine_from_points(&endpoints(lp), &endpoints(lq))
}

/// Exact affine map from three point correspondences.
pub fn affine_from_points(src: &[(f64, f64); 3], dst: &[(f64, f64); 3]) -> Result<AffineMap> {
    // Solve in coordinates relative to the first point: the 6x6 system splits
    // into a 2x2 linear part and a translation.
    let (u1, u2) = ((src[1].0 - src[0].0, src[1].1 - src[0].1), (src[2].0 - src[0].0, src[2].1 - src[0].1));
    let (v1, v2) = ((dst[1].0 - dst[0].0, dst[1].1 - dst[0].1), (dst[2].0 - dst[0].0, dst[2].1 - dst[0].1));
    let det_u = u1.0 * u2.1 - u2.0 * u1.1;
    if !(0.5 * math::abs(det_u) >= 0.5) {
        return Err(Error::Degenerate("source triangle area below 0.5 px²"));
    }
    // A = V U^{-1}
    let inv = [u2.1 / det_u, -u2.0 / det_u, -u1.1 / det_u, u1.0 / det_u];
    let a = v1.0 * inv[0] + v2.0 * inv[2];
    let b = v1.0 * inv[1] + v2.0 * inv[3];
    let c = v1.1 * inv[0] + v2.1 * inv[2];
    let d = v1.1 * inv[1] + v2.1 * inv[3];
    if !(math::abs(a * d - b * c) >= 1e-8) {
        return Err(Error::Degenerate("affine map is singular"));
    }
    let tx = dst[0].0 - (a * src[0].0 + b * src[0].1);
    let ty = dst[0].1 - (c * src[0].0 + d * src[0].1);
    Ok(AffineMap { h: [a, b, tx, c, d, ty] })
}

/// Valid overlap required for a patch comparison.
pub const MIN_OVERLAP: f64 = 0.6;

/// Zero-mean unit-norm SSD between `from` sampled on a square grid around
/// `center` and `to` sampled at the mapped grid.
fn one_way(from: &GrayImage, to: &GrayImage, center: (f64, f64), map: &AffineMap, patch_size: usize) -> Result<f64> {
    let half = (patch_size as f64 - 1.0) / 2.0;
    let total = patch_size * patch_size;
    let mut a = Vec::with_capacity(total);
    let mut b = Vec::with_capacity(total);
    for j in 0..patch_size {
        for i in 0..patch_size {
            let p = (center.0 + i as f64 - half, center.1 + j as f64 - half);
            let q = map.apply(p);
            if let (Some(x), Some(y)) = (from.bilinear(p.0, p.1), to.bilinear(q.0, q.1)) {
                a.push(x);
                b.push(y);
            }
        }
    }
    if (a.len() as f64) < MIN_OVERLAP * total as f64 {
        return Err(Error::InsufficientOverlap { valid: a.len(), total });
    }
    let normalize = |v: &mut Vec<f64>| {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        v.iter_mut().for_each(|x| *x -= mean);
        let norm = math::sqrt(v.iter().map(|x| x * x).sum::<f64>());
        if norm > 1e-9 {
            v.iter_mut().for_each(|x| *x /= norm);
            true
        } else {
            false
        }
    };
    Ok(match (normalize(&mut a), normalize(&mut b)) {
        (true, true) => a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum(),
        (false, false) => 0.0,
        _ => 2.0,
    })
}

/// `𝒟`: the normalized patch distance from `lp`'s neighborhood mapped by `map`
/// plus the one from `lq`'s neighborhood mapped back by its inverse.
pub fn patch_dissimilarity(
    img_p: &GrayImage,
    img_q: &GrayImage,
    lp: &LJunction,
    lq: &LJunction,
    map: &AffineMap,
    patch_size: usize,
) -> Result<f64> {
    let inv = map.inverse()?;
    Ok(one_way(img_p, img_q, lp.center, map, patch_size)? + one_way(img_q, img_p, lq.center, &inv, patch_size)?)
}

/// Matching settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatchParams {
    pub patch_size: usize,
    /// Accept the best candidate when `second >= ratio · best`.
    pub ratio: f64,
    /// Require the best candidate to choose back.
    pub mutual: bool,
}

impl Default for MatchParams {
    fn default() -> Self {
        Self { patch_size: 33, ratio: 1.5, mutual: true }
    }
}

/// Decomposes every junction of a list into L-junctions.
pub fn decompose_all(junctions: &[ASJunction]) -> Vec<LJunction> {
    junctions.iter().enumerate().flat_map(|(i, j)| decompose(j, i)).collect()
}

/// Dissimilarities of every L-pair; `None` where the map is degenerate or
/// the patches do not overlap enough.
pub fn dissimilarity_matrix(
    lp: &[LJunction],
    lq: &[LJunction],
    img_p: &GrayImage,
    img_q: &GrayImage,
    patch_size: usize,
) -> Vec<Vec<Option<(f64, AffineMap)>>> {
    par::map_range(lp.len(), |n| {
        lq.iter()
            .map(|q| {
                let map = estimate_affine(&lp[n], q).ok()?;
                let d = patch_dissimilarity(img_p, img_q, &lp[n], q, &map, patch_size).ok()?;
                Some((d, map))
            })
            .collect()
    })
}

fn ratio_pass(best: f64, second: f64, ratio: f64) -> bool {
    ratio.is_finite() && second > 0.0 && second >= ratio * best
}

/// Ratio test, optional mutual check, sorted by dissimilarity.
pub fn select_matches(matrix: &[Vec<Option<(f64, AffineMap)>>], cols: usize, params: &MatchParams) -> Vec<MatchPair> {
    let best_in_col = |m: usize| -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for (n, row) in matrix.iter().enumerate() {
            if let Some((d, _)) = row[m] {
                if best.map_or(true, |b| d < b.0) {
                    best = Some((d, n));
                }
            }
        }
        best.map(|b| b.1)
    };
    let mut out = Vec::new();
    for (n, row) in matrix.iter().enumerate() {
        let mut best: Option<(f64, usize)> = None;
        let mut second = f64::INFINITY;
        for (m, cell) in row.iter().enumerate().take(cols) {
            if let Some((d, _)) = *cell {
                match best {
                    Some((b, _)) if d >= b => second = second.min(d),
                    Some((b, _)) => {
                        second = b;
                        best = Some((d, m));
                    }
                    None => best = Some((d, m)),
                }
            }
        }
        let Some((d, m)) = best else { continue };
        if !ratio_pass(d, second, params.ratio) {
            continue;
        }
        if params.mutual && best_in_col(m) != Some(n) {
            continue;
        }
        let map = row[m].expect("best cell is present").1;
        out.push(MatchPair { index_p: n, index_q: m, dissimilarity: d, forward_map: map });
    }
    out.sort_by(|a, b| {
        a.dissimilarity.total_cmp(&b.dissimilarity).then(a.index_p.cmp(&b.index_p)).then(a.index_q.cmp(&b.index_q))
    });
    out
}

/// Matches the L-junctions of two junction lists. Indices in the result refer
/// to [`decompose_all`] of each list.
pub fn match_junctions(
    asj_p: &[ASJunction],
    asj_q: &[ASJunction],
    img_p: &GrayImage,
    img_q: &GrayImage,
    params: &MatchParams,
) -> Vec<MatchPair> {
    let lp = decompose_all(asj_p);
    let lq = decompose_all(asj_q);
    let matrix = dissimilarity_matrix(&lp, &lq, img_p, img_q, params.patch_size);
    select_matches(&matrix, lq.len(), params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn br(scale: f64, deg: f64) -> Branch {
        Branch { scale, orientation: deg.to_radians(), nfa: 0.0 }
    }

    fn asj(branches: Vec<Branch>) -> ASJunction {
        ASJunction { center: (10.0, 10.0), branches, source: 0 }
    }

    #[test]
    fn decomposition_counts() {
        assert_eq!(decompose(&asj(vec![br(5.0, 90.0), br(5.0, 170.0)]), 0).len(), 1);
        assert_eq!(decompose(&asj(vec![br(5.0, 0.0), br(5.0, 120.0), br(5.0, 240.0)]), 0).len(), 3);
        let x = asj(vec![br(5.0, 0.0), br(5.0, 90.0), br(5.0, 180.0), br(5.0, 270.0)]);
        assert_eq!(decompose(&x, 0).len(), 4);
    }

    #[test]
    fn canonical_order_examples() {
        let (a, b) = canonical_order(br(1.0, 0.0), br(1.0, 90.0)).unwrap();
        assert_eq!((a.orientation, b.orientation), (0.0, PI / 2.0));
        let (a, b) = canonical_order(br(1.0, 0.0), br(1.0, 270.0)).unwrap();
        assert!((a.orientation - 1.5 * PI).abs() < 1e-12 && b.orientation == 0.0);
        let (c, d) = canonical_order(br(1.0, 270.0), br(1.0, 0.0)).unwrap();
        assert_eq!((a, b), (c, d));
    }

    #[test]
    fn endpoint_examples() {
        let l = LJunction { center: (10.0, 10.0), branch1: br(5.0, 0.0), branch2: br(2.0, 90.0), parent: 0 };
        let e = endpoints(&l);
        assert_eq!(e[1], (15.0, 10.0));
        assert!((e[2].0 - 10.0).abs() < 1e-12 && (e[2].1 - 12.0).abs() < 1e-12);
    }

    fn lj(center: (f64, f64), b1: Branch, b2: Branch) -> LJunction {
        let (branch1, branch2) = canonical_order(b1, b2).unwrap();
        LJunction { center, branch1, branch2, parent: 0 }
    }

    #[test]
    fn affine_identity_and_translation() {
        let l = lj((20.0, 30.0), br(12.0, 10.0), br(7.0, 100.0));
        let h = estimate_affine(&l, &l).unwrap();
        for (a, b) in h.h.iter().zip(AffineMap::IDENTITY.h) {
            assert!((a - b).abs() < 1e-12);
        }
        let t = LJunction { center: (23.0, 28.0), ..l };
        let h = estimate_affine(&l, &t).unwrap();
        for (a, b) in h.h.iter().zip([1.0, 0.0, 3.0, 0.0, 1.0, -2.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let tiny = lj((0.0, 0.0), br(0.5, 0.0), br(0.5, 90.0));
        assert!(estimate_affine(&tiny, &tiny).is_err());
    }

    #[test]
    fn inverse_and_compose() {
        let a = AffineMap::new([0.8, -0.3, 5.0, 0.2, 1.1, -7.0]);
        let id = a.compose(&a.inverse().unwrap());
        for (x, y) in id.h.iter().zip(AffineMap::IDENTITY.h) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    fn ramp_image() -> GrayImage {
        GrayImage::from_fn(80, 80, |x, y| {
            let (fx, fy) = (x as f64, y as f64);
            0.5 + 0.3 * (fx * 0.21).sin() * (fy * 0.13).cos() + 0.1 * ((fx + 2.0 * fy) * 0.07).sin()
        })
        .unwrap()
    }

    #[test]
    fn self_dissimilarity_is_zero() {
        let img = ramp_image();
        let l = lj((40.0, 40.0), br(12.0, 10.0), br(7.0, 100.0));
        let d = patch_dissimilarity(&img, &img, &l, &l, &AffineMap::IDENTITY, 33).unwrap();
        assert!(d.abs() < 1e-9);
    }

    #[test]
    fn dissimilarity_symmetry_and_contrast_invariance() {
        let img = ramp_image();
        let lp = lj((38.0, 41.0), br(12.0, 10.0), br(7.0, 100.0));
        let lq = lj((44.0, 36.0), br(10.0, 25.0), br(9.0, 130.0));
        let h = estimate_affine(&lp, &lq).unwrap();
        let d1 = patch_dissimilarity(&img, &img, &lp, &lq, &h, 33).unwrap();
        let d2 = patch_dissimilarity(&img, &img, &lq, &lp, &h.inverse().unwrap(), 33).unwrap();
        assert!((d1 - d2).abs() < 1e-6);
        let brighter = GrayImage::from_fn(80, 80, |x, y| 0.5 * img.get(x, y) + 0.3).unwrap();
        let d3 = patch_dissimilarity(&img, &brighter, &lp, &lq, &h, 33).unwrap();
        assert!((d1 - d3).abs() < 1e-6);
    }

    #[test]
    fn insufficient_overlap() {
        let img = ramp_image();
        let l = lj((2.0, 2.0), br(12.0, 10.0), br(7.0, 100.0));
        assert!(matches!(
            patch_dissimilarity(&img, &img, &l, &l, &AffineMap::IDENTITY, 33),
            Err(Error::InsufficientOverlap { .. })
        ));
    }

    #[test]
    fn ratio_rule() {
        assert!(ratio_pass(1.0, 1.5, 1.5));
        assert!(!ratio_pass(1.0, 1.4, 1.5));
        assert!(ratio_pass(1.0, f64::INFINITY, 1.5));
        assert!(!ratio_pass(1.0, f64::INFINITY, f64::INFINITY));
        assert!(!ratio_pass(0.0, 0.0, 1.5));
    }

    proptest! {
        #[test]
        fn affine_recovery(
            cx in 10.0f64..200.0, cy in 10.0f64..200.0,
            r1 in 5.0f64..80.0, r2 in 5.0f64..80.0,
            t1 in 0.0f64..360.0, gap in 20.0f64..160.0,
            angle in -1.0f64..1.0, sx in 0.5f64..1.5, sy in 0.5f64..1.5, shear in -0.3f64..0.3,
            tx in -50.0f64..50.0, ty in -50.0f64..50.0,
        ) {
            let lp = lj((cx, cy), br(r1, t1), br(r2, t1 + gap));
            let (c, s) = (angle.cos(), angle.sin());
            let a = AffineMap::new([c * sx, -s * sy + shear, tx, s * sx, c * sy, ty]);
            prop_assume!(a.det() > 0.05);
            let [p0, p1, p2] = endpoints(&lp);
            let q: Vec<(f64, f64)> = [p0, p1, p2].iter().map(|&p| a.apply(p)).collect();
            let h = affine_from_points(&[p0, p1, p2], &[q[0], q[1], q[2]]).unwrap();
            for (x, y) in h.h.iter().zip(a.h) {
                prop_assert!((x - y).abs() < 1e-9, "{:?} vs {:?}", h, a);
            }
            for (p, qq) in [p0, p1, p2].iter().zip(&q) {
                let m = h.apply(*p);
                prop_assert!(math::hypot(m.0 - qq.0, m.1 - qq.1) < 1e-9);
            }
        }
    }
}
