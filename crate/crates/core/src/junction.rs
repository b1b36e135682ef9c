//! Sector neighborhoods, gradient junction-ness, the fixed-radius local
//! junction field and isotropic junction seeds.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::image::GradientField;
use crate::math;
use crate::par;
use crate::stats::{elementary, NullModel};

/// Orientations probed per pixel (a π/36 sweep).
pub const ORIENTATION_COUNT: usize = 72;
/// Upper bound on local responses kept per pixel.
pub const MAX_LOCAL_RESPONSES: usize = 8;

/// Angle of orientation bin `k`.
#[inline]
pub fn orientation_of(k: usize) -> f64 {
    k as f64 * TAU / ORIENTATION_COUNT as f64
}

/// Integer pixel position `(x, y)`.
pub type Pixel = (usize, usize);

/// Sector `S_p(r, θ)`: pixels within `radius` of `center` whose direction
/// lies within `tau / radius` of `orientation`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SectorSpec {
    pub center: Pixel,
    pub radius: f64,
    pub orientation: f64,
    pub tau: f64,
}

impl SectorSpec {
    pub fn new(center: Pixel, radius: f64, orientation: f64, tau: f64) -> Self {
        Self { center, radius, orientation, tau }
    }

    #[inline]
    pub fn half_width(&self) -> f64 {
        self.tau / self.radius
    }

    #[inline]
    fn contains_offset(&self, dx: i64, dy: i64) -> bool {
        if dx == 0 && dy == 0 {
            return false;
        }
        let (fx, fy) = (dx as f64, dy as f64);
        fx * fx + fy * fy <= self.radius * self.radius
            && math::angular_distance(math::direction(fx, fy), self.orientation) <= self.half_width()
    }
}

/// Pixels of the sector in scanline order, clipped to the image.
pub fn sector_pixels(spec: &SectorSpec, width: usize, height: usize) -> Result<Vec<Pixel>> {
    if !(spec.radius >= 1.0) || !spec.radius.is_finite() {
        return Err(Error::InvalidRadius(spec.radius));
    }
    let reach = math::floor(spec.radius) as i64;
    let (cx, cy) = (spec.center.0 as i64, spec.center.1 as i64);
    let mut out = Vec::new();
    for dy in -reach..=reach {
        let y = cy + dy;
        if y < 0 || y >= height as i64 {
            continue;
        }
        for dx in -reach..=reach {
            let x = cx + dx;
            if x < 0 || x >= width as i64 {
                continue;
            }
            if spec.contains_offset(dx, dy) {
                out.push((x as usize, y as usize));
            }
        }
    }
    Ok(out)
}

/// Same set as [`sector_pixels`] (unordered), visiting only a thin band
/// around the sector axis; long narrow sectors stay cheap.
pub(crate) fn sector_pixels_banded(spec: &SectorSpec, width: usize, height: usize) -> Vec<Pixel> {
    let delta = spec.half_width();
    if delta >= PI / 4.0 {
        return sector_pixels(spec, width, height).unwrap_or_default();
    }
    let (ux, uy) = (math::cos(spec.orientation), math::sin(spec.orientation));
    let (cx, cy) = (spec.center.0 as f64, spec.center.1 as f64);
    let slope = math::sin(delta) / math::cos(delta);
    // a rotated lattice of pitch 1/2 puts a point inside every pixel square
    let steps = (math::ceil(2.0 * spec.radius) as i64) + 2;
    let mut out: Vec<Pixel> = Vec::new();
    for i in -2..=steps {
        let s = 0.5 * i as f64;
        let half = ((s.max(0.0) * slope + 1.0) * 2.0) as i64 + 1;
        for k in -half..=half {
            let t = 0.5 * k as f64;
            let x = math::round(cx + s * ux - t * uy);
            let y = math::round(cy + s * uy + t * ux);
            if x < 0.0 || y < 0.0 || x >= width as f64 || y >= height as f64 {
                continue;
            }
            let (xi, yi) = (x as i64, y as i64);
            if spec.contains_offset(xi - spec.center.0 as i64, yi - spec.center.1 as i64) {
                out.push((xi as usize, yi as usize));
            }
        }
    }
    out.sort_unstable_by_key(|p| (p.1, p.0));
    out.dedup();
    out
}

/// `γ_p(q) = ‖∇Ĩ(q)‖ · max(|cos(φ(q) - α)| - |sin(φ(q) - α)|, 0)` with
/// `α` the direction from `p` to `q`.
pub fn pairwise_strength(field: &GradientField, p: Pixel, q: Pixel) -> f64 {
    let alpha = math::direction(q.0 as f64 - p.0 as f64, q.1 as f64 - p.1 as f64);
    field.norm_at(q.0, q.1) * math::alignment(field.phase_at(q.0, q.1) - alpha)
}

/// Sum of [`pairwise_strength`] over the sector.
pub fn branch_strength(field: &GradientField, spec: &SectorSpec) -> f64 {
    // an invalid radius is an empty sector
    if !(spec.radius >= 1.0) || !spec.radius.is_finite() {
        return 0.0;
    }
    sector_pixels_banded(spec, field.width(), field.height())
        .into_iter()
        .map(|q| pairwise_strength(field, spec.center, q))
        .sum()
}

/// Junction strength `t`, the weakest of its branches.
pub fn junction_strength(branches: &[f64]) -> Result<f64> {
    if branches.len() < 2 {
        return Err(Error::TooFewBranches(branches.len()));
    }
    Ok(branches.iter().copied().fold(f64::INFINITY, f64::min))
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Offset {
    pub dx: i32,
    pub dy: i32,
    pub cos_a: f64,
    pub sin_a: f64,
}

/// Member offsets of `S(r, θ_k)` for every orientation bin at one radius.
pub(crate) struct SectorTable {
    pub sectors: Vec<Vec<Offset>>,
}

impl SectorTable {
    pub fn new(radius: f64, tau: f64) -> Self {
        let reach = math::floor(radius) as i32;
        let sectors = (0..ORIENTATION_COUNT)
            .map(|k| {
                let spec = SectorSpec::new((0, 0), radius, orientation_of(k), tau);
                let mut v = Vec::new();
                for dy in -reach..=reach {
                    for dx in -reach..=reach {
                        if spec.contains_offset(dx as i64, dy as i64) {
                            let d = math::hypot(dx as f64, dy as f64);
                            v.push(Offset { dx, dy, cos_a: dx as f64 / d, sin_a: dy as f64 / d });
                        }
                    }
                }
                v
            })
            .collect();
        Self { sectors }
    }

    /// Raw strength sum and in-bounds cardinality of sector `k` at `p`.
    #[inline]
    pub fn strength(&self, field: &GradientField, p: Pixel, k: usize) -> (f64, usize) {
        let (w, h) = (field.width() as i64, field.height() as i64);
        let mut sum = 0.0;
        let mut n = 0;
        for o in &self.sectors[k] {
            let x = p.0 as i64 + o.dx as i64;
            let y = p.1 as i64 + o.dy as i64;
            if x < 0 || y < 0 || x >= w || y >= h {
                continue;
            }
            n += 1;
            let idx = (y * w + x) as usize;
            let m = field.norm_idx(idx);
            if m > 0.0 {
                let [c, s] = field.level_dir_at(idx);
                // cos and sin of φ(q) - α
                let cd = c * o.cos_a + s * o.sin_a;
                let sd = s * o.cos_a - c * o.sin_a;
                sum += m * math::alignment_cs(cd, sd);
            }
        }
        (sum, n)
    }
}

/// Sector tables for several radii over one shared offset list, so each
/// neighbor's junction-ness is evaluated once per center.
pub(crate) struct SectorBank {
    offsets: Vec<Offset>,
    /// `members[i][k]`: indices into `offsets` of sector `k` at radius `i`.
    members: Vec<Vec<Vec<u32>>>,
}

impl SectorBank {
    pub fn new(radii: &[usize], tau: f64) -> Self {
        let reach = radii.iter().copied().max().unwrap_or(0) as i32;
        let mut offsets = Vec::new();
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                let d2 = dx * dx + dy * dy;
                if d2 > 0 && d2 <= reach * reach {
                    let d = math::sqrt(d2 as f64);
                    offsets.push(Offset { dx, dy, cos_a: dx as f64 / d, sin_a: dy as f64 / d });
                }
            }
        }
        let members = radii
            .iter()
            .map(|&r| {
                (0..ORIENTATION_COUNT)
                    .map(|k| {
                        let spec = SectorSpec::new((0, 0), r as f64, orientation_of(k), tau);
                        (0..offsets.len() as u32)
                            .filter(|&j| {
                                let o = &offsets[j as usize];
                                spec.contains_offset(o.dx as i64, o.dy as i64)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self { offsets, members }
    }

    /// Junction-ness of every offset around `p`; returns whether all of them
    /// fall inside the image.
    pub fn fill(&self, field: &GradientField, p: Pixel, gamma: &mut [f64], inside: &mut [bool]) -> bool {
        let (w, h) = (field.width() as i64, field.height() as i64);
        let mut all = true;
        for (j, o) in self.offsets.iter().enumerate() {
            let x = p.0 as i64 + o.dx as i64;
            let y = p.1 as i64 + o.dy as i64;
            if x < 0 || y < 0 || x >= w || y >= h {
                inside[j] = false;
                gamma[j] = 0.0;
                all = false;
                continue;
            }
            inside[j] = true;
            let idx = (y * w + x) as usize;
            let m = field.norm_idx(idx);
            gamma[j] = if m > 0.0 {
                let [c, s] = field.level_dir_at(idx);
                m * math::alignment_cs(c * o.cos_a + s * o.sin_a, s * o.cos_a - c * o.sin_a)
            } else {
                0.0
            };
        }
        all
    }

    /// Raw sums and in-image cardinalities of all sectors at radius index `i`.
    pub fn sweep(
        &self,
        i: usize,
        gamma: &[f64],
        inside: &[bool],
        all_inside: bool,
        raw: &mut [f64; ORIENTATION_COUNT],
        card: &mut [usize; ORIENTATION_COUNT],
    ) {
        for (k, members) in self.members[i].iter().enumerate() {
            raw[k] = members.iter().map(|&j| gamma[j as usize]).sum();
            card[k] = if all_inside { members.len() } else { members.iter().filter(|&&j| inside[j as usize]).count() };
        }
    }
}

/// Local maxima of a circular sequence. A run of equal values counts as one
/// peak when both neighbors of the run are strictly lower; its position is
/// the run midpoint (possibly a half index).
pub(crate) fn circular_peaks(values: &[f64]) -> Vec<(f64, usize)> {
    let n = values.len();
    let mut peaks = Vec::new();
    if n == 0 {
        return peaks;
    }
    // start scanning right after a strict change so runs never wrap at 0
    let Some(start) = (0..n).find(|&i| values[i] != values[(i + n - 1) % n]) else {
        return peaks;
    };
    let mut i = 0;
    while i < n {
        let a = (start + i) % n;
        let mut len = 1;
        while len < n && values[(a + len) % n] == values[a] {
            len += 1;
        }
        let prev = values[(a + n - 1) % n];
        let next = values[(a + len) % n];
        if prev < values[a] && next < values[a] {
            let mid = a as f64 + 0.5 * (len - 1) as f64;
            peaks.push((mid % n as f64, a));
        }
        i += len;
    }
    peaks
}

/// One local junction response: orientation, standardized strength and NFA.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalResponse {
    pub theta: f64,
    pub omega: f64,
    pub nfa: f64,
}

/// Per-pixel local junction responses at a fixed small radius, stored in
/// compressed rows.
#[derive(Clone, Debug)]
pub struct LocalJunctionField {
    width: usize,
    height: usize,
    fixed_radius: usize,
    starts: Vec<u32>,
    responses: Vec<LocalResponse>,
}

impl LocalJunctionField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn fixed_radius(&self) -> usize {
        self.fixed_radius
    }

    #[inline]
    pub fn responses_at(&self, x: usize, y: usize) -> &[LocalResponse] {
        let i = y * self.width + x;
        &self.responses[self.starts[i] as usize..self.starts[i + 1] as usize]
    }

    pub fn total_responses(&self) -> usize {
        self.responses.len()
    }

    /// Keeps only responses with `nfa <= epsilon`.
    pub fn restrict(&self, epsilon: f64) -> Self {
        let mut starts = Vec::with_capacity(self.starts.len());
        let mut responses = Vec::new();
        starts.push(0);
        for i in 0..self.width * self.height {
            let row = &self.responses[self.starts[i] as usize..self.starts[i + 1] as usize];
            responses.extend(row.iter().filter(|r| r.nfa <= epsilon));
            starts.push(responses.len() as u32);
        }
        Self { starts, responses, ..*self }
    }

    /// Builds a field from explicit per-pixel response lists (row-major).
    pub fn from_rows(width: usize, height: usize, fixed_radius: usize, rows: Vec<Vec<LocalResponse>>) -> Result<Self> {
        if rows.len() != width * height {
            return Err(Error::DataLength { expected: width * height, got: rows.len() });
        }
        let mut starts = Vec::with_capacity(rows.len() + 1);
        let mut responses = Vec::new();
        starts.push(0);
        for row in rows {
            responses.extend(row);
            starts.push(responses.len() as u32);
        }
        Ok(Self { width, height, fixed_radius, starts, responses })
    }
}

/// Standardized strengths `(Σγ/√n - √n μ)/σ` over the full orientation sweep,
/// with the raw sums and cardinalities.
fn sweep(table: &SectorTable, field: &GradientField, p: Pixel) -> [(f64, f64, usize); ORIENTATION_COUNT] {
    let base = elementary();
    let (mu, sigma) = (base.mean(), math::sqrt(base.variance()));
    let mut out = [(0.0, 0.0, 0); ORIENTATION_COUNT];
    for (k, slot) in out.iter_mut().enumerate() {
        let (sum, n) = table.strength(field, p, k);
        let omega = if n == 0 {
            0.0
        } else {
            let rn = math::sqrt(n as f64);
            (sum / rn - rn * mu) / sigma
        };
        *slot = (omega, sum, n);
    }
    out
}

/// Standardized local strengths `ω_p(θ_k)` for all orientation bins.
pub fn standardized_sweep(field: &GradientField, p: Pixel, fixed_radius: usize, tau: f64) -> Vec<f64> {
    let table = SectorTable::new(fixed_radius as f64, tau);
    sweep(&table, field, p).iter().map(|s| s.0).collect()
}

fn check_local_radius(r: usize) -> Result<()> {
    if matches!(r, 3 | 5 | 7) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(alloc::format!("local radius must be 3, 5 or 7, got {r}")))
    }
}

/// Local junction field: orientation NMS on the standardized sweep, responses
/// kept when `w·h·72·F(Σγ; n) <= epsilon`, at most eight per pixel.
pub fn local_junction_field(field: &GradientField, fixed_radius: usize, tau: f64, epsilon: f64) -> Result<LocalJunctionField> {
    check_local_radius(fixed_radius)?;
    if !(tau > 0.0) || !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!("tau={tau}, epsilon={epsilon}")));
    }
    let (w, h) = (field.width(), field.height());
    let table = SectorTable::new(fixed_radius as f64, tau);
    let n_tests = (w * h * ORIENTATION_COUNT) as f64;
    let step = TAU / ORIENTATION_COUNT as f64;
    let rows: Vec<Vec<Vec<LocalResponse>>> = par::map_range(h, |y| {
        (0..w)
            .map(|x| {
                let s = sweep(&table, field, (x, y));
                let omegas: Vec<f64> = s.iter().map(|v| v.0).collect();
                let mut kept: Vec<LocalResponse> = circular_peaks(&omegas)
                    .into_iter()
                    .filter_map(|(pos, k)| {
                        let (omega, sum, n) = s[k];
                        if n == 0 || sum <= 0.0 {
                            return None;
                        }
                        let nfa = n_tests * NullModel::Elementary.tail(n, sum);
                        (nfa <= epsilon).then(|| LocalResponse { theta: math::wrap_angle(pos * step), omega, nfa })
                    })
                    .collect();
                if kept.len() > MAX_LOCAL_RESPONSES {
                    kept.sort_by(|a, b| b.omega.total_cmp(&a.omega));
                    kept.truncate(MAX_LOCAL_RESPONSES);
                    kept.sort_by(|a, b| a.theta.total_cmp(&b.theta));
                }
                kept
            })
            .collect()
    });
    LocalJunctionField::from_rows(w, h, fixed_radius, rows.into_iter().flatten().collect())
}

/// Parameters of the isotropic seed detector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsotropicParams {
    pub epsilon: f64,
    pub tau: f64,
    pub min_radius: usize,
    pub max_radius: usize,
}

impl Default for IsotropicParams {
    fn default() -> Self {
        Self { epsilon: 1.0, tau: 1.0, min_radius: 4, max_radius: 12 }
    }
}

/// An ε-meaningful junction with a single shared scale.
#[derive(Clone, Debug, PartialEq)]
pub struct IsotropicJunction {
    /// Sub-pixel center.
    pub center: (f64, f64),
    /// Pixel the junction was tested at.
    pub pixel: Pixel,
    /// Smallest radius at which the junction is ε-meaningful.
    pub radius: f64,
    /// Radius of the lowest NFA; branches and strength refer to it.
    pub test_radius: f64,
    /// Branch orientations, ascending.
    pub branch_orientations: Vec<f64>,
    pub strength: f64,
    pub log10_nfa: f64,
    pub nfa: f64,
}

#[derive(Clone, Debug)]
struct Candidate {
    pixel: Pixel,
    radius: f64,
    test_radius: f64,
    branches: Vec<f64>,
    strength: f64,
    log10_nfa: f64,
}

/// Best branch set at one radius: `(log10 NFA, strength, orientations)`.
fn best_branch_set(
    raw: &[f64; ORIENTATION_COUNT],
    card: &[usize; ORIENTATION_COUNT],
    radius: f64,
    tau: f64,
    min_sep: f64,
    log10_pixels_radii: f64,
) -> Option<(f64, f64, Vec<f64>)> {
    let step = TAU / ORIENTATION_COUNT as f64;
    // (own tail, orientation, strength, cardinality)
    let mut peaks: Vec<(f64, f64, f64, usize)> = circular_peaks(raw)
        .into_iter()
        .filter(|&(_, k)| raw[k] > 0.0 && card[k] > 0)
        .map(|(pos, k)| (NullModel::Elementary.tail(card[k], raw[k]), math::wrap_angle(pos * step), raw[k], card[k]))
        .collect();
    if peaks.len() < 2 {
        return None;
    }
    let own_log_tail = |p: &(f64, f64, f64, usize)| NullModel::Elementary.log10_tail(p.3, p.2);
    peaks.sort_by(|a, b| {
        let by_tail = a.0.total_cmp(&b.0);
        let by_log = if by_tail == Ordering::Equal { own_log_tail(a).total_cmp(&own_log_tail(b)) } else { by_tail };
        by_log.then(a.1.total_cmp(&b.1))
    });

    let log10_orient = math::log10(ORIENTATION_COUNT as f64);
    let orient_share = 1.0 / ORIENTATION_COUNT as f64;
    let mut chosen: Vec<(f64, f64, usize)> = Vec::new();
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    let mut evaluated = false;
    // a straight edge seen from a pixel beside it bends by up to the sector
    // resolution
    let straight_tol = (PI / 18.0).max(2.0 * tau / radius);
    for &(own_tail, theta, s, n) in &peaks {
        if chosen.iter().any(|c| math::angular_distance(c.0, theta) <= min_sep) {
            continue;
        }
        if evaluated && own_tail >= orient_share {
            // this and every later peak can only raise the NFA
            break;
        }
        chosen.push((theta, s, n));
        let m = chosen.len();
        if m < 2 {
            continue;
        }
        if m == 2 && math::angular_distance(chosen[0].0, chosen[1].0) >= PI - straight_tol {
            // a straight edge, not a junction
            continue;
        }
        evaluated = true;
        let t = chosen.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        let log_tail: f64 = chosen.iter().map(|c| NullModel::Elementary.log10_tail(c.2, t)).sum();
        let log_nfa = log10_pixels_radii + m as f64 * log10_orient + log_tail;
        if best.as_ref().map_or(true, |b| log_nfa < b.0) {
            let mut thetas: Vec<f64> = chosen.iter().map(|c| c.0).collect();
            thetas.sort_by(f64::total_cmp);
            best = Some((log_nfa, t, thetas));
        }
    }
    best
}

/// Isotropic junction seeds: per pixel and radius the strongest orientation
/// peaks are grouped into the branch set of lowest NFA, with
/// `#tests = pixels · 72^M · radius count`; detections then suppress weaker
/// ones within their test radius.
pub fn detect_isotropic(field: &GradientField, params: &IsotropicParams) -> Result<Vec<IsotropicJunction>> {
    if params.min_radius < 1 || params.max_radius < params.min_radius {
        return Err(Error::InvalidParameter(alloc::format!(
            "radius range {}..={}",
            params.min_radius,
            params.max_radius
        )));
    }
    if !(params.epsilon > 0.0) || !(params.tau > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!("epsilon={}, tau={}", params.epsilon, params.tau)));
    }
    let (w, h) = (field.width(), field.height());
    let radii: Vec<usize> = (params.min_radius..=params.max_radius).collect();
    let bank = SectorBank::new(&radii, params.tau);
    let log10_pixels_radii = math::log10((w * h) as f64) + math::log10(radii.len() as f64);
    let log_eps = math::log10(params.epsilon);
    let reach = params.max_radius;
    // branches must stay resolvable at every scanned radius
    let min_sep = 2.0 * params.tau / params.min_radius as f64;

    let rows: Vec<Vec<Candidate>> = par::map_range(h, |y| {
        let mut out = Vec::new();
        let mut gamma = alloc::vec![0.0; bank.offsets.len()];
        let mut inside = alloc::vec![false; bank.offsets.len()];
        let mut raw = [0.0; ORIENTATION_COUNT];
        let mut card = [0usize; ORIENTATION_COUNT];
        for x in 0..w {
            // skip pixels with no gradient in reach
            let any = (y.saturating_sub(reach)..(y + reach + 1).min(h))
                .any(|yy| (x.saturating_sub(reach)..(x + reach + 1).min(w)).any(|xx| field.norm_at(xx, yy) > 0.0));
            if !any {
                continue;
            }
            let mut smallest: Option<f64> = None;
            let mut best: Option<(f64, f64, f64, Vec<f64>)> = None;
            let all_inside = bank.fill(field, (x, y), &mut gamma, &mut inside);
            for (i, &r) in radii.iter().enumerate() {
                bank.sweep(i, &gamma, &inside, all_inside, &mut raw, &mut card);
                if let Some((lnfa, t, thetas)) =
                    best_branch_set(&raw, &card, r as f64, params.tau, min_sep, log10_pixels_radii)
                {
                    if lnfa <= log_eps {
                        smallest.get_or_insert(r as f64);
                        if best.as_ref().map_or(true, |b| lnfa < b.0) {
                            best = Some((lnfa, r as f64, t, thetas));
                        }
                    }
                }
            }
            if let (Some(radius), Some((log10_nfa, test_radius, strength, branches))) = (smallest, best) {
                out.push(Candidate { pixel: (x, y), radius, test_radius, branches, strength, log10_nfa });
            }
        }
        out
    });
    let candidates: Vec<Candidate> = rows.into_iter().flatten().collect();
    Ok(exclusion(&candidates, w, log_eps))
}

fn exclusion(candidates: &[Candidate], width: usize, log_eps: f64) -> Vec<IsotropicJunction> {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    let scan = |c: &Candidate| c.pixel.1 * width + c.pixel.0;
    order.sort_by(|&a, &b| {
        let (ca, cb) = (&candidates[a], &candidates[b]);
        ca.log10_nfa.partial_cmp(&cb.log10_nfa).unwrap_or(Ordering::Equal).then(scan(ca).cmp(&scan(cb)))
    });
    let mut suppressed = alloc::vec![false; candidates.len()];
    let mut out = Vec::new();
    for (rank, &i) in order.iter().enumerate() {
        if suppressed[i] {
            continue;
        }
        let c = &candidates[i];
        let r2 = c.test_radius * c.test_radius;
        for &j in &order[rank + 1..] {
            let o = &candidates[j];
            let dx = o.pixel.0 as f64 - c.pixel.0 as f64;
            let dy = o.pixel.1 as f64 - c.pixel.1 as f64;
            if dx * dx + dy * dy <= r2 {
                suppressed[j] = true;
            }
        }
        // NFA-weighted centroid of the candidates around the winner
        let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
        for o in candidates {
            if o.pixel.0.abs_diff(c.pixel.0) <= 1 && o.pixel.1.abs_diff(c.pixel.1) <= 1 {
                let wgt = log_eps - o.log10_nfa;
                if wgt > 0.0 {
                    sx += wgt * o.pixel.0 as f64;
                    sy += wgt * o.pixel.1 as f64;
                    sw += wgt;
                }
            }
        }
        let center = if sw > 0.0 { (sx / sw, sy / sw) } else { (c.pixel.0 as f64, c.pixel.1 as f64) };
        out.push(IsotropicJunction {
            center,
            pixel: c.pixel,
            radius: c.radius,
            test_radius: c.test_radius,
            branch_orientations: c.branches.clone(),
            strength: c.strength,
            log10_nfa: c.log10_nfa,
            nfa: math::pow(10.0, c.log10_nfa),
        });
    }
    out
}
