//! Wireframe scenes rendered with known junction geometry.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::matching::AffineMap;
use crate::math;
use crate::par;
use crate::scale::{ASJunction, Branch};

pub type Point = (f64, f64);

/// Straight stroke from `a` to `b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    pub fn length(&self) -> f64 {
        math::hypot(self.b.0 - self.a.0, self.b.1 - self.a.1)
    }

    pub fn transformed(&self, map: &AffineMap) -> Self {
        Self { a: map.apply(self.a), b: map.apply(self.b) }
    }
}

/// Scene primitives. Angles in radians, y axis pointing down.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Segment { a: Point, b: Point },
    /// Closed outline of a `width × height` rectangle rotated by `angle`.
    Rectangle { center: Point, width: f64, height: f64, angle: f64 },
    /// Four arms from `center` along `angle + k·π/2`; lengths in that order.
    Cross { center: Point, arms: [f64; 4], angle: f64 },
    /// Two arms from a shared corner.
    L { corner: Point, first: (f64, f64), second: (f64, f64) },
    Polyline { points: Vec<Point>, closed: bool },
}

impl Shape {
    pub fn segments(&self) -> Vec<Segment> {
        let ray = |c: Point, len: f64, ang: f64| (c.0 + len * math::cos(ang), c.1 + len * math::sin(ang));
        match self {
            Shape::Segment { a, b } => vec![Segment { a: *a, b: *b }],
            Shape::Rectangle { center, width, height, angle } => {
                let (c, s) = (math::cos(*angle), math::sin(*angle));
                let corner = |u: f64, v: f64| (center.0 + u * c - v * s, center.1 + u * s + v * c);
                let (hw, hh) = (0.5 * width, 0.5 * height);
                let pts = [corner(-hw, -hh), corner(hw, -hh), corner(hw, hh), corner(-hw, hh)];
                (0..4).map(|i| Segment { a: pts[i], b: pts[(i + 1) % 4] }).collect()
            }
            Shape::Cross { center, arms, angle } => {
                // two straight strokes, so the center is not split into stubs
                let h = Segment { a: ray(*center, arms[2], angle + PI), b: ray(*center, arms[0], *angle) };
                let v = Segment { a: ray(*center, arms[3], angle + 1.5 * PI), b: ray(*center, arms[1], angle + FRAC_PI_2) };
                vec![h, v]
            }
            Shape::L { corner, first, second } => vec![
                Segment { a: *corner, b: ray(*corner, first.0, first.1) },
                Segment { a: *corner, b: ray(*corner, second.0, second.1) },
            ],
            Shape::Polyline { points, closed } => {
                let n = points.len();
                let m = if *closed && n > 2 { n } else { n.saturating_sub(1) };
                (0..m).map(|i| Segment { a: points[i], b: points[(i + 1) % n] }).collect()
            }
        }
    }
}

/// Smooth Gaussian intensity bump added to the background.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Blob {
    pub center: Point,
    pub sigma: f64,
    pub amplitude: f64,
}

/// Everything needed to render a scene, apart from the noise seed.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub shapes: Vec<Shape>,
    pub stroke_width: f64,
    pub noise_sigma: f64,
    pub background: f64,
    pub ink: f64,
    pub blobs: Vec<Blob>,
}

impl SceneSpec {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            shapes: Vec::new(),
            stroke_width: 2.0,
            noise_sigma: 0.0,
            background: 0.8,
            ink: 0.2,
            blobs: Vec::new(),
        }
    }

    pub fn segments(&self) -> Vec<Segment> {
        self.shapes.iter().flat_map(Shape::segments).collect()
    }
}

/// A rendered scene with its ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticScene {
    pub image: GrayImage,
    pub gt_junctions: Vec<ASJunction>,
    pub gt_transform: Option<AffineMap>,
    pub rng_seed: u64,
}

/// Canvas margin every stroke endpoint must keep.
pub const MARGIN: f64 = 10.0;
/// Branches shorter than this do not count.
const MIN_BRANCH: f64 = 2.0;
const ENDPOINT_SLACK: f64 = 0.5;
const MERGE_DISTANCE: f64 = 1.0;

/// A maximal straight line: collinear touching strokes merged.
#[derive(Clone, Copy, Debug)]
struct Line {
    a: Point,
    b: Point,
}

fn merge_lines(segments: &[Segment]) -> Vec<Line> {
    let mut lines: Vec<Line> = segments.iter().filter(|s| s.length() > 1e-9).map(|s| Line { a: s.a, b: s.b }).collect();
    loop {
        let mut merged = false;
        'outer: for i in 0..lines.len() {
            for j in i + 1..lines.len() {
                if let Some(l) = try_merge(&lines[i], &lines[j]) {
                    lines[i] = l;
                    lines.swap_remove(j);
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            return lines;
        }
    }
}

fn try_merge(l: &Line, m: &Line) -> Option<Line> {
    let len = math::hypot(l.b.0 - l.a.0, l.b.1 - l.a.1);
    let u = ((l.b.0 - l.a.0) / len, (l.b.1 - l.a.1) / len);
    let off = |p: Point| (p.0 - l.a.0) * -u.1 + (p.1 - l.a.1) * u.0;
    let along = |p: Point| (p.0 - l.a.0) * u.0 + (p.1 - l.a.1) * u.1;
    if math::abs(off(m.a)) > 1e-6 || math::abs(off(m.b)) > 1e-6 {
        return None;
    }
    let (s0, s1) = (along(m.a).min(along(m.b)), along(m.a).max(along(m.b)));
    if s0 > len + 1e-6 || s1 < -1e-6 {
        return None;
    }
    let (lo, hi) = (s0.min(0.0), s1.max(len));
    Some(Line { a: (l.a.0 + lo * u.0, l.a.1 + lo * u.1), b: (l.a.0 + hi * u.0, l.a.1 + hi * u.1) })
}

fn intersect(l: &Line, m: &Line) -> Option<Point> {
    let r = (l.b.0 - l.a.0, l.b.1 - l.a.1);
    let s = (m.b.0 - m.a.0, m.b.1 - m.a.1);
    let den = r.0 * s.1 - r.1 * s.0;
    if math::abs(den) < 1e-12 {
        return None;
    }
    let q = (m.a.0 - l.a.0, m.a.1 - l.a.1);
    let t = (q.0 * s.1 - q.1 * s.0) / den;
    let v = (q.0 * r.1 - q.1 * r.0) / den;
    let (lr, ls) = (math::hypot(r.0, r.1), math::hypot(s.0, s.1));
    let inside = |k: f64, len: f64| k * len >= -ENDPOINT_SLACK && k * len <= len + ENDPOINT_SLACK;
    (inside(t, lr) && inside(v, ls)).then(|| (l.a.0 + t * r.0, l.a.1 + t * r.1))
}

/// Ground-truth junctions: intersections of maximal lines, each branch
/// reaching to the end of its line.
pub fn ground_truth_junctions(segments: &[Segment]) -> Vec<ASJunction> {
    let lines = merge_lines(segments);
    let mut points: Vec<(Point, usize)> = Vec::new();
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            if let Some(x) = intersect(&lines[i], &lines[j]) {
                match points.iter_mut().find(|(p, _)| math::hypot(p.0 - x.0, p.1 - x.1) <= MERGE_DISTANCE) {
                    Some((p, n)) => {
                        let k = *n as f64;
                        *p = ((p.0 * k + x.0) / (k + 1.0), (p.1 * k + x.1) / (k + 1.0));
                        *n += 1;
                    }
                    None => points.push((x, 1)),
                }
            }
        }
    }
    let mut out = Vec::new();
    for (x, _) in points {
        let mut branches = Vec::new();
        for l in &lines {
            let len = math::hypot(l.b.0 - l.a.0, l.b.1 - l.a.1);
            let u = ((l.b.0 - l.a.0) / len, (l.b.1 - l.a.1) / len);
            let off = (x.0 - l.a.0) * -u.1 + (x.1 - l.a.1) * u.0;
            let along = (x.0 - l.a.0) * u.0 + (x.1 - l.a.1) * u.1;
            if math::abs(off) > ENDPOINT_SLACK || along < -ENDPOINT_SLACK || along > len + ENDPOINT_SLACK {
                continue;
            }
            for end in [l.a, l.b] {
                let d = math::hypot(end.0 - x.0, end.1 - x.1);
                if d > MIN_BRANCH {
                    branches.push(Branch { scale: d, orientation: math::direction(end.0 - x.0, end.1 - x.1), nfa: 0.0 });
                }
            }
        }
        branches.sort_by(|a, b| a.orientation.total_cmp(&b.orientation));
        let straight = branches.len() == 2
            && math::angular_distance(branches[0].orientation, branches[1].orientation) > PI - 1e-6;
        if branches.len() >= 2 && !straight {
            out.push(ASJunction { center: x, branches, source: out.len() });
        }
    }
    out.sort_by(|a, b| a.center.1.total_cmp(&b.center.1).then(a.center.0.total_cmp(&b.center.0)));
    for (i, j) in out.iter_mut().enumerate() {
        j.source = i;
    }
    out
}

fn check_canvas(spec: &SceneSpec) -> Result<()> {
    for s in spec.segments() {
        for p in [s.a, s.b] {
            let ok = p.0 >= MARGIN
                && p.1 >= MARGIN
                && p.0 <= spec.width as f64 - 1.0 - MARGIN
                && p.1 <= spec.height as f64 - 1.0 - MARGIN;
            if !ok || !p.0.is_finite() || !p.1.is_finite() {
                return Err(Error::OutOfCanvas(format!("endpoint ({:.2}, {:.2}) within {MARGIN} px of the border", p.0, p.1)));
            }
        }
    }
    Ok(())
}

/// Renders the strokes with 4×4 supersampled butt-capped coverage over the
/// blob-textured background, then adds Gaussian noise.
pub fn render(spec: &SceneSpec, seed: u64) -> Result<GrayImage> {
    let segments = spec.segments();
    let (w, h) = (spec.width, spec.height);
    let half = 0.5 * spec.stroke_width;
    const SUB: [f64; 4] = [-0.375, -0.125, 0.125, 0.375];
    let rows: Vec<Vec<f64>> = par::map_range(h, |y| {
        (0..w)
            .map(|x| {
                let (fx, fy) = (x as f64, y as f64);
                let mut base = spec.background;
                for b in &spec.blobs {
                    let d2 = (fx - b.center.0) * (fx - b.center.0) + (fy - b.center.1) * (fy - b.center.1);
                    base += b.amplitude * math::exp(-0.5 * d2 / (b.sigma * b.sigma));
                }
                let near: Vec<&Segment> = segments
                    .iter()
                    .filter(|s| {
                        fx >= s.a.0.min(s.b.0) - half - 1.0
                            && fx <= s.a.0.max(s.b.0) + half + 1.0
                            && fy >= s.a.1.min(s.b.1) - half - 1.0
                            && fy <= s.a.1.max(s.b.1) + half + 1.0
                    })
                    .collect();
                let mut inside = 0;
                if !near.is_empty() {
                    for sy in SUB {
                        for sx in SUB {
                            let q = (fx + sx, fy + sy);
                            if near.iter().any(|s| in_stroke(s, q, half)) {
                                inside += 1;
                            }
                        }
                    }
                }
                let c = inside as f64 / 16.0;
                base * (1.0 - c) + spec.ink * c
            })
            .collect()
    });
    let mut data: Vec<f64> = rows.into_iter().flatten().collect();
    if spec.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in data.iter_mut() {
            *v += spec.noise_sigma * rng.sample::<f64, _>(StandardNormal);
        }
    }
    data.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    GrayImage::new(w, h, data)
}

fn in_stroke(s: &Segment, q: Point, half: f64) -> bool {
    let len = s.length();
    let u = ((s.b.0 - s.a.0) / len, (s.b.1 - s.a.1) / len);
    let d = (q.0 - s.a.0, q.1 - s.a.1);
    let t = d.0 * u.0 + d.1 * u.1;
    let n = d.0 * -u.1 + d.1 * u.0;
    (0.0..=len).contains(&t) && math::abs(n) <= half
}

/// Renders `spec` with noise drawn from `seed` and computes its ground truth.
pub fn gen_wireframe_scene(spec: &SceneSpec, seed: u64) -> Result<SyntheticScene> {
    check_canvas(spec)?;
    if !(spec.stroke_width > 0.0) || !(spec.noise_sigma >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "stroke width {} and noise {} must be positive",
            spec.stroke_width, spec.noise_sigma
        )));
    }
    Ok(SyntheticScene {
        image: render(spec, seed)?,
        gt_junctions: ground_truth_junctions(&spec.segments()),
        gt_transform: None,
        rng_seed: seed,
    })
}

/// A horizontal line crossed by two vertical lines: the first crossing's
/// rightward branch runs through the second crossing to the line end.
pub fn chain_spec(noise_sigma: f64) -> SceneSpec {
    let mut spec = SceneSpec::new(200, 120);
    spec.noise_sigma = noise_sigma;
    spec.shapes = vec![
        Shape::Segment { a: (30.0, 60.0), b: (170.0, 60.0) },
        Shape::Segment { a: (60.0, 25.0), b: (60.0, 95.0) },
        Shape::Segment { a: (110.0, 35.0), b: (110.0, 85.0) },
    ];
    spec
}

/// First crossing and the far end of its through-branch in [`chain_spec`].
pub const CHAIN_FIRST: Point = (60.0, 60.0);
pub const CHAIN_END: Point = (170.0, 60.0);

fn random_shape(rng: &mut ChaCha8Rng, center: Point, room: f64) -> Shape {
    let angle = rng.random_range(0.0..FRAC_PI_2);
    match rng.random_range(0..3) {
        0 => {
            // the rotated rectangle must fit in a disc of radius `room`
            let max_side = (2.0 * room / core::f64::consts::SQRT_2).min(80.0);
            let width = rng.random_range(20.0..max_side);
            let height = rng.random_range(20.0..max_side);
            Shape::Rectangle { center, width, height, angle }
        }
        1 => {
            let max_arm = room.min(40.0);
            let mut arms = [0.0; 4];
            arms.iter_mut().for_each(|a| *a = rng.random_range(12.0..max_arm));
            Shape::Cross { center, arms, angle }
        }
        _ => {
            let max_arm = (2.0 * room).min(80.0);
            let l1 = rng.random_range(20.0..max_arm);
            let l2 = rng.random_range(20.0..max_arm);
            let opening = rng.random_range(0.4 * PI..0.6 * PI);
            // corner placed so both arms stay within the disc
            let mid = angle + 0.5 * opening;
            let reach = 0.5 * l1.max(l2);
            let corner = (center.0 - reach * math::cos(mid), center.1 - reach * math::sin(mid));
            Shape::L { corner, first: (l1, angle), second: (l2, angle + opening) }
        }
    }
}

/// A 3×3 grid of random rectangles, crosses and Ls on a 400×400 canvas.
pub fn random_wireframe_spec(seed: u64, noise_sigma: f64) -> SceneSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec = SceneSpec::new(400, 400);
    spec.noise_sigma = noise_sigma;
    let cell = (400.0 - 2.0 * MARGIN) / 3.0;
    let room = 0.5 * cell - 8.0;
    for gy in 0..3 {
        for gx in 0..3 {
            let center = (MARGIN + (gx as f64 + 0.5) * cell, MARGIN + (gy as f64 + 0.5) * cell);
            spec.shapes.push(random_shape(&mut rng, center, room));
        }
    }
    spec
}

fn bounding_radius(shape: &Shape, center: Point) -> f64 {
    shape
        .segments()
        .iter()
        .flat_map(|s| [s.a, s.b])
        .map(|p| math::hypot(p.0 - center.0, p.1 - center.1))
        .fold(0.0, f64::max)
}

/// Shapes scattered in a central disc over a smoothly textured background,
/// for matching experiments.
pub fn random_matching_spec(seed: u64, noise_sigma: f64) -> SceneSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec = SceneSpec::new(400, 400);
    spec.noise_sigma = noise_sigma;
    let c = (199.5, 199.5);
    let disc = 150.0;
    let mut placed: Vec<(Point, f64)> = Vec::new();
    let mut attempts = 0;
    while placed.len() < 10 && attempts < 2000 {
        attempts += 1;
        let r = disc * math::sqrt(rng.random_range(0.0..1.0));
        let a = rng.random_range(0.0..TAU);
        let center = (c.0 + r * math::cos(a), c.1 + r * math::sin(a));
        let room = rng.random_range(25.0..45.0);
        let shape = random_shape(&mut rng, center, room);
        let br = bounding_radius(&shape, center);
        let fits = math::hypot(center.0 - c.0, center.1 - c.1) + br <= disc;
        let apart = placed.iter().all(|(p, q)| math::hypot(p.0 - center.0, p.1 - center.1) > br + q + 16.0);
        if fits && apart {
            placed.push((center, br));
            spec.shapes.push(shape);
        }
    }
    for _ in 0..40 {
        spec.blobs.push(Blob {
            center: (rng.random_range(0.0..400.0), rng.random_range(0.0..400.0)),
            sigma: rng.random_range(6.0..20.0),
            amplitude: rng.random_range(-0.15..0.15),
        });
    }
    spec
}

/// Similarity about the canvas center: rotation ≤ 20°, scale 0.7–1.0 and a
/// translation of at most 30 px.
pub fn random_warp(seed: u64, width: usize, height: usize) -> AffineMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_a11f);
    let angle = rng.random_range(-20.0f64..20.0).to_radians();
    let scale = rng.random_range(0.7..1.0);
    let t = rng.random_range(0.0..30.0);
    let ta = rng.random_range(0.0..TAU);
    let c = (0.5 * (width as f64 - 1.0), 0.5 * (height as f64 - 1.0));
    let to_origin = AffineMap::new([1.0, 0.0, -c.0, 0.0, 1.0, -c.1]);
    let back = AffineMap::new([1.0, 0.0, c.0 + t * math::cos(ta), 0.0, 1.0, c.1 + t * math::sin(ta)]);
    back.compose(&AffineMap::similarity(angle, scale, 0.0, 0.0)).compose(&to_origin)
}

/// The scene geometry mapped by `map`, blobs included; stroke width is kept.
pub fn warp_spec(spec: &SceneSpec, map: &AffineMap) -> SceneSpec {
    let s = math::sqrt(math::abs(map.det()));
    let mut out = spec.clone();
    out.shapes = spec
        .segments()
        .iter()
        .map(|seg| {
            let t = seg.transformed(map);
            Shape::Segment { a: t.a, b: t.b }
        })
        .collect();
    out.blobs = spec.blobs.iter().map(|b| Blob { center: map.apply(b.center), sigma: b.sigma * s, ..*b }).collect();
    out
}

/// A matching scene and its warped re-rendering with fresh noise.
pub fn gen_matching_pair(seed: u64, noise_sigma: f64) -> Result<(SyntheticScene, SyntheticScene)> {
    let spec = random_matching_spec(seed, noise_sigma);
    let map = random_warp(seed, spec.width, spec.height);
    let p = gen_wireframe_scene(&spec, seed.wrapping_mul(2).wrapping_add(1))?;
    let mut q = gen_wireframe_scene(&warp_spec(&spec, &map), seed.wrapping_mul(2).wrapping_add(2))?;
    q.gt_transform = Some(map);
    Ok((p, q))
}
