//! Per-branch anisotropic scale estimation over the local junction field,
//! orientation refinement and the full detection pipeline.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::image::{compute_gradient, GradientField, GrayImage};
use crate::junction::{
    branch_strength, detect_isotropic, local_junction_field, IsotropicParams, LocalJunctionField, Pixel, SectorSpec,
};
use crate::math;
use crate::par;
use crate::stats::NullModel;

/// Final bracket width of the refinement search.
pub const REFINE_STEP: f64 = PI / 720.0;
/// Half-width of the refinement window.
pub const REFINE_WINDOW: f64 = PI / 20.0;

/// One branch: length in pixels, orientation in `[0, 2π)` and the largest
/// NFA met along its accepted radii.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Branch {
    pub scale: f64,
    pub orientation: f64,
    pub nfa: f64,
}

/// A junction whose branches carry independent scales.
#[derive(Clone, Debug, PartialEq)]
pub struct ASJunction {
    pub center: (f64, f64),
    /// Branches sorted by orientation.
    pub branches: Vec<Branch>,
    /// Index of the seeding isotropic junction.
    pub source: usize,
}

/// Per-radius trace of a scale scan. The last entry is the radius that
/// stopped the scan when it stopped on a violation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RadialProfile {
    pub radii: Vec<f64>,
    pub derivative: Vec<f64>,
    pub probability: Vec<f64>,
    pub nfa: Vec<f64>,
}

impl RadialProfile {
    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    fn push(&mut self, r: f64, d: f64, p: f64, nfa: f64) {
        self.radii.push(r);
        self.derivative.push(d);
        self.probability.push(p);
        self.nfa.push(nfa);
    }
}

/// Settings of a single-branch scale scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaleParams {
    pub epsilon: f64,
    pub tau: f64,
    /// Number of tests, `sqrt(width · height)` by default.
    pub n_tests: f64,
    /// Largest radius scanned.
    pub max_radius: f64,
}

impl ScaleParams {
    /// Defaults for an image of the given size: ε = 1, τ = 1.
    pub fn for_image(width: usize, height: usize) -> Self {
        Self {
            epsilon: 1.0,
            tau: 1.0,
            n_tests: math::sqrt((width * height) as f64),
            max_radius: math::hypot(width as f64, height as f64),
        }
    }
}

/// `γ̃_p(q)`: the response at `q` closest to `theta` as an undirected line,
/// weighted by its alignment with the direction from `p` to `q`.
pub fn modified_pairwise_strength(ljf: &LocalJunctionField, p: Pixel, q: Pixel, theta: f64) -> f64 {
    let responses = ljf.responses_at(q.0, q.1);
    let axial = |t: f64| {
        let d = math::angular_distance(t, theta);
        d.min(PI - d)
    };
    let Some(nearest) = responses.iter().min_by(|a, b| axial(a.theta).total_cmp(&axial(b.theta))) else {
        return 0.0;
    };
    if p == q {
        return 0.0;
    }
    let alpha = math::direction(q.0 as f64 - p.0 as f64, q.1 as f64 - p.1 as f64);
    nearest.omega * math::alignment(nearest.theta - alpha)
}

/// Arc samples per radius, `max(3, ⌈2τ⌉)`; keeps neighbors at most 1 px apart.
pub fn arc_sample_count(tau: f64) -> usize {
    (math::ceil(2.0 * tau) as usize).max(3)
}

/// `∂ω̃/∂r` at radius `r`: the sum of `γ̃` over evenly spaced points of the
/// arc of half-width `τ/r` around `theta`, each read at its nearest pixel.
pub fn radial_derivative(ljf: &LocalJunctionField, p: Pixel, r: f64, theta: f64, tau: f64) -> f64 {
    let m = arc_sample_count(tau);
    let delta = tau / r;
    let (w, h) = (ljf.width() as f64, ljf.height() as f64);
    let mut sum = 0.0;
    for j in 0..m {
        let psi = theta - delta + (j as f64 + 0.5) * 2.0 * delta / m as f64;
        let x = math::round(p.0 as f64 + r * math::cos(psi));
        let y = math::round(p.1 as f64 + r * math::sin(psi));
        if x < 0.0 || y < 0.0 || x >= w || y >= h {
            continue;
        }
        sum += modified_pairwise_strength(ljf, p, (x as usize, y as usize), theta);
    }
    sum
}

/// `P{S_m >= derivative}` with `S_m` a sum of `m` modified terms.
pub fn branch_probability(derivative: f64, m: usize) -> f64 {
    NullModel::Modified.tail(m, derivative)
}

/// Scans `r = r_seed, r_seed + 1, …` and returns the last radius before the
/// first NFA violation, with the trace.
pub fn estimate_scale(
    ljf: &LocalJunctionField,
    p: Pixel,
    theta: f64,
    r_seed: f64,
    params: &ScaleParams,
) -> Result<(f64, RadialProfile)> {
    if !(r_seed >= 2.0) || !r_seed.is_finite() {
        return Err(Error::InvalidRadius(r_seed));
    }
    let m = arc_sample_count(params.tau);
    let mut profile = RadialProfile::default();
    let mut accepted = None;
    let mut r = r_seed;
    while r <= params.max_radius {
        let d = radial_derivative(ljf, p, r, theta, params.tau);
        let prob = branch_probability(d, m);
        let nfa = params.n_tests * prob;
        profile.push(r, d, prob, nfa);
        if nfa > params.epsilon {
            break;
        }
        accepted = Some(r);
        r += 1.0;
    }
    accepted.map(|r| (r, profile)).ok_or(Error::BranchRejected)
}

/// Maximizes the raw-gradient branch strength over `S_p(r_θ, θ)` within
/// `±π/20` of `theta_init` by golden-section search down to a `π/720`
/// bracket, re-estimating `r_θ` at every probe. Returns `theta_init` when no
/// probe yields a branch.
pub fn refine_orientation(
    field: &GradientField,
    ljf: &LocalJunctionField,
    p: Pixel,
    theta_init: f64,
    r_seed: f64,
    params: &ScaleParams,
) -> f64 {
    let objective = |theta: f64| match estimate_scale(ljf, p, theta, r_seed, params) {
        Ok((r, _)) => branch_strength(field, &SectorSpec::new(p, r, theta, params.tau)),
        Err(_) => 0.0,
    };
    let g = 0.5 * (math::sqrt(5.0) - 1.0);
    let (mut a, mut b) = (theta_init - REFINE_WINDOW, theta_init + REFINE_WINDOW);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    let mut best = fc.max(fd);
    while b - a > REFINE_STEP {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = objective(c);
            best = best.max(fc);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = objective(d);
            best = best.max(fd);
        }
    }
    if !(best > 0.0) {
        return math::wrap_angle(theta_init);
    }
    math::wrap_angle(0.5 * (a + b))
}

/// Parameters of the full detector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectParams {
    pub epsilon: f64,
    pub tau: f64,
    pub local_radius: usize,
    pub seed_radius_min: usize,
    pub seed_radius_max: usize,
    /// Largest branch length scanned; the image diagonal when `None`.
    pub max_scale: Option<f64>,
    /// Pixel noise standard deviation; estimated from the image when `None`.
    pub noise_sigma: Option<f64>,
    /// Number of tests of the scale test; `sqrt(width · height)` when `None`.
    pub n_tests: Option<f64>,
}

impl Default for DetectParams {
    fn default() -> Self {
        Self {
            epsilon: 1.0,
            tau: 1.0,
            local_radius: 3,
            seed_radius_min: 4,
            seed_radius_max: 12,
            max_scale: None,
            noise_sigma: None,
            n_tests: None,
        }
    }
}

impl DetectParams {
    pub fn scale_params(&self, width: usize, height: usize) -> ScaleParams {
        let mut s = ScaleParams::for_image(width, height);
        s.epsilon = self.epsilon;
        s.tau = self.tau;
        if let Some(n) = self.n_tests {
            s.n_tests = n;
        }
        if let Some(m) = self.max_scale {
            s.max_radius = m;
        }
        s
    }

    pub fn isotropic(&self) -> IsotropicParams {
        IsotropicParams {
            epsilon: self.epsilon,
            tau: self.tau,
            min_radius: self.seed_radius_min,
            max_radius: self.seed_radius_max,
        }
    }
}

/// Two branches within the seed's straight tolerance of a straight angle form
/// a line, not a junction.
fn is_straight(branches: &[Branch], tau: f64, seed_radius: f64) -> bool {
    let tol = (PI / 18.0).max(2.0 * tau / seed_radius);
    branches.len() == 2 && math::angular_distance(branches[0].orientation, branches[1].orientation) >= PI - tol
}

/// Intermediate results of [`detect_asj`], kept for diagnostics.
pub struct Detection {
    pub gradient: GradientField,
    pub local_field: LocalJunctionField,
    pub junctions: Vec<ASJunction>,
}

/// Full pipeline: isotropic seeds, local junction field, then refinement and
/// scale estimation of every seed branch.
pub fn detect_asj(img: &GrayImage, params: &DetectParams) -> Result<Vec<ASJunction>> {
    match detect_asj_with_fields(img, params) {
        Ok(d) => Ok(d.junctions),
        Err(Error::NoGradientStructure) => Ok(Vec::new()),
        Err(e) => Err(e),
    }
}

/// Same as [`detect_asj`], also returning the gradient and local fields.
pub fn detect_asj_with_fields(img: &GrayImage, params: &DetectParams) -> Result<Detection> {
    let gradient = compute_gradient(img, params.noise_sigma)?;
    let seeds = detect_isotropic(&gradient, &params.isotropic())?;
    let local_field = local_junction_field(&gradient, params.local_radius, params.tau, params.epsilon)?;
    let sp = params.scale_params(img.width(), img.height());
    let min_gap = 2.0 * params.tau / params.seed_radius_min as f64;

    let per_seed: Vec<Option<ASJunction>> = par::map_range(seeds.len(), |i| {
        let seed = &seeds[i];
        let p = seed.pixel;
        let mut branches: Vec<Branch> = Vec::new();
        for &theta0 in &seed.branch_orientations {
            let theta = refine_orientation(&gradient, &local_field, p, theta0, seed.radius, &sp);
            let Ok((scale, profile)) = estimate_scale(&local_field, p, theta, seed.radius, &sp) else {
                continue;
            };
            let nfa = profile
                .radii
                .iter()
                .zip(&profile.nfa)
                .filter(|(r, _)| **r <= scale)
                .map(|(_, n)| *n)
                .fold(0.0, f64::max);
            branches.push(Branch { scale, orientation: theta, nfa });
        }
        // two seeds branches refined onto one direction keep the longer one
        branches.sort_by(|a, b| b.scale.total_cmp(&a.scale).then(a.orientation.total_cmp(&b.orientation)));
        let mut kept: Vec<Branch> = Vec::new();
        for b in branches {
            if kept.iter().all(|k| math::angular_distance(k.orientation, b.orientation) > min_gap) {
                kept.push(b);
            }
        }
        kept.sort_by(|a, b| a.orientation.total_cmp(&b.orientation));
        (kept.len() >= 2 && !is_straight(&kept, params.tau, seed.radius)).then(|| ASJunction { center: seed.center, branches: kept, source: i })
    });
    let mut junctions: Vec<ASJunction> = per_seed.into_iter().flatten().collect();
    junctions.sort_by(|a, b| {
        a.center
            .1
            .total_cmp(&b.center.1)
            .then(a.center.0.total_cmp(&b.center.0))
            .then(a.branches[0].orientation.total_cmp(&b.branches[0].orientation))
    });
    Ok(Detection { gradient, local_field, junctions })
}
