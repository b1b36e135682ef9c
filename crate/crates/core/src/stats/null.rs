//! The two null-hypothesis distributions and their cached convolution powers.
//!
//! * elementary: `γ = ‖∇Ĩ‖ · max(|cos u| - |sin u|, 0)` with a Rayleigh(1)
//!   magnitude and a uniform angle `u`.
//! * modified: the same angular factor applied to a standard normal strength.
//!
//! Both put mass 1/2 at zero (the angular factor vanishes on half the circle).

use alloc::borrow::Cow;
use alloc::boxed::Box;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use once_cell::race::OnceBox;

use super::{convolve_self, quad, TabulatedDistribution, BIN_WIDTH, EXACT_CONVOLUTION_LIMIT};
use crate::error::{Error, Result};
use crate::math;
use crate::par;

/// Closed-form mean of the elementary distribution, `(2/π)(√2 - 1)·sqrt(π/2)`.
pub const ELEMENTARY_MEAN: f64 = 0.330_494_606_292_647_26;
/// Closed-form variance of the elementary distribution, `2(1/2 - 1/π) - μ²`.
pub const ELEMENTARY_VARIANCE: f64 = 0.254_153_542_843_886_7;
/// Closed-form variance of the modified distribution, `1/2 - 1/π` (mean 0).
pub const MODIFIED_VARIANCE: f64 = 0.181_690_113_816_209_3;

/// Continuous tails beyond these are below 1e-16.
const ELEMENTARY_Z_MAX: f64 = 8.6;
const MODIFIED_Z_MAX: f64 = 8.3;

const ATOM: f64 = 0.5;

/// Continuous part of the elementary density,
/// `(1/√π) e^{-z²/4} erfc(z/2)` for `z >= 0`.
pub fn elementary_density(z: f64) -> f64 {
    if z < 0.0 {
        return 0.0;
    }
    math::exp(-0.25 * z * z) * math::erfc(0.5 * z) / math::sqrt(PI)
}

/// Continuous part of the modified density,
/// `sqrt(2/π³) ∫₀¹ (1/y) e^{-z²/(2y²)} (2 - y²)^{-1/2} dy` for `z ≠ 0`.
/// Diverges (logarithmically) at zero, where `+∞` is returned.
pub fn modified_density(z: f64) -> Result<f64> {
    if z == 0.0 {
        return Ok(f64::INFINITY);
    }
    let z2 = z * z;
    let integrand = |y: f64| {
        if y <= 0.0 {
            0.0
        } else {
            math::exp(-z2 / (2.0 * y * y)) / (y * math::sqrt(2.0 - y * y))
        }
    };
    let v = quad::integrate(integrand, 0.0, 1.0, 1e-9, 1e-10).ok_or(Error::QuadratureFailed { z })?;
    Ok(SQRT_2 / math::sqrt(PI * PI * PI) * v)
}

/// Angular-factor density on `(0, 1]` given that the factor is positive.
#[inline]
fn factor_density(y: f64) -> f64 {
    4.0 / (PI * math::sqrt(2.0 - y * y))
}

/// `P{modified >= z}` for `z > 0`, as `½ ∫ g(y) Φc(z/y) dy`.
fn modified_upper_tail(z: f64) -> Result<f64> {
    let integrand = |y: f64| {
        if y <= 0.0 {
            0.0
        } else {
            factor_density(y) * math::normal_sf(z / y)
        }
    };
    quad::integrate(integrand, 0.0, 1.0, 1e-20, 1e-11)
        .map(|v| 0.5 * v)
        .ok_or(Error::QuadratureFailed { z })
}

/// Tabulates the elementary distribution.
pub fn elementary_pdf() -> TabulatedDistribution {
    let h = BIN_WIDTH;
    let n = math::ceil(ELEMENTARY_Z_MAX / h) as usize + 1;
    let mut mass: Vec<f64> = (0..n)
        .map(|i| {
            let c = i as f64 * h;
            let lo = (c - 0.5 * h).max(0.0);
            quad::gk15(&elementary_density, lo, c + 0.5 * h).0
        })
        .collect();
    let total: f64 = mass.iter().sum();
    mass.iter_mut().for_each(|m| *m *= (1.0 - ATOM) / total);
    TabulatedDistribution::from_lattice(h, 0, mass, ATOM)
}

/// Tabulates the modified distribution; bin masses come from differences of
/// the upper tail, each evaluated by adaptive quadrature.
pub fn modified_pdf() -> Result<TabulatedDistribution> {
    let h = BIN_WIDTH;
    let k = math::ceil(MODIFIED_Z_MAX / h) as usize;
    // tails at the bin edges (i + 1/2) h, i = 0..=k
    let edges: Vec<Result<f64>> = par::map_range(k + 1, |i| modified_upper_tail((i as f64 + 0.5) * h));
    let edges: Vec<f64> = edges.into_iter().collect::<Result<_>>()?;
    let mut positive = Vec::with_capacity(k);
    for i in 1..=k {
        positive.push((edges[i - 1] - edges[i]).max(0.0));
    }
    let center = (0.5 - 2.0 * edges[0]).max(0.0);
    let mut mass = Vec::with_capacity(2 * k + 1);
    mass.extend(positive.iter().rev());
    mass.push(center);
    mass.extend(positive.iter());
    let total: f64 = mass.iter().sum();
    mass.iter_mut().for_each(|m| *m *= (1.0 - ATOM) / total);
    Ok(TabulatedDistribution::from_lattice(h, -(k as i64), mass, ATOM))
}

static ELEMENTARY: OnceBox<TabulatedDistribution> = OnceBox::new();
static MODIFIED: OnceBox<TabulatedDistribution> = OnceBox::new();

const CACHE_SIZE: usize = EXACT_CONVOLUTION_LIMIT + 1;
static ELEMENTARY_POWERS: [OnceBox<TabulatedDistribution>; CACHE_SIZE] = [const { OnceBox::new() }; CACHE_SIZE];
static MODIFIED_POWERS: [OnceBox<TabulatedDistribution>; CACHE_SIZE] = [const { OnceBox::new() }; CACHE_SIZE];

/// Process-wide elementary distribution.
pub fn elementary() -> &'static TabulatedDistribution {
    ELEMENTARY.get_or_init(|| Box::new(elementary_pdf()))
}

/// Process-wide modified distribution.
pub fn modified() -> &'static TabulatedDistribution {
    MODIFIED.get_or_init(|| Box::new(modified_pdf().expect("modified distribution quadrature")))
}

/// Which null hypothesis a statistic is tested against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NullModel {
    /// Sums of raw pairwise junction-ness values.
    Elementary,
    /// Sums of local-junction-field responses.
    Modified,
}

impl NullModel {
    pub fn base(self) -> &'static TabulatedDistribution {
        match self {
            NullModel::Elementary => elementary(),
            NullModel::Modified => modified(),
        }
    }

    /// Distribution of the sum of `n` independent terms, cached up to the
    /// exact-convolution limit.
    pub fn power(self, n: usize) -> Cow<'static, TabulatedDistribution> {
        assert!(n >= 1, "convolution count must be at least 1");
        if n >= CACHE_SIZE {
            return Cow::Owned(convolve_self(self.base(), n));
        }
        let cache = match self {
            NullModel::Elementary => &ELEMENTARY_POWERS[n],
            NullModel::Modified => &MODIFIED_POWERS[n],
        };
        Cow::Borrowed(cache.get_or_init(|| Box::new(convolve_self(self.base(), n))))
    }

    /// `P{S_n >= t}`.
    pub fn tail(self, n: usize, t: f64) -> f64 {
        self.power(n).tail_probability(t)
    }

    pub fn log10_tail(self, n: usize, t: f64) -> f64 {
        self.power(n).log10_tail(t)
    }
}
