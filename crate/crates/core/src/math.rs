//! Scalar helpers shared by every module.
//!
//! All transcendental functions go through `libm` so results are identical
//! with and without `std`.

use core::f64::consts::{PI, TAU};

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn log10(x: f64) -> f64 {
    libm::log10(x)
}

#[inline]
pub fn pow(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[inline]
pub fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

/// Wraps an angle into `[0, 2π)`.
#[inline]
pub fn wrap_angle(a: f64) -> f64 {
    let w = a - TAU * floor(a / TAU);
    // `a` just below a multiple of 2π can round up to exactly 2π.
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Distance along the unit circle, in `[0, π]`.
#[inline]
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let d = abs(wrap_angle(a) - wrap_angle(b));
    if d > PI {
        TAU - d
    } else {
        d
    }
}

/// Counter-clockwise sweep from `from` to `to`, in `[0, 2π)`.
#[inline]
pub fn ccw_sweep(from: f64, to: f64) -> f64 {
    wrap_angle(to - from)
}

/// Direction of the vector `(dx, dy)` in `[0, 2π)`.
#[inline]
pub fn direction(dx: f64, dy: f64) -> f64 {
    wrap_angle(atan2(dy, dx))
}

/// `max(|cos d| - |sin d|, 0)`, the angular factor of the pairwise junction-ness.
#[inline]
pub fn alignment(d: f64) -> f64 {
    let v = abs(cos(d)) - abs(sin(d));
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

/// Same as [`alignment`] from precomputed `cos d` and `sin d`.
#[inline]
pub fn alignment_cs(c: f64, s: f64) -> f64 {
    let v = abs(c) - abs(s);
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

/// Upper tail of the standard normal distribution.
#[inline]
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / core::f64::consts::SQRT_2)
}

/// `log10` of the standard normal upper tail, finite far beyond the
/// underflow point of `erfc`.
pub fn log10_normal_sf(z: f64) -> f64 {
    if z < 30.0 {
        let v = normal_sf(z);
        if v > 0.0 {
            return log10(v);
        }
    }
    // Mills-ratio asymptotic expansion.
    let z2 = z * z;
    let series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2);
    (-0.5 * z2 - ln(z * sqrt(TAU)) + ln(series)) / core::f64::consts::LN_10
}

/// Median of a slice; the slice is reordered. Returns `None` when empty.
pub fn median_in_place(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let n = values.len();
    let mid = n / 2;
    let (_, upper, _) = values.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    let upper = *upper;
    if n % 2 == 1 {
        Some(upper)
    } else {
        let lower = values[..mid]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        Some(0.5 * (lower + upper))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_and_distance() {
        assert!((wrap_angle(-0.5) - (TAU - 0.5)).abs() < 1e-15);
        assert_eq!(wrap_angle(TAU), 0.0);
        assert!((angular_distance(0.1, TAU - 0.1) - 0.2).abs() < 1e-12);
        assert!((angular_distance(0.0, PI) - PI).abs() < 1e-15);
        assert!((ccw_sweep(1.5 * PI, 0.0) - 0.5 * PI).abs() < 1e-12);
    }

    #[test]
    fn alignment_factor() {
        assert!((alignment(0.0) - 1.0).abs() < 1e-15);
        assert!(alignment(PI / 4.0) < 1e-15);
        assert_eq!(alignment(PI / 3.0), 0.0);
        assert!((alignment(PI) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn normal_log_tail_is_continuous() {
        for &z in &[1.0, 5.0, 20.0, 29.9] {
            let direct = log10(normal_sf(z));
            assert!((direct - log10_normal_sf(z)).abs() < 1e-9);
        }
        let a = log10_normal_sf(29.999);
        let b = log10_normal_sf(30.001);
        assert!((a - b).abs() < 0.05 && b < a);
        assert!(log10_normal_sf(100.0).is_finite());
    }

    #[test]
    fn median() {
        assert_eq!(median_in_place(&mut [3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median_in_place(&mut [4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median_in_place(&mut []), None);
    }
}
