//! Pure-noise images and the per-pixel false-alarm protocol.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::image::{compute_gradient, GrayImage};
use crate::junction::{local_junction_field, LocalJunctionField};
use crate::par;
use crate::scale::{estimate_scale, DetectParams, ScaleParams};

/// I.i.d. standard normal pixels stored affinely squashed into `[0, 1]`:
/// `raw = offset + scale · stored`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseImage {
    pub image: GrayImage,
    pub offset: f64,
    pub scale: f64,
}

impl NoiseImage {
    /// The original standard-normal samples.
    pub fn raw(&self) -> Vec<f64> {
        self.image.data().iter().map(|v| self.offset + self.scale * v).collect()
    }
}

pub fn gen_noise_image(seed: u64, width: usize, height: usize) -> Result<NoiseImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..width * height).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = (hi - lo).max(f64::MIN_POSITIVE);
    let data = raw.iter().map(|v| ((v - lo) / scale).clamp(0.0, 1.0)).collect();
    Ok(NoiseImage { image: GrayImage::new(width, height, data)?, offset: lo, scale })
}

/// One uniform orientation per pixel, in scanline order.
pub fn random_orientations(seed: u64, count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.random_range(0.0..TAU)).collect()
}

/// Counts pixels whose randomly oriented branch passes the scale test from
/// the smallest seed radius. `ljf` must hold every response with
/// `nfa <= epsilon`.
pub fn count_meaningful_sites(ljf: &LocalJunctionField, thetas: &[f64], sp: &ScaleParams, r_seed: f64) -> usize {
    let w = ljf.width();
    par::map_range(ljf.height(), |y| {
        (0..w).filter(|&x| estimate_scale(ljf, (x, y), thetas[y * w + x], r_seed, sp).is_ok()).count()
    })
    .into_iter()
    .sum()
}

/// False detections on one noise image for each `epsilon`, sharing the drawn
/// orientations.
pub fn false_alarm_counts(img: &GrayImage, epsilons: &[f64], seed: u64, params: &DetectParams) -> Result<Vec<usize>> {
    let gradient = compute_gradient(img, params.noise_sigma)?;
    let eps_max = epsilons.iter().copied().fold(f64::MIN_POSITIVE, f64::max);
    let full = local_junction_field(&gradient, params.local_radius, params.tau, eps_max)?;
    let thetas = random_orientations(seed, img.width() * img.height());
    Ok(epsilons
        .iter()
        .map(|&eps| {
            let ljf = full.restrict(eps);
            let sp = DetectParams { epsilon: eps, ..*params }.scale_params(img.width(), img.height());
            count_meaningful_sites(&ljf, &thetas, &sp, params.seed_radius_min as f64)
        })
        .collect())
}

/// False detections at one `epsilon` with default detector settings.
pub fn false_alarm_trial(img: &GrayImage, epsilon: f64, seed: u64) -> Result<usize> {
    Ok(false_alarm_counts(img, &[epsilon], seed, &DetectParams::default())?[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_seed_dependent() {
        let a = gen_noise_image(3, 64, 64).unwrap();
        let b = gen_noise_image(3, 64, 64).unwrap();
        let c = gen_noise_image(4, 64, 64).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.image, c.image);
    }

    #[test]
    fn raw_moments() {
        let n = gen_noise_image(1, 256, 256).unwrap();
        let raw = n.raw();
        let mean = raw.iter().sum::<f64>() / raw.len() as f64;
        let var = raw.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / raw.len() as f64;
        let tol = 3.0 / (raw.len() as f64).sqrt();
        assert!(mean.abs() < tol, "{mean}");
        assert!((var - 1.0).abs() < 3.0 * tol, "{var}");
    }

    /// With independent pixel gradients the null holds exactly, so the
    /// false-alarm bound must hold too.
    #[test]
    fn independent_gradient_field_respects_epsilon() {
        use crate::image::GradientField;
        let eps = [0.1, 1.0, 10.0];
        let n = 6;
        let mut fa = [0usize; 3];
        let params = DetectParams::default();
        for seed in 0..n {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut g = GradientField::zeros(256, 256);
            for y in 1..255 {
                for x in 1..255 {
                    let gx: f64 = rng.sample(StandardNormal);
                    let gy: f64 = rng.sample(StandardNormal);
                    g.set_single(x, y, crate::math::direction(gx, gy) + core::f64::consts::FRAC_PI_2, crate::math::hypot(gx, gy));
                }
            }
            let full = local_junction_field(&g, params.local_radius, params.tau, 10.0).unwrap();
            let thetas = random_orientations(seed + 1000, 256 * 256);
            for (i, &e) in eps.iter().enumerate() {
                let sp = DetectParams { epsilon: e, ..params }.scale_params(256, 256);
                fa[i] += count_meaningful_sites(&full.restrict(e), &thetas, &sp, 4.0);
            }
        }
        for (i, &e) in eps.iter().enumerate() {
            let mean = fa[i] as f64 / n as f64;
            assert!(mean <= e + 0.5, "eps {e}: {mean}");
        }
    }
}
