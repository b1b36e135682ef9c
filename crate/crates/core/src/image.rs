//! Grayscale rasters and their gradient fields.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, LN_2};

use crate::error::{Error, Result};
use crate::math;
use crate::par;

/// Smallest accepted image side, in pixels.
pub const MIN_SIDE: usize = 16;

/// Median of the Rayleigh(1) distribution, `sqrt(2 ln 2)`.
pub fn rayleigh_median() -> f64 {
    math::sqrt(2.0 * LN_2)
}

/// Lower bound on the gradient noise scale: the central-difference noise of
/// 8-bit quantization, `(1/255)/sqrt(12)/sqrt(2)`.
pub const QUANTIZATION_NOISE_SCALE: f64 = 0.000_800_640_769_025_435_8;

/// Row-major intensity raster with values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width < MIN_SIDE || height < MIN_SIDE {
            return Err(Error::ImageTooSmall {
                width,
                height,
                min: MIN_SIDE,
            });
        }
        if data.len() != width * height {
            return Err(Error::DataLength {
                expected: width * height,
                got: data.len(),
            });
        }
        if let Some((index, &value)) = data
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && (0.0..=1.0).contains(*v)))
        {
            return Err(Error::IntensityOutOfRange { index, value });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds an image from `f(x, y)`; values are clamped into `[0, 1]`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y).clamp(0.0, 1.0));
            }
        }
        Self::new(width, height, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Bilinear interpolation at a real-valued position (pixel centers sit on
    /// integer coordinates). `None` outside `[0, w-1] x [0, h-1]`.
    pub fn bilinear(&self, x: f64, y: f64) -> Option<f64> {
        let max_x = (self.width - 1) as f64;
        let max_y = (self.height - 1) as f64;
        if !(x >= 0.0 && y >= 0.0 && x <= max_x && y <= max_y) {
            return None;
        }
        let x0 = (math::floor(x) as usize).min(self.width - 2);
        let y0 = (math::floor(y) as usize).min(self.height - 2);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let a = self.get(x0, y0);
        let b = self.get(x0 + 1, y0);
        let c = self.get(x0, y0 + 1);
        let d = self.get(x0 + 1, y0 + 1);
        let top = a + (b - a) * fx;
        let bottom = c + (d - c) * fx;
        Some(top + (bottom - top) * fy)
    }

    /// Rescales by `factor` with an antialiased separable bicubic
    /// (Catmull-Rom) filter. Output pixel `x'` samples source position
    /// `x'/factor`, so image points map exactly as `p -> factor * p`.
    pub fn rescale_bicubic(&self, factor: f64) -> Result<GrayImage> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!(
                "rescale factor must be positive, got {factor}"
            )));
        }
        let out_w = math::round(self.width as f64 * factor) as usize;
        let out_h = math::round(self.height as f64 * factor) as usize;
        if out_w < MIN_SIDE || out_h < MIN_SIDE {
            return Err(Error::ImageTooSmall {
                width: out_w,
                height: out_h,
                min: MIN_SIDE,
            });
        }
        let xw = resample_weights(self.width, out_w, factor);
        let yw = resample_weights(self.height, out_h, factor);
        // Horizontal pass.
        let mut tmp = vec![0.0; out_w * self.height];
        for y in 0..self.height {
            let row = &self.data[y * self.width..(y + 1) * self.width];
            for (x, (start, weights)) in xw.iter().enumerate() {
                tmp[y * out_w + x] = weights
                    .iter()
                    .enumerate()
                    .map(|(k, w)| w * row[start + k])
                    .sum();
            }
        }
        let mut out = vec![0.0; out_w * out_h];
        for (y, (start, weights)) in yw.iter().enumerate() {
            for x in 0..out_w {
                let v: f64 = weights
                    .iter()
                    .enumerate()
                    .map(|(k, w)| w * tmp[(start + k) * out_w + x])
                    .sum();
                out[y * out_w + x] = v.clamp(0.0, 1.0);
            }
        }
        GrayImage::new(out_w, out_h, out)
    }
}

fn catmull_rom(x: f64) -> f64 {
    let a = -0.5;
    let x = math::abs(x);
    if x < 1.0 {
        ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a
    } else {
        0.0
    }
}

/// Per output sample: first source index and normalized weights.
fn resample_weights(src: usize, dst: usize, factor: f64) -> Vec<(usize, Vec<f64>)> {
    let stretch = if factor < 1.0 { 1.0 / factor } else { 1.0 };
    let support = 2.0 * stretch;
    (0..dst)
        .map(|i| {
            let center = i as f64 / factor;
            let lo = math::ceil(center - support).max(0.0) as usize;
            let hi = (math::floor(center + support) as usize).min(src - 1);
            let mut weights: Vec<f64> = (lo..=hi)
                .map(|j| catmull_rom((j as f64 - center) / stretch))
                .collect();
            let total: f64 = weights.iter().sum();
            if total.abs() > 0.0 {
                weights.iter_mut().for_each(|w| *w /= total);
            }
            (lo, weights)
        })
        .collect()
}

/// Partial derivatives, normalized gradient magnitude and level-line phase.
#[derive(Clone, Debug)]
pub struct GradientField {
    width: usize,
    height: usize,
    gx: Vec<f64>,
    gy: Vec<f64>,
    norm: Vec<f64>,
    phase: Vec<f64>,
    /// `(cos φ, sin φ)` per pixel, zero where the gradient vanishes.
    level_dir: Vec<[f64; 2]>,
    noise_scale: f64,
}

impl GradientField {
    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn gx(&self) -> &[f64] {
        &self.gx
    }

    pub fn gy(&self) -> &[f64] {
        &self.gy
    }

    pub fn norm(&self) -> &[f64] {
        &self.norm
    }

    pub fn phase(&self) -> &[f64] {
        &self.phase
    }

    /// The scale `ŝ` raw magnitudes were divided by.
    pub fn noise_scale(&self) -> f64 {
        self.noise_scale
    }

    #[inline]
    pub fn norm_at(&self, x: usize, y: usize) -> f64 {
        self.norm[y * self.width + x]
    }

    #[inline]
    pub fn phase_at(&self, x: usize, y: usize) -> f64 {
        self.phase[y * self.width + x]
    }

    #[inline]
    pub(crate) fn level_dir_at(&self, idx: usize) -> [f64; 2] {
        self.level_dir[idx]
    }

    #[inline]
    pub(crate) fn norm_idx(&self, idx: usize) -> f64 {
        self.norm[idx]
    }

    #[cfg(test)]
    pub(crate) fn zeros(width: usize, height: usize) -> Self {
        let n = width * height;
        Self {
            width,
            height,
            gx: vec![0.0; n],
            gy: vec![0.0; n],
            norm: vec![0.0; n],
            phase: vec![0.0; n],
            level_dir: vec![[0.0; 2]; n],
            noise_scale: 1.0,
        }
    }

    /// Overwrites one pixel's magnitude and level-line angle.
    #[cfg(test)]
    pub(crate) fn set_single(&mut self, x: usize, y: usize, phase: f64, norm: f64) {
        let i = y * self.width + x;
        self.phase[i] = math::wrap_angle(phase);
        self.norm[i] = norm;
        self.level_dir[i] = [math::cos(phase), math::sin(phase)];
    }
}

/// Central-difference gradient with Rayleigh-calibrated normalization.
///
/// `noise_sigma` is the standard deviation of additive pixel noise, in
/// intensity units; central differences turn it into a Rayleigh scale of
/// `noise_sigma / sqrt(2)`. When absent the scale is the median interior
/// magnitude divided by the Rayleigh(1) median, floored at
/// [`QUANTIZATION_NOISE_SCALE`].
pub fn compute_gradient(img: &GrayImage, noise_sigma: Option<f64>) -> Result<GradientField> {
    let (w, h) = (img.width(), img.height());
    let rows: Vec<(Vec<f64>, Vec<f64>)> = par::map_range(h, |y| {
        let mut gx = vec![0.0; w];
        let mut gy = vec![0.0; w];
        for x in 0..w {
            gx[x] = if x == 0 {
                img.get(1, y) - img.get(0, y)
            } else if x == w - 1 {
                img.get(w - 1, y) - img.get(w - 2, y)
            } else {
                0.5 * (img.get(x + 1, y) - img.get(x - 1, y))
            };
            gy[x] = if y == 0 {
                img.get(x, 1) - img.get(x, 0)
            } else if y == h - 1 {
                img.get(x, h - 1) - img.get(x, h - 2)
            } else {
                0.5 * (img.get(x, y + 1) - img.get(x, y - 1))
            };
        }
        (gx, gy)
    });
    let mut gx = Vec::with_capacity(w * h);
    let mut gy = Vec::with_capacity(w * h);
    for (rx, ry) in rows {
        gx.extend(rx);
        gy.extend(ry);
    }
    let magnitude: Vec<f64> = gx.iter().zip(&gy).map(|(a, b)| math::hypot(*a, *b)).collect();

    let interior = |i: usize| {
        let (x, y) = (i % w, i / w);
        x > 0 && y > 0 && x + 1 < w && y + 1 < h
    };
    let mut samples: Vec<f64> = (0..w * h).filter(|&i| interior(i)).map(|i| magnitude[i]).collect();
    if samples.iter().all(|&m| m == 0.0) {
        return Err(Error::NoGradientStructure);
    }
    let noise_scale = match noise_sigma {
        Some(sigma) if sigma > 0.0 && sigma.is_finite() => sigma / core::f64::consts::SQRT_2,
        Some(sigma) => {
            return Err(Error::InvalidParameter(alloc::format!(
                "noise sigma must be positive, got {sigma}"
            )))
        }
        None => {
            let med = math::median_in_place(&mut samples).unwrap_or(0.0);
            (med / rayleigh_median()).max(QUANTIZATION_NOISE_SCALE)
        }
    };

    let mut norm = vec![0.0; w * h];
    let mut phase = vec![0.0; w * h];
    let mut level_dir = vec![[0.0, 0.0]; w * h];
    for i in 0..w * h {
        phase[i] = math::wrap_angle(math::atan2(gy[i], gx[i]) + FRAC_PI_2);
        let m = magnitude[i];
        if m > 0.0 {
            // φ = ψ + π/2 with ψ the gradient direction.
            level_dir[i] = [-gy[i] / m, gx[i] / m];
        }
        if interior(i) {
            norm[i] = m / noise_scale;
        }
    }
    Ok(GradientField {
        width: w,
        height: h,
        gx,
        gy,
        norm,
        phase,
        level_dir,
        noise_scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn rejects_small_and_invalid() {
        assert!(matches!(
            GrayImage::new(8, 20, vec![0.0; 160]),
            Err(Error::ImageTooSmall { .. })
        ));
        let mut data = vec![0.5; 256];
        data[7] = 1.5;
        assert!(matches!(
            GrayImage::new(16, 16, data),
            Err(Error::IntensityOutOfRange { index: 7, .. })
        ));
        let mut data = vec![0.5; 256];
        data[3] = f64::NAN;
        assert!(GrayImage::new(16, 16, data).is_err());
    }

    #[test]
    fn constant_image_has_no_structure() {
        let img = GrayImage::new(20, 20, vec![0.3; 400]).unwrap();
        assert_eq!(compute_gradient(&img, None).unwrap_err(), Error::NoGradientStructure);
    }

    #[test]
    fn vertical_step_edge_phase() {
        let img = GrayImage::from_fn(32, 32, |x, _| if x < 16 { 0.0 } else { 1.0 }).unwrap();
        let g = compute_gradient(&img, None).unwrap();
        for y in 1..31 {
            for x in [15, 16] {
                let phi = g.phase_at(x, y);
                let d = (phi - PI / 2.0).abs().min((phi - 1.5 * PI).abs());
                assert!(d < 1e-6, "phase {phi} at ({x},{y})");
                assert!(g.norm_at(x, y) > 0.0);
            }
        }
        // border frame is masked
        assert_eq!(g.norm_at(0, 5), 0.0);
        assert_eq!(g.norm_at(16, 0), 0.0);
    }

    #[test]
    fn bilinear_matches_pixels_and_midpoints() {
        let img = GrayImage::from_fn(16, 16, |x, y| (x + 16 * y) as f64 / 255.0).unwrap();
        assert_eq!(img.bilinear(3.0, 4.0), Some(img.get(3, 4)));
        let mid = img.bilinear(3.5, 4.0).unwrap();
        assert!((mid - 0.5 * (img.get(3, 4) + img.get(4, 4))).abs() < 1e-15);
        assert_eq!(img.bilinear(15.0, 15.0), Some(img.get(15, 15)));
        assert_eq!(img.bilinear(-0.1, 3.0), None);
        assert_eq!(img.bilinear(3.0, 15.01), None);
    }

    #[test]
    fn rescale_identity_and_constant() {
        let img = GrayImage::from_fn(20, 18, |x, y| ((x * 7 + y * 3) % 11) as f64 / 10.0).unwrap();
        let same = img.rescale_bicubic(1.0).unwrap();
        for (a, b) in img.data().iter().zip(same.data()) {
            assert!((a - b).abs() < 1e-12);
        }
        let flat = GrayImage::new(40, 40, vec![0.25; 1600]).unwrap();
        let half = flat.rescale_bicubic(0.5).unwrap();
        assert_eq!((half.width(), half.height()), (20, 20));
        assert!(half.data().iter().all(|v| (v - 0.25).abs() < 1e-12));
    }
}
