//! Loading PNG and binary PGM rasters as normalized grayscale.

use std::io::{BufRead, Seek};
use std::path::Path;

use asj_core::image::{GrayImage, MIN_SIDE};
use image::{DynamicImage, ImageReader};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("file not found: {0}")]
    NotFound(String),
    #[error("unreadable image: {0}")]
    Unreadable(String),
    #[error("unsupported bit depth: {0:?}, only 8-bit gray or RGB is accepted")]
    UnsupportedDepth(image::ColorType),
    #[error("image is {0}x{1}, both sides must be at least {MIN_SIDE}")]
    TooSmall(u32, u32),
}

/// Rec. 601 luma.
fn luma(r: u8, g: u8, b: u8) -> f64 {
    (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64) / 255.0
}

/// Intensities in `[0, 1]`, row-major, with the raster size.
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

fn to_raster(img: DynamicImage) -> Result<Raster, LoadError> {
    let (width, height) = (img.width() as usize, img.height() as usize);
    let data: Vec<f64> = match img {
        DynamicImage::ImageLuma8(b) => b.pixels().map(|p| p.0[0] as f64 / 255.0).collect(),
        DynamicImage::ImageLumaA8(b) => b.pixels().map(|p| p.0[0] as f64 / 255.0).collect(),
        DynamicImage::ImageRgb8(b) => b.pixels().map(|p| luma(p.0[0], p.0[1], p.0[2])).collect(),
        DynamicImage::ImageRgba8(b) => b.pixels().map(|p| luma(p.0[0], p.0[1], p.0[2])).collect(),
        other => return Err(LoadError::UnsupportedDepth(other.color())),
    };
    // luma of 8-bit channels can overshoot 1 by a rounding hair
    Ok(Raster { width, height, data: data.into_iter().map(|v| v.clamp(0.0, 1.0)).collect() })
}

/// Decodes PNG or PGM (P5) without any size requirement.
pub fn decode<R: BufRead + Seek>(reader: R) -> Result<Raster, LoadError> {
    let reader = ImageReader::new(reader).with_guessed_format().map_err(|e| LoadError::Unreadable(e.to_string()))?;
    match reader.format() {
        Some(image::ImageFormat::Png | image::ImageFormat::Pnm) => {}
        other => return Err(LoadError::Unreadable(format!("unsupported format {other:?}"))),
    }
    to_raster(reader.decode().map_err(|e| LoadError::Unreadable(e.to_string()))?)
}

/// Decodes PNG or PGM (P5) from a seekable byte stream into a detector
/// image, which must be at least 16 pixels on each side.
pub fn load_grayscale_from<R: BufRead + Seek>(reader: R) -> Result<GrayImage, LoadError> {
    let r = decode(reader)?;
    if r.width < MIN_SIDE || r.height < MIN_SIDE {
        return Err(LoadError::TooSmall(r.width as u32, r.height as u32));
    }
    GrayImage::new(r.width, r.height, r.data).map_err(|e| LoadError::Unreadable(e.to_string()))
}

pub fn load_grayscale(path: &Path) -> Result<GrayImage, LoadError> {
    if !path.exists() {
        return Err(LoadError::NotFound(path.display().to_string()));
    }
    let file = std::fs::File::open(path).map_err(|e| LoadError::Unreadable(format!("{}: {e}", path.display())))?;
    load_grayscale_from(std::io::BufReader::new(file))
}

/// Writes intensities as an 8-bit PNG.
pub fn save_png(img: &GrayImage, path: &Path) -> anyhow::Result<()> {
    encode(img).save(path)?;
    Ok(())
}

/// PNG bytes of the image, for embedding.
pub fn png_bytes(img: &GrayImage) -> anyhow::Result<Vec<u8>> {
    let mut out = std::io::Cursor::new(Vec::new());
    encode(img).write_to(&mut out, image::ImageFormat::Png)?;
    Ok(out.into_inner())
}

fn encode(img: &GrayImage) -> image::GrayImage {
    let bytes = img.data().iter().map(|v| (v * 255.0).round() as u8).collect();
    image::GrayImage::from_raw(img.width() as u32, img.height() as u32, bytes).expect("buffer matches dimensions")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn pgm(w: usize, h: usize, bytes: &[u8]) -> Vec<u8> {
        let mut v = format!("P5\n{w} {h}\n255\n").into_bytes();
        v.extend_from_slice(bytes);
        v
    }

    #[test]
    fn pgm_endpoints_scale_to_unit_range() {
        let tiny = pgm(2, 2, &[0, 255, 255, 0]);
        let r = decode(Cursor::new(tiny.clone())).unwrap();
        assert_eq!((r.width, r.height), (2, 2));
        assert_eq!(r.data, vec![0.0, 1.0, 1.0, 0.0]);
        // decodes, but is below the detector's minimum side
        assert!(matches!(load_grayscale_from(Cursor::new(tiny)), Err(LoadError::TooSmall(2, 2))));
        let bytes: Vec<u8> = (0..16 * 16).map(|i| if (i / 16 + i % 16) % 2 == 0 { 0 } else { 255 }).collect();
        let img = load_grayscale_from(Cursor::new(pgm(16, 16, &bytes))).unwrap();
        assert_eq!(&img.data()[..4], &[0.0, 1.0, 0.0, 1.0]);
        assert_eq!(img.data()[16], 1.0);
    }

    #[test]
    fn truncated_header_is_unreadable() {
        let err = load_grayscale_from(Cursor::new(b"P5\n16 ".to_vec())).unwrap_err();
        assert!(err.to_string().contains("unreadable"), "{err}");
    }

    #[test]
    fn png_round_trip_keeps_dimensions() {
        let img = GrayImage::from_fn(40, 24, |x, y| ((x * 7 + y * 3) % 256) as f64 / 255.0).unwrap();
        let bytes = png_bytes(&img).unwrap();
        let back = load_grayscale_from(Cursor::new(bytes)).unwrap();
        assert_eq!((back.width(), back.height()), (40, 24));
        assert_eq!(back, img);
    }

    #[test]
    fn rgb_collapses_by_luma() {
        let mut rgb = image::RgbImage::new(16, 16);
        rgb.put_pixel(0, 0, image::Rgb([255, 0, 0]));
        rgb.put_pixel(1, 0, image::Rgb([255, 255, 255]));
        let mut buf = Cursor::new(Vec::new());
        rgb.write_to(&mut buf, image::ImageFormat::Png).unwrap();
        let img = load_grayscale_from(Cursor::new(buf.into_inner())).unwrap();
        assert!((img.get(0, 0) - 0.299).abs() < 1e-12);
        assert_eq!(img.get(1, 0), 1.0);
    }

    #[test]
    fn sixteen_bit_is_rejected() {
        let img = image::ImageBuffer::<image::Luma<u16>, _>::new(16, 16);
        let mut buf = Cursor::new(Vec::new());
        img.write_to(&mut buf, image::ImageFormat::Png).unwrap();
        assert!(matches!(load_grayscale_from(Cursor::new(buf.into_inner())), Err(LoadError::UnsupportedDepth(_))));
    }
}
