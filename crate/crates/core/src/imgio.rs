//! PNG persistence for [-1, 1] images and simple grid montages.

use std::path::Path;

use image::{ImageBuffer, Rgb};
use ndarray::Array3;
use thiserror::Error;

use crate::scene::render::{Image, IMAGE_SIZE};
use crate::tensor::Scalar;

#[derive(Debug, Error)]
pub enum ImgIoError {
    #[error("image i/o failed: {0}")]
    Image(#[from] image::ImageError),
    #[error("expected a {expected}x{expected} RGB png, got {got_w}x{got_h}")]
    BadDimensions { expected: usize, got_w: u32, got_h: u32 },
}

fn to_u8(v: f64) -> u8 {
    let clamped = v.clamp(-1.0, 1.0);
    ((clamped + 1.0) * 127.5).round() as u8
}

fn from_u8(b: u8) -> f64 {
    b as f64 / 127.5 - 1.0
}

/// Convert to an 8-bit RGB buffer, clamping into [-1, 1].
pub fn to_rgb8<T: Scalar>(img: &Image<T>) -> ImageBuffer<Rgb<u8>, Vec<u8>> {
    let (_, h, w) = img.dim();
    ImageBuffer::from_fn(w as u32, h as u32, |x, y| {
        let (x, y) = (x as usize, y as usize);
        Rgb([
            to_u8(img[[0, y, x]].to_f64()),
            to_u8(img[[1, y, x]].to_f64()),
            to_u8(img[[2, y, x]].to_f64()),
        ])
    })
}

pub fn save_png<T: Scalar>(img: &Image<T>, path: &Path) -> Result<(), ImgIoError> {
    to_rgb8(img).save(path)?;
    Ok(())
}

pub fn load_png<T: Scalar>(path: &Path) -> Result<Image<T>, ImgIoError> {
    let rgb = image::open(path)?.to_rgb8();
    if rgb.width() as usize != IMAGE_SIZE || rgb.height() as usize != IMAGE_SIZE {
        return Err(ImgIoError::BadDimensions {
            expected: IMAGE_SIZE,
            got_w: rgb.width(),
            got_h: rgb.height(),
        });
    }
    let mut img = Array3::zeros((3, IMAGE_SIZE, IMAGE_SIZE));
    for (x, y, px) in rgb.enumerate_pixels() {
        for c in 0..3 {
            img[[c, y as usize, x as usize]] = T::from_f64(from_u8(px[c]));
        }
    }
    Ok(img)
}

/// Tile images left-to-right, top-to-bottom into a single montage with a
/// 1-pixel separator.
pub fn save_grid_png<T: Scalar>(
    images: &[Image<T>],
    cols: usize,
    path: &Path,
) -> Result<(), ImgIoError> {
    assert!(cols > 0 && !images.is_empty());
    let rows = images.len().div_ceil(cols);
    let tile = IMAGE_SIZE as u32;
    let w = cols as u32 * (tile + 1) - 1;
    let h = rows as u32 * (tile + 1) - 1;
    let mut canvas = ImageBuffer::from_pixel(w, h, Rgb([30u8, 30, 30]));
    for (i, img) in images.iter().enumerate() {
        let ox = (i % cols) as u32 * (tile + 1);
        let oy = (i / cols) as u32 * (tile + 1);
        let rgb = to_rgb8(img);
        for (x, y, px) in rgb.enumerate_pixels() {
            canvas.put_pixel(ox + x, oy + y, *px);
        }
    }
    canvas.save(path)?;
    Ok(())
}
