//! PNG encoding/decoding for maps and masks, and critic overlays.

use std::io::Cursor;
use std::path::Path;

use image::{ImageFormat, RgbImage};
use thiserror::Error;

use crate::model::{Coordinate, MapCategory, ModelError, RasterMap, TraversabilityMask};
use crate::raster::bresenham_polyline;

pub const MAGENTA: [u8; 3] = [255, 0, 255];

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("image codec: {0}")]
    Image(#[from] image::ImageError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub fn map_to_image(map: &RasterMap) -> RgbImage {
    let raw: Vec<u8> = map.pixels().iter().flatten().copied().collect();
    RgbImage::from_raw(map.width(), map.height(), raw).expect("pixel count checked at construction")
}

pub fn mask_to_image(mask: &TraversabilityMask) -> RgbImage {
    let raw: Vec<u8> = mask.bits().iter().flat_map(|b| if *b { [255u8; 3] } else { [0u8; 3] }).collect();
    RgbImage::from_raw(mask.width(), mask.height(), raw).expect("bit count matches dims")
}

pub fn png_bytes(img: &RgbImage) -> Result<Vec<u8>, RenderError> {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png)?;
    Ok(buf.into_inner())
}

pub fn save_png(img: &RgbImage, path: &Path) -> Result<(), RenderError> {
    img.save_with_format(path, ImageFormat::Png)?;
    Ok(())
}

pub fn load_map_png(path: &Path, category: MapCategory, map_id: &str) -> Result<RasterMap, RenderError> {
    let img = image::open(path)?.to_rgb8();
    let (w, h) = img.dimensions();
    let pixels = img.pixels().map(|p| p.0).collect();
    Ok(RasterMap::new(w, h, pixels, category, map_id)?)
}

/// Any channel above 127 marks a pixel as traversable.
pub fn load_mask_png(path: &Path) -> Result<TraversabilityMask, RenderError> {
    let img = image::open(path)?.to_rgb8();
    let (w, h) = img.dimensions();
    let bits = img.pixels().map(|p| p.0.iter().any(|c| *c > 127)).collect();
    Ok(TraversabilityMask::new(w, h, bits)?)
}

/// The map with `points` drawn as a 3-px magenta polyline.
pub fn path_overlay(map: &RasterMap, points: &[Coordinate]) -> RgbImage {
    let mut img = map_to_image(map);
    let (w, h) = (map.width() as i32, map.height() as i32);
    for p in bresenham_polyline(points) {
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (x, y) = (p.x + dx, p.y + dy);
                if x >= 0 && y >= 0 && x < w && y < h {
                    img.put_pixel(x as u32, y as u32, image::Rgb(MAGENTA));
                }
            }
        }
    }
    img
}
