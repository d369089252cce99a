use std::io::Cursor;

use image::codecs::png::PngEncoder;
use image::{ColorType, ExtendedColorType, ImageEncoder, ImageFormat};

use super::ConfidenceMap;
use crate::error::{Error, Result};

/// Encodes as 8-bit grayscale, byte = round(255 · value).
pub fn encode_png(m: &ConfidenceMap) -> Result<Vec<u8>> {
    let bytes: Vec<u8> = m
        .values()
        .iter()
        .map(|v| (v * 255.0).round() as u8)
        .collect();
    let mut out = Vec::new();
    PngEncoder::new(&mut out)
        .write_image(
            &bytes,
            m.width() as u32,
            m.height() as u32,
            ExtendedColorType::L8,
        )
        .map_err(|e| Error::Format(e.to_string()))?;
    Ok(out)
}

/// Decodes an 8-bit grayscale PNG; any other color type is rejected.
pub fn decode_png(bytes: &[u8]) -> Result<ConfidenceMap> {
    let img = image::load(Cursor::new(bytes), ImageFormat::Png)
        .map_err(|e| Error::Format(e.to_string()))?;
    if img.color() != ColorType::L8 {
        return Err(Error::Format(format!(
            "expected 8-bit grayscale PNG, found {:?}",
            img.color()
        )));
    }
    let gray = img.into_luma8();
    let (w, h) = gray.dimensions();
    let values = gray
        .into_raw()
        .into_iter()
        .map(|b| b as f64 / 255.0)
        .collect();
    ConfidenceMap::new(w as usize, h as usize, values)
}
