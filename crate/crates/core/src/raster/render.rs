//! PNG heatmaps with a `(min, max)` sidecar for de-quantization.
//!
//! Image row 0 is the top of the canvas (y = 255). Values map linearly from
//! `[min, max]` over all pixels onto the palette; a constant image maps to
//! the first palette entry.

use std::path::Path;

use image::{ImageBuffer, ImageEncoder, Luma, Rgb};

use super::{FieldImage, IMAGE_SIZE};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Palette {
    /// 16-bit grayscale, black at min.
    Gray,
    /// 8-bit RGB, blue at min through white to red at max.
    Diverging,
}

impl std::str::FromStr for Palette {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gray" => Ok(Palette::Gray),
            "diverging" => Ok(Palette::Diverging),
            other => Err(Error::Config(format!("unknown palette `{other}` (gray, diverging)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub png: Vec<u8>,
    pub min: f32,
    pub max: f32,
}

impl Rendered {
    /// Sidecar text: `min <v>\nmax <v>\n`.
    pub fn sidecar(&self) -> String {
        format!("min {:e}\nmax {:e}\n", self.min, self.max)
    }
}

fn diverging(u: f64) -> [u8; 3] {
    let c = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    if u < 0.5 {
        let s = u * 2.0;
        [c(s), c(s), 255]
    } else {
        let s = (1.0 - u) * 2.0;
        [255, c(s), c(s)]
    }
}

pub fn render_png(img: &FieldImage, palette: Palette) -> Result<Rendered> {
    let min = img.pixels.iter().copied().fold(f32::INFINITY, f32::min);
    let max = img.pixels.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    if !(min.is_finite() && max.is_finite()) {
        return Err(Error::Config("cannot render an image with non-finite pixels".into()));
    }
    let span = max as f64 - min as f64;
    let unit = |x: u32, y: u32| {
        let v = img.get(x as usize, IMAGE_SIZE - 1 - y as usize) as f64;
        if span > 0.0 {
            (v - min as f64) / span
        } else {
            0.0
        }
    };
    let n = IMAGE_SIZE as u32;
    let mut png = Vec::new();
    let encoder = image::codecs::png::PngEncoder::new(&mut png);
    let written = match palette {
        Palette::Gray => {
            let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
                ImageBuffer::from_fn(n, n, |x, y| Luma([(unit(x, y) * 65535.0).round() as u16]));
            let bytes: Vec<u8> = buf.as_raw().iter().flat_map(|v| v.to_be_bytes()).collect();
            encoder.write_image(&bytes, n, n, image::ExtendedColorType::L16)
        }
        Palette::Diverging => {
            let buf: ImageBuffer<Rgb<u8>, Vec<u8>> = ImageBuffer::from_fn(n, n, |x, y| Rgb(diverging(unit(x, y))));
            encoder.write_image(buf.as_raw(), n, n, image::ExtendedColorType::Rgb8)
        }
    };
    written.map_err(|e| Error::Config(format!("png encoding failed: {e}")))?;
    Ok(Rendered { png, min, max })
}

/// Writes `path` and `path` + `.minmax`.
pub fn write_png(img: &FieldImage, palette: Palette, path: &Path) -> Result<Rendered> {
    let r = render_png(img, palette)?;
    std::fs::write(path, &r.png).map_err(Error::io_at(path))?;
    let mut side = path.as_os_str().to_owned();
    side.push(".minmax");
    std::fs::write(&side, r.sidecar()).map_err(Error::io_at(side))?;
    Ok(r)
}
