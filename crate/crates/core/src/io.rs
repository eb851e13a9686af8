//! PNG and flow-field file formats, plus frame-directory ingestion.
//!
//! PNG values are normalized on load by the bit-depth maximum and quantized
//! on save by round-half-up after clamping to `[0, 1]`. Flow fields use the
//! widespread binary layout: a magic float `202021.25`, two 32-bit
//! little-endian dimensions, then row-major interleaved `(dx, dy)` pairs as
//! 32-bit little-endian floats.

use std::fs;
use std::path::{Path, PathBuf};

use image::DynamicImage;

use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::image::Image;
use crate::{flt, Float};

const FLOW_MAGIC: f32 = 202021.25;
/// Upper bound on pixels declared by a flow header, to reject garbage
/// headers before allocating.
const MAX_FLOW_PIXELS: i64 = 100_000_000;

/// Output precision for [`save_image`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PngBitDepth {
    Eight,
    Sixteen,
}

/// Loads an 8- or 16-bit grayscale or RGB PNG, mapping samples to `[0, 1]`.
pub fn load_image<T: Float>(path: impl AsRef<Path>) -> Result<Image<T>> {
    let decoded = image::open(path.as_ref())?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    match decoded {
        DynamicImage::ImageLuma8(buf) => from_u8(w, h, 1, &buf.into_raw()),
        DynamicImage::ImageRgb8(buf) => from_u8(w, h, 3, &buf.into_raw()),
        DynamicImage::ImageLuma16(buf) => from_u16(w, h, 1, &buf.into_raw()),
        DynamicImage::ImageRgb16(buf) => from_u16(w, h, 3, &buf.into_raw()),
        other => Err(Error::UnsupportedChannels(
            other.color().channel_count() as usize
        )),
    }
}

fn from_u8<T: Float>(w: usize, h: usize, c: usize, raw: &[u8]) -> Result<Image<T>> {
    let data = raw.iter().map(|&v| flt(v as f64 / 255.0)).collect();
    Image::from_vec(w, h, c, data)
}

fn from_u16<T: Float>(w: usize, h: usize, c: usize, raw: &[u16]) -> Result<Image<T>> {
    let data = raw.iter().map(|&v| flt(v as f64 / 65535.0)).collect();
    Image::from_vec(w, h, c, data)
}

/// Saves a PNG at the requested bit depth.
///
/// Samples are clamped to `[0, 1]` and quantized round-half-up, so 0.5
/// becomes byte 128 at 8 bits. Non-finite samples are refused.
pub fn save_image<T: Float>(
    path: impl AsRef<Path>,
    img: &Image<T>,
    depth: PngBitDepth,
) -> Result<()> {
    if !img.is_finite() {
        return Err(Error::InvalidConfig(
            "cannot save an image with non-finite samples".into(),
        ));
    }
    let (w, h, c) = img.shape();
    let (w32, h32) = (w as u32, h as u32);
    let quant = |v: T, max: f64| -> f64 {
        let clamped = v.to_f64().expect("finite sample").clamp(0.0, 1.0);
        (clamped * max + 0.5).floor()
    };
    match depth {
        PngBitDepth::Eight => {
            let raw: Vec<u8> = img.data().iter().map(|&v| quant(v, 255.0) as u8).collect();
            match c {
                1 => image::GrayImage::from_raw(w32, h32, raw)
                    .expect("buffer sized from shape")
                    .save(path.as_ref())?,
                _ => image::RgbImage::from_raw(w32, h32, raw)
                    .expect("buffer sized from shape")
                    .save(path.as_ref())?,
            }
        }
        PngBitDepth::Sixteen => {
            let raw: Vec<u16> = img
                .data()
                .iter()
                .map(|&v| quant(v, 65535.0) as u16)
                .collect();
            match c {
                1 => image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::from_raw(w32, h32, raw)
                    .expect("buffer sized from shape")
                    .save(path.as_ref())?,
                _ => image::ImageBuffer::<image::Rgb<u16>, Vec<u16>>::from_raw(w32, h32, raw)
                    .expect("buffer sized from shape")
                    .save(path.as_ref())?,
            }
        }
    }
    Ok(())
}

/// Reads a flow field in the binary layout described at module level.
pub fn load_flow<T: Float>(path: impl AsRef<Path>) -> Result<FlowField<T>> {
    let bytes = fs::read(path.as_ref())?;
    if bytes.len() < 12 {
        return Err(Error::FlowTruncated {
            needed: 12,
            got: bytes.len(),
        });
    }
    let magic = f32::from_le_bytes(bytes[0..4].try_into().expect("4 bytes"));
    if magic != FLOW_MAGIC {
        return Err(Error::FlowBadMagic { got: magic });
    }
    let w = i32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    let h = i32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if w <= 0 || h <= 0 || (w as i64) * (h as i64) > MAX_FLOW_PIXELS {
        return Err(Error::FlowBadHeader {
            width: w as i64,
            height: h as i64,
        });
    }
    let (w, h) = (w as usize, h as usize);
    let needed = 12 + w * h * 2 * 4;
    if bytes.len() < needed {
        return Err(Error::FlowTruncated {
            needed,
            got: bytes.len(),
        });
    }
    let data = bytes[12..needed]
        .chunks_exact(4)
        .map(|chunk| {
            let v = f32::from_le_bytes(chunk.try_into().expect("4 bytes"));
            flt(v as f64)
        })
        .collect();
    FlowField::from_vec(w, h, data)
}

/// Writes a flow field; components are narrowed to 32-bit floats.
pub fn save_flow<T: Float>(path: impl AsRef<Path>, flow: &FlowField<T>) -> Result<()> {
    let (w, h) = (flow.width(), flow.height());
    if w > i32::MAX as usize || h > i32::MAX as usize {
        return Err(Error::InvalidConfig(
            "flow dimensions exceed the file format's 32-bit header".into(),
        ));
    }
    let mut bytes = Vec::with_capacity(12 + w * h * 8);
    bytes.extend_from_slice(&FLOW_MAGIC.to_le_bytes());
    bytes.extend_from_slice(&(w as i32).to_le_bytes());
    bytes.extend_from_slice(&(h as i32).to_le_bytes());
    for &v in flow.data() {
        let f = v.to_f64().map(|x| x as f32).unwrap_or(f32::NAN);
        bytes.extend_from_slice(&f.to_le_bytes());
    }
    fs::write(path.as_ref(), bytes)?;
    Ok(())
}

/// Loads every `.png` in a directory as one frame sequence.
///
/// Files are taken in lexicographic name order, so frame numbers must be
/// zero-padded. Non-PNG entries are ignored. All frames must share one
/// shape.
pub fn load_frame_dir<T: Float>(dir: impl AsRef<Path>) -> Result<Vec<Image<T>>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir.as_ref())?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|entry| entry.path())
        .filter(|p| {
            p.extension()
                .map(|e| e.eq_ignore_ascii_case("png"))
                .unwrap_or(false)
        })
        .collect();
    paths.sort();
    let mut frames: Vec<Image<T>> = Vec::with_capacity(paths.len());
    for path in &paths {
        let frame = load_image(path)?;
        if let Some(first) = frames.first() {
            if frame.shape() != first.shape() {
                return Err(Error::ShapeMismatch {
                    context: "frame sequence",
                    expected: first.shape(),
                    got: frame.shape(),
                });
            }
        }
        frames.push(frame);
    }
    Ok(frames)
}
