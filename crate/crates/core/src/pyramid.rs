//! Resolution pyramid helpers for coarse-to-fine optimization.
//!
//! Downsampling halves each dimension with a 2x2 box filter (odd trailing
//! rows/columns fold into a smaller box). Flow upsampling doubles the grid
//! with bilinear interpolation and rescales the vectors by the resolution
//! ratio so they keep their meaning in pixels of the finer grid.

use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::image::Image;
use crate::{flt, Float};

/// Halves both dimensions with an averaging box filter.
///
/// Output size is `ceil(w / 2) x ceil(h / 2)`; each output pixel averages
/// the 1, 2, or 4 source pixels it covers.
pub fn downsample_half<T: Float>(image: &Image<T>) -> Result<Image<T>> {
    let (w, h, c) = image.shape();
    let ow = w.div_ceil(2);
    let oh = h.div_ceil(2);
    let mut out = Image::new(ow, oh, c)?;
    for oy in 0..oh {
        for ox in 0..ow {
            let x0 = ox * 2;
            let y0 = oy * 2;
            let x1 = (x0 + 1).min(w - 1);
            let y1 = (y0 + 1).min(h - 1);
            let count = flt::<T>(((x1 - x0 + 1) * (y1 - y0 + 1)) as f64);
            for ch in 0..c {
                let mut acc = T::zero();
                for sy in y0..=y1 {
                    for sx in x0..=x1 {
                        acc += image.at(sx, sy, ch);
                    }
                }
                out.set(ox, oy, ch, acc / count);
            }
        }
    }
    Ok(out)
}

/// Builds a pyramid of `levels` images, finest first.
///
/// Level 0 is a clone of the input; each further level halves the previous
/// one. Errors if a level would fall below 2 pixels on a side, which the
/// warping lattice cannot represent.
pub fn image_pyramid<T: Float>(image: &Image<T>, levels: usize) -> Result<Vec<Image<T>>> {
    if levels == 0 {
        return Err(Error::InvalidConfig(
            "pyramid needs at least one level".to_string(),
        ));
    }
    let mut out = vec![image.clone()];
    for _ in 1..levels {
        let prev = out.last().expect("non-empty");
        if prev.width() < 4 || prev.height() < 4 {
            return Err(Error::InvalidDimension {
                width: prev.width().div_ceil(2),
                height: prev.height().div_ceil(2),
                min: 2,
            });
        }
        out.push(downsample_half(prev)?);
    }
    Ok(out)
}

/// Resamples a flow field to a new grid, scaling vectors with resolution.
///
/// Sample positions map corner-to-corner: output pixel `ox` reads the input
/// at `ox * (w_in - 1) / (w_out - 1)` (center pixel when the input side is
/// 1). The x components are multiplied by `w_out / w_in` and y components by
/// `h_out / h_in`, so a flow crossing the whole field keeps doing so.
pub fn resample_flow<T: Float>(
    flow: &FlowField<T>,
    out_width: usize,
    out_height: usize,
) -> Result<FlowField<T>> {
    if out_width < 1 || out_height < 1 {
        return Err(Error::InvalidDimension {
            width: out_width,
            height: out_height,
            min: 1,
        });
    }
    let (iw, ih) = (flow.width(), flow.height());
    let sx_scale = flt::<T>(out_width as f64 / iw as f64);
    let sy_scale = flt::<T>(out_height as f64 / ih as f64);
    let map = |o: usize, osz: usize, isz: usize| -> T {
        if osz <= 1 || isz <= 1 {
            flt::<T>((isz - 1) as f64 / 2.0)
        } else {
            flt::<T>(o as f64 * (isz - 1) as f64 / (osz - 1) as f64)
        }
    };
    let mut out = FlowField::zeros(out_width, out_height);
    for oy in 0..out_height {
        let fy = map(oy, out_height, ih);
        let y0 = fy.floor().to_usize().expect("in range").min(ih - 1);
        let y1 = (y0 + 1).min(ih - 1);
        let wy = fy - flt::<T>(y0 as f64);
        for ox in 0..out_width {
            let fx = map(ox, out_width, iw);
            let x0 = fx.floor().to_usize().expect("in range").min(iw - 1);
            let x1 = (x0 + 1).min(iw - 1);
            let wx = fx - flt::<T>(x0 as f64);
            let lerp = |pick: fn((T, T)) -> T| -> T {
                let v00 = pick(flow.at(x0, y0));
                let v10 = pick(flow.at(x1, y0));
                let v01 = pick(flow.at(x0, y1));
                let v11 = pick(flow.at(x1, y1));
                let top = v00 + (v10 - v00) * wx;
                let bot = v01 + (v11 - v01) * wx;
                top + (bot - top) * wy
            };
            out.set(ox, oy, lerp(|v| v.0) * sx_scale, lerp(|v| v.1) * sy_scale);
        }
    }
    Ok(out)
}
