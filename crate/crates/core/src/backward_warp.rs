//! Bilinear backward warping (gather along a flow field).
//!
//! `warped(x) = src(x + u(x))` with bilinear interpolation. A pixel is valid
//! when its sample point stays inside the image domain `[0, W-1] x [0, H-1]`;
//! everything outside is written as zero with a zero validity bit. At
//! interior integer sample coordinates the interpolation kernel uses its
//! right-continuous branch (the cell to the right/below); on the far domain
//! edge the duplicate-neighbor clamp makes the local derivative zero.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::image::{Image, Mask};
use crate::Float;

/// Gather result plus per-pixel validity.
#[derive(Debug, Clone)]
pub struct BackwardWarpResult<T: Float> {
    /// Bilinear samples; zero where invalid.
    pub image: Image<T>,
    /// 1 where the sample point lies inside the image domain.
    pub valid: Mask<T>,
}

struct Tap {
    x0: usize,
    y0: usize,
    x1: usize,
    y1: usize,
}

/// Bilinear support of an in-domain sample point `(sx, sy)`.
///
/// Returns the four corner indices and fractional offsets. Out-of-range
/// right/bottom neighbors (only possible when the sample sits exactly on the
/// far edge) clamp onto the edge pixel.
#[inline]
fn taps<T: Float>(sx: T, sy: T, width: usize, height: usize) -> (Tap, T, T) {
    let fx0 = sx.floor();
    let fy0 = sy.floor();
    let x0 = fx0.to_f64().unwrap() as usize;
    let y0 = fy0.to_f64().unwrap() as usize;
    let tap = Tap {
        x0,
        y0,
        x1: (x0 + 1).min(width - 1),
        y1: (y0 + 1).min(height - 1),
    };
    (tap, sx - fx0, sy - fy0)
}

#[inline]
fn in_domain<T: Float>(sx: T, sy: T, width: usize, height: usize) -> bool {
    sx >= T::zero()
        && sy >= T::zero()
        && sx <= T::from_usize(width - 1).unwrap()
        && sy <= T::from_usize(height - 1).unwrap()
}

/// Warps `src` by gathering at `x + flow(x)`.
pub fn backward_warp<T: Float>(
    src: &Image<T>,
    flow: &FlowField<T>,
) -> Result<BackwardWarpResult<T>> {
    if flow.width() != src.width() || flow.height() != src.height() {
        return Err(Error::ShapeMismatch {
            context: "backward_warp",
            expected: (src.width(), src.height(), 2),
            got: (flow.width(), flow.height(), 2),
        });
    }
    let width = src.width();
    let height = src.height();
    let channels = src.channels();

    // Rows are independent gathers; parallel order cannot matter.
    let rows: Vec<(Vec<T>, Vec<T>)> = (0..height)
        .into_par_iter()
        .map(|y| {
            let mut row = vec![T::zero(); width * channels];
            let mut valid_row = vec![T::zero(); width];
            for x in 0..width {
                let (dx, dy) = flow.at(x, y);
                let sx = T::from_usize(x).unwrap() + dx;
                let sy = T::from_usize(y).unwrap() + dy;
                if !sx.is_finite() || !sy.is_finite() || !in_domain(sx, sy, width, height) {
                    continue;
                }
                valid_row[x] = T::one();
                let (tap, fx, fy) = taps(sx, sy, width, height);
                let one = T::one();
                for c in 0..channels {
                    let v00 = src.at(tap.x0, tap.y0, c);
                    let v10 = src.at(tap.x1, tap.y0, c);
                    let v01 = src.at(tap.x0, tap.y1, c);
                    let v11 = src.at(tap.x1, tap.y1, c);
                    let top = (one - fx) * v00 + fx * v10;
                    let bottom = (one - fx) * v01 + fx * v11;
                    row[x * channels + c] = (one - fy) * top + fy * bottom;
                }
            }
            (row, valid_row)
        })
        .collect();

    let mut data = Vec::with_capacity(width * height * channels);
    let mut valid_data = Vec::with_capacity(width * height);
    for (row, valid_row) in rows {
        data.extend(row);
        valid_data.extend(valid_row);
    }
    Ok(BackwardWarpResult {
        image: Image::from_vec(width, height, channels, data)?,
        valid: Mask::from_vec(width, height, valid_data)?,
    })
}

/// Vector-Jacobian product of [`backward_warp`].
///
/// Returns `(grad_src, grad_flow)`. Invalid pixels contribute nothing. The
/// flow gradient differentiates the bilinear kernel on the branch the
/// forward pass used, so it is exact wherever the kernel is smooth.
pub fn backward_warp_vjp<T: Float>(
    src: &Image<T>,
    flow: &FlowField<T>,
    upstream: &Image<T>,
) -> Result<(Image<T>, FlowField<T>)> {
    if flow.width() != src.width() || flow.height() != src.height() {
        return Err(Error::ShapeMismatch {
            context: "backward_warp_vjp",
            expected: (src.width(), src.height(), 2),
            got: (flow.width(), flow.height(), 2),
        });
    }
    if upstream.shape() != src.shape() {
        return Err(Error::ShapeMismatch {
            context: "backward_warp_vjp upstream",
            expected: src.shape(),
            got: upstream.shape(),
        });
    }
    let width = src.width();
    let height = src.height();
    let one = T::one();

    let mut grad_src = src.zeros_like();
    let mut grad_flow = FlowField::zeros(width, height);

    for y in 0..height {
        for x in 0..width {
            let (dx, dy) = flow.at(x, y);
            let sx = T::from_usize(x).unwrap() + dx;
            let sy = T::from_usize(y).unwrap() + dy;
            if !sx.is_finite() || !sy.is_finite() || !in_domain(sx, sy, width, height) {
                continue;
            }
            let (tap, fx, fy) = taps(sx, sy, width, height);
            let mut gx = T::zero();
            let mut gy = T::zero();
            for c in 0..src.channels() {
                let up = upstream.at(x, y, c);
                let v00 = src.at(tap.x0, tap.y0, c);
                let v10 = src.at(tap.x1, tap.y0, c);
                let v01 = src.at(tap.x0, tap.y1, c);
                let v11 = src.at(tap.x1, tap.y1, c);

                grad_src.add_at(tap.x0, tap.y0, c, (one - fx) * (one - fy) * up);
                grad_src.add_at(tap.x1, tap.y0, c, fx * (one - fy) * up);
                grad_src.add_at(tap.x0, tap.y1, c, (one - fx) * fy * up);
                grad_src.add_at(tap.x1, tap.y1, c, fx * fy * up);

                let dsx = (one - fy) * (v10 - v00) + fy * (v11 - v01);
                let dsy = (one - fx) * (v01 - v00) + fx * (v11 - v10);
                gx += up * dsx;
                gy += up * dsy;
            }
            grad_flow.set(x, y, gx, gy);
        }
    }
    Ok((grad_src, grad_flow))
}
