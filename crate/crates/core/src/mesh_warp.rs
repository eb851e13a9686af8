//! Differentiable forward warping via triangle-lattice rasterization.
//!
//! Vertices of the pixel-center lattice are displaced by a flow field; the
//! deformed triangles are then rasterized at integer pixel centers and the
//! source intensities are carried over by barycentric interpolation. Where
//! deformed triangles overlap, the one with the larger mean vertex motion
//! wins (it moved in front); exact ties go to the lower triangle index, which
//! also resolves shared-edge claims on the unwarped lattice. Pixels no
//! triangle reaches stay at zero with zero coverage.
//!
//! The map is piecewise smooth in both intensities and flow. The
//! vector-Jacobian product in [`forward_warp_vjp`] differentiates the
//! interpolation while holding each pixel's winning fragment fixed, i.e. it
//! follows the subgradient convention of ignoring re-assignment events.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::image::{Image, Mask};
use crate::lattice::{
    barycentric_jacobian, build_lattice, point_in_triangle, Fragment, TriangleLattice,
};
use crate::{flt, Float};

/// Triangles processed per parallel work item.
const RASTER_CHUNK: usize = 512;

/// Forward warp output: rendered image, binary coverage, and the per-pixel
/// winning fragments needed to replay gradients.
#[derive(Debug, Clone)]
pub struct ForwardWarpResult<T: Float> {
    /// Interpolated intensities; zero where uncovered.
    pub image: Image<T>,
    /// 1 where some triangle claimed the pixel, 0 elsewhere.
    pub coverage: Mask<T>,
    /// Winning fragment per pixel, row-major.
    pub fragments: Vec<Option<Fragment<T>>>,
}

/// Mean displacement magnitude over a triangle's three vertices.
pub fn motion_magnitude<T: Float>(
    flow: &FlowField<T>,
    triangle: usize,
    lattice: &TriangleLattice,
) -> T {
    let verts = lattice.triangle(triangle);
    let mut sum = T::zero();
    for &v in &verts {
        let (x, y) = lattice.vertex_pixel(v);
        sum += flow.magnitude(x, y);
    }
    sum / flt(3.0)
}

/// Warps `src` forward along `flow`.
///
/// `flow` must match the image grid; images must be at least 2x2 so the
/// lattice exists.
pub fn forward_warp<T: Float>(
    src: &Image<T>,
    flow: &FlowField<T>,
) -> Result<ForwardWarpResult<T>> {
    let lattice = build_lattice(src.width(), src.height())?;
    forward_warp_on(src, flow, &lattice)
}

fn check_flow_shape<T: Float>(
    src: &Image<T>,
    flow: &FlowField<T>,
    context: &'static str,
) -> Result<()> {
    if flow.width() != src.width() || flow.height() != src.height() {
        return Err(Error::ShapeMismatch {
            context,
            expected: (src.width(), src.height(), 2),
            got: (flow.width(), flow.height(), 2),
        });
    }
    Ok(())
}

/// Forward warp reusing a prebuilt lattice (hot path for reblurring).
pub(crate) fn forward_warp_on<T: Float>(
    src: &Image<T>,
    flow: &FlowField<T>,
    lattice: &TriangleLattice,
) -> Result<ForwardWarpResult<T>> {
    check_flow_shape(src, flow, "forward_warp")?;
    debug_assert_eq!(lattice.width(), src.width());
    debug_assert_eq!(lattice.height(), src.height());

    let width = src.width();
    let height = src.height();

    // Displaced vertex positions; vertex k belongs to pixel k.
    let warped: Vec<(T, T)> = (0..lattice.vertex_count())
        .map(|v| {
            let (x, y) = lattice.vertex_pixel(v as u32);
            let (dx, dy) = flow.at(x, y);
            (flt::<T>(x as f64) + dx, flt::<T>(y as f64) + dy)
        })
        .collect();

    // Candidate fragments per chunk of triangles. Chunks are collected in
    // order and the winner rule is order-independent, so the result does not
    // depend on the thread count.
    let tri_indices: Vec<usize> = (0..lattice.triangle_count()).collect();
    let chunks: Vec<Vec<Fragment<T>>> = tri_indices
        .par_chunks(RASTER_CHUNK)
        .map(|chunk| {
            let mut out = Vec::new();
            for &t in chunk {
                rasterize_triangle(t, lattice, flow, &warped, width, height, &mut out);
            }
            out
        })
        .collect();

    let mut fragments: Vec<Option<Fragment<T>>> = vec![None; width * height];
    for chunk in chunks {
        for frag in chunk {
            let slot = &mut fragments[frag.pixel.1 * width + frag.pixel.0];
            let replace = match slot {
                None => true,
                Some(best) => {
                    frag.motion_magnitude > best.motion_magnitude
                        || (frag.motion_magnitude == best.motion_magnitude
                            && frag.triangle_id < best.triangle_id)
                }
            };
            if replace {
                *slot = Some(frag);
            }
        }
    }

    let mut image = Image::new(width, height, src.channels())?;
    let mut coverage = Mask::zeros(width, height);
    for (idx, frag) in fragments.iter().enumerate() {
        if let Some(f) = frag {
            let (px, py) = (idx % width, idx / width);
            coverage.set(px, py, T::one());
            let verts = lattice.triangle(f.triangle_id);
            for c in 0..src.channels() {
                let mut v = T::zero();
                for (k, &vert) in verts.iter().enumerate() {
                    let (sx, sy) = lattice.vertex_pixel(vert);
                    v += f.barycentric[k] * src.at(sx, sy, c);
                }
                image.set(px, py, c, v);
            }
        }
    }

    Ok(ForwardWarpResult {
        image,
        coverage,
        fragments,
    })
}

fn rasterize_triangle<T: Float>(
    t: usize,
    lattice: &TriangleLattice,
    flow: &FlowField<T>,
    warped: &[(T, T)],
    width: usize,
    height: usize,
    out: &mut Vec<Fragment<T>>,
) {
    let verts = lattice.triangle(t);
    let a = warped[verts[0] as usize];
    let b = warped[verts[1] as usize];
    let c = warped[verts[2] as usize];

    let (min_x, max_x) = min_max(a.0, b.0, c.0);
    let (min_y, max_y) = min_max(a.1, b.1, c.1);
    let Some((x0, x1)) = pixel_range(min_x, max_x, width) else {
        return;
    };
    let Some((y0, y1)) = pixel_range(min_y, max_y, height) else {
        return;
    };

    let motion = motion_magnitude(flow, t, lattice);
    for py in y0..=y1 {
        for px in x0..=x1 {
            let p = (flt::<T>(px as f64), flt::<T>(py as f64));
            if let Some((w0, w1, w2)) = point_in_triangle(p, a, b, c) {
                out.push(Fragment {
                    pixel: (px, py),
                    triangle_id: t,
                    barycentric: [w0, w1, w2],
                    motion_magnitude: motion,
                });
            }
        }
    }
}

#[inline]
fn min_max<T: Float>(a: T, b: T, c: T) -> (T, T) {
    (a.min(b).min(c), a.max(b).max(c))
}

/// Integer pixel interval covered by `[lo, hi]`, clipped to `[0, len-1]`.
#[inline]
fn pixel_range<T: Float>(lo: T, hi: T, len: usize) -> Option<(usize, usize)> {
    let lo = lo.ceil().to_f64().unwrap_or(f64::NAN);
    let hi = hi.floor().to_f64().unwrap_or(f64::NAN);
    if !lo.is_finite() || !hi.is_finite() {
        return None;
    }
    let lo = lo.max(0.0);
    let hi = hi.min(len as f64 - 1.0);
    if lo > hi {
        return None;
    }
    Some((lo as usize, hi as usize))
}

/// Vector-Jacobian product of [`forward_warp`].
///
/// Given `upstream` (same shape as the warped output), returns gradients
/// with respect to the source intensities and the flow components. Fragment
/// assignment is held fixed: contributions flow only through the barycentric
/// interpolation of each pixel's recorded winner.
pub fn forward_warp_vjp<T: Float>(
    src: &Image<T>,
    flow: &FlowField<T>,
    upstream: &Image<T>,
) -> Result<(Image<T>, FlowField<T>)> {
    let lattice = build_lattice(src.width(), src.height())?;
    let fwd = forward_warp_on(src, flow, &lattice)?;
    forward_warp_vjp_replay(src, flow, &lattice, &fwd, upstream)
}

/// VJP replaying an existing forward pass (avoids re-rasterizing).
pub(crate) fn forward_warp_vjp_replay<T: Float>(
    src: &Image<T>,
    flow: &FlowField<T>,
    lattice: &TriangleLattice,
    fwd: &ForwardWarpResult<T>,
    upstream: &Image<T>,
) -> Result<(Image<T>, FlowField<T>)> {
    if upstream.shape() != src.shape() {
        return Err(Error::ShapeMismatch {
            context: "forward_warp_vjp upstream",
            expected: src.shape(),
            got: upstream.shape(),
        });
    }

    let width = src.width();
    let mut grad_src = src.zeros_like();
    let mut grad_flow = FlowField::zeros(width, src.height());

    for (idx, frag) in fwd.fragments.iter().enumerate() {
        let Some(f) = frag else { continue };
        let (px, py) = (idx % width, idx / width);
        let p = (flt::<T>(px as f64), flt::<T>(py as f64));
        let verts = lattice.triangle(f.triangle_id);
        let pos: Vec<(T, T)> = verts
            .iter()
            .map(|&v| {
                let (x, y) = lattice.vertex_pixel(v);
                let (dx, dy) = flow.at(x, y);
                (flt::<T>(x as f64) + dx, flt::<T>(y as f64) + dy)
            })
            .collect();

        // d weight / d vertex coordinate, coordinates ordered
        // (v0.x, v0.y, v1.x, v1.y, v2.x, v2.y).
        let jac = barycentric_jacobian(p, pos[0], pos[1], pos[2]);

        for c in 0..src.channels() {
            let up = upstream.at(px, py, c);
            if up == T::zero() {
                continue;
            }
            let mut sv = [T::zero(); 3];
            for (k, &vert) in verts.iter().enumerate() {
                let (sx, sy) = lattice.vertex_pixel(vert);
                sv[k] = src.at(sx, sy, c);
                grad_src.add_at(sx, sy, c, f.barycentric[k] * up);
            }
            for (k, &vert) in verts.iter().enumerate() {
                let (sx, sy) = lattice.vertex_pixel(vert);
                let mut gx = T::zero();
                let mut gy = T::zero();
                for j in 0..3 {
                    gx += sv[j] * jac[j][2 * k];
                    gy += sv[j] * jac[j][2 * k + 1];
                }
                let (odx, ody) = grad_flow.at(sx, sy);
                grad_flow.set(sx, sy, odx + up * gx, ody + up * gy);
            }
        }
    }

    Ok((grad_src, grad_flow))
}
