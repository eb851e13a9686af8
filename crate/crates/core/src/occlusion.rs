//! Occlusion reasoning by forward mass transport.
//!
//! A pixel of the target view is considered reached when, splatting one
//! unit of mass from every source pixel along the flow with bilinear
//! weights, enough mass arrives in its cell. Pixels nobody reaches were
//! vacated (disoccluded): the mesh warp still paints them with stretched
//! triangles, but their content is invented, so losses must ignore them.

use crate::flow::FlowField;
use crate::image::Mask;
use crate::{flt, Float};

/// Minimum splatted density for a pixel to count as reached.
///
/// One quarter of a unit: a source pixel landing exactly on a cell corner
/// still marks all four neighbors as reached.
pub const REACHABILITY_THRESHOLD: f64 = 0.25;

/// Total bilinearly splatted density per target pixel.
fn splat_density<T: Float>(flow: &FlowField<T>) -> Vec<T> {
    let width = flow.width();
    let height = flow.height();
    let mut density = vec![T::zero(); width * height];
    let one = T::one();
    // Sequential accumulation: splat addition order is part of the result.
    for y in 0..height {
        for x in 0..width {
            let (dx, dy) = flow.at(x, y);
            let tx = T::from_usize(x).unwrap() + dx;
            let ty = T::from_usize(y).unwrap() + dy;
            if !tx.is_finite() || !ty.is_finite() {
                continue;
            }
            let fx0 = tx.floor();
            let fy0 = ty.floor();
            let fx = tx - fx0;
            let fy = ty - fy0;
            let x0 = fx0.to_f64().unwrap() as i64;
            let y0 = fy0.to_f64().unwrap() as i64;
            let mut deposit = |px: i64, py: i64, w: T| {
                if w > T::zero() && (0..width as i64).contains(&px) && (0..height as i64).contains(&py)
                {
                    density[py as usize * width + px as usize] += w;
                }
            };
            deposit(x0, y0, (one - fx) * (one - fy));
            deposit(x0 + 1, y0, fx * (one - fy));
            deposit(x0, y0 + 1, (one - fx) * fy);
            deposit(x0 + 1, y0 + 1, fx * fy);
        }
    }
    density
}

/// Binary mask of pixels reachable by following `flow_from_other` out of
/// the other view.
///
/// To mask view `a`, pass the flow that leaves view `b` (i.e. `flow_ba`):
/// wherever its mass lands densely enough, view `a` is observed rather than
/// disoccluded.
pub fn reachability_mask<T: Float>(flow_from_other: &FlowField<T>) -> Mask<T> {
    let width = flow_from_other.width();
    let height = flow_from_other.height();
    let density = splat_density(flow_from_other);
    let threshold = flt::<T>(REACHABILITY_THRESHOLD);
    let mut mask = Mask::zeros(width, height);
    for y in 0..height {
        for x in 0..width {
            if density[y * width + x] >= threshold {
                mask.set(x, y, T::one());
            }
        }
    }
    mask
}

/// Product of the reachability masks of all `2n + 1` virtual frames of one
/// exposure: frame `i` displaces by `i * step_flow`.
///
/// A reblurred pixel is trustworthy only if every virtual frame actually
/// transported content onto it; `n = 0` (or zero flow) keeps everything.
pub fn self_consistency_mask<T: Float>(step_flow: &FlowField<T>, n: usize) -> Mask<T> {
    let mut mask = Mask::ones(step_flow.width(), step_flow.height());
    if n == 0 {
        return mask;
    }
    for i in -(n as i64)..=n as i64 {
        if i == 0 {
            continue; // identity transport reaches every pixel
        }
        let frame_flow = step_flow.scaled(flt(i as f64));
        mask = mask
            .product(&reachability_mask(&frame_flow))
            .expect("masks share the flow grid");
    }
    mask
}
