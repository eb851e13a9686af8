//! Blur synthesis: average of forward-warped virtual frames.
//!
//! A blurred exposure is modeled as the mean of `2N + 1` sharp virtual
//! frames placed symmetrically along per-pixel linear trajectories: frame
//! `i` warps the sharp image forward by `i * step_flow`. The result carries
//! a validity mask (the product of all per-frame coverage masks), since
//! border pixels lose contributions once part of the trajectory leaves the
//! frame.
//!
//! [`convolution_reblur_1d`] implements the tempting but physically wrong
//! alternative, a spatially uniform convolution; it agrees with the warp
//! model only when the flow itself is uniform.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::image::{Image, Mask};
use crate::lattice::build_lattice;
use crate::mesh_warp::{forward_warp_on, forward_warp_vjp_replay};
use crate::{flt, Float};

/// Exposure geometry for converting an inter-frame flow into the per-step
/// displacement of the virtual frames.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReblurConfig<T: Float> {
    /// Virtual frames on each side of the latent instant (`2n + 1` total).
    pub n: usize,
    /// Exposure time of one blurry observation, in seconds.
    pub exposure_tau: T,
    /// Time between the two latent instants, in seconds.
    pub frame_interval_dt: T,
}

impl<T: Float> ReblurConfig<T> {
    /// Validates `tau > 0` and `dt > 0`. Exposures longer than the frame
    /// interval are allowed; the scaling stays pure arithmetic.
    pub fn new(n: usize, exposure_tau: T, frame_interval_dt: T) -> Result<Self> {
        if !(exposure_tau > T::zero()) || !exposure_tau.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "exposure_tau must be positive and finite, got {exposure_tau}"
            )));
        }
        if !(frame_interval_dt > T::zero()) || !frame_interval_dt.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "frame_interval_dt must be positive and finite, got {frame_interval_dt}"
            )));
        }
        Ok(Self {
            n,
            exposure_tau,
            frame_interval_dt,
        })
    }

    /// Factor mapping an inter-frame flow onto one virtual-frame step:
    /// `tau / (2 n dt)`. Zero when `n == 0` (a single static frame).
    pub fn exposure_scale(&self) -> T {
        if self.n == 0 {
            T::zero()
        } else {
            self.exposure_tau / (flt::<T>(2.0 * self.n as f64) * self.frame_interval_dt)
        }
    }
}

/// Rescales an inter-frame flow into the per-virtual-frame step flow.
///
/// The trajectory covered during the exposure spans `tau / dt` of the
/// inter-frame displacement and is sampled by `2n` steps, so each step
/// moves by `tau / (2 n dt)` of the input flow.
pub fn scale_flow_to_exposure<T: Float>(
    inter_frame_flow: &FlowField<T>,
    config: &ReblurConfig<T>,
) -> FlowField<T> {
    if config.n == 0 {
        FlowField::zeros(inter_frame_flow.width(), inter_frame_flow.height())
    } else {
        inter_frame_flow.scaled(config.exposure_scale())
    }
}

/// Synthesized blur plus reliability information.
#[derive(Debug, Clone)]
pub struct ReblurResult<T: Float> {
    /// Mean of the `2n + 1` warped virtual frames.
    pub blurred: Image<T>,
    /// Elementwise product of all per-frame coverage masks (binary).
    pub mask: Mask<T>,
    /// Per-frame coverage masks ordered `i = -n ..= n`, when retained.
    pub virtual_coverages: Option<Vec<Mask<T>>>,
}

/// Renders the blur of `sharp` under per-step displacement `step_flow`.
///
/// `n == 0` degenerates to the identity: the blur of a static instant is
/// the image itself.
pub fn reblur<T: Float>(
    sharp: &Image<T>,
    step_flow: &FlowField<T>,
    n: usize,
) -> Result<ReblurResult<T>> {
    if step_flow.width() != sharp.width() || step_flow.height() != sharp.height() {
        return Err(Error::ShapeMismatch {
            context: "reblur",
            expected: (sharp.width(), sharp.height(), 2),
            got: (step_flow.width(), step_flow.height(), 2),
        });
    }
    if n == 0 {
        return Ok(ReblurResult {
            blurred: sharp.clone(),
            mask: Mask::ones(sharp.width(), sharp.height()),
            virtual_coverages: Some(vec![Mask::ones(sharp.width(), sharp.height())]),
        });
    }

    let lattice = build_lattice(sharp.width(), sharp.height())?;
    let mut acc = sharp.zeros_like();
    let mut mask = Mask::ones(sharp.width(), sharp.height());
    let mut coverages = Vec::with_capacity(2 * n + 1);
    for i in -(n as i64)..=n as i64 {
        let frame_flow = step_flow.scaled(flt(i as f64));
        let warped = forward_warp_on(sharp, &frame_flow, &lattice)?;
        acc.add_scaled_in_place(&warped.image, T::one());
        mask = mask.product(&warped.coverage)?;
        coverages.push(warped.coverage);
    }
    let inv = T::one() / flt::<T>((2 * n + 1) as f64);
    acc.scale_in_place(inv);
    Ok(ReblurResult {
        blurred: acc,
        mask,
        virtual_coverages: Some(coverages),
    })
}

/// Vector-Jacobian product of [`reblur`].
///
/// Returns `(grad_sharp, grad_step_flow)`:
/// `grad_sharp = (1 / (2n+1)) * sum_i grad_sharp_i` and
/// `grad_step_flow = (1 / (2n+1)) * sum_i i * grad_flow_i`, the chain rule
/// through each frame's displacement `i * step_flow`.
pub fn reblur_vjp<T: Float>(
    sharp: &Image<T>,
    step_flow: &FlowField<T>,
    n: usize,
    upstream: &Image<T>,
) -> Result<(Image<T>, FlowField<T>)> {
    if upstream.shape() != sharp.shape() {
        return Err(Error::ShapeMismatch {
            context: "reblur_vjp upstream",
            expected: sharp.shape(),
            got: upstream.shape(),
        });
    }
    if n == 0 {
        return Ok((
            upstream.clone(),
            FlowField::zeros(sharp.width(), sharp.height()),
        ));
    }
    let lattice = build_lattice(sharp.width(), sharp.height())?;
    let inv = T::one() / flt::<T>((2 * n + 1) as f64);
    let mut grad_sharp = sharp.zeros_like();
    let mut grad_step = FlowField::zeros(sharp.width(), sharp.height());
    for i in -(n as i64)..=n as i64 {
        let frame_flow = step_flow.scaled(flt(i as f64));
        let fwd = forward_warp_on(sharp, &frame_flow, &lattice)?;
        let (gs, gf) = forward_warp_vjp_replay(sharp, &frame_flow, &lattice, &fwd, upstream)?;
        grad_sharp.add_scaled_in_place(&gs, inv);
        grad_step.add_scaled_in_place(&gf, inv * flt(i as f64));
    }
    Ok((grad_sharp, grad_step))
}

/// Spatially uniform 1D box blur `B_i = mean(I[i-h ..= i+h])` with
/// replicated borders.
///
/// This is the convolution picture of motion blur. It cannot express a
/// spatially varying trajectory: content never spreads beyond the fixed
/// window, which is exactly where it diverges from the warp model.
pub fn convolution_reblur_1d<T: Float>(signal: &[T], halfwidth: usize) -> Vec<T> {
    let len = signal.len();
    if len == 0 {
        return Vec::new();
    }
    let inv = T::one() / flt::<T>((2 * halfwidth + 1) as f64);
    (0..len)
        .map(|i| {
            let mut sum = T::zero();
            for j in -(halfwidth as i64)..=halfwidth as i64 {
                let idx = (i as i64 + j).clamp(0, len as i64 - 1) as usize;
                sum += signal[idx];
            }
            sum * inv
        })
        .collect()
}
