//! Self-supervised photometric losses.
//!
//! Two blurry observations of the same scene constrain a sharp latent pair
//! plus bidirectional flow twice over: reblurring each latent along its
//! scaled flow must reproduce its observation (self-consistency), and each
//! latent backward-warped by the inter-frame flow must match the other
//! (forward-backward consistency). Both terms are masked mean absolute
//! errors; masks are treated as constants (detached) when differentiating,
//! and the L1 subgradient at zero residual is zero.

use serde::Serialize;

use crate::backward_warp::{backward_warp, backward_warp_vjp};
use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::image::{Image, Mask};
use crate::occlusion::{reachability_mask, self_consistency_mask};
use crate::reblur::{reblur, reblur_vjp, ReblurResult};
use crate::{flt, Float};

/// Weighting of the loss terms.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LossConfig<T: Float> {
    /// Weight of the forward-backward consistency term.
    pub lambda: T,
}

impl<T: Float> Default for LossConfig<T> {
    fn default() -> Self {
        Self { lambda: flt(2.0) }
    }
}

/// Pixels participating in each masked term, ordered
/// `(self_a, self_b, fwbw_a, fwbw_b)`.
pub type MaskedPixelCounts = [usize; 4];

/// Loss values of one evaluation.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(bound = "T: Serialize")]
pub struct LossReport<T: Float> {
    pub l_self: T,
    pub l_fwbw: T,
    /// Exactly `l_self + lambda * l_fwbw`.
    pub total: T,
    pub masked_pixel_counts: MaskedPixelCounts,
}

impl<T: Float> LossReport<T> {
    pub(crate) fn assemble(
        l_self: T,
        l_fwbw: T,
        lambda: T,
        masked_pixel_counts: MaskedPixelCounts,
    ) -> Self {
        Self {
            l_self,
            l_fwbw,
            total: l_self + lambda * l_fwbw,
            masked_pixel_counts,
        }
    }
}

/// Everything one loss evaluation needs, borrowed from the caller.
#[derive(Debug, Clone, Copy)]
pub struct LossInputs<'a, T: Float> {
    /// Observed blurry pair.
    pub blur_a: &'a Image<T>,
    pub blur_b: &'a Image<T>,
    /// Current sharp estimates at the two latent instants.
    pub latent_a: &'a Image<T>,
    pub latent_b: &'a Image<T>,
    /// Inter-frame flows between the latent instants.
    pub flow_ab: &'a FlowField<T>,
    pub flow_ba: &'a FlowField<T>,
    /// Virtual frames per side in the reblur model.
    pub n: usize,
    /// Factor mapping an inter-frame flow onto a per-step flow
    /// (see [`crate::reblur::ReblurConfig::exposure_scale`]).
    pub exposure_scale: T,
}

impl<'a, T: Float> LossInputs<'a, T> {
    fn validate(&self) -> Result<()> {
        let shape = self.blur_a.shape();
        for (img, context) in [
            (self.blur_b, "loss inputs blur_b"),
            (self.latent_a, "loss inputs latent_a"),
            (self.latent_b, "loss inputs latent_b"),
        ] {
            if img.shape() != shape {
                return Err(Error::ShapeMismatch {
                    context,
                    expected: shape,
                    got: img.shape(),
                });
            }
        }
        for (flow, context) in [
            (self.flow_ab, "loss inputs flow_ab"),
            (self.flow_ba, "loss inputs flow_ba"),
        ] {
            if flow.width() != shape.0 || flow.height() != shape.1 {
                return Err(Error::ShapeMismatch {
                    context,
                    expected: (shape.0, shape.1, 2),
                    got: (flow.width(), flow.height(), 2),
                });
            }
        }
        Ok(())
    }
}

/// Masked mean absolute difference.
///
/// `sum_p mask(p) * sum_c |a - b|` divided by `(sum_p mask(p)) * channels`;
/// zero when the mask is empty. Resolution-independent: a loss of `x` means
/// an average per-channel residual of `x` over the kept pixels.
pub fn masked_l1<T: Float>(a: &Image<T>, b: &Image<T>, mask: &Mask<T>) -> Result<T> {
    let (value, _) = masked_l1_with_count(a, b, mask)?;
    Ok(value)
}

fn masked_l1_with_count<T: Float>(
    a: &Image<T>,
    b: &Image<T>,
    mask: &Mask<T>,
) -> Result<(T, usize)> {
    check_masked_shapes(a, b, mask, "masked_l1")?;
    let denom = mask.sum() * flt::<T>(a.channels() as f64);
    let count = mask.data().iter().filter(|&&m| m > T::zero()).count();
    if denom <= T::zero() {
        return Ok((T::zero(), 0));
    }
    let mut acc = T::zero();
    for y in 0..a.height() {
        for x in 0..a.width() {
            let m = mask.at(x, y);
            if m <= T::zero() {
                continue;
            }
            for c in 0..a.channels() {
                acc += m * (a.at(x, y, c) - b.at(x, y, c)).abs();
            }
        }
    }
    Ok((acc / denom, count))
}

/// Gradient of [`masked_l1`] with respect to `a` (the one for `b` is its
/// negation), scaled by `upstream`.
fn masked_l1_vjp<T: Float>(
    a: &Image<T>,
    b: &Image<T>,
    mask: &Mask<T>,
    upstream: T,
) -> Result<Image<T>> {
    check_masked_shapes(a, b, mask, "masked_l1_vjp")?;
    let denom = mask.sum() * flt::<T>(a.channels() as f64);
    let mut grad = a.zeros_like();
    if denom <= T::zero() {
        return Ok(grad);
    }
    let scale = upstream / denom;
    for y in 0..a.height() {
        for x in 0..a.width() {
            let m = mask.at(x, y);
            if m <= T::zero() {
                continue;
            }
            for c in 0..a.channels() {
                let r = a.at(x, y, c) - b.at(x, y, c);
                let s = if r > T::zero() {
                    T::one()
                } else if r < T::zero() {
                    -T::one()
                } else {
                    T::zero()
                };
                grad.set(x, y, c, m * s * scale);
            }
        }
    }
    Ok(grad)
}

fn check_masked_shapes<T: Float>(
    a: &Image<T>,
    b: &Image<T>,
    mask: &Mask<T>,
    context: &'static str,
) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            context,
            expected: a.shape(),
            got: b.shape(),
        });
    }
    if mask.width() != a.width() || mask.height() != a.height() {
        return Err(Error::ShapeMismatch {
            context,
            expected: (a.width(), a.height(), 1),
            got: (mask.width(), mask.height(), 1),
        });
    }
    Ok(())
}

/// Self-consistency term: each reblurred latent against its observation.
///
/// Each side is masked by the reblur coverage product times the
/// transport-reachability mask of its step flow, so border losses and
/// disocclusions are excluded.
pub fn loss_self<T: Float>(
    reblur_a: &ReblurResult<T>,
    blur_a: &Image<T>,
    consistency_a: &Mask<T>,
    reblur_b: &ReblurResult<T>,
    blur_b: &Image<T>,
    consistency_b: &Mask<T>,
) -> Result<T> {
    let m_a = reblur_a.mask.product(consistency_a)?;
    let m_b = reblur_b.mask.product(consistency_b)?;
    Ok(masked_l1(&reblur_a.blurred, blur_a, &m_a)? + masked_l1(&reblur_b.blurred, blur_b, &m_b)?)
}

/// Forward-backward consistency: each latent against the other warped over.
pub fn loss_fwbw<T: Float>(
    latent_a: &Image<T>,
    latent_b: &Image<T>,
    flow_ab: &FlowField<T>,
    flow_ba: &FlowField<T>,
    occlusion_a: &Mask<T>,
    occlusion_b: &Mask<T>,
) -> Result<T> {
    let warped_a = backward_warp(latent_b, flow_ab)?;
    let warped_b = backward_warp(latent_a, flow_ba)?;
    let m_a = occlusion_a.product(&warped_a.valid)?;
    let m_b = occlusion_b.product(&warped_b.valid)?;
    Ok(masked_l1(&warped_a.image, latent_a, &m_a)?
        + masked_l1(&warped_b.image, latent_b, &m_b)?)
}

/// Gradients of the total loss with respect to the optimizable inputs.
#[derive(Debug, Clone)]
pub struct LossGradients<T: Float> {
    pub d_latent_a: Image<T>,
    pub d_latent_b: Image<T>,
    pub d_flow_ab: FlowField<T>,
    pub d_flow_ba: FlowField<T>,
}

/// Evaluates `l_self + lambda * l_fwbw` with all masks.
pub fn total_loss<T: Float>(
    inputs: &LossInputs<'_, T>,
    config: &LossConfig<T>,
) -> Result<LossReport<T>> {
    let (report, _) = evaluate(inputs, config, false)?;
    Ok(report)
}

/// Evaluates the total loss and its gradients in one pass.
pub fn total_loss_vjp<T: Float>(
    inputs: &LossInputs<'_, T>,
    config: &LossConfig<T>,
) -> Result<(LossReport<T>, LossGradients<T>)> {
    let (report, grads) = evaluate(inputs, config, true)?;
    Ok((report, grads.expect("gradients requested")))
}

fn evaluate<T: Float>(
    inputs: &LossInputs<'_, T>,
    config: &LossConfig<T>,
    with_grads: bool,
) -> Result<(LossReport<T>, Option<LossGradients<T>>)> {
    inputs.validate()?;
    let lambda = config.lambda;
    let one = T::one();

    // Self-consistency paths.
    let step_a = inputs.flow_ab.scaled(inputs.exposure_scale);
    let step_b = inputs.flow_ba.scaled(inputs.exposure_scale);
    let rb_a = reblur(inputs.latent_a, &step_a, inputs.n)?;
    let rb_b = reblur(inputs.latent_b, &step_b, inputs.n)?;
    let sc_a = self_consistency_mask(&step_a, inputs.n);
    let sc_b = self_consistency_mask(&step_b, inputs.n);
    let m_self_a = rb_a.mask.product(&sc_a)?;
    let m_self_b = rb_b.mask.product(&sc_b)?;
    let (s_a, count_sa) = masked_l1_with_count(&rb_a.blurred, inputs.blur_a, &m_self_a)?;
    let (s_b, count_sb) = masked_l1_with_count(&rb_b.blurred, inputs.blur_b, &m_self_b)?;
    let l_self = s_a + s_b;

    // Forward-backward paths.
    let warped_a = backward_warp(inputs.latent_b, inputs.flow_ab)?;
    let warped_b = backward_warp(inputs.latent_a, inputs.flow_ba)?;
    let occ_a = reachability_mask(inputs.flow_ba);
    let occ_b = reachability_mask(inputs.flow_ab);
    let m_fw_a = occ_a.product(&warped_a.valid)?;
    let m_fw_b = occ_b.product(&warped_b.valid)?;
    let (f_a, count_fa) = masked_l1_with_count(&warped_a.image, inputs.latent_a, &m_fw_a)?;
    let (f_b, count_fb) = masked_l1_with_count(&warped_b.image, inputs.latent_b, &m_fw_b)?;
    let l_fwbw = f_a + f_b;

    let report = LossReport::assemble(
        l_self,
        l_fwbw,
        lambda,
        [count_sa, count_sb, count_fa, count_fb],
    );
    if !with_grads {
        return Ok((report, None));
    }

    // Self terms: d/d reblurred, chained through the reblur model. The step
    // flows are `exposure_scale * flow`, so flow gradients pick up that
    // factor. Masks are detached.
    let up_sa = masked_l1_vjp(&rb_a.blurred, inputs.blur_a, &m_self_a, one)?;
    let up_sb = masked_l1_vjp(&rb_b.blurred, inputs.blur_b, &m_self_b, one)?;
    let (d_latent_a_self, d_step_a) = reblur_vjp(inputs.latent_a, &step_a, inputs.n, &up_sa)?;
    let (d_latent_b_self, d_step_b) = reblur_vjp(inputs.latent_b, &step_b, inputs.n, &up_sb)?;

    // Forward-backward terms. Each masked_l1 differentiates both arguments:
    // +g against the warped image (routed through the backward warp) and -g
    // against the reference latent.
    let up_fa = masked_l1_vjp(&warped_a.image, inputs.latent_a, &m_fw_a, lambda)?;
    let up_fb = masked_l1_vjp(&warped_b.image, inputs.latent_b, &m_fw_b, lambda)?;
    let (d_latent_b_fw, d_flow_ab_fw) = backward_warp_vjp(inputs.latent_b, inputs.flow_ab, &up_fa)?;
    let (d_latent_a_fw, d_flow_ba_fw) = backward_warp_vjp(inputs.latent_a, inputs.flow_ba, &up_fb)?;

    let mut d_latent_a = d_latent_a_self;
    d_latent_a.add_scaled_in_place(&up_fa, -one);
    d_latent_a.add_scaled_in_place(&d_latent_a_fw, one);

    let mut d_latent_b = d_latent_b_self;
    d_latent_b.add_scaled_in_place(&up_fb, -one);
    d_latent_b.add_scaled_in_place(&d_latent_b_fw, one);

    let mut d_flow_ab = d_step_a;
    d_flow_ab.scale_in_place(inputs.exposure_scale);
    d_flow_ab.add_scaled_in_place(&d_flow_ab_fw, one);

    let mut d_flow_ba = d_step_b;
    d_flow_ba.scale_in_place(inputs.exposure_scale);
    d_flow_ba.add_scaled_in_place(&d_flow_ba_fw, one);

    Ok((
        report,
        Some(LossGradients {
            d_latent_a,
            d_latent_b,
            d_flow_ab,
            d_flow_ba,
        }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, seed: u64) -> Image<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..w * h).map(|_| rng.gen_range(0.0..1.0)).collect();
        Image::from_vec(w, h, 1, data).unwrap()
    }

    fn random_flow(w: usize, h: usize, amp: f64, seed: u64) -> FlowField<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..w * h * 2).map(|_| rng.gen_range(-amp..amp)).collect();
        FlowField::from_vec(w, h, data).unwrap()
    }

    #[test]
    fn masked_l1_frozen_cases() {
        let ones = Image::constant(4, 4, 1, 1.0f64).unwrap();
        let zeros = Image::new(4, 4, 1).unwrap();
        let full = Mask::ones(4, 4);
        assert_eq!(masked_l1(&ones, &ones, &full).unwrap(), 0.0);
        assert_eq!(masked_l1(&ones, &zeros, &full).unwrap(), 1.0);

        // Mask on half the pixels; the normalization keeps the mean at 1.
        let mut half = Mask::zeros(4, 4);
        for y in 0..4 {
            for x in 0..2 {
                half.set(x, y, 1.0);
            }
        }
        assert_eq!(masked_l1(&ones, &zeros, &half).unwrap(), 1.0);

        let empty = Mask::zeros(4, 4);
        assert_eq!(masked_l1(&ones, &zeros, &empty).unwrap(), 0.0);
    }

    #[test]
    fn masked_l1_is_symmetric_and_nonnegative() {
        let a = random_image(5, 5, 1);
        let b = random_image(5, 5, 2);
        let m = Mask::ones(5, 5);
        let ab = masked_l1(&a, &b, &m).unwrap();
        let ba = masked_l1(&b, &a, &m).unwrap();
        assert!(ab >= 0.0);
        assert_eq!(ab, ba);
    }

    #[test]
    fn masked_l1_rejects_shape_mismatch() {
        let a = random_image(5, 5, 3);
        let b = random_image(4, 5, 4);
        assert!(masked_l1(&a, &b, &Mask::ones(5, 5)).is_err());
        assert!(masked_l1(&a, &a, &Mask::ones(4, 5)).is_err());
    }

    #[test]
    fn report_assembly_arithmetic() {
        let r = LossReport::assemble(0.1f64, 0.05, 2.0, [1, 2, 3, 4]);
        assert_eq!(r.total, 0.2);
        assert_eq!(r.masked_pixel_counts, [1, 2, 3, 4]);
    }

    #[test]
    fn perfectly_explained_inputs_have_zero_loss_and_zero_gradients() {
        // Observations are the model's own renderings of the latents, so
        // every residual is exactly zero and the subgradient convention
        // sign(0) = 0 makes every gradient exactly zero. (Averaging the
        // virtual frames rounds in the last ulp, so the latents themselves
        // would NOT reproduce the renderings bitwise.)
        let latent_a = random_image(8, 8, 5);
        let latent_b = latent_a.clone();
        let flow = FlowField::zeros(8, 8);
        let step = flow.scaled(0.25);
        let blur_a = reblur(&latent_a, &step, 2).unwrap().blurred;
        let blur_b = reblur(&latent_b, &step, 2).unwrap().blurred;
        let inputs = LossInputs {
            blur_a: &blur_a,
            blur_b: &blur_b,
            latent_a: &latent_a,
            latent_b: &latent_b,
            flow_ab: &flow,
            flow_ba: &flow,
            n: 2,
            exposure_scale: 0.25,
        };
        let (report, grads) = total_loss_vjp(&inputs, &LossConfig::default()).unwrap();
        assert_eq!(report.l_self, 0.0);
        assert_eq!(report.l_fwbw, 0.0);
        assert_eq!(report.total, 0.0);
        assert!(grads.d_latent_a.data().iter().all(|&v| v == 0.0));
        assert!(grads.d_latent_b.data().iter().all(|&v| v == 0.0));
        assert!(grads.d_flow_ab.data().iter().all(|&v| v == 0.0));
        assert!(grads.d_flow_ba.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn shifted_pair_with_true_flow_has_zero_loss() {
        // latent_b is latent_a shifted one pixel right; flows are exact.
        let base = random_image(9, 6, 7);
        let mut b_data = Vec::new();
        for y in 0..6 {
            for x in 0..9usize {
                let sx = if x == 0 { 0 } else { x - 1 };
                b_data.push(base.at(sx, y, 0));
            }
        }
        let latent_b = Image::from_vec(9, 6, 1, b_data).unwrap();
        let flow_ab = FlowField::constant(9, 6, 1.0, 0.0);
        let flow_ba = FlowField::constant(9, 6, -1.0, 0.0);

        let n = 2;
        let scale = 0.25;
        let blur_a = reblur(&base, &flow_ab.scaled(scale), n).unwrap().blurred;
        let blur_b = reblur(&latent_b, &flow_ba.scaled(scale), n).unwrap().blurred;

        let inputs = LossInputs {
            blur_a: &blur_a,
            blur_b: &blur_b,
            latent_a: &base,
            latent_b: &latent_b,
            flow_ab: &flow_ab,
            flow_ba: &flow_ba,
            n,
            exposure_scale: scale,
        };
        let report = total_loss(&inputs, &LossConfig::default()).unwrap();
        assert_eq!(report.l_self, 0.0);
        // The warped comparisons only see truly corresponding pixels; the
        // duplicated border column is masked by validity/occlusion.
        assert!(report.l_fwbw < 1e-12, "l_fwbw = {}", report.l_fwbw);
    }

    #[test]
    fn lambda_weighting_and_zero_lambda() {
        let blur_a = random_image(8, 8, 11);
        let blur_b = random_image(8, 8, 12);
        let latent_a = random_image(8, 8, 13);
        let latent_b = random_image(8, 8, 14);
        let flow_ab = random_flow(8, 8, 0.7, 15);
        let flow_ba = random_flow(8, 8, 0.7, 16);
        let inputs = LossInputs {
            blur_a: &blur_a,
            blur_b: &blur_b,
            latent_a: &latent_a,
            latent_b: &latent_b,
            flow_ab: &flow_ab,
            flow_ba: &flow_ba,
            n: 1,
            exposure_scale: 0.5,
        };
        let r2 = total_loss(&inputs, &LossConfig { lambda: 2.0 }).unwrap();
        assert_eq!(r2.total, r2.l_self + 2.0 * r2.l_fwbw);
        assert!(r2.l_self > 0.0 && r2.l_fwbw > 0.0);

        let r0 = total_loss(&inputs, &LossConfig { lambda: 0.0 }).unwrap();
        assert_eq!(r0.total, r0.l_self);
        assert_eq!(r0.l_self, r2.l_self);
        assert_eq!(r0.l_fwbw, r2.l_fwbw);
    }

    #[test]
    fn composite_matches_public_term_ops() {
        let blur_a = random_image(8, 8, 21);
        let blur_b = random_image(8, 8, 22);
        let latent_a = random_image(8, 8, 23);
        let latent_b = random_image(8, 8, 24);
        let flow_ab = random_flow(8, 8, 0.9, 25);
        let flow_ba = random_flow(8, 8, 0.9, 26);
        let n = 2;
        let scale = 0.25;

        let step_a = flow_ab.scaled(scale);
        let step_b = flow_ba.scaled(scale);
        let rb_a = reblur(&latent_a, &step_a, n).unwrap();
        let rb_b = reblur(&latent_b, &step_b, n).unwrap();
        let l_self = loss_self(
            &rb_a,
            &blur_a,
            &self_consistency_mask(&step_a, n),
            &rb_b,
            &blur_b,
            &self_consistency_mask(&step_b, n),
        )
        .unwrap();
        let l_fwbw = loss_fwbw(
            &latent_a,
            &latent_b,
            &flow_ab,
            &flow_ba,
            &reachability_mask(&flow_ba),
            &reachability_mask(&flow_ab),
        )
        .unwrap();

        let inputs = LossInputs {
            blur_a: &blur_a,
            blur_b: &blur_b,
            latent_a: &latent_a,
            latent_b: &latent_b,
            flow_ab: &flow_ab,
            flow_ba: &flow_ba,
            n,
            exposure_scale: scale,
        };
        let report = total_loss(&inputs, &LossConfig::default()).unwrap();
        assert_eq!(report.l_self, l_self);
        assert_eq!(report.l_fwbw, l_fwbw);
        assert_eq!(report.total, l_self + 2.0 * l_fwbw);
    }

    #[test]
    fn perturbing_a_masked_observation_pixel_leaves_total_unchanged() {
        // Constant rightward step flow of 1 px with n = 1 leaves the frame
        // border unreached, so the observation there is excluded from the
        // self term; observations appear nowhere else.
        let latent_a = random_image(8, 8, 31);
        let latent_b = random_image(8, 8, 32);
        let blur_a = random_image(8, 8, 33);
        let blur_b = random_image(8, 8, 34);
        let flow_ab = FlowField::constant(8, 8, 4.0, 0.0);
        let flow_ba = FlowField::constant(8, 8, -4.0, 0.0);
        let n = 1;
        let scale = 0.25;

        let sc_a = self_consistency_mask(&flow_ab.scaled(scale), n);
        assert_eq!(sc_a.at(0, 3), 0.0, "expected a vacated border pixel");

        let eval = |ba: &Image<f64>| {
            let inputs = LossInputs {
                blur_a: ba,
                blur_b: &blur_b,
                latent_a: &latent_a,
                latent_b: &latent_b,
                flow_ab: &flow_ab,
                flow_ba: &flow_ba,
                n,
                exposure_scale: scale,
            };
            total_loss(&inputs, &LossConfig::default()).unwrap().total
        };
        let before = eval(&blur_a);
        let mut data = blur_a.data().to_vec();
        data[3 * 8] = 0.123; // pixel (0, 3)
        let perturbed = Image::from_vec(8, 8, 1, data).unwrap();
        let after = eval(&perturbed);
        assert_eq!(before, after);
    }

    #[test]
    fn gradient_descent_direction_reduces_loss() {
        let blur_a = random_image(8, 8, 41);
        let blur_b = random_image(8, 8, 42);
        let mut latent_a = random_image(8, 8, 43);
        let mut latent_b = random_image(8, 8, 44);
        let mut flow_ab = random_flow(8, 8, 0.5, 45);
        let mut flow_ba = random_flow(8, 8, 0.5, 46);
        let config = LossConfig::default();
        let step = 1e-4;

        let read = |la: &Image<f64>, lb: &Image<f64>, fab: &FlowField<f64>, fba: &FlowField<f64>| {
            let inputs = LossInputs {
                blur_a: &blur_a,
                blur_b: &blur_b,
                latent_a: la,
                latent_b: lb,
                flow_ab: fab,
                flow_ba: fba,
                n: 1,
                exposure_scale: 0.5,
            };
            total_loss_vjp(&inputs, &config).unwrap()
        };
        let (before, grads) = read(&latent_a, &latent_b, &flow_ab, &flow_ba);
        latent_a.add_scaled_in_place(&grads.d_latent_a, -step);
        latent_b.add_scaled_in_place(&grads.d_latent_b, -step);
        flow_ab.add_scaled_in_place(&grads.d_flow_ab, -step);
        flow_ba.add_scaled_in_place(&grads.d_flow_ba, -step);
        let (after, _) = read(&latent_a, &latent_b, &flow_ab, &flow_ba);
        assert!(
            after.total <= before.total + 1e-12,
            "descent step increased the loss: {} -> {}",
            before.total,
            after.total
        );
    }
}
