//! Variational self-supervised deblurring.
//!
//! Given two consecutive blurry observations, the solver jointly optimizes
//! two latent sharp images and the bidirectional flows between them by
//! safeguarded gradient descent, optionally plus small smoothness terms.
//! The descent acts on a Charbonnier-smoothed view of the photometric
//! residuals (the exact L1 terms are still what the iteration log reports);
//! a coarse-to-fine pyramid handles displacements larger than the pull-in
//! range of a single resolution.

use serde::Serialize;

use crate::backward_warp::{backward_warp, backward_warp_vjp};
use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::image::{Image, Mask};
use crate::losses::{LossGradients, LossReport};
use crate::occlusion::{reachability_mask, self_consistency_mask};
use crate::pyramid::{image_pyramid, resample_flow};
use crate::reblur::{reblur, reblur_vjp};
use crate::{flt, Float};

/// Smoothing constant of the Charbonnier penalty `sqrt(d^2 + e^2) - e`,
/// shared by the smoothness terms and the solver's smoothed view of the
/// data residuals.
const CHARBONNIER_EPS: f64 = 1e-3;
/// How often a rejected step may be halved before the iteration gives up.
const MAX_STEP_HALVINGS: u32 = 10;

/// Descent hyperparameters.
///
/// Step sizes are expressed per pixel: the loss gradients scale with the
/// reciprocal of the pixel count (the losses are masked means), so raw
/// gradients are multiplied by the element count before stepping. This keeps
/// one configuration usable across resolutions, which the pyramid relies on.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(bound = "T: Serialize")]
pub struct SolverConfig<T: Float> {
    /// Gradient steps per pyramid level.
    pub iterations: usize,
    pub step_size_image: T,
    pub step_size_flow: T,
    /// Weight of the forward-backward term, handed to the loss.
    pub lambda: T,
    /// Virtual frames per side in the reblur model.
    pub n: usize,
    /// Charbonnier smoothness weight on the latent images (0 disables).
    pub tv_weight_image: T,
    /// Charbonnier smoothness weight on the flows (0 disables).
    pub tv_weight_flow: T,
    /// Coarse-to-fine levels; clamped (with a warning) when the input is
    /// too small to halve that often.
    pub pyramid_levels: usize,
    /// Recorded in reports for provenance. The descent itself is
    /// deterministic and draws no random numbers.
    pub seed: u64,
}

impl<T: Float> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            iterations: 250,
            step_size_image: flt(0.01),
            step_size_flow: flt(8.0),
            lambda: flt(2.0),
            n: 4,
            tv_weight_image: flt(0.0),
            tv_weight_flow: flt(0.01),
            pyramid_levels: 3,
            seed: 0,
        }
    }
}

impl<T: Float> SolverConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        for (value, name) in [
            (self.step_size_image, "step_size_image"),
            (self.step_size_flow, "step_size_flow"),
        ] {
            if !(value > T::zero()) || !value.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be positive and finite"
                )));
            }
        }
        for (value, name) in [
            (self.lambda, "lambda"),
            (self.tv_weight_image, "tv_weight_image"),
            (self.tv_weight_flow, "tv_weight_flow"),
        ] {
            if !(value >= T::zero()) || !value.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be nonnegative and finite"
                )));
            }
        }
        if self.pyramid_levels == 0 {
            return Err(Error::InvalidConfig(
                "pyramid_levels must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Factor mapping the inter-frame flow onto one virtual-frame step,
    /// assuming the exposure spans the full frame interval.
    pub fn exposure_scale(&self) -> T {
        if self.n == 0 {
            T::zero()
        } else {
            T::one() / flt::<T>(2.0 * self.n as f64)
        }
    }
}

/// One recorded iteration: the exact loss terms plus the descent objective
/// (smoothed data terms plus weighted smoothness penalties) the safeguard
/// acts on.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(bound = "T: Serialize")]
pub struct IterationRecord<T: Float> {
    /// Pyramid level, 0 = finest.
    pub level: usize,
    #[serde(flatten)]
    pub report: LossReport<T>,
    pub objective: T,
}

/// Optimization state: the current latent estimates and flows plus the
/// iteration log.
#[derive(Debug, Clone)]
pub struct SolverState<T: Float> {
    pub latent_a: Image<T>,
    pub latent_b: Image<T>,
    pub flow_ab: FlowField<T>,
    pub flow_ba: FlowField<T>,
    /// One record per iteration; `objective` is non-increasing within each
    /// pyramid level by the safeguard's construction.
    pub loss_history: Vec<IterationRecord<T>>,
    pub warnings: Vec<String>,
    /// Pyramid level the state currently lives on (0 = finest).
    pub level: usize,
}

/// Starts from the observations themselves: latents are the blurry inputs
/// and both flows are zero, which makes the initial self-consistency
/// residual exactly zero regardless of `n`.
pub fn initialize<T: Float>(blur_a: &Image<T>, blur_b: &Image<T>) -> Result<SolverState<T>> {
    if blur_a.shape() != blur_b.shape() {
        return Err(Error::ShapeMismatch {
            context: "solver inputs",
            expected: blur_a.shape(),
            got: blur_b.shape(),
        });
    }
    Ok(SolverState {
        latent_a: blur_a.clone(),
        latent_b: blur_b.clone(),
        flow_ab: FlowField::zeros(blur_a.width(), blur_a.height()),
        flow_ba: FlowField::zeros(blur_a.width(), blur_a.height()),
        loss_history: Vec::new(),
        warnings: Vec::new(),
        level: 0,
    })
}

fn charbonnier_pair<T: Float>(d: T) -> (T, T) {
    let eps = flt::<T>(CHARBONNIER_EPS);
    let root = (d * d + eps * eps).sqrt();
    (root - eps, d / root)
}

/// Charbonnier total variation of an image, normalized per element, with
/// its gradient.
fn tv_image<T: Float>(img: &Image<T>) -> (T, Image<T>) {
    let (w, h, c) = img.shape();
    let norm = T::one() / flt::<T>((w * h * c) as f64);
    let mut value = T::zero();
    let mut grad = img.zeros_like();
    for ch in 0..c {
        for y in 0..h {
            for x in 0..w {
                let v = img.at(x, y, ch);
                if x + 1 < w {
                    let (e, de) = charbonnier_pair(img.at(x + 1, y, ch) - v);
                    value += e;
                    grad.add_at(x + 1, y, ch, de * norm);
                    grad.add_at(x, y, ch, -de * norm);
                }
                if y + 1 < h {
                    let (e, de) = charbonnier_pair(img.at(x, y + 1, ch) - v);
                    value += e;
                    grad.add_at(x, y + 1, ch, de * norm);
                    grad.add_at(x, y, ch, -de * norm);
                }
            }
        }
    }
    (value * norm, grad)
}

/// Same as [`tv_image`] for the two flow components.
fn tv_flow<T: Float>(flow: &FlowField<T>) -> (T, FlowField<T>) {
    let (w, h) = (flow.width(), flow.height());
    let norm = T::one() / flt::<T>((w * h * 2) as f64);
    let mut value = T::zero();
    let mut grad = flow.zeros_like();
    let add = |g: &mut FlowField<T>, x: usize, y: usize, comp: usize, v: T| {
        let (dx, dy) = g.at(x, y);
        if comp == 0 {
            g.set(x, y, dx + v, dy);
        } else {
            g.set(x, y, dx, dy + v);
        }
    };
    for comp in 0..2 {
        for y in 0..h {
            for x in 0..w {
                let v = pick(flow.at(x, y), comp);
                if x + 1 < w {
                    let (e, de) = charbonnier_pair(pick(flow.at(x + 1, y), comp) - v);
                    value += e;
                    add(&mut grad, x + 1, y, comp, de * norm);
                    add(&mut grad, x, y, comp, -de * norm);
                }
                if y + 1 < h {
                    let (e, de) = charbonnier_pair(pick(flow.at(x, y + 1), comp) - v);
                    value += e;
                    add(&mut grad, x, y + 1, comp, de * norm);
                    add(&mut grad, x, y, comp, -de * norm);
                }
            }
        }
    }
    (value * norm, grad)
}

#[inline]
fn pick<T: Float>((dx, dy): (T, T), comp: usize) -> T {
    if comp == 0 {
        dx
    } else {
        dy
    }
}

/// Exact and smoothed views of one masked data term, sharing a scan.
struct TermEval<T: Float> {
    /// Masked mean of `|a - b|`, matching the loss module's reports.
    exact: T,
    /// Masked mean of the Charbonnier penalty of the same residuals.
    smooth: T,
    count: usize,
    /// `d smooth / d a` times `weight`; the derivative against `b` is its
    /// negation. Masks are treated as constants.
    upstream: Option<Image<T>>,
}

fn masked_term<T: Float>(
    a: &Image<T>,
    b: &Image<T>,
    mask: &Mask<T>,
    weight: T,
    with_grads: bool,
) -> Result<TermEval<T>> {
    if a.shape() != b.shape() || mask.width() != a.width() || mask.height() != a.height() {
        return Err(Error::ShapeMismatch {
            context: "solver data term",
            expected: a.shape(),
            got: b.shape(),
        });
    }
    let denom = mask.sum() * flt::<T>(a.channels() as f64);
    let count = mask.data().iter().filter(|&&m| m > T::zero()).count();
    let mut grad = with_grads.then(|| a.zeros_like());
    if denom <= T::zero() {
        return Ok(TermEval {
            exact: T::zero(),
            smooth: T::zero(),
            count: 0,
            upstream: grad,
        });
    }
    let scale = weight / denom;
    let mut acc_exact = T::zero();
    let mut acc_smooth = T::zero();
    for y in 0..a.height() {
        for x in 0..a.width() {
            let m = mask.at(x, y);
            if m <= T::zero() {
                continue;
            }
            for c in 0..a.channels() {
                let r = a.at(x, y, c) - b.at(x, y, c);
                acc_exact += m * r.abs();
                let (e, de) = charbonnier_pair(r);
                acc_smooth += m * e;
                if let Some(g) = grad.as_mut() {
                    g.set(x, y, c, m * de * scale);
                }
            }
        }
    }
    Ok(TermEval {
        exact: acc_exact / denom,
        smooth: acc_smooth / denom,
        count,
        upstream: grad,
    })
}

struct Objective<T: Float> {
    report: LossReport<T>,
    /// The smoothed descent objective: Charbonnier data terms plus weighted
    /// smoothness penalties. This is what the safeguard compares.
    value: T,
    grads: Option<LossGradients<T>>,
}

/// Evaluates the objective the solver descends on.
///
/// The reported loss terms are the exact masked L1 means. The descent value
/// and gradients come from a Charbonnier smoothing of the same residuals:
/// exact L1 subgradients stall on the kink polytope (any move away from a
/// zero residual costs its full magnitude, which no step length avoids),
/// while the smoothed surface keeps a usable descent direction whose floor
/// shrinks quadratically.
fn evaluate_objective<T: Float>(
    latent_a: &Image<T>,
    latent_b: &Image<T>,
    flow_ab: &FlowField<T>,
    flow_ba: &FlowField<T>,
    blur_a: &Image<T>,
    blur_b: &Image<T>,
    config: &SolverConfig<T>,
    with_grads: bool,
) -> Result<Objective<T>> {
    let lambda = config.lambda;
    let one = T::one();
    let exposure = config.exposure_scale();

    let step_a = flow_ab.scaled(exposure);
    let step_b = flow_ba.scaled(exposure);
    let rb_a = reblur(latent_a, &step_a, config.n)?;
    let rb_b = reblur(latent_b, &step_b, config.n)?;
    let sc_a = self_consistency_mask(&step_a, config.n);
    let sc_b = self_consistency_mask(&step_b, config.n);
    let m_self_a = rb_a.mask.product(&sc_a)?;
    let m_self_b = rb_b.mask.product(&sc_b)?;
    let term_sa = masked_term(&rb_a.blurred, blur_a, &m_self_a, one, with_grads)?;
    let term_sb = masked_term(&rb_b.blurred, blur_b, &m_self_b, one, with_grads)?;

    let warped_a = backward_warp(latent_b, flow_ab)?;
    let warped_b = backward_warp(latent_a, flow_ba)?;
    let occ_a = reachability_mask(flow_ba);
    let occ_b = reachability_mask(flow_ab);
    let m_fw_a = occ_a.product(&warped_a.valid)?;
    let m_fw_b = occ_b.product(&warped_b.valid)?;
    let term_fa = masked_term(&warped_a.image, latent_a, &m_fw_a, lambda, with_grads)?;
    let term_fb = masked_term(&warped_b.image, latent_b, &m_fw_b, lambda, with_grads)?;

    let report = LossReport::assemble(
        term_sa.exact + term_sb.exact,
        term_fa.exact + term_fb.exact,
        lambda,
        [term_sa.count, term_sb.count, term_fa.count, term_fb.count],
    );
    let mut value =
        term_sa.smooth + term_sb.smooth + lambda * (term_fa.smooth + term_fb.smooth);

    let mut grads = if with_grads {
        let up_sa = term_sa.upstream.expect("gradients requested");
        let up_sb = term_sb.upstream.expect("gradients requested");
        let up_fa = term_fa.upstream.expect("gradients requested");
        let up_fb = term_fb.upstream.expect("gradients requested");

        let (d_latent_a_self, d_step_a) = reblur_vjp(latent_a, &step_a, config.n, &up_sa)?;
        let (d_latent_b_self, d_step_b) = reblur_vjp(latent_b, &step_b, config.n, &up_sb)?;
        let (d_latent_b_fw, d_flow_ab_fw) = backward_warp_vjp(latent_b, flow_ab, &up_fa)?;
        let (d_latent_a_fw, d_flow_ba_fw) = backward_warp_vjp(latent_a, flow_ba, &up_fb)?;

        let mut d_latent_a = d_latent_a_self;
        d_latent_a.add_scaled_in_place(&up_fa, -one);
        d_latent_a.add_scaled_in_place(&d_latent_a_fw, one);

        let mut d_latent_b = d_latent_b_self;
        d_latent_b.add_scaled_in_place(&up_fb, -one);
        d_latent_b.add_scaled_in_place(&d_latent_b_fw, one);

        let mut d_flow_ab = d_step_a;
        d_flow_ab.scale_in_place(exposure);
        d_flow_ab.add_scaled_in_place(&d_flow_ab_fw, one);

        let mut d_flow_ba = d_step_b;
        d_flow_ba.scale_in_place(exposure);
        d_flow_ba.add_scaled_in_place(&d_flow_ba_fw, one);

        Some(LossGradients {
            d_latent_a,
            d_latent_b,
            d_flow_ab,
            d_flow_ba,
        })
    } else {
        None
    };
    if config.tv_weight_image > T::zero() {
        for (latent, pickg) in [(latent_a, 0usize), (latent_b, 1)] {
            let (tv, gtv) = tv_image(latent);
            value += config.tv_weight_image * tv;
            if let Some(g) = grads.as_mut() {
                let target = if pickg == 0 {
                    &mut g.d_latent_a
                } else {
                    &mut g.d_latent_b
                };
                target.add_scaled_in_place(&gtv, config.tv_weight_image);
            }
        }
    }
    if config.tv_weight_flow > T::zero() {
        for (flow, pickg) in [(flow_ab, 0usize), (flow_ba, 1)] {
            let (tv, gtv) = tv_flow(flow);
            value += config.tv_weight_flow * tv;
            if let Some(g) = grads.as_mut() {
                let target = if pickg == 0 {
                    &mut g.d_flow_ab
                } else {
                    &mut g.d_flow_ba
                };
                target.add_scaled_in_place(&gtv, config.tv_weight_flow);
            }
        }
    }
    Ok(Objective {
        report,
        value,
        grads,
    })
}

/// Componentwise 3x3 median of a flow field, with clamped borders.
///
/// Per-pixel descent on aliased texture scatters individual flow vectors
/// into junk minima even when the field's consensus direction is downhill;
/// the median pulls outliers back to that consensus without smearing
/// motion boundaries the way a linear blur would.
fn median_flow<T: Float>(flow: &FlowField<T>) -> FlowField<T> {
    let (w, h) = (flow.width(), flow.height());
    let mut out = flow.clone();
    let mut dxs = [T::zero(); 9];
    let mut dys = [T::zero(); 9];
    for y in 0..h {
        for x in 0..w {
            let mut k = 0;
            for oy in -1i64..=1 {
                for ox in -1i64..=1 {
                    let sx = (x as i64 + ox).clamp(0, w as i64 - 1) as usize;
                    let sy = (y as i64 + oy).clamp(0, h as i64 - 1) as usize;
                    let (dx, dy) = flow.at(sx, sy);
                    dxs[k] = dx;
                    dys[k] = dy;
                    k += 1;
                }
            }
            let mid = |v: &mut [T; 9]| {
                v.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
                v[4]
            };
            out.set(x, y, mid(&mut dxs), mid(&mut dys));
        }
    }
    out
}

/// The spatial mean of a flow field.
fn mean_flow<T: Float>(flow: &FlowField<T>) -> (T, T) {
    let mut sx = T::zero();
    let mut sy = T::zero();
    for &v in flow.data().iter().step_by(2) {
        sx += v;
    }
    for &v in flow.data().iter().skip(1).step_by(2) {
        sy += v;
    }
    let n = flt::<T>((flow.width() * flow.height()) as f64);
    (sx / n, sy / n)
}

/// `flow` shifted everywhere by the constant `(dx, dy)`.
fn uniform_advance<T: Float>(flow: &FlowField<T>, dx: T, dy: T) -> FlowField<T> {
    let mut out = flow.clone();
    for y in 0..out.height() {
        for x in 0..out.width() {
            let (fx, fy) = out.at(x, y);
            out.set(x, y, fx + dx, fy + dy);
        }
    }
    out
}

/// One safeguarded gradient step against the given observations.
///
/// Evaluates the objective and its gradients at the current state, then
/// tries the configured step, halving up to 10 times until the objective
/// does not increase. At each scale three flow candidates are scored and
/// the best one taken: the raw per-element step, the step with a 3x3
/// median filter applied (repairs incoherent per-pixel motion), and a
/// uniform advance by the step's spatial mean (marches the whole field
/// down a shared valley that per-element moves cannot follow through
/// aliased texture). Every step starts from the full configured size, so
/// a variable pinned at its own floor cannot permanently strangle the
/// others. Returns `true` when an update was accepted; `false` means even
/// the smallest step failed and the state is unchanged (the iteration is
/// still recorded). Aborts with a diagnostic if any gradient is
/// non-finite.
pub fn step<T: Float>(
    state: &mut SolverState<T>,
    blur_a: &Image<T>,
    blur_b: &Image<T>,
    config: &SolverConfig<T>,
) -> Result<bool> {
    config.validate()?;
    let iteration = state.loss_history.len();
    let base = evaluate_objective(
        &state.latent_a,
        &state.latent_b,
        &state.flow_ab,
        &state.flow_ba,
        blur_a,
        blur_b,
        config,
        true,
    )?;
    let grads = base.grads.expect("gradients requested");
    if !grads.d_latent_a.is_finite()
        || !grads.d_latent_b.is_finite()
        || !grads.d_flow_ab.is_finite()
        || !grads.d_flow_ba.is_finite()
        || !base.value.is_finite()
    {
        return Err(Error::NonFiniteGradient {
            level: state.level,
            iteration,
        });
    }

    // The losses are means over elements, so their gradients carry a 1/size
    // factor; undo it to make the configured step sizes per-element.
    let (w, h, c) = state.latent_a.shape();
    let image_elems = flt::<T>((w * h * c) as f64);
    let flow_elems = flt::<T>((w * h * 2) as f64);

    let mut scale = T::one();
    for _ in 0..=MAX_STEP_HALVINGS {
        let mut latent_a = state.latent_a.clone();
        let mut latent_b = state.latent_b.clone();
        let mut flow_ab = state.flow_ab.clone();
        let mut flow_ba = state.flow_ba.clone();
        let s_img = scale * config.step_size_image * image_elems;
        let s_flow = scale * config.step_size_flow * flow_elems;
        latent_a.add_scaled_in_place(&grads.d_latent_a, -s_img);
        latent_b.add_scaled_in_place(&grads.d_latent_b, -s_img);
        flow_ab.add_scaled_in_place(&grads.d_flow_ab, -s_flow);
        flow_ba.add_scaled_in_place(&grads.d_flow_ba, -s_flow);
        let (mab_x, mab_y) = mean_flow(&grads.d_flow_ab);
        let (mba_x, mba_y) = mean_flow(&grads.d_flow_ba);
        let candidates = [
            (flow_ab.clone(), flow_ba.clone()),
            (median_flow(&flow_ab), median_flow(&flow_ba)),
            (
                uniform_advance(&state.flow_ab, -s_flow * mab_x, -s_flow * mab_y),
                uniform_advance(&state.flow_ba, -s_flow * mba_x, -s_flow * mba_y),
            ),
        ];
        let mut best: Option<(Objective<T>, FlowField<T>, FlowField<T>)> = None;
        for (trial_ab, trial_ba) in candidates {
            let trial = evaluate_objective(
                &latent_a, &latent_b, &trial_ab, &trial_ba, blur_a, blur_b, config, false,
            )?;
            if !trial.value.is_finite() {
                continue;
            }
            if best.as_ref().map_or(true, |(b, _, _)| trial.value < b.value) {
                best = Some((trial, trial_ab, trial_ba));
            }
        }
        if let Some((trial, trial_ab, trial_ba)) = best {
            if trial.value <= base.value {
                state.latent_a = latent_a;
                state.latent_b = latent_b;
                state.flow_ab = trial_ab;
                state.flow_ba = trial_ba;
                state.loss_history.push(IterationRecord {
                    level: state.level,
                    report: trial.report,
                    objective: trial.value,
                });
                return Ok(true);
            }
        }
        scale = scale * flt(0.5);
    }
    state.loss_history.push(IterationRecord {
        level: state.level,
        report: base.report,
        objective: base.value,
    });
    Ok(false)
}

/// The deepest pyramid usable for this size (levels below 4 pixels on a
/// side would leave too little structure to warp).
fn feasible_levels(width: usize, height: usize) -> usize {
    let mut levels = 1;
    let (mut w, mut h) = (width, height);
    while w >= 4 && h >= 4 {
        w = w.div_ceil(2);
        h = h.div_ceil(2);
        levels += 1;
    }
    levels - 1
}

/// Full coarse-to-fine run.
///
/// Each level reinitializes the latents from that level's blurry inputs and
/// carries the flows over (resampled and rescaled); the safeguarded descent
/// then runs `config.iterations` steps, stopping early once no step can
/// reduce the objective.
pub fn solve<T: Float>(
    blur_a: &Image<T>,
    blur_b: &Image<T>,
    config: &SolverConfig<T>,
) -> Result<SolverState<T>> {
    config.validate()?;
    if blur_a.shape() != blur_b.shape() {
        return Err(Error::ShapeMismatch {
            context: "solver inputs",
            expected: blur_a.shape(),
            got: blur_b.shape(),
        });
    }
    let mut warnings = Vec::new();
    if config.lambda == T::zero() {
        warnings.push(
            "lambda = 0: the forward-backward term is off, leaving the flow \
             unconstrained by the objective"
                .to_string(),
        );
    }
    let feasible = feasible_levels(blur_a.width(), blur_a.height()).max(1);
    let levels = if config.pyramid_levels > feasible {
        warnings.push(format!(
            "pyramid_levels clamped from {} to {} for a {}x{} input",
            config.pyramid_levels,
            feasible,
            blur_a.width(),
            blur_a.height()
        ));
        feasible
    } else {
        config.pyramid_levels
    };
    let pyr_a = image_pyramid(blur_a, levels)?;
    let pyr_b = image_pyramid(blur_b, levels)?;

    let mut state = initialize(&pyr_a[levels - 1], &pyr_b[levels - 1])?;
    state.level = levels - 1;
    state.warnings = warnings;
    for li in (0..levels).rev() {
        if li != levels - 1 {
            let (w, h, _) = pyr_a[li].shape();
            state.flow_ab = resample_flow(&state.flow_ab, w, h)?;
            state.flow_ba = resample_flow(&state.flow_ba, w, h)?;
            state.latent_a = pyr_a[li].clone();
            state.latent_b = pyr_b[li].clone();
            state.level = li;
        }
        for _ in 0..config.iterations {
            if !step(&mut state, &pyr_a[li], &pyr_b[li], config)? {
                break;
            }
        }
    }
    Ok(state)
}
