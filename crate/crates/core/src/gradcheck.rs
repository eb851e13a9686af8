//! Finite-difference verification of every analytic vector-Jacobian product.
//!
//! Each suite draws seeded random instances, projects the operation onto a
//! scalar through a fixed random covector, and compares the analytic VJP
//! against central differences coordinate by coordinate. Coordinates whose
//! perturbation crosses a non-smooth surface (a fragment-assignment flip, a
//! bilinear integer crossing, a mask change, an L1 sign change) are excluded
//! before comparison: the true derivative does not exist there, so neither
//! side is meaningful. A suite passes when at least 99% of the surviving
//! coordinates agree within its tolerance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::backward_warp::{backward_warp, backward_warp_vjp};
use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::image::Image;
use crate::losses::{total_loss, total_loss_vjp, LossConfig, LossInputs};
use crate::mesh_warp::{forward_warp, forward_warp_vjp, ForwardWarpResult};
use crate::reblur::{reblur, reblur_vjp};

/// Instances are this many pixels on a side.
const SIDE: usize = 6;
/// Central-difference step on image intensities.
const H_IMAGE: f64 = 1e-3;
/// Central-difference step on flow components.
const H_FLOW: f64 = 1e-4;
/// Tolerance for the smooth warp operations.
const TOL_WARP: f64 = 1e-3;
/// Tolerance for the L1-based total loss.
const TOL_LOSS: f64 = 1e-2;
/// Residuals smaller than this sit too close to the L1 kink to probe.
const RESIDUAL_KINK: f64 = 1e-3;
/// Bilinear samples closer than this to an integer coordinate are excluded.
const INTEGER_KINK: f64 = 1e-2;
/// Fraction of surviving coordinates that must agree.
const PASS_FRACTION: f64 = 0.99;
/// Gradients with both sides below this magnitude are compared absolutely.
const SMALL_SCALE: f64 = 1e-4;
const SMALL_ABS: f64 = 1e-6;

/// Outcome of one operation's finite-difference suite.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub trials: usize,
    /// Coordinates that survived the exclusion rules.
    pub checked: usize,
    pub passed: usize,
    pub pass_fraction: f64,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Results of all four suites.
#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub seed: u64,
    pub trials: usize,
    pub suites: Vec<SuiteReport>,
    pub pass: bool,
}

#[derive(Default)]
struct Tally {
    checked: usize,
    passed: usize,
    max_rel: f64,
}

impl Tally {
    fn record(&mut self, analytic: f64, numeric: f64, tol: f64) {
        self.checked += 1;
        let diff = (analytic - numeric).abs();
        let scale = analytic.abs().max(numeric.abs());
        let ok = if scale < SMALL_SCALE {
            diff < SMALL_ABS
        } else {
            let rel = diff / scale;
            self.max_rel = self.max_rel.max(rel);
            rel < tol
        };
        if ok {
            self.passed += 1;
        }
    }

    fn into_report(self, name: &str, trials: usize, tolerance: f64) -> SuiteReport {
        let fraction = if self.checked == 0 {
            0.0
        } else {
            self.passed as f64 / self.checked as f64
        };
        SuiteReport {
            name: name.to_string(),
            trials,
            checked: self.checked,
            passed: self.passed,
            pass_fraction: fraction,
            max_rel_error: self.max_rel,
            tolerance,
            pass: self.checked > 0 && fraction >= PASS_FRACTION,
        }
    }
}

/// Runs all four suites. `perturbation` is added to every analytic gradient
/// component; zero checks the true gradients, anything else is a negative
/// control that must make the suites fail.
pub fn run_gradient_suites(
    seed: u64,
    trials: usize,
    perturbation: f64,
) -> Result<GradCheckReport> {
    if trials == 0 {
        return Err(Error::InvalidConfig(
            "gradient checking needs at least one trial".into(),
        ));
    }
    let suites = vec![
        forward_warp_suite(seed, trials, perturbation)?,
        backward_warp_suite(seed, trials, perturbation)?,
        reblur_suite(seed, trials, perturbation)?,
        total_loss_suite(seed, trials, perturbation)?,
    ];
    let pass = suites.iter().all(|s| s.pass);
    Ok(GradCheckReport {
        seed,
        trials,
        suites,
        pass,
    })
}

fn rng_for(seed: u64, trial: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64))
}

fn random_image(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Image<f64> {
    let data = (0..SIDE * SIDE).map(|_| rng.gen_range(lo..hi)).collect();
    Image::from_vec(SIDE, SIDE, 1, data).expect("fixed shape")
}

fn random_flow(rng: &mut ChaCha8Rng, amp: f64) -> FlowField<f64> {
    let data = (0..SIDE * SIDE * 2)
        .map(|_| rng.gen_range(-amp..amp))
        .collect();
    FlowField::from_vec(SIDE, SIDE, data).expect("fixed shape")
}

fn nudge_image(img: &Image<f64>, coord: usize, delta: f64) -> Image<f64> {
    let mut out = img.clone();
    out.data_mut()[coord] += delta;
    out
}

fn nudge_flow(flow: &FlowField<f64>, coord: usize, delta: f64) -> FlowField<f64> {
    let mut out = flow.clone();
    out.data_mut()[coord] += delta;
    out
}

fn dot(a: &Image<f64>, b: &Image<f64>) -> f64 {
    a.data().iter().zip(b.data().iter()).map(|(&x, &y)| x * y).sum()
}

fn fragment_ids(result: &ForwardWarpResult<f64>) -> Vec<Option<usize>> {
    result
        .fragments
        .iter()
        .map(|f| f.as_ref().map(|fr| fr.triangle_id))
        .collect()
}

fn forward_warp_suite(seed: u64, trials: usize, perturbation: f64) -> Result<SuiteReport> {
    let mut tally = Tally::default();
    for trial in 0..trials {
        let mut rng = rng_for(seed, trial);
        let src = random_image(&mut rng, 0.0, 1.0);
        let flow = random_flow(&mut rng, 1.5);
        let upstream = random_image(&mut rng, -1.0, 1.0);
        let (gsrc, gflow) = forward_warp_vjp(&src, &flow, &upstream)?;

        // Intensity coordinates: the rendered image is linear in the source,
        // and fragment assignment ignores intensities, so every coordinate
        // is smooth.
        for coord in 0..src.data().len() {
            let plus = forward_warp(&nudge_image(&src, coord, H_IMAGE), &flow)?;
            let minus = forward_warp(&nudge_image(&src, coord, -H_IMAGE), &flow)?;
            let numeric =
                (dot(&plus.image, &upstream) - dot(&minus.image, &upstream)) / (2.0 * H_IMAGE);
            tally.record(gsrc.data()[coord] + perturbation, numeric, TOL_WARP);
        }

        for coord in 0..flow.data().len() {
            let plus = forward_warp(&src, &nudge_flow(&flow, coord, H_FLOW))?;
            let minus = forward_warp(&src, &nudge_flow(&flow, coord, -H_FLOW))?;
            if fragment_ids(&plus) != fragment_ids(&minus) {
                continue;
            }
            let numeric =
                (dot(&plus.image, &upstream) - dot(&minus.image, &upstream)) / (2.0 * H_FLOW);
            tally.record(gflow.data()[coord] + perturbation, numeric, TOL_WARP);
        }
    }
    Ok(tally.into_report("forward_warp", trials, TOL_WARP))
}

fn backward_warp_suite(seed: u64, trials: usize, perturbation: f64) -> Result<SuiteReport> {
    let mut tally = Tally::default();
    for trial in 0..trials {
        let mut rng = rng_for(seed, trial);
        let src = random_image(&mut rng, 0.0, 1.0);
        let flow = random_flow(&mut rng, 1.5);
        let upstream = random_image(&mut rng, -1.0, 1.0);
        let (gsrc, gflow) = backward_warp_vjp(&src, &flow, &upstream)?;

        for coord in 0..src.data().len() {
            let plus = backward_warp(&nudge_image(&src, coord, H_IMAGE), &flow)?;
            let minus = backward_warp(&nudge_image(&src, coord, -H_IMAGE), &flow)?;
            let numeric =
                (dot(&plus.image, &upstream) - dot(&minus.image, &upstream)) / (2.0 * H_IMAGE);
            tally.record(gsrc.data()[coord] + perturbation, numeric, TOL_WARP);
        }

        for coord in 0..flow.data().len() {
            // The sample position of the perturbed pixel must stay away
            // from the bilinear lattice: integer crossings (including the
            // domain boundary) are derivative kinks.
            let pixel = coord / 2;
            let (x, y) = (pixel % SIDE, pixel / SIDE);
            let (dx, dy) = flow.at(x, y);
            let sx = x as f64 + dx;
            let sy = y as f64 + dy;
            if (sx - sx.round()).abs() <= INTEGER_KINK
                || (sy - sy.round()).abs() <= INTEGER_KINK
            {
                continue;
            }
            let plus = backward_warp(&src, &nudge_flow(&flow, coord, H_FLOW))?;
            let minus = backward_warp(&src, &nudge_flow(&flow, coord, -H_FLOW))?;
            let numeric =
                (dot(&plus.image, &upstream) - dot(&minus.image, &upstream)) / (2.0 * H_FLOW);
            tally.record(gflow.data()[coord] + perturbation, numeric, TOL_WARP);
        }
    }
    Ok(tally.into_report("backward_warp", trials, TOL_WARP))
}

fn reblur_suite(seed: u64, trials: usize, perturbation: f64) -> Result<SuiteReport> {
    const N: usize = 2;
    let mut tally = Tally::default();
    for trial in 0..trials {
        let mut rng = rng_for(seed, trial);
        let sharp = random_image(&mut rng, 0.0, 1.0);
        let step = random_flow(&mut rng, 0.8);
        let upstream = random_image(&mut rng, -1.0, 1.0);
        let (gsharp, gstep) = reblur_vjp(&sharp, &step, N, &upstream)?;

        for coord in 0..sharp.data().len() {
            let plus = reblur(&nudge_image(&sharp, coord, H_IMAGE), &step, N)?;
            let minus = reblur(&nudge_image(&sharp, coord, -H_IMAGE), &step, N)?;
            let numeric =
                (dot(&plus.blurred, &upstream) - dot(&minus.blurred, &upstream))
                    / (2.0 * H_IMAGE);
            tally.record(gsharp.data()[coord] + perturbation, numeric, TOL_WARP);
        }

        'coords: for coord in 0..step.data().len() {
            let plus_flow = nudge_flow(&step, coord, H_FLOW);
            let minus_flow = nudge_flow(&step, coord, -H_FLOW);
            // Every virtual frame must keep its fragment assignment.
            for i in (-(N as isize))..=(N as isize) {
                if i == 0 {
                    continue;
                }
                let scale = i as f64;
                let plus = forward_warp(&sharp, &plus_flow.scaled(scale))?;
                let minus = forward_warp(&sharp, &minus_flow.scaled(scale))?;
                if fragment_ids(&plus) != fragment_ids(&minus) {
                    continue 'coords;
                }
            }
            let plus = reblur(&sharp, &plus_flow, N)?;
            let minus = reblur(&sharp, &minus_flow, N)?;
            let numeric =
                (dot(&plus.blurred, &upstream) - dot(&minus.blurred, &upstream))
                    / (2.0 * H_FLOW);
            tally.record(gstep.data()[coord] + perturbation, numeric, TOL_WARP);
        }
    }
    Ok(tally.into_report("reblur", trials, TOL_WARP))
}

/// Everything about one loss evaluation that must stay identical at both
/// sides of a central difference for the derivative to exist.
struct LossProbe {
    total: f64,
    masks: Vec<Vec<u64>>,
    residual_signs: Vec<Vec<i8>>,
    min_masked_residual: f64,
}

fn probe_loss(inputs: &LossInputs<'_, f64>, config: &LossConfig<f64>) -> Result<LossProbe> {
    use crate::occlusion::{reachability_mask, self_consistency_mask};

    let report = total_loss(inputs, config)?;
    let step_a = inputs.flow_ab.scaled(inputs.exposure_scale);
    let step_b = inputs.flow_ba.scaled(inputs.exposure_scale);
    let rb_a = reblur(inputs.latent_a, &step_a, inputs.n)?;
    let rb_b = reblur(inputs.latent_b, &step_b, inputs.n)?;
    let m_self_a = rb_a.mask.product(&self_consistency_mask(&step_a, inputs.n))?;
    let m_self_b = rb_b.mask.product(&self_consistency_mask(&step_b, inputs.n))?;
    let warped_a = backward_warp(inputs.latent_b, inputs.flow_ab)?;
    let warped_b = backward_warp(inputs.latent_a, inputs.flow_ba)?;
    let m_fw_a = reachability_mask(inputs.flow_ba).product(&warped_a.valid)?;
    let m_fw_b = reachability_mask(inputs.flow_ab).product(&warped_b.valid)?;

    let mut masks = Vec::new();
    let mut residual_signs = Vec::new();
    let mut min_masked_residual = f64::INFINITY;
    let pairs: [(&crate::image::Mask<f64>, &Image<f64>, &Image<f64>); 4] = [
        (&m_self_a, &rb_a.blurred, inputs.blur_a),
        (&m_self_b, &rb_b.blurred, inputs.blur_b),
        (&m_fw_a, &warped_a.image, inputs.latent_a),
        (&m_fw_b, &warped_b.image, inputs.latent_b),
    ];
    for (mask, lhs, rhs) in pairs {
        masks.push(mask.data().iter().map(|&m| m.to_bits()).collect());
        let mut signs = Vec::with_capacity(lhs.data().len());
        for (i, (&a, &b)) in lhs.data().iter().zip(rhs.data().iter()).enumerate() {
            let m = mask.data()[i];
            if m > 0.0 {
                let r = a - b;
                min_masked_residual = min_masked_residual.min(r.abs());
                signs.push(if r > 0.0 { 1 } else if r < 0.0 { -1 } else { 0 });
            } else {
                signs.push(0);
            }
        }
        residual_signs.push(signs);
    }
    Ok(LossProbe {
        total: report.total,
        masks,
        residual_signs,
        min_masked_residual,
    })
}

fn total_loss_suite(seed: u64, trials: usize, perturbation: f64) -> Result<SuiteReport> {
    const N: usize = 1;
    const SCALE: f64 = 0.5;
    let config = LossConfig { lambda: 2.0 };
    let mut tally = Tally::default();
    for trial in 0..trials {
        let mut rng = rng_for(seed, trial);
        let blur_a = random_image(&mut rng, 0.0, 1.0);
        let blur_b = random_image(&mut rng, 0.0, 1.0);
        let latent_a = random_image(&mut rng, 0.0, 1.0);
        let latent_b = random_image(&mut rng, 0.0, 1.0);
        let flow_ab = random_flow(&mut rng, 1.0);
        let flow_ba = random_flow(&mut rng, 1.0);

        let base_inputs = LossInputs {
            blur_a: &blur_a,
            blur_b: &blur_b,
            latent_a: &latent_a,
            latent_b: &latent_b,
            flow_ab: &flow_ab,
            flow_ba: &flow_ba,
            n: N,
            exposure_scale: SCALE,
        };
        // A residual sitting on the L1 kink makes every coordinate that
        // feeds it one-sided; skip the trial rather than reason per
        // coordinate about influence footprints.
        if probe_loss(&base_inputs, &config)?.min_masked_residual <= RESIDUAL_KINK {
            continue;
        }
        let (_, grads) = total_loss_vjp(&base_inputs, &config)?;

        let check = |analytic: f64,
                         plus: &LossProbe,
                         minus: &LossProbe,
                         tally: &mut Tally| {
            if plus.masks != minus.masks || plus.residual_signs != minus.residual_signs {
                return;
            }
            let numeric = (plus.total - minus.total) / (2.0 * H_FLOW);
            tally.record(analytic + perturbation, numeric, TOL_LOSS);
        };

        for coord in 0..latent_a.data().len() {
            let plus_img = nudge_image(&latent_a, coord, H_FLOW);
            let minus_img = nudge_image(&latent_a, coord, -H_FLOW);
            let plus = probe_loss(&LossInputs { latent_a: &plus_img, ..base_inputs }, &config)?;
            let minus = probe_loss(&LossInputs { latent_a: &minus_img, ..base_inputs }, &config)?;
            check(grads.d_latent_a.data()[coord], &plus, &minus, &mut tally);
        }
        for coord in 0..latent_b.data().len() {
            let plus_img = nudge_image(&latent_b, coord, H_FLOW);
            let minus_img = nudge_image(&latent_b, coord, -H_FLOW);
            let plus = probe_loss(&LossInputs { latent_b: &plus_img, ..base_inputs }, &config)?;
            let minus = probe_loss(&LossInputs { latent_b: &minus_img, ..base_inputs }, &config)?;
            check(grads.d_latent_b.data()[coord], &plus, &minus, &mut tally);
        }
        for coord in 0..flow_ab.data().len() {
            let plus_flow = nudge_flow(&flow_ab, coord, H_FLOW);
            let minus_flow = nudge_flow(&flow_ab, coord, -H_FLOW);
            let plus = probe_loss(&LossInputs { flow_ab: &plus_flow, ..base_inputs }, &config)?;
            let minus = probe_loss(&LossInputs { flow_ab: &minus_flow, ..base_inputs }, &config)?;
            check(grads.d_flow_ab.data()[coord], &plus, &minus, &mut tally);
        }
        for coord in 0..flow_ba.data().len() {
            let plus_flow = nudge_flow(&flow_ba, coord, H_FLOW);
            let minus_flow = nudge_flow(&flow_ba, coord, -H_FLOW);
            let plus = probe_loss(&LossInputs { flow_ba: &plus_flow, ..base_inputs }, &config)?;
            let minus = probe_loss(&LossInputs { flow_ba: &minus_flow, ..base_inputs }, &config)?;
            check(grads.d_flow_ba.data()[coord], &plus, &minus, &mut tally);
        }
    }
    Ok(tally.into_report("total_loss", trials, TOL_LOSS))
}
