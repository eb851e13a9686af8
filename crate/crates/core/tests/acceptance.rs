//! Acceptance suite for the library: one test per criterion, each printing
//! a single pass line (run with --nocapture to see them). Tolerances are
//! pinned here on purpose; loosening them is a behavior change.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reblur_core::*;

fn random_image(w: usize, h: usize, seed: u64) -> Image<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..w * h).map(|_| rng.gen_range(0.0..1.0)).collect();
    Image::from_vec(w, h, 1, data).unwrap()
}

fn max_abs_diff(a: &Image<f64>, b: &Image<f64>) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn acceptance_01_zero_flow_identity() {
    const TOL: f64 = 1e-6;
    let start = Instant::now();
    for (i, n) in [0usize, 1, 8].into_iter().enumerate() {
        let sharp = random_image(64, 64, 100 + i as u64);
        let zero = FlowField::zeros(64, 64);
        let out = reblur(&sharp, &zero, n).unwrap();
        let err = max_abs_diff(&out.blurred, &sharp);
        assert!(err <= TOL, "n = {n}: max abs error {err}");
    }
    assert!(start.elapsed() < Duration::from_secs(1), "took {:?}", start.elapsed());
    println!("acceptance 01 (zero-flow identity): PASS");
}

#[test]
fn acceptance_02_frame_average_equivalence() {
    const TOL: f64 = 1e-6;
    // Interior margin: the largest per-side displacement is 2 * 2 px, plus
    // one pixel of triangle support.
    const MARGIN: usize = 6;
    let start = Instant::now();
    for (vx, vy) in [(1.0, 0.0), (2.0, 0.0), (1.0, 1.0)] {
        let frames =
            generate_synthetic_sequence::<f64>(SyntheticPattern::Noise, 64, 64, (vx, vy), 5, 3);
        let pair = synthesize_blur_pair(&frames, 5, 0, None).unwrap();
        let flow = FlowField::constant(64, 64, vx, vy);
        let model = reblur(&pair.sharp_a, &flow, 2).unwrap();
        let mut worst = 0.0f64;
        for y in MARGIN..64 - MARGIN {
            for x in MARGIN..64 - MARGIN {
                let d = (model.blurred.at(x, y, 0) - pair.blur_a.at(x, y, 0)).abs();
                worst = worst.max(d);
            }
        }
        assert!(worst <= TOL, "velocity ({vx},{vy}): interior error {worst}");
    }
    assert!(start.elapsed() < Duration::from_secs(5), "took {:?}", start.elapsed());
    println!("acceptance 02 (frame-average equivalence): PASS");
}

#[test]
fn acceptance_03_gradient_suites() {
    let start = Instant::now();
    let report = run_gradient_suites(0, 100, 0.0).unwrap();
    for suite in &report.suites {
        assert!(
            suite.pass,
            "suite {} passed only {:.4} of coordinates (tolerance {})",
            suite.name, suite.pass_fraction, suite.tolerance
        );
        assert!(suite.pass_fraction >= 0.99, "suite {}", suite.name);
    }
    assert!(report.pass);
    assert!(start.elapsed() < Duration::from_secs(120), "took {:?}", start.elapsed());
    println!("acceptance 03 (gradient suites): PASS");
}

#[test]
fn acceptance_04_trajectory_vs_convolution() {
    // A 3x17 image with a unit impulse at the center pixel and flow nonzero
    // only there. The warp-based model must smear the impulse along its own
    // trajectory; a space-invariant 1D box kernel cannot, because every
    // other pixel reports zero motion.
    let (w, h) = (17usize, 3usize);
    let center = (8usize, 1usize);
    let mut img = vec![0.0f64; w * h];
    img[center.1 * w + center.0] = 1.0;
    let img = Image::from_vec(w, h, 1, img).unwrap();
    let mut flow = vec![0.0f64; w * h * 2];
    flow[(center.1 * w + center.0) * 2] = 2.0;
    let flow = FlowField::from_vec(w, h, flow).unwrap();

    let warped = reblur(&img, &flow, 2).unwrap();
    let signal: Vec<f64> = (0..w).map(|x| img.at(x, center.1, 0)).collect();
    let boxed = convolution_reblur_1d(&signal, 2);

    // The box kernel keeps all mass within 2 px of the impulse.
    assert!(boxed[..6].iter().chain(&boxed[11..]).all(|&v| v == 0.0));
    // The trajectory reaches 2 * 2 = 4 px out on both sides.
    let row = |x: usize| warped.blurred.at(x, center.1, 0);
    assert!(row(4) > 1e-9 || row(5) > 1e-9, "no mass left of the box support");
    assert!(row(12) > 1e-9 || row(11) > 1e-9, "no mass right of the box support");
    let differing = (0..w)
        .filter(|&x| (row(x) - boxed[x]).abs() > 1e-9)
        .count();
    assert!(differing >= 2, "only {differing} positions differ");
    println!("acceptance 04 (trajectory vs convolution divergence): PASS");
}

#[test]
fn acceptance_05_occlusion_masking() {
    const TOL: f64 = 1e-12;
    let start = Instant::now();
    // Converging flow: a band at x in [2,4] moves right, a band at x in
    // [8,10] moves left. The bands vacate their own columns in the virtual
    // frames, so self-consistency masks them out.
    let (w, h, n) = (12usize, 12usize, 2usize);
    let mut flow = vec![0.0f64; w * h * 2];
    for y in 0..h {
        for x in 2..=4 {
            flow[(y * w + x) * 2] = 2.0;
        }
        for x in 8..=10 {
            flow[(y * w + x) * 2] = -2.0;
        }
    }
    let flow_ab = FlowField::from_vec(w, h, flow).unwrap();
    let flow_ba = FlowField::zeros(w, h);

    let sc = self_consistency_mask(&flow_ab, n);
    for y in 0..h {
        assert_eq!(sc.at(3, y), 0.0, "vacated column still unmasked at y={y}");
        assert_eq!(sc.at(9, y), 0.0, "vacated column still unmasked at y={y}");
        assert!(sc.at(0, y) > 0.0);
        assert!(sc.at(6, y) > 0.0);
    }

    let latent_a = random_image(w, h, 40);
    let latent_b = random_image(w, h, 41);
    let blur_a = random_image(w, h, 42);
    let blur_b = random_image(w, h, 43);
    let mut perturbed = blur_a.data().to_vec();
    perturbed[(6 * w + 3)] += 0.37;
    let perturbed = Image::from_vec(w, h, 1, perturbed).unwrap();

    let config = LossConfig { lambda: 2.0 };
    let total = |obs_a: &Image<f64>| {
        let inputs = LossInputs {
            blur_a: obs_a,
            blur_b: &blur_b,
            latent_a: &latent_a,
            latent_b: &latent_b,
            flow_ab: &flow_ab,
            flow_ba: &flow_ba,
            n,
            exposure_scale: 1.0,
        };
        total_loss(&inputs, &config).unwrap().total
    };
    let delta = (total(&blur_a) - total(&perturbed)).abs();
    assert!(delta <= TOL, "masked pixel leaked {delta} into the loss");
    assert!(start.elapsed() < Duration::from_secs(1), "took {:?}", start.elapsed());
    println!("acceptance 05 (occlusion masking): PASS");
}

#[test]
fn acceptance_07_metric_values() {
    let a = Image::<f64>::constant(32, 32, 1, 0.3).unwrap();
    let b = Image::<f64>::constant(32, 32, 1, 0.4).unwrap();
    let p = psnr(&a, &b).unwrap();
    assert!((p - 20.0).abs() <= 0.01, "psnr of 0.1 offset = {p}");

    let x = random_image(32, 32, 50);
    let y = random_image(32, 32, 51);
    let sxx = ssim(&x, &x).unwrap();
    assert_eq!(sxx, 1.0, "self-ssim = {sxx}");
    let sxy = ssim(&x, &y).unwrap();
    let syx = ssim(&y, &x).unwrap();
    assert!((sxy - syx).abs() <= 1e-9, "ssim asymmetry {}", (sxy - syx).abs());
    println!("acceptance 07 (metric values): PASS");
}

#[test]
fn acceptance_08_exposure_scaling() {
    let flow = FlowField::constant(8, 8, 3.0, -1.5);
    for (n, tau_over_dt, factor) in [(4usize, 8.0, 1.0), (4, 4.0, 0.5), (1, 2.0, 1.0)] {
        let config = ReblurConfig::new(n, tau_over_dt, 1.0).unwrap();
        let scaled = scale_flow_to_exposure(&flow, &config);
        for y in 0..8 {
            for x in 0..8 {
                let (dx, dy) = scaled.at(x, y);
                let (fx, fy) = flow.at(x, y);
                assert_eq!(dx, fx * factor);
                assert_eq!(dy, fy * factor);
            }
        }
    }
    println!("acceptance 08 (exposure scaling): PASS");
}
