//! Implementations of the subcommands. Each returns the process exit code
//! or a [`Failure`] carrying one.

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Map, Value};

use reblur_core::{
    load_flow, load_frame_dir, load_image, psnr, reblur, run_gradient_suites, save_flow,
    save_image, scale_flow_to_exposure, solve, ssim, synthesize_blur_pair,
    generate_synthetic_sequence, Image, IterationRecord, Mask, PngBitDepth, ReblurConfig,
    SolverConfig,
};

use crate::manifest::{PairManifest, SequenceManifest, MANIFEST_NAME};
use crate::{
    DeblurArgs, EvalArgs, Failure, GensequenceArgs, GradcheckArgs, MetricArg, ReblurArgs,
    SynthArgs, EXIT_CHECK_FAILED,
};

/// The coverage mask as a gray image, for PNG export.
fn mask_to_image(mask: &Mask<f64>) -> Result<Image<f64>, Failure> {
    Ok(Image::from_vec(
        mask.width(),
        mask.height(),
        1,
        mask.data().to_vec(),
    )?)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn run_reblur(args: &ReblurArgs) -> Result<u8, Failure> {
    let sharp: Image<f64> = load_image(&args.sharp)?;
    let flow = load_flow(&args.flow)?;
    let step = match (args.tau, args.dt) {
        (Some(tau), Some(dt)) => {
            let config = ReblurConfig::new(args.n, tau, dt)?;
            scale_flow_to_exposure(&flow, &config)
        }
        _ => flow,
    };
    let result = reblur(&sharp, &step, args.n)?;
    save_image(&args.out, &result.blurred, PngBitDepth::Sixteen)?;
    if let Some(path) = &args.mask_out {
        save_image(path, &mask_to_image(&result.mask)?, PngBitDepth::Sixteen)?;
    }
    Ok(0)
}

/// Deterministic work counters standing in for wall-clock timings inside
/// the report, which must be byte-identical across runs and thread
/// counts. Wall-clock time goes to standard error under --verbose.
#[derive(Serialize)]
struct Timings {
    unit: &'static str,
    total: usize,
    per_level: Vec<LevelWork>,
}

#[derive(Serialize)]
struct LevelWork {
    level: usize,
    iterations: usize,
}

fn work_counters(history: &[IterationRecord<f64>]) -> Timings {
    let mut per_level: Vec<LevelWork> = Vec::new();
    for record in history {
        match per_level.last_mut() {
            Some(work) if work.level == record.level => work.iterations += 1,
            _ => per_level.push(LevelWork {
                level: record.level,
                iterations: 1,
            }),
        }
    }
    Timings {
        unit: "gradient_iterations",
        total: history.len(),
        per_level,
    }
}

#[derive(Serialize)]
struct DeblurReport<'a> {
    config: &'a SolverConfig<f64>,
    warnings: &'a [String],
    timings: Timings,
    #[serde(rename = "final")]
    final_record: Option<&'a IterationRecord<f64>>,
    loss_history: &'a [IterationRecord<f64>],
}

pub fn run_deblur(args: &DeblurArgs, verbose: bool) -> Result<u8, Failure> {
    let blur_a: Image<f64> = load_image(&args.blur_a)?;
    let blur_b: Image<f64> = load_image(&args.blur_b)?;

    let mut config = SolverConfig::<f64>::default();
    if let Some(v) = args.iters {
        config.iterations = v;
    }
    if let Some(v) = args.lambda {
        config.lambda = v;
    }
    if let Some(v) = args.n {
        config.n = v;
    }
    if let Some(v) = args.levels {
        config.pyramid_levels = v;
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    if let Some(v) = args.tv_flow {
        config.tv_weight_flow = v;
    }

    let started = Instant::now();
    let state = solve(&blur_a, &blur_b, &config)?;
    let wall = started.elapsed();

    for warning in &state.warnings {
        eprintln!("warning: {warning}");
    }
    if verbose {
        let mut iter_in_level = 0usize;
        let mut current_level = None;
        for record in &state.loss_history {
            if current_level != Some(record.level) {
                current_level = Some(record.level);
                iter_in_level = 0;
            }
            eprintln!(
                "level {} iter {} total {:.6e} objective {:.6e}",
                record.level, iter_in_level, record.report.total, record.objective
            );
            iter_in_level += 1;
        }
        eprintln!("wall time: {:.3}s", wall.as_secs_f64());
    }

    fs::create_dir_all(&args.out_dir)?;
    save_image(
        args.out_dir.join("I_a.png"),
        &state.latent_a,
        PngBitDepth::Sixteen,
    )?;
    save_image(
        args.out_dir.join("I_b.png"),
        &state.latent_b,
        PngBitDepth::Sixteen,
    )?;
    save_flow(args.out_dir.join("flow_ab.flo"), &state.flow_ab)?;
    save_flow(args.out_dir.join("flow_ba.flo"), &state.flow_ba)?;

    let report = DeblurReport {
        config: &config,
        warnings: &state.warnings,
        timings: work_counters(&state.loss_history),
        final_record: state.loss_history.last(),
        loss_history: &state.loss_history,
    };
    write_json(&args.out_dir.join("report.json"), &report)?;
    Ok(0)
}

pub fn run_synth(args: &SynthArgs) -> Result<u8, Failure> {
    let frames: Vec<Image<f64>> = load_frame_dir(&args.frames)?;
    let velocity = crate::manifest::read_sequence_velocity(&args.frames);
    let pair = synthesize_blur_pair(&frames, args.window, args.stride, velocity)?;

    fs::create_dir_all(&args.out_dir)?;
    let files = [
        ("blur_a.png", &pair.blur_a),
        ("blur_b.png", &pair.blur_b),
        ("sharp_a.png", &pair.sharp_a),
        ("sharp_b.png", &pair.sharp_b),
    ];
    for (name, image) in files {
        save_image(args.out_dir.join(name), image, PngBitDepth::Sixteen)?;
    }

    let manifest = PairManifest {
        kind: "blur_pair".into(),
        window: args.window,
        stride: args.stride,
        frame_count: frames.len(),
        width: pair.blur_a.width(),
        height: pair.blur_a.height(),
        sharp_index_a: pair.index_a,
        sharp_index_b: pair.index_b,
        true_velocity: velocity.map(|(vx, vy)| [vx, vy]),
        true_flow_ab: velocity
            .map(|(vx, vy)| [vx * args.stride as f64, vy * args.stride as f64]),
    };
    write_json(&args.out_dir.join(MANIFEST_NAME), &manifest)?;
    Ok(0)
}

pub fn run_gensequence(args: &GensequenceArgs) -> Result<u8, Failure> {
    if args.count == 0 {
        return Err(Failure::usage("--count must be at least 1"));
    }
    if args.size.width == 0 || args.size.height == 0 {
        return Err(Failure::usage("--size dimensions must be at least 1"));
    }
    let frames: Vec<Image<f64>> = generate_synthetic_sequence(
        args.pattern.to_pattern(),
        args.size.width,
        args.size.height,
        (args.velocity.0, args.velocity.1),
        args.count,
        args.seed,
    );
    fs::create_dir_all(&args.out_dir)?;
    for (i, frame) in frames.iter().enumerate() {
        let name = format!("frame_{i:04}.png");
        save_image(args.out_dir.join(name), frame, PngBitDepth::Sixteen)?;
    }
    let manifest = SequenceManifest {
        kind: "sequence".into(),
        pattern: args.pattern.name().into(),
        velocity: [args.velocity.0, args.velocity.1],
        count: args.count,
        width: args.size.width,
        height: args.size.height,
        seed: args.seed,
    };
    write_json(&args.out_dir.join(MANIFEST_NAME), &manifest)?;
    Ok(0)
}

pub fn run_eval(args: &EvalArgs) -> Result<u8, Failure> {
    let reference: Image<f64> = load_image(&args.reference)?;
    let test: Image<f64> = load_image(&args.test)?;

    let mut metrics = Map::new();
    if matches!(args.metric, MetricArg::Psnr | MetricArg::Both) {
        let value = psnr(&reference, &test)?;
        let json_value = if value.is_infinite() {
            Value::String("inf".into())
        } else {
            json!(value)
        };
        metrics.insert("psnr".into(), json_value);
    }
    if matches!(args.metric, MetricArg::Ssim | MetricArg::Both) {
        metrics.insert("ssim".into(), json!(ssim(&reference, &test)?));
    }
    println!("{}", Value::Object(metrics));
    Ok(0)
}

pub fn run_gradcheck(args: &GradcheckArgs) -> Result<u8, Failure> {
    // Test fixture: biases every analytic gradient to prove the checker
    // notices. Deliberately undocumented in --help.
    let perturbation = match std::env::var("REBLUR_GRADCHECK_PERTURB") {
        Ok(text) => text
            .parse::<f64>()
            .map_err(|e| Failure::usage(format!("bad REBLUR_GRADCHECK_PERTURB '{text}': {e}")))?,
        Err(_) => 0.0,
    };
    let report = run_gradient_suites(args.seed, args.trials, perturbation)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if report.pass { 0 } else { EXIT_CHECK_FAILED })
}
