//! Behavior tests for the command surface: exit codes, file contracts, and
//! the cross-command blur oracle.

use std::path::Path;
use std::process::{Command, Output};

use reblur_core::{load_image, save_flow, FlowField};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reblur"))
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn run_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reblur"))
        .args(args)
        .env(key, value)
        .output()
        .expect("binary should spawn")
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn path(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}

fn gen_sequence(dir: &Path, velocity: &str, count: &str, seed: &str) {
    run_ok(&[
        "gensequence",
        "--pattern",
        "noise",
        "--velocity",
        velocity,
        "--count",
        count,
        "--size",
        "64x64",
        "--seed",
        seed,
        "--out-dir",
        &path(dir),
    ]);
}

#[test]
fn reblur_with_zero_n_copies_the_input() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("seq");
    gen_sequence(&seq, "1,0", "1", "5");
    let frame = seq.join("frame_0000.png");
    let flow_path = dir.path().join("flow.flo");
    save_flow(&flow_path, &FlowField::constant(64, 64, 3.0, -2.0)).unwrap();
    let out = dir.path().join("out.png");
    run_ok(&[
        "reblur",
        "--sharp",
        &path(&frame),
        "--flow",
        &path(&flow_path),
        "--n",
        "0",
        "--out",
        &path(&out),
    ]);
    let a = load_image::<f64>(&frame).unwrap();
    let b = load_image::<f64>(&out).unwrap();
    assert_eq!(a.data(), b.data());
}

#[test]
fn missing_input_is_a_usage_error_with_silent_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "reblur",
        "--sharp",
        &path(&dir.path().join("absent.png")),
        "--flow",
        &path(&dir.path().join("absent.flo")),
        "--n",
        "1",
        "--out",
        &path(&dir.path().join("out.png")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
}

#[test]
fn frame_average_and_reblur_agree_across_commands() {
    // The synthesized blur is a plain frame average; the reblur command
    // must reproduce it from the center frame and the constant flow. The
    // tolerance covers two 16-bit quantization round trips.
    const TOL: f64 = 5e-5;
    const MARGIN: usize = 4;
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("seq");
    gen_sequence(&seq, "1,0", "5", "11");
    let pair = dir.path().join("pair");
    run_ok(&[
        "synth",
        "--frames",
        &path(&seq),
        "--window",
        "5",
        "--stride",
        "0",
        "--out-dir",
        &path(&pair),
    ]);
    let flow_path = dir.path().join("flow.flo");
    save_flow(&flow_path, &FlowField::constant(64, 64, 1.0, 0.0)).unwrap();
    let model_path = dir.path().join("model.png");
    run_ok(&[
        "reblur",
        "--sharp",
        &path(&pair.join("sharp_a.png")),
        "--flow",
        &path(&flow_path),
        "--n",
        "2",
        "--out",
        &path(&model_path),
    ]);
    let oracle = load_image::<f64>(pair.join("blur_a.png")).unwrap();
    let model = load_image::<f64>(&model_path).unwrap();
    let mut worst = 0.0f64;
    for y in MARGIN..64 - MARGIN {
        for x in MARGIN..64 - MARGIN {
            worst = worst.max((oracle.at(x, y, 0) - model.at(x, y, 0)).abs());
        }
    }
    assert!(worst <= TOL, "interior disagreement {worst}");
}

#[test]
fn deblurring_a_static_pair_returns_the_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("seq");
    gen_sequence(&seq, "0,0", "1", "9");
    let frame = seq.join("frame_0000.png");
    let out = dir.path().join("out");
    run_ok(&[
        "deblur",
        "--blur-a",
        &path(&frame),
        "--blur-b",
        &path(&frame),
        "--iters",
        "5",
        "--levels",
        "1",
        "--n",
        "2",
        "--out-dir",
        &path(&out),
    ]);
    let input = load_image::<f64>(&frame).unwrap();
    for latent in ["I_a.png", "I_b.png"] {
        let restored = load_image::<f64>(out.join(latent)).unwrap();
        let drift = input
            .data()
            .iter()
            .zip(restored.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(drift <= 1e-4, "{latent} drifted by {drift}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let total = report["final"]["total"].as_f64().unwrap();
    assert!(total < 1e-6, "final total {total}");
}

#[test]
fn zero_lambda_warns_on_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("seq");
    gen_sequence(&seq, "0,0", "1", "13");
    let frame = seq.join("frame_0000.png");
    let out = run_ok(&[
        "deblur",
        "--blur-a",
        &path(&frame),
        "--blur-b",
        &path(&frame),
        "--iters",
        "1",
        "--levels",
        "1",
        "--n",
        "1",
        "--lambda",
        "0",
        "--out-dir",
        &path(&dir.path().join("out")),
    ]);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("lambda"), "no warning in: {stderr}");
}

#[test]
fn window_of_one_makes_blur_equal_sharp() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("seq");
    gen_sequence(&seq, "1,0", "3", "17");
    let pair = dir.path().join("pair");
    run_ok(&[
        "synth",
        "--frames",
        &path(&seq),
        "--window",
        "1",
        "--stride",
        "2",
        "--out-dir",
        &path(&pair),
    ]);
    let blur = std::fs::read(pair.join("blur_a.png")).unwrap();
    let sharp = std::fs::read(pair.join("sharp_a.png")).unwrap();
    assert_eq!(blur, sharp);
}

#[test]
fn even_window_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("seq");
    gen_sequence(&seq, "1,0", "6", "19");
    let out = run(&[
        "synth",
        "--frames",
        &path(&seq),
        "--window",
        "4",
        "--stride",
        "1",
        "--out-dir",
        &path(&dir.path().join("pair")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn eval_of_identical_images_prints_the_sentinel() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("seq");
    gen_sequence(&seq, "1,0", "1", "23");
    let frame = path(&seq.join("frame_0000.png"));
    let out = run_ok(&["eval", "--ref", &frame, "--test", &frame]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.trim(), r#"{"psnr":"inf","ssim":1.0}"#);
}

#[test]
fn eval_size_mismatch_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("seq");
    gen_sequence(&seq, "1,0", "1", "27");
    let small = dir.path().join("small");
    run_ok(&[
        "gensequence",
        "--pattern",
        "noise",
        "--velocity",
        "1,0",
        "--count",
        "1",
        "--size",
        "32x32",
        "--seed",
        "27",
        "--out-dir",
        &path(&small),
    ]);
    let out = run(&[
        "eval",
        "--ref",
        &path(&seq.join("frame_0000.png")),
        "--test",
        &path(&small.join("frame_0000.png")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn gradcheck_rejects_zero_trials() {
    let out = run(&["gradcheck", "--trials", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn gradcheck_detects_a_biased_gradient() {
    // The perturbation knob exists as a negative control: a deliberately
    // skewed gradient must turn the exit code to 1.
    let out = run_env(
        &["gradcheck", "--seed", "0", "--trials", "4"],
        "REBLUR_GRADCHECK_PERTURB",
        "0.1",
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stdout.is_empty());
}
