//! End-to-end acceptance runs of the binary: the desk-scale deblurring bar
//! and the determinism guarantee. Each test prints one pass line (visible
//! with --nocapture).

use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use reblur_core::{load_image, psnr};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reblur"))
        .args(args)
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

/// Builds the standard synthetic pair: a translating noise sequence whose
/// window of 9 frames at unit velocity leaves an 8 px streak in each blur.
fn make_pair(dir: &Path, size: &str, count: &str, window: &str, stride: &str, seed: &str) {
    let seq = dir.join("seq");
    let pair = dir.join("pair");
    run_ok(&[
        "gensequence",
        "--pattern",
        "noise",
        "--velocity",
        "1,0",
        "--count",
        count,
        "--size",
        size,
        "--seed",
        seed,
        "--out-dir",
        &path(&seq),
    ]);
    run_ok(&[
        "synth",
        "--frames",
        &path(&seq),
        "--window",
        window,
        "--stride",
        stride,
        "--out-dir",
        &path(&pair),
    ]);
}

#[test]
fn acceptance_06_desk_scale_deblurring() {
    const MIN_GAIN_DB: f64 = 2.0;
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    make_pair(dir.path(), "64x64", "17", "9", "8", "7");
    let pair = dir.path().join("pair");
    let out = dir.path().join("out");
    run_ok(&[
        "deblur",
        "--blur-a",
        &path(&pair.join("blur_a.png")),
        "--blur-b",
        &path(&pair.join("blur_b.png")),
        "--out-dir",
        &path(&out),
    ]);

    for (sharp, blur, latent) in [
        ("sharp_a.png", "blur_a.png", "I_a.png"),
        ("sharp_b.png", "blur_b.png", "I_b.png"),
    ] {
        let sharp = load_image::<f64>(pair.join(sharp)).unwrap();
        let blurry = load_image::<f64>(pair.join(blur)).unwrap();
        let restored = load_image::<f64>(out.join(latent)).unwrap();
        let before = psnr(&sharp, &blurry).unwrap();
        let after = psnr(&sharp, &restored).unwrap();
        assert!(
            after - before >= MIN_GAIN_DB,
            "{latent}: {before:.2} dB -> {after:.2} dB (gain {:.2})",
            after - before
        );
    }

    // The safeguard guarantees a non-increasing objective within each
    // coarse-to-fine level.
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let history = report["loss_history"].as_array().unwrap();
    assert!(!history.is_empty());
    let mut prev: Option<(u64, f64)> = None;
    for record in history {
        let level = record["level"].as_u64().unwrap();
        let objective = record["objective"].as_f64().unwrap();
        if let Some((prev_level, prev_obj)) = prev {
            if prev_level == level {
                assert!(
                    objective <= prev_obj,
                    "objective rose from {prev_obj} to {objective} within level {level}"
                );
            }
        }
        prev = Some((level, objective));
    }

    assert!(
        start.elapsed() < Duration::from_secs(300),
        "took {:?}",
        start.elapsed()
    );
    println!("acceptance 06 (desk-scale deblurring): PASS");
}

#[test]
fn acceptance_09_determinism() {
    let dir = tempfile::tempdir().unwrap();
    make_pair(dir.path(), "32x32", "9", "5", "4", "3");
    let pair = dir.path().join("pair");

    let mut runs = Vec::new();
    for (tag, threads) in [("d1", "1"), ("d2", "2"), ("d3", "1")] {
        let out = dir.path().join(tag);
        run_ok(&[
            "--threads",
            threads,
            "deblur",
            "--blur-a",
            &path(&pair.join("blur_a.png")),
            "--blur-b",
            &path(&pair.join("blur_b.png")),
            "--iters",
            "8",
            "--levels",
            "2",
            "--n",
            "2",
            "--out-dir",
            &path(&out),
        ]);
        runs.push(out);
    }
    for name in ["report.json", "I_a.png", "I_b.png", "flow_ab.flo", "flow_ba.flo"] {
        let first = std::fs::read(runs[0].join(name)).unwrap();
        for other in &runs[1..] {
            let bytes = std::fs::read(other.join(name)).unwrap();
            assert_eq!(first, bytes, "{name} differs between runs");
        }
    }

    let g1 = run_ok(&["--threads", "1", "gradcheck", "--seed", "0", "--trials", "6"]);
    let g2 = run_ok(&["--threads", "2", "gradcheck", "--seed", "0", "--trials", "6"]);
    assert_eq!(g1.stdout, g2.stdout, "gradcheck reports differ across thread counts");

    println!("acceptance 09 (deterministic reports): PASS");
}
