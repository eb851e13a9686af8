//! Sidecar metadata written next to generated artifacts.
//!
//! `gensequence` records how a frame directory was produced; `synth` picks
//! the true velocity back up from there (when present) so the blur pair's
//! manifest can carry the ground-truth flow.

use std::path::Path;

use serde::{Deserialize, Serialize};

pub const MANIFEST_NAME: &str = "manifest.json";

/// Written by `gensequence` next to the frames.
#[derive(Serialize, Deserialize)]
pub struct SequenceManifest {
    pub kind: String,
    pub pattern: String,
    /// Pixels per frame, (vx, vy).
    pub velocity: [f64; 2],
    pub count: usize,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
}

/// Written by `synth` next to the blur/sharp pair.
#[derive(Serialize)]
pub struct PairManifest {
    pub kind: String,
    pub window: usize,
    pub stride: usize,
    pub frame_count: usize,
    pub width: usize,
    pub height: usize,
    /// Frame indices of the two sharp references within the input
    /// sequence.
    pub sharp_index_a: usize,
    pub sharp_index_b: usize,
    /// Per-frame velocity of the source sequence, when known.
    pub true_velocity: Option<[f64; 2]>,
    /// Constant flow from a to b implied by that velocity:
    /// stride * velocity.
    pub true_flow_ab: Option<[f64; 2]>,
}

/// Reads the sequence velocity recorded in `dir`, if a sequence manifest
/// is present and parses. Anything else (no file, foreign file) yields
/// `None`; the pair is still valid, just without ground truth.
pub fn read_sequence_velocity(dir: &Path) -> Option<(f64, f64)> {
    let text = std::fs::read_to_string(dir.join(MANIFEST_NAME)).ok()?;
    let manifest: SequenceManifest = serde_json::from_str(&text).ok()?;
    if manifest.kind != "sequence" {
        return None;
    }
    Some((manifest.velocity[0], manifest.velocity[1]))
}
