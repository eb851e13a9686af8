//! Synthetic translating sequences and blur-pair construction.
//!
//! Sequences are rendered by sampling an oversized static canvas at
//! per-frame offsets, so translation never invents border content and
//! integer total offsets reproduce canvas pixels exactly. Blur pairs average
//! consecutive frames, mirroring how real blurry datasets are built from
//! high-frame-rate footage.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::image::Image;
use crate::{flt, Float};

/// Texture drawn on the translating canvas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticPattern {
    /// 8-pixel cells alternating between 0.1 and 0.9.
    Checkerboard,
    /// Smooth random texture: a coarse uniform grid upsampled bilinearly.
    Noise,
    /// Linear ramp along x + y from 0.1 to 0.9; bilinear-shift exact.
    Ramp,
}

const CHECKER_CELL: usize = 8;
const NOISE_CELL: usize = 8;

/// Renders `count` frames of the pattern translating at `velocity` pixels
/// per frame. Deterministic in `seed`; the same scene point moves by
/// exactly `velocity` between consecutive frames.
pub fn generate_synthetic_sequence<T: Float>(
    pattern: SyntheticPattern,
    width: usize,
    height: usize,
    velocity: (f64, f64),
    count: usize,
    seed: u64,
) -> Vec<Image<T>> {
    assert!(count >= 1, "a sequence needs at least one frame");
    assert!(width >= 1 && height >= 1, "frames cannot be empty");
    let (vx, vy) = velocity;
    assert!(vx.is_finite() && vy.is_finite(), "velocity must be finite");

    let span_x = (count - 1) as f64 * vx;
    let span_y = (count - 1) as f64 * vy;
    let base_x = span_x.max(0.0).ceil();
    let base_y = span_y.max(0.0).ceil();
    let canvas_w = width + span_x.abs().ceil() as usize + 1;
    let canvas_h = height + span_y.abs().ceil() as usize + 1;
    let canvas = render_canvas(pattern, canvas_w, canvas_h, seed);

    (0..count)
        .map(|i| {
            let data = (0..width * height)
                .map(|idx| {
                    let (x, y) = (idx % width, idx / width);
                    let sx = x as f64 + base_x - i as f64 * vx;
                    let sy = y as f64 + base_y - i as f64 * vy;
                    flt(bilinear(&canvas, canvas_w, canvas_h, sx, sy))
                })
                .collect();
            Image::from_vec(width, height, 1, data).expect("validated dimensions")
        })
        .collect()
}

fn render_canvas(pattern: SyntheticPattern, w: usize, h: usize, seed: u64) -> Vec<f64> {
    match pattern {
        SyntheticPattern::Checkerboard => (0..w * h)
            .map(|idx| {
                let (x, y) = (idx % w, idx / w);
                if (x / CHECKER_CELL + y / CHECKER_CELL) % 2 == 0 {
                    0.1
                } else {
                    0.9
                }
            })
            .collect(),
        SyntheticPattern::Ramp => {
            let denom = (w + h).saturating_sub(2).max(1) as f64;
            (0..w * h)
                .map(|idx| {
                    let (x, y) = (idx % w, idx / w);
                    0.1 + 0.8 * (x + y) as f64 / denom
                })
                .collect()
        }
        SyntheticPattern::Noise => {
            let gw = (w - 1) / NOISE_CELL + 2;
            let gh = (h - 1) / NOISE_CELL + 2;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let grid: Vec<f64> = (0..gw * gh).map(|_| rng.gen_range(0.1..0.9)).collect();
            (0..w * h)
                .map(|idx| {
                    let (x, y) = (idx % w, idx / w);
                    let fx = x as f64 / NOISE_CELL as f64;
                    let fy = y as f64 / NOISE_CELL as f64;
                    let (x0, tx) = (fx.floor() as usize, fx.fract());
                    let (y0, ty) = (fy.floor() as usize, fy.fract());
                    let at = |gx: usize, gy: usize| grid[gy * gw + gx];
                    let top = at(x0, y0) * (1.0 - tx) + at(x0 + 1, y0) * tx;
                    let bot = at(x0, y0 + 1) * (1.0 - tx) + at(x0 + 1, y0 + 1) * tx;
                    top * (1.0 - ty) + bot * ty
                })
                .collect()
        }
    }
}

fn bilinear(canvas: &[f64], w: usize, h: usize, sx: f64, sy: f64) -> f64 {
    debug_assert!(sx >= 0.0 && sy >= 0.0, "canvas margin too small");
    let x0 = (sx.floor() as usize).min(w - 1);
    let y0 = (sy.floor() as usize).min(h - 1);
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    debug_assert!(sx <= (w - 1) as f64 && sy <= (h - 1) as f64, "canvas margin too small");
    let tx = sx - x0 as f64;
    let ty = sy - y0 as f64;
    let at = |x: usize, y: usize| canvas[y * w + x];
    let top = at(x0, y0) * (1.0 - tx) + at(x1, y0) * tx;
    let bot = at(x0, y1) * (1.0 - tx) + at(x1, y1) * tx;
    top * (1.0 - ty) + bot * ty
}

/// A blurry observation pair with its ground-truth latents.
#[derive(Debug, Clone)]
pub struct BlurPair<T: Float> {
    pub blur_a: Image<T>,
    pub blur_b: Image<T>,
    /// Central sharp frame of each averaging window.
    pub sharp_a: Image<T>,
    pub sharp_b: Image<T>,
    /// Frame indices of the two sharp references.
    pub index_a: usize,
    pub index_b: usize,
    /// Known flow from a to b when the sequence's velocity was given:
    /// constant `stride * velocity`.
    pub true_flow_hint: Option<FlowField<T>>,
}

/// Averages two `window`-frame spans starting at 0 and at `stride`.
///
/// The sharp references are the central frames of each span, so `window`
/// must be odd. Pass the per-frame `velocity` when it is known (internally
/// generated sequences) to get a ground-truth flow hint.
pub fn synthesize_blur_pair<T: Float>(
    frames: &[Image<T>],
    window: usize,
    stride: usize,
    velocity: Option<(f64, f64)>,
) -> Result<BlurPair<T>> {
    if window == 0 || window % 2 == 0 {
        return Err(Error::EvenWindow(window));
    }
    let needed = stride + window;
    if frames.len() < needed {
        return Err(Error::InsufficientFrames {
            window,
            stride,
            needed,
            got: frames.len(),
        });
    }
    let shape = frames[0].shape();
    for frame in frames {
        if frame.shape() != shape {
            return Err(Error::ShapeMismatch {
                context: "frame sequence",
                expected: shape,
                got: frame.shape(),
            });
        }
    }
    let index_a = (window - 1) / 2;
    let index_b = stride + (window - 1) / 2;
    let pair = BlurPair {
        blur_a: mean_of(&frames[0..window]),
        blur_b: mean_of(&frames[stride..stride + window]),
        sharp_a: frames[index_a].clone(),
        sharp_b: frames[index_b].clone(),
        index_a,
        index_b,
        true_flow_hint: velocity.map(|(vx, vy)| {
            FlowField::constant(
                shape.0,
                shape.1,
                flt(stride as f64 * vx),
                flt(stride as f64 * vy),
            )
        }),
    };
    Ok(pair)
}

fn mean_of<T: Float>(frames: &[Image<T>]) -> Image<T> {
    let mut acc = frames[0].clone();
    for frame in &frames[1..] {
        acc.add_scaled_in_place(frame, T::one());
    }
    acc.scale_in_place(T::one() / flt(frames.len() as f64));
    acc
}
