//! Image quality metrics against a reference in `[0, 1]`.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::{flt, Float};

/// Side length of the SSIM window.
pub const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

/// Peak signal-to-noise ratio in dB for unit peak, `10 * log10(1 / mse)`.
///
/// Identical images have zero error; the result is then positive infinity.
pub fn psnr<T: Float>(a: &Image<T>, b: &Image<T>) -> Result<T> {
    check_shapes(a, b, "psnr")?;
    let mut acc = T::zero();
    for (&x, &y) in a.data().iter().zip(b.data().iter()) {
        let d = x - y;
        acc += d * d;
    }
    let mse = acc / flt::<T>(a.data().len() as f64);
    if mse == T::zero() {
        return Ok(T::infinity());
    }
    Ok(flt::<T>(10.0) * (T::one() / mse).log10())
}

/// Mean structural similarity over all fully interior windows.
///
/// Gaussian-weighted 11x11 windows; per-channel scores are averaged. The
/// statistics are arranged so that comparing an image with itself yields
/// exactly 1.0. Images must be at least 11 pixels on each side.
pub fn ssim<T: Float>(a: &Image<T>, b: &Image<T>) -> Result<T> {
    check_shapes(a, b, "ssim")?;
    let (w, h, c) = a.shape();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            window: SSIM_WINDOW,
        });
    }
    let kernel = gaussian_kernel::<T>();
    let c1 = flt::<T>(SSIM_C1);
    let c2 = flt::<T>(SSIM_C2);
    let mut acc = T::zero();
    let mut count = 0usize;
    for ch in 0..c {
        for wy in 0..=(h - SSIM_WINDOW) {
            for wx in 0..=(w - SSIM_WINDOW) {
                // Weighted first and second moments over the window. The
                // cross terms reuse the same expression shape as the squares
                // so identical inputs give bitwise-identical numerator and
                // denominator.
                let mut mu_a = T::zero();
                let mut mu_b = T::zero();
                let mut raw_aa = T::zero();
                let mut raw_bb = T::zero();
                let mut raw_ab = T::zero();
                for ky in 0..SSIM_WINDOW {
                    for kx in 0..SSIM_WINDOW {
                        let weight = kernel[ky * SSIM_WINDOW + kx];
                        let va = a.at(wx + kx, wy + ky, ch);
                        let vb = b.at(wx + kx, wy + ky, ch);
                        mu_a += weight * va;
                        mu_b += weight * vb;
                        raw_aa += weight * va * va;
                        raw_bb += weight * vb * vb;
                        raw_ab += weight * va * vb;
                    }
                }
                let var_a = raw_aa - mu_a * mu_a;
                let var_b = raw_bb - mu_b * mu_b;
                let cov = raw_ab - mu_a * mu_b;
                let num = (mu_a * mu_b + mu_a * mu_b + c1) * (cov + cov + c2);
                let den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
                acc += num / den;
                count += 1;
            }
        }
    }
    Ok(acc / flt::<T>(count as f64))
}

fn gaussian_kernel<T: Float>() -> Vec<T> {
    let half = (SSIM_WINDOW / 2) as f64;
    let mut kernel = Vec::with_capacity(SSIM_WINDOW * SSIM_WINDOW);
    let mut sum = 0.0f64;
    for y in 0..SSIM_WINDOW {
        for x in 0..SSIM_WINDOW {
            let dx = x as f64 - half;
            let dy = y as f64 - half;
            let v = (-(dx * dx + dy * dy) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
            kernel.push(v);
            sum += v;
        }
    }
    kernel.into_iter().map(|v| flt(v / sum)).collect()
}

fn check_shapes<T: Float>(a: &Image<T>, b: &Image<T>, context: &'static str) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            context,
            expected: a.shape(),
            got: b.shape(),
        });
    }
    Ok(())
}
