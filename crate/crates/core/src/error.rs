//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        context: &'static str,
        expected: (usize, usize, usize),
        got: (usize, usize, usize),
    },

    #[error("invalid dimensions {width}x{height}: both must be at least {min}")]
    InvalidDimension {
        width: usize,
        height: usize,
        min: usize,
    },

    #[error("image buffer length {got} does not match {width}x{height}x{channels}")]
    BufferLength {
        width: usize,
        height: usize,
        channels: usize,
        got: usize,
    },

    #[error("unsupported channel count {0}: expected 1 or 3")]
    UnsupportedChannels(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("flow file has bad magic number {got}")]
    FlowBadMagic { got: f32 },

    #[error("flow file truncated: needed {needed} bytes, got {got}")]
    FlowTruncated { needed: usize, got: usize },

    #[error("flow file header declares invalid dimensions {width}x{height}")]
    FlowBadHeader { width: i64, height: i64 },

    #[error("blur synthesis window must be odd, got {0}")]
    EvenWindow(usize),

    #[error("not enough frames: window {window} with stride {stride} needs {needed}, got {got}")]
    InsufficientFrames {
        window: usize,
        stride: usize,
        needed: usize,
        got: usize,
    },

    #[error("image {width}x{height} too small for an {window}x{window} window")]
    ImageTooSmall {
        width: usize,
        height: usize,
        window: usize,
    },

    #[error("non-finite gradient at level {level}, iteration {iteration}")]
    NonFiniteGradient { level: usize, iteration: usize },

    #[error("png: {0}")]
    Png(#[from] image::ImageError),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
