//! Pixel formats, framebuffers, rectangles and tile-grid damage tracking.

mod damage;
mod format;
mod framebuffer;

pub use damage::{diff_regions, DEFAULT_TILE};
pub use format::{convert_pixel, PixelFormat};
pub use framebuffer::{FrameBuffer, Rectangle};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PixelError {
    #[error("invalid pixel format: {0}")]
    InvalidFormat(&'static str),
    #[error("framebuffer dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u16, u16, u16, u16),
    #[error("pixel formats differ between framebuffers")]
    FormatMismatch,
    #[error("rectangle {0:?} lies outside a {1}x{2} framebuffer")]
    OutOfBounds(Rectangle, u16, u16),
    #[error("pixel buffer holds {got} values, expected {expected}")]
    PixelCount { expected: usize, got: usize },
    #[error("pixel value {0:#x} does not fit the format")]
    PixelRange(u32),
    #[error("tile size must be at least 1")]
    ZeroTile,
}
