//! RFB rectangle encodings: Raw, RRE, CoRRE, Hextile, Zlib and Tight.
//!
//! Every encoder takes a framebuffer, a rectangle inside it and the client's
//! pixel format, and produces the bytes that follow the 12-byte rectangle
//! header on the wire. Decoders reverse the process exactly; all modes here
//! are lossless.
//!
//! Zlib and Tight keep DEFLATE state across rectangles, so each connection
//! owns one [`CompressionContext`] on the server side and one
//! [`DecompressionContext`] on the client side.

mod context;
mod cursor;
mod hextile;
mod raw;
mod rre;
mod stream;
mod subrect;
mod tight;
mod zlib;

pub use context::{CompressionContext, DecompressionContext};
pub use hextile::{encode_hextile, hextile_tile_count, HEXTILE_TILE};
pub use raw::encode_raw;
pub use rre::{encode_corre, encode_rre, CORRE_MAX};
pub use stream::read_payload;
pub use tight::{encode_tight, TightFilter, TIGHT_MAX_RECT_PIXELS, TIGHT_MAX_RECT_WIDTH};
pub use zlib::encode_zlib;

#[doc(hidden)]
pub use tight::encode_tight_gradient;

use crate::pixel::{FrameBuffer, PixelError, PixelFormat, Rectangle};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EncodingError {
    #[error("rectangle out of bounds: {0}")]
    OutOfBounds(#[from] PixelError),
    #[error("compression failed: {0}")]
    CompressionFailure(String),
    #[error("payload truncated")]
    TruncatedPayload,
    #[error("unknown or unsupported encoding {0}")]
    UnknownEncoding(i32),
    #[error("malformed payload: {0}")]
    Malformed(String),
    #[error("i/o: {0}")]
    Io(std::io::Error),
}

impl From<std::io::Error> for EncodingError {
    fn from(e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            EncodingError::TruncatedPayload
        } else {
            EncodingError::Io(e)
        }
    }
}

/// Encoding numbers as they appear on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EncodingId {
    Raw,
    Rre,
    CoRre,
    Hextile,
    Zlib,
    Tight,
}

impl EncodingId {
    pub const ALL: [EncodingId; 6] = [
        EncodingId::Raw,
        EncodingId::Rre,
        EncodingId::CoRre,
        EncodingId::Hextile,
        EncodingId::Zlib,
        EncodingId::Tight,
    ];

    pub fn code(self) -> i32 {
        match self {
            EncodingId::Raw => 0,
            EncodingId::Rre => 2,
            EncodingId::CoRre => 4,
            EncodingId::Hextile => 5,
            EncodingId::Zlib => 6,
            EncodingId::Tight => 7,
        }
    }

    pub fn from_code(code: i32) -> Option<Self> {
        Some(match code {
            0 => EncodingId::Raw,
            2 => EncodingId::Rre,
            4 => EncodingId::CoRre,
            5 => EncodingId::Hextile,
            6 => EncodingId::Zlib,
            7 => EncodingId::Tight,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            EncodingId::Raw => "raw",
            EncodingId::Rre => "rre",
            EncodingId::CoRre => "corre",
            EncodingId::Hextile => "hextile",
            EncodingId::Zlib => "zlib",
            EncodingId::Tight => "tight",
        }
    }
}

impl std::fmt::Display for EncodingId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for EncodingId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EncodingId::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown encoding `{s}`"))
    }
}

/// One rectangle header plus its encoding-specific payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedRect {
    pub rect: Rectangle,
    pub encoding: EncodingId,
    pub payload: Vec<u8>,
}

impl EncodedRect {
    /// Appends the 12-byte header and payload.
    pub fn write_to(&self, out: &mut Vec<u8>) {
        for v in [self.rect.x, self.rect.y, self.rect.w, self.rect.h] {
            out.extend_from_slice(&v.to_be_bytes());
        }
        out.extend_from_slice(&self.encoding.code().to_be_bytes());
        out.extend_from_slice(&self.payload);
    }
}

/// Picks the first client preference the server supports; Raw otherwise.
pub fn select_encoding(client_prefs: &[i32], supported: &[EncodingId]) -> EncodingId {
    client_prefs
        .iter()
        .filter_map(|&c| EncodingId::from_code(c))
        .find(|e| supported.contains(e))
        .unwrap_or(EncodingId::Raw)
}

/// Encodes `rect` with `encoding`, splitting it where the encoding requires
/// (CoRRE chunks, Tight's rectangle size limits).
pub fn encode_rect(
    fb: &FrameBuffer,
    rect: Rectangle,
    fmt: &PixelFormat,
    encoding: EncodingId,
    ctx: &mut CompressionContext,
) -> Result<Vec<EncodedRect>, EncodingError> {
    Ok(match encoding {
        EncodingId::Raw => vec![encode_raw(fb, rect, fmt)?],
        EncodingId::Rre => vec![encode_rre(fb, rect, fmt)?],
        EncodingId::CoRre => encode_corre(fb, rect, fmt)?,
        EncodingId::Hextile => vec![encode_hextile(fb, rect, fmt)?],
        EncodingId::Zlib => vec![encode_zlib(fb, rect, fmt, ctx)?],
        EncodingId::Tight => {
            fb.check_rect(&rect)?;
            tight_chunks(rect)
                .into_iter()
                .map(|r| encode_tight(fb, r, fmt, ctx))
                .collect::<Result<_, _>>()?
        }
    })
}

/// Splits a rectangle into Tight-sized pieces, full-width bands where possible.
pub fn tight_chunks(rect: Rectangle) -> Vec<Rectangle> {
    let mut out = Vec::new();
    let max_w = TIGHT_MAX_RECT_WIDTH;
    let mut x = rect.x;
    while u32::from(x) < rect.right() {
        let w = (rect.right() - u32::from(x)).min(u32::from(max_w)) as u16;
        let band = (TIGHT_MAX_RECT_PIXELS / usize::from(w)).max(1) as u32;
        let mut y = rect.y;
        while u32::from(y) < rect.bottom() {
            let h = (rect.bottom() - u32::from(y)).min(band) as u16;
            out.push(Rectangle::new(x, y, w, h));
            y += h;
        }
        x += w;
    }
    out
}

/// Reconstructs the `w×h` pixel grid of an encoded rectangle, in `fmt`.
pub fn decode_rect(
    enc: &EncodedRect,
    fmt: &PixelFormat,
    ctx: &mut DecompressionContext,
) -> Result<Vec<u32>, EncodingError> {
    let r = enc.rect;
    if r.is_empty() {
        return Err(EncodingError::Malformed("empty rectangle".into()));
    }
    match enc.encoding {
        EncodingId::Raw => raw::decode(&enc.payload, r, fmt),
        EncodingId::Rre => rre::decode(&enc.payload, r, fmt, false),
        EncodingId::CoRre => rre::decode(&enc.payload, r, fmt, true),
        EncodingId::Hextile => hextile::decode(&enc.payload, r, fmt),
        EncodingId::Zlib => zlib::decode(&enc.payload, r, fmt, ctx),
        EncodingId::Tight => tight::decode(&enc.payload, r, fmt, ctx),
    }
}

pub(crate) fn put_u16(out: &mut Vec<u8>, v: u16) {
    out.extend_from_slice(&v.to_be_bytes());
}

pub(crate) fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_be_bytes());
}
