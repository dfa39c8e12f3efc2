use super::cursor::Cursor;
use super::raw::{decode_pixels, pixel_bytes};
use super::{put_u32, CompressionContext, DecompressionContext, EncodedRect, EncodingError, EncodingId};
use crate::pixel::{FrameBuffer, PixelFormat, Rectangle};

/// Zlib: the Raw bytes through the session's persistent deflate stream,
/// prefixed with the compressed length.
pub fn encode_zlib(
    fb: &FrameBuffer,
    rect: Rectangle,
    fmt: &PixelFormat,
    ctx: &mut CompressionContext,
) -> Result<EncodedRect, EncodingError> {
    let raw = pixel_bytes(&fb.extract(&rect, fmt)?, fmt);
    let compressed = ctx.zlib.compress(&raw)?;
    let mut payload = Vec::with_capacity(4 + compressed.len());
    put_u32(&mut payload, compressed.len() as u32);
    payload.extend_from_slice(&compressed);
    Ok(EncodedRect { rect, encoding: EncodingId::Zlib, payload })
}

pub(super) fn decode(
    payload: &[u8],
    rect: Rectangle,
    fmt: &PixelFormat,
    ctx: &mut DecompressionContext,
) -> Result<Vec<u32>, EncodingError> {
    let mut c = Cursor::new(payload);
    let len = c.u32()? as usize;
    let data = c.take(len)?;
    c.finish()?;
    let raw = ctx.zlib.inflate(data, rect.area() * fmt.bytes_per_pixel())?;
    Ok(decode_pixels(&raw, fmt))
}
