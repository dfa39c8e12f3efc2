use super::cursor::Cursor;
use super::{EncodedRect, EncodingError, EncodingId};
use crate::pixel::{FrameBuffer, PixelFormat, Rectangle};

/// Raw: every pixel, left to right then top to bottom, in `fmt`.
pub fn encode_raw(fb: &FrameBuffer, rect: Rectangle, fmt: &PixelFormat) -> Result<EncodedRect, EncodingError> {
    let pixels = fb.extract(&rect, fmt)?;
    Ok(EncodedRect { rect, encoding: EncodingId::Raw, payload: pixel_bytes(&pixels, fmt) })
}

pub(crate) fn pixel_bytes(pixels: &[u32], fmt: &PixelFormat) -> Vec<u8> {
    let mut out = Vec::with_capacity(pixels.len() * fmt.bytes_per_pixel());
    match (fmt.bits_per_pixel, fmt.big_endian) {
        (32, false) => pixels.iter().for_each(|p| out.extend_from_slice(&p.to_le_bytes())),
        _ => pixels.iter().for_each(|&p| fmt.write_pixel(p, &mut out)),
    }
    out
}

pub(crate) fn decode_pixels(bytes: &[u8], fmt: &PixelFormat) -> Vec<u32> {
    bytes.chunks_exact(fmt.bytes_per_pixel()).map(|b| fmt.read_pixel(b)).collect()
}

pub(super) fn decode(payload: &[u8], rect: Rectangle, fmt: &PixelFormat) -> Result<Vec<u32>, EncodingError> {
    let mut c = Cursor::new(payload);
    let bytes = c.take(rect.area() * fmt.bytes_per_pixel())?;
    c.finish()?;
    Ok(decode_pixels(bytes, fmt))
}
