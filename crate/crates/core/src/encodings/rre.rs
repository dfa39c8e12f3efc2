use super::cursor::Cursor;
use super::subrect::{extract_subrects, modal_pixel};
use super::{put_u16, put_u32, EncodedRect, EncodingError, EncodingId};
use crate::pixel::{FrameBuffer, PixelFormat, Rectangle};

/// CoRRE chunks are at most this many pixels on each side.
pub const CORRE_MAX: u16 = 255;

fn encode_body(pixels: &[u32], rect: Rectangle, fmt: &PixelFormat, compact: bool) -> Vec<u8> {
    let (w, h) = (usize::from(rect.w), usize::from(rect.h));
    let bg = modal_pixel(pixels);
    let subs = extract_subrects(pixels, w, h, bg);
    let per = fmt.bytes_per_pixel() + if compact { 4 } else { 8 };
    let mut out = Vec::with_capacity(4 + fmt.bytes_per_pixel() + subs.len() * per);
    put_u32(&mut out, subs.len() as u32);
    fmt.write_pixel(bg, &mut out);
    for s in subs {
        fmt.write_pixel(s.color, &mut out);
        if compact {
            out.extend_from_slice(&[s.x as u8, s.y as u8, s.w as u8, s.h as u8]);
        } else {
            for v in [s.x, s.y, s.w, s.h] {
                put_u16(&mut out, v);
            }
        }
    }
    out
}

/// RRE: modal background plus greedy row-run subrectangles.
pub fn encode_rre(fb: &FrameBuffer, rect: Rectangle, fmt: &PixelFormat) -> Result<EncodedRect, EncodingError> {
    let pixels = fb.extract(&rect, fmt)?;
    Ok(EncodedRect { rect, encoding: EncodingId::Rre, payload: encode_body(&pixels, rect, fmt, false) })
}

/// CoRRE: RRE over chunks of at most 255×255 with one-byte subrect fields.
pub fn encode_corre(fb: &FrameBuffer, rect: Rectangle, fmt: &PixelFormat) -> Result<Vec<EncodedRect>, EncodingError> {
    fb.check_rect(&rect)?;
    let mut out = Vec::new();
    let mut y = rect.y;
    while u32::from(y) < rect.bottom() {
        let h = (rect.bottom() - u32::from(y)).min(u32::from(CORRE_MAX)) as u16;
        let mut x = rect.x;
        while u32::from(x) < rect.right() {
            let w = (rect.right() - u32::from(x)).min(u32::from(CORRE_MAX)) as u16;
            let chunk = Rectangle::new(x, y, w, h);
            let pixels = fb.extract(&chunk, fmt)?;
            out.push(EncodedRect {
                rect: chunk,
                encoding: EncodingId::CoRre,
                payload: encode_body(&pixels, chunk, fmt, true),
            });
            x += w;
        }
        y += h;
    }
    Ok(out)
}

pub(super) fn decode(payload: &[u8], rect: Rectangle, fmt: &PixelFormat, compact: bool) -> Result<Vec<u32>, EncodingError> {
    if compact && (rect.w > CORRE_MAX || rect.h > CORRE_MAX) {
        return Err(EncodingError::Malformed("CoRRE rectangle larger than 255x255".into()));
    }
    let mut c = Cursor::new(payload);
    let count = c.u32()? as usize;
    let bg = c.pixel(fmt)?;
    let per = fmt.bytes_per_pixel() + if compact { 4 } else { 8 };
    if count.saturating_mul(per) > c.remaining() {
        return Err(EncodingError::TruncatedPayload);
    }
    let (w, h) = (usize::from(rect.w), usize::from(rect.h));
    let mut out = vec![bg; w * h];
    for _ in 0..count {
        let color = c.pixel(fmt)?;
        let (sx, sy, sw, sh) = if compact {
            let b = c.take(4)?;
            (usize::from(b[0]), usize::from(b[1]), usize::from(b[2]), usize::from(b[3]))
        } else {
            (
                usize::from(c.u16()?),
                usize::from(c.u16()?),
                usize::from(c.u16()?),
                usize::from(c.u16()?),
            )
        };
        if sx + sw > w || sy + sh > h {
            return Err(EncodingError::Malformed(format!(
                "subrect {sx},{sy} {sw}x{sh} outside {w}x{h}"
            )));
        }
        for row in out[sy * w..(sy + sh) * w].chunks_exact_mut(w) {
            row[sx..sx + sw].fill(color);
        }
    }
    c.finish()?;
    Ok(out)
}
