use super::hextile::{tiles, ANY_SUBRECTS, BACKGROUND_SPECIFIED, FOREGROUND_SPECIFIED, RAW, SUBRECTS_COLOURED};
use super::{EncodingError, EncodingId};
use crate::pixel::{PixelFormat, Rectangle};
use std::io::Read;

/// Upper bound on a single payload read from the wire.
const MAX_PAYLOAD: usize = 256 << 20;

struct Collect<'a, R> {
    src: &'a mut R,
    buf: Vec<u8>,
}

impl<R: Read> Collect<'_, R> {
    fn bytes(&mut self, n: usize) -> Result<&[u8], EncodingError> {
        if self.buf.len() + n > MAX_PAYLOAD {
            return Err(EncodingError::Malformed("payload exceeds size limit".into()));
        }
        let start = self.buf.len();
        self.buf.resize(start + n, 0);
        self.src.read_exact(&mut self.buf[start..])?;
        Ok(&self.buf[start..])
    }

    fn u8(&mut self) -> Result<u8, EncodingError> {
        Ok(self.bytes(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, EncodingError> {
        let b = self.bytes(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }
}

/// Reads exactly one rectangle payload from a byte stream.
///
/// Several encodings carry no explicit length, so the reader walks the
/// encoding's structure to find where the payload ends.
pub fn read_payload<R: Read>(
    src: &mut R,
    encoding: EncodingId,
    rect: Rectangle,
    fmt: &PixelFormat,
) -> Result<Vec<u8>, EncodingError> {
    let bpp = fmt.bytes_per_pixel();
    let area = rect.area();
    let mut c = Collect { src, buf: Vec::new() };
    match encoding {
        EncodingId::Raw => {
            c.bytes(area * bpp)?;
        }
        EncodingId::Rre | EncodingId::CoRre => {
            let n = c.u32()? as usize;
            if n > area {
                return Err(EncodingError::Malformed(format!("{n} subrects in {area} pixels")));
            }
            let per = bpp + if encoding == EncodingId::Rre { 8 } else { 4 };
            c.bytes(bpp + n * per)?;
        }
        EncodingId::Hextile => {
            for (_, _, tw, th) in tiles(rect) {
                let mask = c.u8()?;
                if mask & RAW != 0 {
                    c.bytes(usize::from(tw) * usize::from(th) * bpp)?;
                    continue;
                }
                let mut fixed = 0;
                if mask & BACKGROUND_SPECIFIED != 0 {
                    fixed += bpp;
                }
                if mask & FOREGROUND_SPECIFIED != 0 {
                    fixed += bpp;
                }
                c.bytes(fixed)?;
                if mask & ANY_SUBRECTS != 0 {
                    let n = usize::from(c.u8()?);
                    let per = if mask & SUBRECTS_COLOURED != 0 { bpp + 2 } else { 2 };
                    c.bytes(n * per)?;
                }
            }
        }
        EncodingId::Zlib => {
            let n = c.u32()? as usize;
            c.bytes(n)?;
        }
        EncodingId::Tight => {
            let tlen = if fmt.is_rgb888() { 3 } else { bpp };
            let control = c.u8()?;
            let kind = control >> 4;
            if kind == 0x08 {
                c.bytes(tlen)?;
            } else if kind >= 0x09 {
                return Err(EncodingError::UnknownEncoding(EncodingId::Tight.code()));
            } else {
                let filter = if kind & 0x04 != 0 { c.u8()? } else { 0 };
                let data_len = match filter {
                    0 | 2 => area * tlen,
                    1 => {
                        let n = usize::from(c.u8()?) + 1;
                        c.bytes(n * tlen)?;
                        if n == 2 {
                            usize::from(rect.w).div_ceil(8) * usize::from(rect.h)
                        } else {
                            area
                        }
                    }
                    f => return Err(EncodingError::Malformed(format!("unknown Tight filter {f}"))),
                };
                if data_len < 12 {
                    c.bytes(data_len)?;
                } else {
                    let b0 = c.u8()?;
                    let mut len = usize::from(b0 & 0x7F);
                    if b0 & 0x80 != 0 {
                        let b1 = c.u8()?;
                        len |= usize::from(b1 & 0x7F) << 7;
                        if b1 & 0x80 != 0 {
                            len |= usize::from(c.u8()?) << 14;
                        }
                    }
                    c.bytes(len)?;
                }
            }
        }
    }
    Ok(c.buf)
}
