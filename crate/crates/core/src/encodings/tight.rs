use super::cursor::Cursor;
use super::{CompressionContext, DecompressionContext, EncodedRect, EncodingError, EncodingId};
use crate::pixel::{FrameBuffer, PixelFormat, Rectangle};

/// Largest rectangle (in pixels) the server hands to the Tight encoder.
pub const TIGHT_MAX_RECT_PIXELS: usize = 65536;
pub const TIGHT_MAX_RECT_WIDTH: u16 = 2048;

const FILL: u8 = 0x08;
const JPEG: u8 = 0x09;
const EXPLICIT_FILTER: u8 = 0x04;
const MIN_TO_COMPRESS: usize = 12;
const MAX_PALETTE: usize = 16;
const MAX_COMPACT_LEN: usize = (1 << 22) - 1;

const STREAM_COPY: usize = 0;
const STREAM_MONO: usize = 1;
const STREAM_INDEXED: usize = 2;
const STREAM_GRADIENT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TightFilter {
    Copy = 0,
    Palette = 1,
    Gradient = 2,
}

fn tpixel_len(fmt: &PixelFormat) -> usize {
    if fmt.is_rgb888() {
        3
    } else {
        fmt.bytes_per_pixel()
    }
}

fn write_tpixel(p: u32, fmt: &PixelFormat, out: &mut Vec<u8>) {
    if fmt.is_rgb888() {
        let (r, g, b) = fmt.unpack(p);
        out.extend_from_slice(&[r as u8, g as u8, b as u8]);
    } else {
        fmt.write_pixel(p, out);
    }
}

fn read_tpixel(bytes: &[u8], fmt: &PixelFormat) -> u32 {
    if fmt.is_rgb888() {
        fmt.pack(u16::from(bytes[0]), u16::from(bytes[1]), u16::from(bytes[2]))
    } else {
        fmt.read_pixel(bytes)
    }
}

fn write_compact_len(len: usize, out: &mut Vec<u8>) {
    if len < 0x80 {
        out.push(len as u8);
    } else if len < 0x4000 {
        out.extend_from_slice(&[(len as u8 & 0x7F) | 0x80, (len >> 7) as u8]);
    } else {
        out.extend_from_slice(&[(len as u8 & 0x7F) | 0x80, ((len >> 7) as u8 & 0x7F) | 0x80, (len >> 14) as u8]);
    }
}

fn read_compact_len(c: &mut Cursor<'_>) -> Result<usize, EncodingError> {
    let b0 = c.u8()?;
    let mut len = usize::from(b0 & 0x7F);
    if b0 & 0x80 != 0 {
        let b1 = c.u8()?;
        len |= usize::from(b1 & 0x7F) << 7;
        if b1 & 0x80 != 0 {
            len |= usize::from(c.u8()?) << 14;
        }
    }
    Ok(len)
}

fn push_data(data: &[u8], stream: usize, ctx: &mut CompressionContext, out: &mut Vec<u8>) -> Result<(), EncodingError> {
    if data.len() < MIN_TO_COMPRESS {
        out.extend_from_slice(data);
        return Ok(());
    }
    let z = ctx.tight[stream].compress(data)?;
    if z.len() > MAX_COMPACT_LEN {
        return Err(EncodingError::CompressionFailure(format!(
            "compressed block of {} bytes exceeds the Tight length field",
            z.len()
        )));
    }
    write_compact_len(z.len(), out);
    out.extend_from_slice(&z);
    Ok(())
}

/// Distinct colours in first-seen order, or `None` past `limit`.
fn palette(pixels: &[u32], limit: usize) -> Option<Vec<u32>> {
    let mut colors: Vec<u32> = Vec::with_capacity(limit + 1);
    let mut last = None;
    for &p in pixels {
        if last == Some(p) {
            continue;
        }
        last = Some(p);
        if !colors.contains(&p) {
            if colors.len() == limit {
                return None;
            }
            colors.push(p);
        }
    }
    Some(colors)
}

/// Tight: Fill for one colour, Palette for up to 16, Gradient for smooth
/// many-colour areas, otherwise Copy. Filtered data goes through one of
/// four persistent deflate streams.
pub fn encode_tight(
    fb: &FrameBuffer,
    rect: Rectangle,
    fmt: &PixelFormat,
    ctx: &mut CompressionContext,
) -> Result<EncodedRect, EncodingError> {
    let pixels = fb.extract(&rect, fmt)?;
    let (w, h) = (usize::from(rect.w), usize::from(rect.h));
    let mut out = Vec::new();
    match palette(&pixels, MAX_PALETTE) {
        Some(colors) if colors.len() == 1 => {
            out.push(FILL << 4);
            write_tpixel(colors[0], fmt, &mut out);
        }
        Some(colors) => {
            let stream = if colors.len() == 2 { STREAM_MONO } else { STREAM_INDEXED };
            out.push(((EXPLICIT_FILTER | stream as u8) << 4) as u8);
            out.push(TightFilter::Palette as u8);
            out.push((colors.len() - 1) as u8);
            for &c in &colors {
                write_tpixel(c, fmt, &mut out);
            }
            let data = if colors.len() == 2 {
                let row_bytes = w.div_ceil(8);
                let mut bits = vec![0u8; row_bytes * h];
                for (y, row) in pixels.chunks_exact(w).enumerate() {
                    for (x, &p) in row.iter().enumerate() {
                        if p == colors[1] {
                            bits[y * row_bytes + x / 8] |= 0x80 >> (x % 8);
                        }
                    }
                }
                bits
            } else {
                let mut last = (colors[0], 0u8);
                pixels
                    .iter()
                    .map(|&p| {
                        if p != last.0 {
                            let i = colors.iter().position(|&c| c == p).unwrap_or(0) as u8;
                            last = (p, i);
                        }
                        last.1
                    })
                    .collect()
            };
            push_data(&data, stream, ctx, &mut out)?;
        }
        None if is_smooth(&pixels, w, fmt) => {
            return encode_gradient(&pixels, rect, fmt, ctx);
        }
        None => {
            out.push((STREAM_COPY as u8) << 4);
            let mut data = Vec::with_capacity(pixels.len() * tpixel_len(fmt));
            for &p in &pixels {
                write_tpixel(p, fmt, &mut data);
            }
            push_data(&data, STREAM_COPY, ctx, &mut out)?;
        }
    }
    Ok(EncodedRect { rect, encoding: EncodingId::Tight, payload: out })
}

fn channel_maxes(fmt: &PixelFormat) -> [u16; 3] {
    if fmt.is_rgb888() {
        [255; 3]
    } else {
        [fmt.red_max, fmt.green_max, fmt.blue_max]
    }
}

fn gradient_predict(prev_row: &[[u16; 3]], cur_row: &[[u16; 3]], x: usize, c: usize, max: u16) -> u16 {
    let left = if x > 0 { i32::from(cur_row[x - 1][c]) } else { 0 };
    let up = i32::from(prev_row[x][c]);
    let up_left = if x > 0 { i32::from(prev_row[x - 1][c]) } else { 0 };
    (left + up - up_left).clamp(0, i32::from(max)) as u16
}

/// Smallest rectangle considered for the gradient filter.
const SMOOTH_MIN_PIXELS: usize = 4096;
/// Mean predictor error per pixel (all channels, 8-bit scale) below which
/// an area counts as smooth.
const SMOOTH_THRESHOLD: u64 = 12;

/// Samples every fourth row and measures how well the gradient predictor
/// does on it.
fn is_smooth(pixels: &[u32], w: usize, fmt: &PixelFormat) -> bool {
    if pixels.len() < SMOOTH_MIN_PIXELS || w < 2 {
        return false;
    }
    let maxes = channel_maxes(fmt);
    let unpack = |p: u32| {
        let (r, g, b) = fmt.unpack(p);
        [r, g, b]
    };
    let (mut err, mut n) = (0u64, 0u64);
    let rows: Vec<&[u32]> = pixels.chunks_exact(w).collect();
    for y in (1..rows.len()).step_by(4) {
        let prev: Vec<[u16; 3]> = rows[y - 1].iter().map(|&p| unpack(p)).collect();
        let cur: Vec<[u16; 3]> = rows[y].iter().map(|&p| unpack(p)).collect();
        for x in 1..w {
            for c in 0..3 {
                let pred = gradient_predict(&prev, &cur, x, c, maxes[c]);
                let d = u64::from(cur[x][c].abs_diff(pred));
                err += d * 255 / u64::from(maxes[c].max(1));
            }
            n += 1;
        }
    }
    n > 0 && err < SMOOTH_THRESHOLD * n
}

/// Gradient-filtered Tight rectangle, regardless of content.
pub fn encode_tight_gradient(
    fb: &FrameBuffer,
    rect: Rectangle,
    fmt: &PixelFormat,
    ctx: &mut CompressionContext,
) -> Result<EncodedRect, EncodingError> {
    let pixels = fb.extract(&rect, fmt)?;
    encode_gradient(&pixels, rect, fmt, ctx)
}

fn encode_gradient(
    pixels: &[u32],
    rect: Rectangle,
    fmt: &PixelFormat,
    ctx: &mut CompressionContext,
) -> Result<EncodedRect, EncodingError> {
    let w = usize::from(rect.w);
    let maxes = channel_maxes(fmt);
    let mut out = vec![((EXPLICIT_FILTER | STREAM_GRADIENT as u8) << 4), TightFilter::Gradient as u8];
    let mut data = Vec::with_capacity(pixels.len() * tpixel_len(fmt));
    let mut prev = vec![[0u16; 3]; w];
    for row in pixels.chunks_exact(w) {
        let cur: Vec<[u16; 3]> = row
            .iter()
            .map(|&p| {
                let (r, g, b) = fmt.unpack(p);
                [r, g, b]
            })
            .collect();
        for x in 0..w {
            let mut res = [0u16; 3];
            for c in 0..3 {
                let pred = gradient_predict(&prev, &cur, x, c, maxes[c]);
                res[c] = cur[x][c].wrapping_sub(pred) & maxes[c];
            }
            if fmt.is_rgb888() {
                data.extend_from_slice(&[res[0] as u8, res[1] as u8, res[2] as u8]);
            } else {
                fmt.write_pixel(fmt.pack(res[0], res[1], res[2]), &mut data);
            }
        }
        prev = cur;
    }
    push_data(&data, STREAM_GRADIENT, ctx, &mut out)?;
    Ok(EncodedRect { rect, encoding: EncodingId::Tight, payload: out })
}

pub(super) fn decode(
    payload: &[u8],
    rect: Rectangle,
    fmt: &PixelFormat,
    ctx: &mut DecompressionContext,
) -> Result<Vec<u32>, EncodingError> {
    let (w, h) = (usize::from(rect.w), usize::from(rect.h));
    let area = w * h;
    let tlen = tpixel_len(fmt);
    let mut c = Cursor::new(payload);
    let control = c.u8()?;
    let kind = control >> 4;
    if kind == FILL {
        let p = read_tpixel(c.take(tlen)?, fmt);
        c.finish()?;
        reset_streams(control, ctx);
        return Ok(vec![p; area]);
    }
    if kind == JPEG {
        return Err(EncodingError::UnknownEncoding(EncodingId::Tight.code()));
    }
    if kind > JPEG {
        return Err(EncodingError::Malformed(format!("bad Tight control byte {control:#04x}")));
    }
    let stream = usize::from(kind & 0x03);
    let filter = if kind & EXPLICIT_FILTER != 0 { c.u8()? } else { 0 };
    let mut colors = Vec::new();
    let data_len = match filter {
        0 | 2 => area * tlen,
        1 => {
            let n = usize::from(c.u8()?) + 1;
            let raw = c.take(n * tlen)?;
            colors = raw.chunks_exact(tlen).map(|b| read_tpixel(b, fmt)).collect();
            if n == 2 {
                w.div_ceil(8) * h
            } else {
                area
            }
        }
        f => return Err(EncodingError::Malformed(format!("unknown Tight filter {f}"))),
    };
    let data = if data_len < MIN_TO_COMPRESS {
        let d = c.take(data_len)?.to_vec();
        c.finish()?;
        reset_streams(control, ctx);
        d
    } else {
        let len = read_compact_len(&mut c)?;
        let z = c.take(len)?;
        c.finish()?;
        reset_streams(control, ctx);
        ctx.tight[stream].inflate(z, data_len)?
    };

    match filter {
        0 => Ok(data.chunks_exact(tlen).map(|b| read_tpixel(b, fmt)).collect()),
        1 if colors.len() == 2 => {
            let row_bytes = w.div_ceil(8);
            let mut out = Vec::with_capacity(area);
            for y in 0..h {
                for x in 0..w {
                    let bit = data[y * row_bytes + x / 8] & (0x80 >> (x % 8)) != 0;
                    out.push(colors[usize::from(bit)]);
                }
            }
            Ok(out)
        }
        1 => data
            .iter()
            .map(|&i| {
                colors
                    .get(usize::from(i))
                    .copied()
                    .ok_or_else(|| EncodingError::Malformed(format!("palette index {i} out of range")))
            })
            .collect(),
        _ => {
            let maxes = channel_maxes(fmt);
            let mut out = Vec::with_capacity(area);
            let mut prev = vec![[0u16; 3]; w];
            for row in data.chunks_exact(w * tlen) {
                let mut cur = vec![[0u16; 3]; w];
                for x in 0..w {
                    let b = &row[x * tlen..(x + 1) * tlen];
                    let res = if fmt.is_rgb888() {
                        [u16::from(b[0]), u16::from(b[1]), u16::from(b[2])]
                    } else {
                        let (r, g, bl) = fmt.unpack(fmt.read_pixel(b));
                        [r, g, bl]
                    };
                    for ch in 0..3 {
                        let pred = gradient_predict(&prev, &cur, x, ch, maxes[ch]);
                        cur[x][ch] = res[ch].wrapping_add(pred) & maxes[ch];
                    }
                    out.push(fmt.pack(cur[x][0], cur[x][1], cur[x][2]));
                }
                prev = cur;
            }
            Ok(out)
        }
    }
}

fn reset_streams(control: u8, ctx: &mut DecompressionContext) {
    for i in 0..4 {
        if control & (1 << i) != 0 {
            ctx.reset_tight(i);
        }
    }
}
