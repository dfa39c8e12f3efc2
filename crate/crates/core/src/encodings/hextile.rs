use super::cursor::Cursor;
use super::subrect::{extract_subrects, modal_pixel};
use super::{EncodedRect, EncodingError, EncodingId};
use crate::pixel::{FrameBuffer, PixelFormat, Rectangle};

pub const HEXTILE_TILE: u16 = 16;

pub(crate) const RAW: u8 = 0x01;
pub(crate) const BACKGROUND_SPECIFIED: u8 = 0x02;
pub(crate) const FOREGROUND_SPECIFIED: u8 = 0x04;
pub(crate) const ANY_SUBRECTS: u8 = 0x08;
pub(crate) const SUBRECTS_COLOURED: u8 = 0x10;

pub fn hextile_tile_count(rect: &Rectangle) -> usize {
    usize::from(rect.w).div_ceil(16) * usize::from(rect.h).div_ceil(16)
}

/// Iterates the tiles of `rect` in raster order, relative to the rect origin.
pub(crate) fn tiles(rect: Rectangle) -> impl Iterator<Item = (u16, u16, u16, u16)> {
    let (w, h) = (rect.w, rect.h);
    (0..h).step_by(16).flat_map(move |ty| {
        (0..w).step_by(16).map(move |tx| (tx, ty, (w - tx).min(16), (h - ty).min(16)))
    })
}

#[derive(Default)]
struct Carry {
    bg: Option<u32>,
    fg: Option<u32>,
}

fn encode_tile(tile: &[u32], tw: usize, th: usize, fmt: &PixelFormat, carry: &mut Carry, out: &mut Vec<u8>) {
    let bpp = fmt.bytes_per_pixel();
    let first = tile[0];
    let mut second = None;
    let mut many = false;
    for &p in tile {
        if p != first {
            match second {
                None => second = Some(p),
                Some(s) if s != p => {
                    many = true;
                    break;
                }
                _ => {}
            }
        }
    }

    if second.is_none() {
        if carry.bg == Some(first) {
            out.push(0);
        } else {
            out.push(BACKGROUND_SPECIFIED);
            fmt.write_pixel(first, out);
            carry.bg = Some(first);
        }
        return;
    }

    let bg = modal_pixel(tile);
    let subs = extract_subrects(tile, tw, th, bg);
    let mut mask = ANY_SUBRECTS;
    let send_bg = carry.bg != Some(bg);
    let mut size = 2 + if send_bg { bpp } else { 0 };
    let fg = if many {
        mask |= SUBRECTS_COLOURED;
        size += subs.len() * (bpp + 2);
        None
    } else {
        let fg = if second == Some(bg) { first } else { second.unwrap_or(first) };
        size += subs.len() * 2 + if carry.fg != Some(fg) { bpp } else { 0 };
        Some(fg)
    };

    if subs.len() > 255 || size > 1 + tw * th * bpp {
        out.push(RAW);
        for &p in tile {
            fmt.write_pixel(p, out);
        }
        carry.bg = None;
        carry.fg = None;
        return;
    }

    if send_bg {
        mask |= BACKGROUND_SPECIFIED;
    }
    let send_fg = matches!(fg, Some(f) if carry.fg != Some(f));
    if send_fg {
        mask |= FOREGROUND_SPECIFIED;
    }
    out.push(mask);
    if send_bg {
        fmt.write_pixel(bg, out);
        carry.bg = Some(bg);
    }
    if send_fg {
        let f = fg.unwrap_or_default();
        fmt.write_pixel(f, out);
        carry.fg = Some(f);
    }
    out.push(subs.len() as u8);
    for s in &subs {
        if many {
            fmt.write_pixel(s.color, out);
        }
        out.push(((s.x as u8) << 4) | s.y as u8);
        out.push((((s.w - 1) as u8) << 4) | (s.h - 1) as u8);
    }
    if many {
        carry.fg = None;
    }
}

/// Hextile: 16×16 tiles in raster order, each with a subencoding mask.
pub fn encode_hextile(fb: &FrameBuffer, rect: Rectangle, fmt: &PixelFormat) -> Result<EncodedRect, EncodingError> {
    let pixels = fb.extract(&rect, fmt)?;
    let w = usize::from(rect.w);
    let mut out = Vec::new();
    let mut carry = Carry::default();
    let mut tile = Vec::with_capacity(256);
    for (tx, ty, tw, th) in tiles(rect) {
        tile.clear();
        for y in ty..ty + th {
            let start = usize::from(y) * w + usize::from(tx);
            tile.extend_from_slice(&pixels[start..start + usize::from(tw)]);
        }
        encode_tile(&tile, usize::from(tw), usize::from(th), fmt, &mut carry, &mut out);
    }
    Ok(EncodedRect { rect, encoding: EncodingId::Hextile, payload: out })
}

pub(super) fn decode(payload: &[u8], rect: Rectangle, fmt: &PixelFormat) -> Result<Vec<u32>, EncodingError> {
    let w = usize::from(rect.w);
    let mut out = vec![0u32; rect.area()];
    let mut c = Cursor::new(payload);
    let mut bg: Option<u32> = None;
    let mut fg: Option<u32> = None;
    for (tx, ty, tw, th) in tiles(rect) {
        let (tx, ty, tw, th) = (usize::from(tx), usize::from(ty), usize::from(tw), usize::from(th));
        let mask = c.u8()?;
        if mask & !0x1F != 0 {
            return Err(EncodingError::Malformed(format!("unknown hextile mask bits {mask:#04x}")));
        }
        if mask & RAW != 0 {
            for y in ty..ty + th {
                for x in tx..tx + tw {
                    out[y * w + x] = c.pixel(fmt)?;
                }
            }
            continue;
        }
        if mask & BACKGROUND_SPECIFIED != 0 {
            bg = Some(c.pixel(fmt)?);
        }
        let tile_bg = bg.ok_or_else(|| EncodingError::Malformed("tile without a background".into()))?;
        if mask & FOREGROUND_SPECIFIED != 0 {
            fg = Some(c.pixel(fmt)?);
        }
        for y in ty..ty + th {
            out[y * w + tx..y * w + tx + tw].fill(tile_bg);
        }
        if mask & ANY_SUBRECTS == 0 {
            continue;
        }
        let n = c.u8()?;
        for _ in 0..n {
            let color = if mask & SUBRECTS_COLOURED != 0 {
                c.pixel(fmt)?
            } else {
                fg.ok_or_else(|| EncodingError::Malformed("subrect without a foreground".into()))?
            };
            let xy = c.u8()?;
            let wh = c.u8()?;
            let (sx, sy) = (usize::from(xy >> 4), usize::from(xy & 0x0F));
            let (sw, sh) = (usize::from(wh >> 4) + 1, usize::from(wh & 0x0F) + 1);
            if sx + sw > tw || sy + sh > th {
                return Err(EncodingError::Malformed(format!(
                    "subrect {sx},{sy} {sw}x{sh} exceeds {tw}x{th} tile"
                )));
            }
            for y in ty + sy..ty + sy + sh {
                out[y * w + tx + sx..y * w + tx + sx + sw].fill(color);
            }
        }
    }
    c.finish()?;
    Ok(out)
}
