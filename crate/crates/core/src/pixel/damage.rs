use super::{FrameBuffer, PixelError, Rectangle};

/// Tile edge used by the server's damage tracker; matches Hextile tiles.
pub const DEFAULT_TILE: u16 = 16;

/// Returns tile-aligned, pairwise-disjoint rectangles covering every pixel
/// that differs between `prev` and `next`.
///
/// Dirty tiles are merged into horizontal runs per tile row, and runs with
/// identical column spans in consecutive tile rows are merged vertically.
pub fn diff_regions(
    prev: &FrameBuffer,
    next: &FrameBuffer,
    tile: u16,
) -> Result<Vec<Rectangle>, PixelError> {
    if prev.width() != next.width() || prev.height() != next.height() {
        return Err(PixelError::DimensionMismatch(
            prev.width(),
            prev.height(),
            next.width(),
            next.height(),
        ));
    }
    if prev.format() != next.format() {
        return Err(PixelError::FormatMismatch);
    }
    if tile == 0 {
        return Err(PixelError::ZeroTile);
    }
    let (w, h) = (usize::from(prev.width()), usize::from(prev.height()));
    let t = usize::from(tile);
    let cols = w.div_ceil(t);
    let rows = h.div_ceil(t);
    let mut dirty = vec![false; cols * rows];
    for y in 0..h {
        let a = prev.row(y as u16);
        let b = next.row(y as u16);
        if a == b {
            continue;
        }
        let trow = y / t;
        for tc in 0..cols {
            let idx = trow * cols + tc;
            if dirty[idx] {
                continue;
            }
            let x0 = tc * t;
            let x1 = (x0 + t).min(w);
            if a[x0..x1] != b[x0..x1] {
                dirty[idx] = true;
            }
        }
    }

    // (first col, last col exclusive, first tile row, tile rows) per open run
    let mut open: Vec<(usize, usize, usize, usize)> = Vec::new();
    let mut done: Vec<(usize, usize, usize, usize)> = Vec::new();
    for tr in 0..rows {
        let mut runs = Vec::new();
        let mut c = 0;
        while c < cols {
            if dirty[tr * cols + c] {
                let start = c;
                while c < cols && dirty[tr * cols + c] {
                    c += 1;
                }
                runs.push((start, c));
            } else {
                c += 1;
            }
        }
        let mut next_open = Vec::with_capacity(runs.len());
        for (c0, c1) in runs {
            if let Some(pos) = open.iter().position(|o| o.0 == c0 && o.1 == c1) {
                let mut o = open.swap_remove(pos);
                o.3 += 1;
                next_open.push(o);
            } else {
                next_open.push((c0, c1, tr, 1));
            }
        }
        done.append(&mut open);
        open = next_open;
    }
    done.append(&mut open);
    done.sort_by_key(|&(c0, _, r0, _)| (r0, c0));

    Ok(done
        .into_iter()
        .map(|(c0, c1, r0, nr)| {
            let x = c0 * t;
            let y = r0 * t;
            let x1 = (c1 * t).min(w);
            let y1 = ((r0 + nr) * t).min(h);
            Rectangle::new(x as u16, y as u16, (x1 - x) as u16, (y1 - y) as u16)
        })
        .collect())
}
