/// A solid-colour run rectangle inside an encoded area, relative to its origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Subrect {
    pub color: u32,
    pub x: u16,
    pub y: u16,
    pub w: u16,
    pub h: u16,
}

/// Most frequent pixel value; ties go to the value seen first in raster order.
pub(crate) fn modal_pixel(pixels: &[u32]) -> u32 {
    let mut counts: Vec<(u32, usize, usize)> = Vec::new();
    let mut index = std::collections::HashMap::new();
    for (i, &p) in pixels.iter().enumerate() {
        let slot = *index.entry(p).or_insert_with(|| {
            counts.push((p, 0, i));
            counts.len() - 1
        });
        counts[slot].1 += 1;
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.2.cmp(&a.2)))
        .map(|c| c.0)
        .unwrap_or(0)
}

/// Greedy row-run merge: maximal runs of one non-background colour per row,
/// extended downwards while the run below has the same span and colour.
pub(crate) fn extract_subrects(pixels: &[u32], width: usize, height: usize, bg: u32) -> Vec<Subrect> {
    let mut done = Vec::new();
    let mut open: Vec<Subrect> = Vec::new();
    for y in 0..height {
        let row = &pixels[y * width..(y + 1) * width];
        let mut next_open = Vec::new();
        let mut oi = 0;
        let mut x = 0;
        while x < width {
            let c = row[x];
            if c == bg {
                x += 1;
                continue;
            }
            let start = x;
            while x < width && row[x] == c {
                x += 1;
            }
            let (sx, sw) = (start as u16, (x - start) as u16);
            while oi < open.len() && open[oi].x < sx {
                done.push(open[oi]);
                oi += 1;
            }
            if oi < open.len() && open[oi].x == sx && open[oi].w == sw && open[oi].color == c {
                let mut s = open[oi];
                s.h += 1;
                next_open.push(s);
                oi += 1;
            } else {
                next_open.push(Subrect { color: c, x: sx, y: y as u16, w: sw, h: 1 });
            }
        }
        done.extend_from_slice(&open[oi..]);
        open = next_open;
    }
    done.extend(open);
    done.sort_by_key(|s| (s.y, s.x));
    done
}
