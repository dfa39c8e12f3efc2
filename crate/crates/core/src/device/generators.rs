//! Procedural screen content for the simulated handset.
//!
//! Every generator is a pure function of its parameters, the scenario seed
//! and the time since its step started. No anti-aliasing: frames are
//! pixel-exact on every platform.

use super::DeviceError;
use crate::pixel::{FrameBuffer, PixelFormat, Rectangle};
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

pub const STATUS_BAR_HEIGHT: u16 = 24;

/// Registered generator kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeneratorId {
    Home,
    BrowserScroll,
    MusicPlayer,
    Transition,
}

impl GeneratorId {
    pub fn name(self) -> &'static str {
        match self {
            GeneratorId::Home => "home",
            GeneratorId::BrowserScroll => "browser_scroll",
            GeneratorId::MusicPlayer => "music_player",
            GeneratorId::Transition => "transition",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, DeviceError> {
        builtin_generators()
            .into_iter()
            .find(|g| g.name() == name)
            .ok_or_else(|| DeviceError::UnknownGenerator(name.to_string()))
    }
}

pub fn builtin_generators() -> [GeneratorId; 4] {
    [GeneratorId::Home, GeneratorId::BrowserScroll, GeneratorId::MusicPlayer, GeneratorId::Transition]
}

pub type Params = BTreeMap<String, f64>;

fn param(params: &Params, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

/// splitmix64 finaliser over (seed, a, b).
pub(crate) fn hash3(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn rgb(r: u8, g: u8, b: u8) -> u32 {
    PixelFormat::canonical().from_rgb8(r, g, b)
}

const INK: u32 = 0x0020_2124;
const WHITE: u32 = 0x00FF_FFFF;

/// 5×7 glyph bitmaps, one byte per row (low 5 bits).
struct Font {
    glyphs: Vec<[u8; 7]>,
}

impl Font {
    fn new(seed: u64) -> Self {
        let glyphs = (0..24u64)
            .map(|g| {
                let mut rows = [0u8; 7];
                for s in 0..3u64 {
                    let h = hash3(seed ^ 0xF0, g, s);
                    match h % 4 {
                        0 => {
                            let col = (h >> 8) % 5;
                            for r in rows.iter_mut() {
                                *r |= 1 << col;
                            }
                        }
                        1 => {
                            let row = ((h >> 8) % 7) as usize;
                            rows[row] |= 0x1F;
                        }
                        2 => {
                            for (i, r) in rows.iter_mut().enumerate().skip(((h >> 8) % 3) as usize) {
                                *r |= 1 << ((i + (h as usize >> 12)) % 5);
                            }
                        }
                        _ => {
                            let top = ((h >> 8) % 4) as usize;
                            for r in rows.iter_mut().skip(top).take(3) {
                                *r |= 0x11;
                            }
                            rows[top] |= 0x1F;
                        }
                    }
                }
                rows
            })
            .collect();
        Font { glyphs }
    }

    /// Draws a run of words starting at (x, y); returns nothing past `max_x`.
    #[allow(clippy::too_many_arguments)]
    fn draw_words(&self, fb: &mut FrameBuffer, clip: Rectangle, x: i32, y: i32, max_x: i32, scale: i32, color: u32, seed: u64) {
        let mut cx = x;
        let mut word = 0u64;
        loop {
            let h = hash3(seed, word, 7);
            let len = 2 + (h % 7) as i32;
            let width = len * 6 * scale;
            if cx + width > max_x {
                break;
            }
            for i in 0..len {
                let g = &self.glyphs[(hash3(seed, word, 100 + i as u64) % self.glyphs.len() as u64) as usize];
                for (ry, bits) in g.iter().enumerate() {
                    for rx in 0..5 {
                        if bits & (1 << (4 - rx)) != 0 {
                            let px = cx + (i * 6 + rx) * scale;
                            let py = y + ry as i32 * scale;
                            fill_clipped(fb, clip, px, py, scale, scale, color);
                        }
                    }
                }
            }
            cx += width + 4 * scale;
            word += 1;
        }
    }
}

fn fill_clipped(fb: &mut FrameBuffer, clip: Rectangle, x: i32, y: i32, w: i32, h: i32, color: u32) {
    let x0 = x.max(i32::from(clip.x));
    let y0 = y.max(i32::from(clip.y));
    let x1 = (x + w).min(clip.right() as i32);
    let y1 = (y + h).min(clip.bottom() as i32);
    if x1 > x0 && y1 > y0 {
        fb.fill_rect(Rectangle::new(x0 as u16, y0 as u16, (x1 - x0) as u16, (y1 - y0) as u16), color);
    }
}

/// Periodic multi-colour texture: diagonal bands with a coarse overlay.
fn texture(fb: &mut FrameBuffer, clip: Rectangle, origin_y: i32, palette: &[u32], band: i32) {
    let r = clip.intersect(&fb.bounds());
    for y in r.y..r.y + r.h {
        let ty = i32::from(y) - origin_y;
        let row = fb.row_mut(y);
        for x in r.x..r.x + r.w {
            let tx = i32::from(x - r.x);
            let diag = (tx + 2 * ty).rem_euclid(band * palette.len() as i32) / band;
            let cell = ((tx / 24) + (ty.div_euclid(20))).rem_euclid(2);
            let idx = (diag + cell * 2) as usize % palette.len();
            row[usize::from(x)] = palette[idx];
        }
    }
}

/// Sine approximation (Bhaskara) from basic arithmetic only, so results
/// are identical on every platform.
fn wave(t: f64) -> f64 {
    let x = t - (t / TAU).floor() * TAU;
    let (x, sign) = if x > PI { (x - PI, -1.0) } else { (x, 1.0) };
    sign * 16.0 * x * (PI - x) / (5.0 * PI * PI - 4.0 * x * (PI - x))
}

/// Photograph stand-in: a bilinear blend of four corner colours with a
/// slow ripple on top. Pixels depend only on image-local coordinates, so the
/// picture moves rigidly when scrolled.
#[allow(clippy::too_many_arguments)]
fn photo(fb: &mut FrameBuffer, clip: Rectangle, x: i32, y: i32, w: i32, h: i32, corners: &[u32; 4], phase: f64) {
    let r = clip.intersect(&fb.bounds());
    let x0 = x.max(i32::from(r.x));
    let y0 = y.max(i32::from(r.y));
    let x1 = (x + w).min(r.right() as i32);
    let y1 = (y + h).min(r.bottom() as i32);
    if x1 <= x0 || y1 <= y0 {
        return;
    }
    let fmt = PixelFormat::canonical();
    let c: Vec<[f64; 3]> = corners
        .iter()
        .map(|&p| {
            let (r, g, b) = fmt.unpack(p);
            [f64::from(r), f64::from(g), f64::from(b)]
        })
        .collect();
    for py in y0..y1 {
        let v = f64::from(py - y) / f64::from(h.max(1));
        let row = fb.row_mut(py as u16);
        for px in x0..x1 {
            let u = f64::from(px - x) / f64::from(w.max(1));
            let mut ch = [0u8; 3];
            for (k, out) in ch.iter_mut().enumerate() {
                let top = c[0][k] * (1.0 - u) + c[1][k] * u;
                let bottom = c[2][k] * (1.0 - u) + c[3][k] * u;
                let ripple = 28.0 * wave(u * 5.1 + phase + k as f64) * wave(v * 3.7 - phase + FRAC_PI_2);
                *out = (top * (1.0 - v) + bottom * v + ripple).round().clamp(0.0, 255.0) as u8;
            }
            row[px as usize] = rgb(ch[0], ch[1], ch[2]);
        }
    }
}

fn status_bar(fb: &mut FrameBuffer, font: &Font) {
    let w = fb.width();
    let bar = Rectangle::new(0, 0, w, STATUS_BAR_HEIGHT.min(fb.height()));
    fb.fill_rect(bar, rgb(0x10, 0x10, 0x14));
    font.draw_words(fb, bar, 8, 8, 90, 1, WHITE, 0x5151);
    let right = i32::from(w);
    fill_clipped(fb, bar, right - 40, 7, 26, 11, WHITE);
    fill_clipped(fb, bar, right - 38, 9, 16, 7, rgb(0x30, 0xC0, 0x50));
    fill_clipped(fb, bar, right - 14, 10, 3, 5, WHITE);
}

pub(crate) struct Home {
    font: Font,
    seed: u64,
    wallpaper: Vec<u32>,
    icon_colors: Vec<u32>,
}

impl Home {
    fn new(seed: u64) -> Self {
        Home {
            font: Font::new(seed),
            seed,
            wallpaper: vec![rgb(0x1E, 0x3C, 0x72), rgb(0x2A, 0x52, 0x98), rgb(0x17, 0x2E, 0x5A), rgb(0x35, 0x62, 0xB0)],
            icon_colors: (0..8)
                .map(|i| {
                    let h = hash3(seed, 0x1C0, i);
                    rgb(0x40 + (h % 0xB0) as u8, 0x40 + ((h >> 8) % 0xB0) as u8, 0x40 + ((h >> 16) % 0xB0) as u8)
                })
                .collect(),
        }
    }

    fn render(&self, fb: &mut FrameBuffer) {
        let (w, h) = (fb.width(), fb.height());
        let body = Rectangle::new(0, STATUS_BAR_HEIGHT, w, h.saturating_sub(STATUS_BAR_HEIGHT));
        texture(fb, body, 0, &self.wallpaper, 6);
        let cols = 4i32;
        let cell_w = i32::from(w) / cols;
        let dock_h = 104i32;
        let grid_bottom = i32::from(h) - dock_h;
        let mut n = 0u64;
        for row in 0.. {
            let cy = i32::from(STATUS_BAR_HEIGHT) + 24 + row * 118;
            if cy + 100 > grid_bottom {
                break;
            }
            for col in 0..cols {
                self.icon(fb, body, col * cell_w + (cell_w - 64) / 2, cy, n);
                n += 1;
            }
        }
        let dock = Rectangle::new(0, (i32::from(h) - dock_h).max(0) as u16, w, dock_h.min(i32::from(h)) as u16);
        fb.fill_rect(dock.intersect(&fb.bounds()), rgb(0x0C, 0x16, 0x2C));
        for col in 0..cols {
            self.icon(fb, body, col * cell_w + (cell_w - 64) / 2, i32::from(h) - dock_h + 20, 100 + col as u64);
        }
        status_bar(fb, &self.font);
    }

    fn icon(&self, fb: &mut FrameBuffer, clip: Rectangle, x: i32, y: i32, n: u64) {
        let color = self.icon_colors[(hash3(self.seed, n, 3) % self.icon_colors.len() as u64) as usize];
        fill_clipped(fb, clip, x, y, 64, 64, color);
        let g = hash3(self.seed, n, 4);
        fill_clipped(fb, clip, x + 16, y + 16, 32, 32, WHITE);
        fill_clipped(fb, clip, x + 20 + (g % 12) as i32, y + 20, 8, 24, color);
        fill_clipped(fb, clip, x + 20, y + 24 + ((g >> 4) % 12) as i32, 24, 6, color);
        if n < 100 {
            fill_clipped(fb, clip, x - 4, y + 70, 72, 13, rgb(0x0C, 0x16, 0x2C));
            self.font.draw_words(fb, clip, x, y + 73, x + 66, 1, WHITE, self.seed ^ (n << 8));
        }
    }
}

#[derive(Clone, Copy)]
enum Block {
    Heading,
    Paragraph(i32),
    Image(u64),
    Rule,
}

pub(crate) struct Browser {
    font: Font,
    seed: u64,
    velocity: f64,
    blocks: Vec<(i32, i32, Block)>,
    page_height: i32,
    image_palettes: Vec<Vec<u32>>,
}

const URL_BAR: i32 = 56;
const LINE: i32 = 11;

impl Browser {
    fn new(seed: u64, params: &Params) -> Self {
        let mut blocks = Vec::new();
        let mut y = 12;
        let mut i = 0u64;
        while y < 6000 {
            let h = hash3(seed, 0xB10C, i);
            let block = match h % 8 {
                0 | 1 => Block::Heading,
                2..=4 => Block::Paragraph(4 + (h >> 8) as i32 % 6),
                5 | 6 => Block::Image(h >> 16),
                _ => Block::Rule,
            };
            let height = match block {
                Block::Heading => 22,
                Block::Paragraph(lines) => lines * LINE,
                Block::Image(_) => 180,
                Block::Rule => 6,
            };
            blocks.push((y, height, block));
            y += height + 14;
            i += 1;
        }
        let image_palettes = (0..4u64)
            .map(|p| {
                (0..6u64)
                    .map(|c| {
                        let h = hash3(seed, 0x1A6E + p, c);
                        rgb((h % 256) as u8, ((h >> 8) % 256) as u8, ((h >> 16) % 256) as u8)
                    })
                    .collect()
            })
            .collect();
        Browser {
            font: Font::new(seed),
            seed,
            velocity: param(params, "velocity", 240.0),
            blocks,
            page_height: y,
            image_palettes,
        }
    }

    fn offset(&self, local_ms: u64) -> i32 {
        (self.velocity * local_ms as f64 / 1000.0).round() as i32
    }

    fn render(&self, fb: &mut FrameBuffer, local_ms: u64) {
        let (w, h) = (fb.width(), fb.height());
        let top = i32::from(STATUS_BAR_HEIGHT);
        let chrome = Rectangle::new(0, STATUS_BAR_HEIGHT, w, (URL_BAR as u16).min(h.saturating_sub(STATUS_BAR_HEIGHT)));
        fb.fill_rect(chrome, rgb(0xEC, 0xEC, 0xF0));
        fill_clipped(fb, chrome, 10, top + 10, i32::from(w) - 60, 36, WHITE);
        self.font.draw_words(fb, chrome, 20, top + 24, i32::from(w) - 80, 1, rgb(0x30, 0x60, 0x30), self.seed ^ 0x0A11);
        fill_clipped(fb, chrome, i32::from(w) - 40, top + 14, 28, 28, rgb(0x50, 0x50, 0x58));
        let content_top = top + URL_BAR;
        let content = Rectangle::new(0, content_top.min(i32::from(h)) as u16, w, (i32::from(h) - content_top).max(0) as u16);
        fb.fill_rect(content, WHITE);
        let scroll = self.offset(local_ms).rem_euclid(self.page_height.max(1));
        let view_h = i32::from(content.h);
        for &(by, bh, block) in &self.blocks {
            let sy = content_top + by - scroll;
            if sy + bh <= content_top || sy >= content_top + view_h {
                continue;
            }
            match block {
                Block::Heading => {
                    self.font.draw_words(fb, content, 16, sy, i32::from(w) - 16, 2, rgb(0x1A, 0x3D, 0x8F), self.seed ^ by as u64);
                }
                Block::Paragraph(lines) => {
                    for l in 0..lines {
                        let end = if l + 1 == lines { i32::from(w) / 2 } else { i32::from(w) - 16 };
                        self.font.draw_words(fb, content, 16, sy + l * LINE, end, 1, INK, hash3(self.seed, by as u64, l as u64));
                    }
                }
                Block::Image(k) => {
                    let pal = &self.image_palettes[(k % 4) as usize];
                    let corners = [pal[0], pal[1], pal[2], pal[3]];
                    photo(fb, content, 16, sy, i32::from(w) - 32, bh, &corners, (k % 97) as f64 * 0.37);
                }
                Block::Rule => fill_clipped(fb, content, 16, sy + 2, i32::from(w) - 32, 2, rgb(0xC8, 0xC8, 0xD0)),
            }
        }
        status_bar(fb, &self.font);
    }
}

pub(crate) struct Music {
    font: Font,
    seed: u64,
    track_ms: f64,
    tick_ms: u64,
    art: Vec<u32>,
}

impl Music {
    fn new(seed: u64, params: &Params) -> Self {
        Music {
            font: Font::new(seed),
            seed,
            track_ms: param(params, "track_ms", 3000.0).max(1.0),
            tick_ms: param(params, "tick_ms", 250.0).max(1.0) as u64,
            art: vec![rgb(0xE0, 0x60, 0x30), rgb(0xF0, 0xA0, 0x40), rgb(0x90, 0x30, 0x50), rgb(0x40, 0x20, 0x40), rgb(0xF8, 0xD0, 0x80)],
        }
    }

    pub(crate) fn progress_band(w: u16, h: u16) -> Rectangle {
        let y = (i32::from(h) * 3 / 4).min(i32::from(h).saturating_sub(8)).max(0) as u16;
        Rectangle::new(40.min(w / 4), y, w.saturating_sub(2 * 40.min(w / 4)), 8.min(h - y))
    }

    fn render(&self, fb: &mut FrameBuffer, local_ms: u64) {
        let (w, h) = (fb.width(), fb.height());
        let body = Rectangle::new(0, STATUS_BAR_HEIGHT.min(h), w, h.saturating_sub(STATUS_BAR_HEIGHT));
        fb.fill_rect(body, rgb(0x18, 0x18, 0x20));
        let art_w = (i32::from(w) * 2 / 3) as u16;
        let art = Rectangle::new((w - art_w) / 2, STATUS_BAR_HEIGHT + 40, art_w, art_w).intersect(&body);
        texture(fb, art, i32::from(art.y), &self.art, 8);
        let band = Self::progress_band(w, h);
        let text_y = i32::from(art.bottom() as u16) + 24;
        self.font.draw_words(fb, body, i32::from(band.x), text_y, i32::from(w) - 40, 2, WHITE, self.seed ^ 0x7117);
        self.font.draw_words(fb, body, i32::from(band.x), text_y + 26, i32::from(w) / 2, 1, rgb(0xA0, 0xA0, 0xB0), self.seed ^ 0xA27);
        fb.fill_rect(band, rgb(0x50, 0x50, 0x60));
        let ticks = local_ms / self.tick_ms;
        let progress = ((ticks * self.tick_ms) as f64 / self.track_ms).min(1.0);
        let filled = (f64::from(band.w) * progress).round() as u16;
        if filled > 0 {
            fb.fill_rect(Rectangle { w: filled, ..band }, rgb(0xF0, 0x80, 0x30));
        }
        let controls_y = (i32::from(band.bottom() as u16) + 30).min(i32::from(h));
        for (i, size) in [(0, 36), (1, 52), (2, 36)] {
            let cx = i32::from(w) / 2 + (i - 1) * 96 - size / 2;
            fill_clipped(fb, body, cx, controls_y, size, size, WHITE);
        }
        status_bar(fb, &self.font);
    }
}

/// A ready-to-render generator instance.
pub(crate) enum Renderer {
    Home(Home),
    Browser(Browser),
    Music(Music),
    /// Crossfade; the player supplies the two endpoint frames.
    Transition { steps: u32 },
}

impl Renderer {
    pub fn new(id: GeneratorId, params: &Params, seed: u64) -> Self {
        match id {
            GeneratorId::Home => Renderer::Home(Home::new(seed)),
            GeneratorId::BrowserScroll => Renderer::Browser(Browser::new(seed, params)),
            GeneratorId::MusicPlayer => Renderer::Music(Music::new(seed, params)),
            GeneratorId::Transition => Renderer::Transition { steps: param(params, "steps", 8.0).max(1.0) as u32 },
        }
    }

    /// Renders a self-contained generator; transitions are handled by the player.
    pub fn render(&self, fb: &mut FrameBuffer, local_ms: u64) {
        match self {
            Renderer::Home(g) => g.render(fb),
            Renderer::Browser(g) => g.render(fb, local_ms),
            Renderer::Music(g) => g.render(fb, local_ms),
            Renderer::Transition { .. } => {}
        }
    }
}

/// Blends `from` towards `to` in `steps` discrete levels over `duration_ms`.
pub(crate) fn crossfade(from: &FrameBuffer, to: &FrameBuffer, local_ms: u64, duration_ms: u64, steps: u32) -> FrameBuffer {
    let k = (local_ms * u64::from(steps) / duration_ms.max(1)).min(u64::from(steps) - 1) + 1;
    let den = u64::from(steps) + 1;
    let fmt = *from.format();
    let px = from
        .pixels()
        .iter()
        .zip(to.pixels())
        .map(|(&a, &b)| {
            if a == b {
                return a;
            }
            let (ar, ag, ab) = fmt.unpack(a);
            let (br, bg, bb) = fmt.unpack(b);
            let mix = |x: u16, y: u16| ((u64::from(x) * (den - k) + u64::from(y) * k) / den) as u16;
            fmt.pack(mix(ar, br), mix(ag, bg), mix(ab, bb))
        })
        .collect();
    FrameBuffer::from_pixels(from.width(), from.height(), fmt, px).expect("same dimensions")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pixel::diff_regions;

    fn render(id: GeneratorId, t: u64, params: &Params) -> FrameBuffer {
        let mut fb = FrameBuffer::new(480, 800, PixelFormat::canonical(), 0);
        Renderer::new(id, params, 7).render(&mut fb, t);
        fb
    }

    #[test]
    fn home_is_static() {
        let p = Params::new();
        assert_eq!(render(GeneratorId::Home, 0, &p), render(GeneratorId::Home, 5_000, &p));
    }

    #[test]
    fn browser_shifts_content_by_velocity() {
        let p = Params::new();
        let a = render(GeneratorId::BrowserScroll, 1000, &p);
        let b = render(GeneratorId::BrowserScroll, 1050, &p);
        // 240 px/s over 50 ms = 12 rows
        let top = (STATUS_BAR_HEIGHT as i32 + URL_BAR) as u16;
        for y in top..800 - 12 {
            assert_eq!(a.row(y + 12), b.row(y), "row {y}");
        }
        assert_ne!(a, b);
    }

    #[test]
    fn browser_frames_differ_pairwise_at_50ms() {
        let p = Params::new();
        let frames: Vec<u64> = (0..20).map(|i| render(GeneratorId::BrowserScroll, i * 50, &p).checksum()).collect();
        for i in 0..frames.len() {
            for j in i + 1..frames.len() {
                assert_ne!(frames[i], frames[j]);
            }
        }
    }

    #[test]
    fn music_changes_only_progress_band() {
        let p = Params::new();
        let band = Music::progress_band(480, 800);
        let a = render(GeneratorId::MusicPlayer, 0, &p);
        let b = render(GeneratorId::MusicPlayer, 1000, &p);
        let rects = diff_regions(&a, &b, 1).unwrap();
        assert!(!rects.is_empty());
        for r in rects {
            assert_eq!(r.intersect(&band), r);
        }
    }

    #[test]
    fn crossfade_endpoints() {
        let f = PixelFormat::canonical();
        let a = FrameBuffer::new(4, 4, f, 0);
        let b = FrameBuffer::new(4, 4, f, 0x00FF_FFFF);
        let first = crossfade(&a, &b, 0, 300, 8);
        let last = crossfade(&a, &b, 299, 300, 8);
        assert_eq!(f.unpack(first.get(0, 0)).0, 255 / 9);
        assert_eq!(f.unpack(last.get(0, 0)).0, 255 * 8 / 9);
    }

    #[test]
    fn unknown_generator_name() {
        assert!(matches!(GeneratorId::from_name("fireworks"), Err(DeviceError::UnknownGenerator(_))));
    }
}
