use super::{PixelError, PixelFormat};

/// An axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rectangle {
    pub x: u16,
    pub y: u16,
    pub w: u16,
    pub h: u16,
}

impl Rectangle {
    pub const fn new(x: u16, y: u16, w: u16, h: u16) -> Self {
        Rectangle { x, y, w, h }
    }

    pub fn area(&self) -> usize {
        usize::from(self.w) * usize::from(self.h)
    }

    pub fn right(&self) -> u32 {
        u32::from(self.x) + u32::from(self.w)
    }

    pub fn bottom(&self) -> u32 {
        u32::from(self.y) + u32::from(self.h)
    }

    pub fn is_empty(&self) -> bool {
        self.w == 0 || self.h == 0
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= u32::from(self.x) && x < self.right() && y >= u32::from(self.y) && y < self.bottom()
    }

    pub fn fits_within(&self, width: u16, height: u16) -> bool {
        !self.is_empty() && self.right() <= u32::from(width) && self.bottom() <= u32::from(height)
    }

    pub fn intersects(&self, other: &Rectangle) -> bool {
        !self.intersect(other).is_empty()
    }

    /// Overlap of two rectangles; empty (w or h = 0) when disjoint.
    pub fn intersect(&self, other: &Rectangle) -> Rectangle {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        if x1 <= u32::from(x0) || y1 <= u32::from(y0) {
            return Rectangle::new(x0, y0, 0, 0);
        }
        Rectangle::new(x0, y0, (x1 - u32::from(x0)) as u16, (y1 - u32::from(y0)) as u16)
    }
}

/// A width×height pixel surface in a fixed format, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameBuffer {
    width: u16,
    height: u16,
    format: PixelFormat,
    pixels: Vec<u32>,
}

impl FrameBuffer {
    /// A framebuffer filled with `fill`.
    pub fn new(width: u16, height: u16, format: PixelFormat, fill: u32) -> Self {
        assert!(format.fits(fill), "fill value does not fit the pixel format");
        FrameBuffer {
            width,
            height,
            format,
            pixels: vec![fill; usize::from(width) * usize::from(height)],
        }
    }

    pub fn from_pixels(
        width: u16,
        height: u16,
        format: PixelFormat,
        pixels: Vec<u32>,
    ) -> Result<Self, PixelError> {
        format.validate()?;
        let expected = usize::from(width) * usize::from(height);
        if pixels.len() != expected {
            return Err(PixelError::PixelCount { expected, got: pixels.len() });
        }
        if let Some(&bad) = pixels.iter().find(|&&p| !format.fits(p)) {
            return Err(PixelError::PixelRange(bad));
        }
        Ok(FrameBuffer { width, height, format, pixels })
    }

    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn height(&self) -> u16 {
        self.height
    }

    pub fn format(&self) -> &PixelFormat {
        &self.format
    }

    pub fn bounds(&self) -> Rectangle {
        Rectangle::new(0, 0, self.width, self.height)
    }

    pub fn pixels(&self) -> &[u32] {
        &self.pixels
    }

    pub fn get(&self, x: u16, y: u16) -> u32 {
        self.pixels[usize::from(y) * usize::from(self.width) + usize::from(x)]
    }

    pub fn set(&mut self, x: u16, y: u16, value: u32) {
        debug_assert!(self.format.fits(value));
        let w = usize::from(self.width);
        self.pixels[usize::from(y) * w + usize::from(x)] = value;
    }

    pub fn row(&self, y: u16) -> &[u32] {
        let w = usize::from(self.width);
        let start = usize::from(y) * w;
        &self.pixels[start..start + w]
    }

    pub fn row_mut(&mut self, y: u16) -> &mut [u32] {
        let w = usize::from(self.width);
        let start = usize::from(y) * w;
        &mut self.pixels[start..start + w]
    }

    pub fn fill_rect(&mut self, rect: Rectangle, value: u32) {
        let r = rect.intersect(&self.bounds());
        for y in r.y..r.y + r.h {
            self.row_mut(y)[usize::from(r.x)..usize::from(r.x) + usize::from(r.w)].fill(value);
        }
    }

    pub fn check_rect(&self, rect: &Rectangle) -> Result<(), PixelError> {
        if rect.fits_within(self.width, self.height) {
            Ok(())
        } else {
            Err(PixelError::OutOfBounds(*rect, self.width, self.height))
        }
    }

    /// Copies the pixels of `rect` in raster order, converted to `fmt`.
    pub fn extract(&self, rect: &Rectangle, fmt: &PixelFormat) -> Result<Vec<u32>, PixelError> {
        self.check_rect(rect)?;
        let mut out = Vec::with_capacity(rect.area());
        let x0 = usize::from(rect.x);
        let x1 = x0 + usize::from(rect.w);
        for y in rect.y..rect.y + rect.h {
            let row = &self.row(y)[x0..x1];
            if fmt == &self.format {
                out.extend_from_slice(row);
            } else {
                out.extend(row.iter().map(|&p| super::convert_pixel(p, &self.format, fmt)));
            }
        }
        Ok(out)
    }

    /// Writes a raster-order block of pixels into `rect`.
    pub fn blit(&mut self, rect: &Rectangle, pixels: &[u32]) -> Result<(), PixelError> {
        self.check_rect(rect)?;
        if pixels.len() != rect.area() {
            return Err(PixelError::PixelCount { expected: rect.area(), got: pixels.len() });
        }
        let w = usize::from(rect.w);
        for (i, src) in pixels.chunks_exact(w).enumerate() {
            let y = rect.y + i as u16;
            let x0 = usize::from(rect.x);
            self.row_mut(y)[x0..x0 + w].copy_from_slice(src);
        }
        Ok(())
    }

    /// FNV-1a over dimensions and pixel values; stable across platforms.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |b: u8| {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        };
        for b in self.width.to_be_bytes().into_iter().chain(self.height.to_be_bytes()) {
            feed(b);
        }
        for p in &self.pixels {
            for b in p.to_le_bytes() {
                feed(b);
            }
        }
        h
    }
}
