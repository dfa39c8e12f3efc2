use super::PixelError;

/// A true-color RFB pixel format.
///
/// Channel maxima are stored as values (`2^k - 1`), shifts as bit offsets
/// into the pixel word. Construction through [`PixelFormat::new`] checks the
/// invariants; the preset constructors are known-good.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PixelFormat {
    pub bits_per_pixel: u8,
    pub depth: u8,
    pub big_endian: bool,
    pub true_color: bool,
    pub red_max: u16,
    pub green_max: u16,
    pub blue_max: u16,
    pub red_shift: u8,
    pub green_shift: u8,
    pub blue_shift: u8,
}

impl PixelFormat {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        bits_per_pixel: u8,
        depth: u8,
        big_endian: bool,
        red_max: u16,
        green_max: u16,
        blue_max: u16,
        red_shift: u8,
        green_shift: u8,
        blue_shift: u8,
    ) -> Result<Self, PixelError> {
        let fmt = PixelFormat {
            bits_per_pixel,
            depth,
            big_endian,
            true_color: true,
            red_max,
            green_max,
            blue_max,
            red_shift,
            green_shift,
            blue_shift,
        };
        fmt.validate()?;
        Ok(fmt)
    }

    /// 32 bpp, depth 24, little-endian, 8-bit channels at 16/8/0.
    pub const fn canonical() -> Self {
        PixelFormat {
            bits_per_pixel: 32,
            depth: 24,
            big_endian: false,
            true_color: true,
            red_max: 255,
            green_max: 255,
            blue_max: 255,
            red_shift: 16,
            green_shift: 8,
            blue_shift: 0,
        }
    }

    /// 16 bpp RGB565, little-endian.
    pub const fn rgb565() -> Self {
        PixelFormat {
            bits_per_pixel: 16,
            depth: 16,
            big_endian: false,
            true_color: true,
            red_max: 31,
            green_max: 63,
            blue_max: 31,
            red_shift: 11,
            green_shift: 5,
            blue_shift: 0,
        }
    }

    /// 8 bpp BGR233.
    pub const fn bgr233() -> Self {
        PixelFormat {
            bits_per_pixel: 8,
            depth: 8,
            big_endian: false,
            true_color: true,
            red_max: 7,
            green_max: 7,
            blue_max: 3,
            red_shift: 0,
            green_shift: 3,
            blue_shift: 6,
        }
    }

    pub fn validate(&self) -> Result<(), PixelError> {
        if !matches!(self.bits_per_pixel, 8 | 16 | 32) {
            return Err(PixelError::InvalidFormat("bits per pixel must be 8, 16 or 32"));
        }
        if self.depth == 0 || self.depth > 32 || self.depth > self.bits_per_pixel {
            return Err(PixelError::InvalidFormat("depth must be within 1..=bits_per_pixel"));
        }
        if !self.true_color {
            return Err(PixelError::InvalidFormat("colour-map formats are not supported"));
        }
        let mut used: u64 = 0;
        for (max, shift) in self.channels() {
            if max == 0 || (u32::from(max) + 1).count_ones() != 1 {
                return Err(PixelError::InvalidFormat("channel max must be 2^k - 1"));
            }
            let mask = u64::from(max) << shift;
            if mask >> self.bits_per_pixel != 0 {
                return Err(PixelError::InvalidFormat("channel does not fit in the pixel"));
            }
            if used & mask != 0 {
                return Err(PixelError::InvalidFormat("channel masks overlap"));
            }
            used |= mask;
        }
        Ok(())
    }

    fn channels(&self) -> [(u16, u8); 3] {
        [
            (self.red_max, self.red_shift),
            (self.green_max, self.green_shift),
            (self.blue_max, self.blue_shift),
        ]
    }

    pub fn bytes_per_pixel(&self) -> usize {
        usize::from(self.bits_per_pixel / 8)
    }

    /// Largest value representable in `bits_per_pixel`.
    pub fn value_mask(&self) -> u32 {
        if self.bits_per_pixel == 32 {
            u32::MAX
        } else {
            (1u32 << self.bits_per_pixel) - 1
        }
    }

    pub fn fits(&self, value: u32) -> bool {
        value & !self.value_mask() == 0
    }

    /// Splits a pixel into its (r, g, b) channel values.
    pub fn unpack(&self, value: u32) -> (u16, u16, u16) {
        let ch = |max: u16, shift: u8| ((value >> shift) & u32::from(max)) as u16;
        (
            ch(self.red_max, self.red_shift),
            ch(self.green_max, self.green_shift),
            ch(self.blue_max, self.blue_shift),
        )
    }

    pub fn pack(&self, r: u16, g: u16, b: u16) -> u32 {
        (u32::from(r & self.red_max) << self.red_shift)
            | (u32::from(g & self.green_max) << self.green_shift)
            | (u32::from(b & self.blue_max) << self.blue_shift)
    }

    /// Builds a pixel from 8-bit channel intensities.
    pub fn from_rgb8(&self, r: u8, g: u8, b: u8) -> u32 {
        self.pack(
            rescale(u16::from(r), 255, self.red_max),
            rescale(u16::from(g), 255, self.green_max),
            rescale(u16::from(b), 255, self.blue_max),
        )
    }

    pub fn to_rgb8(&self, value: u32) -> (u8, u8, u8) {
        let (r, g, b) = self.unpack(value);
        (
            rescale(r, self.red_max, 255) as u8,
            rescale(g, self.green_max, 255) as u8,
            rescale(b, self.blue_max, 255) as u8,
        )
    }

    /// Serializes one pixel into `bytes_per_pixel` bytes.
    pub fn write_pixel(&self, value: u32, out: &mut Vec<u8>) {
        match (self.bits_per_pixel, self.big_endian) {
            (8, _) => out.push(value as u8),
            (16, false) => out.extend_from_slice(&(value as u16).to_le_bytes()),
            (16, true) => out.extend_from_slice(&(value as u16).to_be_bytes()),
            (_, false) => out.extend_from_slice(&value.to_le_bytes()),
            (_, true) => out.extend_from_slice(&value.to_be_bytes()),
        }
    }

    /// Reads one pixel; `bytes` must hold at least `bytes_per_pixel` bytes.
    pub fn read_pixel(&self, bytes: &[u8]) -> u32 {
        match (self.bits_per_pixel, self.big_endian) {
            (8, _) => u32::from(bytes[0]),
            (16, false) => u32::from(u16::from_le_bytes([bytes[0], bytes[1]])),
            (16, true) => u32::from(u16::from_be_bytes([bytes[0], bytes[1]])),
            (_, false) => u32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]),
            (_, true) => u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]),
        }
    }

    /// The 16-byte PIXEL_FORMAT block of the RFB wire protocol.
    pub fn to_wire(&self) -> [u8; 16] {
        let mut b = [0u8; 16];
        b[0] = self.bits_per_pixel;
        b[1] = self.depth;
        b[2] = u8::from(self.big_endian);
        b[3] = u8::from(self.true_color);
        b[4..6].copy_from_slice(&self.red_max.to_be_bytes());
        b[6..8].copy_from_slice(&self.green_max.to_be_bytes());
        b[8..10].copy_from_slice(&self.blue_max.to_be_bytes());
        b[10] = self.red_shift;
        b[11] = self.green_shift;
        b[12] = self.blue_shift;
        b
    }

    pub fn from_wire(b: &[u8; 16]) -> Result<Self, PixelError> {
        let fmt = PixelFormat {
            bits_per_pixel: b[0],
            depth: b[1],
            big_endian: b[2] != 0,
            true_color: b[3] != 0,
            red_max: u16::from_be_bytes([b[4], b[5]]),
            green_max: u16::from_be_bytes([b[6], b[7]]),
            blue_max: u16::from_be_bytes([b[8], b[9]]),
            red_shift: b[10],
            green_shift: b[11],
            blue_shift: b[12],
        };
        fmt.validate()?;
        Ok(fmt)
    }

    /// True when every channel is 8 bits wide and the pixel is 32 bpp,
    /// which lets Tight send three-byte pixels.
    pub fn is_rgb888(&self) -> bool {
        self.bits_per_pixel == 32
            && self.depth == 24
            && self.red_max == 255
            && self.green_max == 255
            && self.blue_max == 255
    }
}

impl Default for PixelFormat {
    fn default() -> Self {
        Self::canonical()
    }
}

fn rescale(c: u16, from_max: u16, to_max: u16) -> u16 {
    if from_max == to_max {
        return c;
    }
    let (c, from_max, to_max) = (u32::from(c), u32::from(from_max), u32::from(to_max));
    ((2 * c * to_max + from_max) / (2 * from_max)) as u16
}

/// Converts a pixel between formats, rescaling each channel with rounding.
pub fn convert_pixel(value: u32, from: &PixelFormat, to: &PixelFormat) -> u32 {
    if from == to {
        return value;
    }
    let (r, g, b) = from.unpack(value);
    to.pack(
        rescale(r, from.red_max, to.red_max),
        rescale(g, from.green_max, to.green_max),
        rescale(b, from.blue_max, to.blue_max),
    )
}
