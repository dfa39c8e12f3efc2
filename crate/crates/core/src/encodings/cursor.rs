use super::EncodingError;
use crate::pixel::PixelFormat;

/// Bounds-checked reader over an encoded payload.
pub(crate) struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Cursor { buf, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], EncodingError> {
        if self.remaining() < n {
            return Err(EncodingError::TruncatedPayload);
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8, EncodingError> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16, EncodingError> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    pub fn u32(&mut self) -> Result<u32, EncodingError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub fn pixel(&mut self, fmt: &PixelFormat) -> Result<u32, EncodingError> {
        Ok(fmt.read_pixel(self.take(fmt.bytes_per_pixel())?))
    }

    /// Fails with `Malformed` if bytes are left over.
    pub fn finish(&self) -> Result<(), EncodingError> {
        if self.remaining() == 0 {
            Ok(())
        } else {
            Err(EncodingError::Malformed(format!("{} trailing bytes", self.remaining())))
        }
    }
}
