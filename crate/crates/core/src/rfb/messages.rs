use super::RfbError;
use crate::encodings::{read_payload, EncodedRect, EncodingId};
use crate::pixel::{PixelFormat, Rectangle};
use std::io::Read;

/// Longest client cut-text accepted before the client is dropped.
pub const MAX_CUT_TEXT: u32 = 1 << 20;
/// Longest SetEncodings list accepted.
pub const MAX_ENCODINGS: u16 = 1024;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClientMessage {
    SetPixelFormat(PixelFormat),
    SetEncodings(Vec<i32>),
    UpdateRequest { incremental: bool, area: Rectangle },
    Key { down: bool, keysym: u32 },
    Pointer { buttons: u8, x: u16, y: u16 },
    CutText(Vec<u8>),
}

pub(crate) fn read_exact<R: Read + ?Sized, const N: usize>(r: &mut R) -> Result<[u8; N], RfbError> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

pub(crate) fn read_u16<R: Read + ?Sized>(r: &mut R) -> Result<u16, RfbError> {
    Ok(u16::from_be_bytes(read_exact(r)?))
}

pub(crate) fn read_u32<R: Read + ?Sized>(r: &mut R) -> Result<u32, RfbError> {
    Ok(u32::from_be_bytes(read_exact(r)?))
}

impl ClientMessage {
    pub fn read_from<R: Read + ?Sized>(r: &mut R) -> Result<Self, RfbError> {
        let [kind] = read_exact::<_, 1>(r)?;
        Ok(match kind {
            0 => {
                read_exact::<_, 3>(r)?;
                let block: [u8; 16] = read_exact(r)?;
                ClientMessage::SetPixelFormat(PixelFormat::from_wire(&block)?)
            }
            2 => {
                read_exact::<_, 1>(r)?;
                let n = read_u16(r)?;
                if n > MAX_ENCODINGS {
                    return Err(RfbError::Protocol(format!("{n} encodings offered")));
                }
                let mut v = Vec::with_capacity(n as usize);
                for _ in 0..n {
                    v.push(i32::from_be_bytes(read_exact(r)?));
                }
                ClientMessage::SetEncodings(v)
            }
            3 => {
                let [inc] = read_exact::<_, 1>(r)?;
                let (x, y, w, h) = (read_u16(r)?, read_u16(r)?, read_u16(r)?, read_u16(r)?);
                ClientMessage::UpdateRequest { incremental: inc != 0, area: Rectangle::new(x, y, w, h) }
            }
            4 => {
                let [down] = read_exact::<_, 1>(r)?;
                read_exact::<_, 2>(r)?;
                ClientMessage::Key { down: down != 0, keysym: read_u32(r)? }
            }
            5 => {
                let [buttons] = read_exact::<_, 1>(r)?;
                ClientMessage::Pointer { buttons, x: read_u16(r)?, y: read_u16(r)? }
            }
            6 => {
                read_exact::<_, 3>(r)?;
                let n = read_u32(r)?;
                if n > MAX_CUT_TEXT {
                    return Err(RfbError::Protocol(format!("cut text of {n} bytes")));
                }
                let mut text = vec![0u8; n as usize];
                r.read_exact(&mut text)?;
                ClientMessage::CutText(text)
            }
            other => return Err(RfbError::Protocol(format!("unknown client message type {other}"))),
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            ClientMessage::SetPixelFormat(f) => {
                out.extend_from_slice(&[0, 0, 0, 0]);
                out.extend_from_slice(&f.to_wire());
            }
            ClientMessage::SetEncodings(v) => {
                out.extend_from_slice(&[2, 0]);
                out.extend_from_slice(&(v.len() as u16).to_be_bytes());
                for e in v {
                    out.extend_from_slice(&e.to_be_bytes());
                }
            }
            ClientMessage::UpdateRequest { incremental, area } => {
                out.extend_from_slice(&[3, *incremental as u8]);
                for v in [area.x, area.y, area.w, area.h] {
                    out.extend_from_slice(&v.to_be_bytes());
                }
            }
            ClientMessage::Key { down, keysym } => {
                out.extend_from_slice(&[4, *down as u8, 0, 0]);
                out.extend_from_slice(&keysym.to_be_bytes());
            }
            ClientMessage::Pointer { buttons, x, y } => {
                out.extend_from_slice(&[5, *buttons]);
                out.extend_from_slice(&x.to_be_bytes());
                out.extend_from_slice(&y.to_be_bytes());
            }
            ClientMessage::CutText(t) => {
                out.extend_from_slice(&[6, 0, 0, 0]);
                out.extend_from_slice(&(t.len() as u32).to_be_bytes());
                out.extend_from_slice(t);
            }
        }
        out
    }
}

/// One FramebufferUpdate message.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UpdateMessage {
    pub rects: Vec<EncodedRect>,
}

impl UpdateMessage {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + self.payload_bytes() + 12 * self.rects.len());
        out.extend_from_slice(&[0, 0]);
        out.extend_from_slice(&(self.rects.len() as u16).to_be_bytes());
        for r in &self.rects {
            r.write_to(&mut out);
        }
        out
    }

    /// Reads the body of an update whose type byte was already consumed.
    pub fn read_body<R: Read + ?Sized>(r: &mut R, fmt: &PixelFormat) -> Result<Self, RfbError> {
        read_exact::<_, 1>(r)?;
        let n = read_u16(r)?;
        let mut rects = Vec::with_capacity(n as usize);
        for _ in 0..n {
            let (x, y, w, h) = (read_u16(r)?, read_u16(r)?, read_u16(r)?, read_u16(r)?);
            let code = i32::from_be_bytes(read_exact(r)?);
            let encoding = EncodingId::from_code(code)
                .ok_or(RfbError::Encoding(crate::encodings::EncodingError::UnknownEncoding(code)))?;
            let rect = Rectangle::new(x, y, w, h);
            let mut src = ReadAdapter(r);
            let payload = read_payload(&mut src, encoding, rect, fmt)?;
            rects.push(EncodedRect { rect, encoding, payload });
        }
        Ok(UpdateMessage { rects })
    }

    /// Parses a complete message including its type byte.
    pub fn parse<R: Read + ?Sized>(r: &mut R, fmt: &PixelFormat) -> Result<Self, RfbError> {
        let [kind] = read_exact::<_, 1>(r)?;
        if kind != 0 {
            return Err(RfbError::Protocol(format!("expected FramebufferUpdate, got type {kind}")));
        }
        Self::read_body(r, fmt)
    }

    /// Encoded payload bytes, headers excluded.
    pub fn payload_bytes(&self) -> usize {
        self.rects.iter().map(|r| r.payload.len()).sum()
    }

    /// Raw pixel volume of the updated regions at `bytes_per_pixel`.
    pub fn captured_bytes(&self, bytes_per_pixel: usize) -> usize {
        self.rects.iter().map(|r| r.rect.area() * bytes_per_pixel).sum()
    }
}

/// Lets a `?Sized` reader be passed where `Sized` is required.
struct ReadAdapter<'a, R: ?Sized>(&'a mut R);

impl<R: Read + ?Sized> Read for ReadAdapter<'_, R> {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        self.0.read(buf)
    }
}
