use super::handshake::{client_handshake, ServerInit};
use super::messages::{read_exact, read_u32, ClientMessage, UpdateMessage};
use super::RfbError;
use crate::encodings::{decode_rect, DecompressionContext};
use crate::pixel::{FrameBuffer, PixelFormat, Rectangle};
use crate::transport::{is_timeout, send_message, Stream};
use std::io::Read;
use std::time::{Duration, Instant};

/// A headless RFB viewer that keeps a decoded copy of the remote screen.
pub struct RfbClient {
    stream: Box<dyn Stream>,
    init: ServerInit,
    format: PixelFormat,
    mirror: FrameBuffer,
    decoder: DecompressionContext,
    decode: bool,
}

impl RfbClient {
    /// Performs the handshake. `secret` is required when the server asks
    /// for a shared-secret login.
    pub fn connect(stream: Box<dyn Stream>, secret: Option<&[u8]>) -> Result<Self, RfbError> {
        let (stream, init) = client_handshake(stream, secret, true)?;
        let mirror = FrameBuffer::new(init.width, init.height, init.format, 0);
        Ok(RfbClient { stream, format: init.format, init, mirror, decoder: DecompressionContext::new(), decode: true })
    }

    pub fn server_init(&self) -> &ServerInit {
        &self.init
    }

    pub fn screen(&self) -> Rectangle {
        Rectangle::new(0, 0, self.init.width, self.init.height)
    }

    /// Decoded copy of the remote screen, in the negotiated format.
    pub fn mirror(&self) -> &FrameBuffer {
        &self.mirror
    }

    /// Turns decoding into the mirror off; updates are then only framed.
    pub fn set_decoding(&mut self, on: bool) {
        self.decode = on;
    }

    pub fn set_read_timeout(&self, t: Option<Duration>) -> Result<(), RfbError> {
        Ok(self.stream.set_read_timeout_stream(t)?)
    }

    pub fn send(&mut self, msg: &ClientMessage) -> Result<(), RfbError> {
        if let ClientMessage::SetPixelFormat(f) = msg {
            self.format = *f;
            self.mirror = FrameBuffer::new(self.init.width, self.init.height, *f, 0);
        }
        send_message(&mut self.stream, &msg.to_bytes())?;
        Ok(())
    }

    pub fn set_encodings(&mut self, codes: &[i32]) -> Result<(), RfbError> {
        self.send(&ClientMessage::SetEncodings(codes.to_vec()))
    }

    pub fn request_update(&mut self, area: Rectangle, incremental: bool) -> Result<(), RfbError> {
        self.send(&ClientMessage::UpdateRequest { incremental, area })
    }

    pub fn pointer(&mut self, x: u16, y: u16, buttons: u8) -> Result<(), RfbError> {
        self.send(&ClientMessage::Pointer { buttons, x, y })
    }

    pub fn key(&mut self, keysym: u32, down: bool) -> Result<(), RfbError> {
        self.send(&ClientMessage::Key { down, keysym })
    }

    /// Reads server messages until a FramebufferUpdate arrives, applying it
    /// to the mirror.
    pub fn read_update(&mut self) -> Result<UpdateMessage, RfbError> {
        loop {
            let [kind] = read_exact::<_, 1>(&mut self.stream)?;
            if let Some(u) = self.read_message(kind)? {
                return Ok(u);
            }
        }
    }

    /// Like [`read_update`](Self::read_update), but returns `None` when no
    /// message starts within `timeout`. Once a message has started it is
    /// read to the end without a deadline.
    pub fn poll_update(&mut self, timeout: Duration) -> Result<Option<UpdateMessage>, RfbError> {
        let deadline = Instant::now() + timeout;
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            if left.is_zero() {
                return Ok(None);
            }
            self.stream.set_read_timeout_stream(Some(left))?;
            let mut kind = [0u8];
            let r = self.stream.read(&mut kind);
            self.stream.set_read_timeout_stream(None)?;
            match r {
                Ok(0) => return Err(RfbError::ChannelClosed),
                Ok(_) => {
                    if let Some(u) = self.read_message(kind[0])? {
                        return Ok(Some(u));
                    }
                }
                Err(e) if is_timeout(&e) => return Ok(None),
                Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e.into()),
            }
        }
    }

    fn read_message(&mut self, kind: u8) -> Result<Option<UpdateMessage>, RfbError> {
        match kind {
            0 => {
                let u = UpdateMessage::read_body(&mut self.stream, &self.format)?;
                if self.decode {
                    for r in &u.rects {
                        let px = decode_rect(r, &self.format, &mut self.decoder)?;
                        self.mirror.blit(&r.rect, &px)?;
                    }
                }
                Ok(Some(u))
            }
            2 => Ok(None),
            3 => {
                read_exact::<_, 3>(&mut self.stream)?;
                let n = read_u32(&mut self.stream)?;
                let mut sink = vec![0u8; n.min(1 << 20) as usize];
                self.stream.read_exact(&mut sink)?;
                Ok(None)
            }
            other => Err(RfbError::Protocol(format!("unknown server message type {other}"))),
        }
    }

    pub fn close(self) {
        self.stream.shutdown_stream();
    }
}
