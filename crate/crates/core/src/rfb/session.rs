use super::handshake::{server_handshake, ServerInit, SERVER_NAME};
use super::messages::{ClientMessage, UpdateMessage};
use super::RfbError;
use crate::device::{Device, InputKind};
use crate::encodings::{encode_rect, select_encoding, CompressionContext, EncodingId};
use crate::pixel::{diff_regions, FrameBuffer, PixelFormat, Rectangle, DEFAULT_TILE};
use crate::transport::{new_nonce, send_message, AuthPolicy, Stream};
use std::sync::{mpsc, Arc};
use std::time::Duration;

/// Input events arriving on the RFB channel.
pub type InputEvent = InputKind;

/// How often a deferred update request re-checks the screen.
pub const DEFAULT_POLL: Duration = Duration::from_millis(50);

/// Per-connection protocol state.
pub struct Session {
    pub id: u64,
    format: PixelFormat,
    prefs: Vec<i32>,
    encoding: EncodingId,
    supported: Vec<EncodingId>,
    compression: CompressionContext,
    last_sent: Option<Arc<FrameBuffer>>,
    pending: Option<(Rectangle, bool)>,
    buttons: u8,
    width: u16,
    height: u16,
}

impl Session {
    pub fn new(id: u64, width: u16, height: u16, supported: &[EncodingId]) -> Self {
        Session {
            id,
            format: PixelFormat::canonical(),
            prefs: Vec::new(),
            encoding: EncodingId::Raw,
            supported: supported.to_vec(),
            compression: CompressionContext::new(),
            last_sent: None,
            pending: None,
            buttons: 0,
            width,
            height,
        }
    }

    pub fn format(&self) -> &PixelFormat {
        &self.format
    }

    pub fn encoding(&self) -> EncodingId {
        self.encoding
    }

    pub fn prefs(&self) -> &[i32] {
        &self.prefs
    }

    pub fn last_sent(&self) -> Option<&Arc<FrameBuffer>> {
        self.last_sent.as_ref()
    }

    pub fn pending(&self) -> Option<(Rectangle, bool)> {
        self.pending
    }

    /// Accepts 16 and 32 bpp true-colour formats.
    pub fn set_pixel_format(&mut self, fmt: PixelFormat) -> Result<(), RfbError> {
        fmt.validate()?;
        if !fmt.true_color || !matches!(fmt.bits_per_pixel, 16 | 32) {
            return Err(RfbError::UnsupportedFormat(fmt.bits_per_pixel));
        }
        self.format = fmt;
        Ok(())
    }

    pub fn handle_set_encodings(&mut self, prefs: &[i32]) {
        self.prefs = prefs.to_vec();
        self.encoding = select_encoding(prefs, &self.supported);
    }

    /// Answers a request against `current`, or defers it (`None`) when an
    /// incremental request finds nothing changed.
    pub fn handle_update_request(
        &mut self,
        area: Rectangle,
        incremental: bool,
        current: &Arc<FrameBuffer>,
    ) -> Result<Option<UpdateMessage>, RfbError> {
        if !area.fits_within(self.width, self.height) {
            return Err(RfbError::OutOfBounds(area));
        }
        let regions = match (&self.last_sent, incremental) {
            (Some(prev), true) => diff_regions(prev, current, DEFAULT_TILE)?
                .into_iter()
                .map(|r| r.intersect(&area))
                .filter(|r| !r.is_empty())
                .collect(),
            _ if area.is_empty() => Vec::new(),
            _ => vec![area],
        };
        self.last_sent = Some(current.clone());
        if incremental && regions.is_empty() {
            self.pending = Some((area, incremental));
            return Ok(None);
        }
        self.pending = None;
        let mut rects = Vec::new();
        for r in regions {
            rects.extend(encode_rect(current, r, &self.format, self.encoding, &mut self.compression)?);
        }
        if rects.len() > usize::from(u16::MAX) {
            return Err(RfbError::Protocol(format!("{} rectangles in one update", rects.len())));
        }
        Ok(Some(UpdateMessage { rects }))
    }

    /// Re-evaluates a deferred request.
    pub fn retry_pending(&mut self, current: &Arc<FrameBuffer>) -> Result<Option<UpdateMessage>, RfbError> {
        match self.pending {
            Some((area, inc)) => self.handle_update_request(area, inc, current),
            None => Ok(None),
        }
    }
}

/// Logs an input event on the device. Out-of-screen pointers are clamped
/// and flagged; a button-1 press skips the scenario to its next step.
pub fn inject_input(s: &mut Session, ev: InputEvent, device: &Device) {
    let (ev, clamped) = match ev {
        InputKind::Pointer { x, y, buttons } => {
            let cx = x.min(s.width.saturating_sub(1));
            let cy = y.min(s.height.saturating_sub(1));
            (InputKind::Pointer { x: cx, y: cy, buttons }, cx != x || cy != y)
        }
        key => (key, false),
    };
    let now = device.now_ms();
    device.state().input.push(now, s.id, None, None, ev, clamped);
    if let InputKind::Pointer { buttons, .. } = ev {
        let pressed = buttons & 1 != 0 && s.buttons & 1 == 0;
        s.buttons = buttons;
        if pressed {
            device.skip_step();
        }
    }
}

/// Everything a server-side session needs.
#[derive(Clone)]
pub struct RfbContext {
    pub device: Arc<Device>,
    pub auth: AuthPolicy,
    pub encrypt: bool,
    pub supported: Vec<EncodingId>,
    pub poll_interval: Duration,
    /// Advance a manual device clock by this much after every screen read,
    /// instead of following wall time.
    pub frame_step_ms: Option<u64>,
}

impl RfbContext {
    pub fn new(device: Arc<Device>) -> Self {
        RfbContext {
            device,
            auth: AuthPolicy::None,
            encrypt: false,
            supported: EncodingId::ALL.to_vec(),
            poll_interval: DEFAULT_POLL,
            frame_step_ms: None,
        }
    }

    fn frame(&self) -> Arc<FrameBuffer> {
        let fb = self.device.snapshot();
        if let Some(step) = self.frame_step_ms {
            self.device.clock().advance(step);
        }
        fb
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SessionSummary {
    pub updates: u64,
    pub rects: u64,
    pub payload_bytes: u64,
}

/// Serves one RFB connection until the client leaves or the channel fails.
pub fn run_session(stream: Box<dyn Stream>, ctx: &RfbContext, id: u64) -> Result<SessionSummary, RfbError> {
    let (width, height) = ctx.device.dimensions();
    let init = ServerInit { width, height, format: PixelFormat::canonical(), name: SERVER_NAME.into() };
    let accepted = server_handshake(stream, &ctx.auth, ctx.encrypt, &init, new_nonce())?;
    let mut stream = accepted.stream;
    let mut reader = stream.try_clone_stream()?;
    let (tx, rx) = mpsc::channel();
    let reader_thread = std::thread::Builder::new().name(format!("rfb-read-{id}")).spawn(move || loop {
        let msg = ClientMessage::read_from(&mut reader);
        let stop = msg.is_err();
        if tx.send(msg).is_err() || stop {
            break;
        }
    })?;
    let mut session = Session::new(id, width, height, &ctx.supported);
    let mut summary = SessionSummary::default();
    let result = (|| -> Result<(), RfbError> {
        loop {
            let msg = if session.pending.is_some() {
                match rx.recv_timeout(ctx.poll_interval) {
                    Ok(m) => Some(m),
                    Err(mpsc::RecvTimeoutError::Timeout) => None,
                    Err(mpsc::RecvTimeoutError::Disconnected) => return Ok(()),
                }
            } else {
                match rx.recv() {
                    Ok(m) => Some(m),
                    Err(_) => return Ok(()),
                }
            };
            let update = match msg {
                None => session.retry_pending(&ctx.frame())?,
                Some(Err(RfbError::ChannelClosed)) => return Ok(()),
                Some(Err(e)) => return Err(e),
                Some(Ok(m)) => match m {
                    ClientMessage::SetPixelFormat(f) => {
                        session.set_pixel_format(f)?;
                        None
                    }
                    ClientMessage::SetEncodings(prefs) => {
                        session.handle_set_encodings(&prefs);
                        None
                    }
                    ClientMessage::UpdateRequest { incremental, area } => {
                        session.handle_update_request(area, incremental, &ctx.frame())?
                    }
                    ClientMessage::Key { down, keysym } => {
                        inject_input(&mut session, InputKind::Key { keysym, down }, &ctx.device);
                        None
                    }
                    ClientMessage::Pointer { buttons, x, y } => {
                        inject_input(&mut session, InputKind::Pointer { x, y, buttons }, &ctx.device);
                        None
                    }
                    ClientMessage::CutText(_) => None,
                },
            };
            if let Some(u) = update {
                send_message(&mut stream, &u.to_bytes())?;
                summary.updates += 1;
                summary.rects += u.rects.len() as u64;
                summary.payload_bytes += u.payload_bytes() as u64;
            }
        }
    })();
    stream.shutdown_stream();
    let _ = reader_thread.join();
    match result {
        Ok(()) | Err(RfbError::ChannelClosed) => Ok(summary),
        Err(e) => Err(e),
    }
}
