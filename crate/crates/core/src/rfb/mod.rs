//! RFB 3.8 server sessions and a headless client.

mod client;
mod handshake;
mod messages;
mod session;

pub use client::RfbClient;
pub use handshake::{
    client_handshake, parse_version, server_handshake, Accepted, ServerInit, SECURITY_MAC, SECURITY_MAC_STREAM,
    SECURITY_NONE, SERVER_NAME, VERSION,
};
pub use messages::{ClientMessage, UpdateMessage, MAX_CUT_TEXT, MAX_ENCODINGS};
pub use session::{inject_input, run_session, InputEvent, RfbContext, Session, SessionSummary, DEFAULT_POLL};

use crate::device::DeviceError;
use crate::encodings::EncodingError;
use crate::pixel::{PixelError, Rectangle};
use std::io;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RfbError {
    #[error("unsupported protocol version `{0}`")]
    VersionMismatch(String),
    #[error("authentication failed: {0}")]
    AuthFailed(String),
    #[error("timed out waiting for the peer")]
    Timeout,
    #[error("channel closed")]
    ChannelClosed,
    #[error("rectangle {0:?} lies outside the screen")]
    OutOfBounds(Rectangle),
    #[error("unsupported pixel format ({0} bpp)")]
    UnsupportedFormat(u8),
    #[error(transparent)]
    Pixel(#[from] PixelError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error(transparent)]
    Io(io::Error),
}

impl From<io::Error> for RfbError {
    fn from(e: io::Error) -> Self {
        match e.kind() {
            io::ErrorKind::UnexpectedEof
            | io::ErrorKind::ConnectionReset
            | io::ErrorKind::ConnectionAborted
            | io::ErrorKind::BrokenPipe
            | io::ErrorKind::NotConnected => RfbError::ChannelClosed,
            io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut => RfbError::Timeout,
            _ => RfbError::Io(e),
        }
    }
}
