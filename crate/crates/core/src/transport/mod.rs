//! Connectivity: byte channels, link emulation, login, the TCP server, the
//! USB-style pipe with port forwarding, and the WebSocket bridge.

mod auth;
mod bridge;
mod cipher;
mod pipe;
mod server;
mod stream;
mod throttle;
mod usb;

pub use auth::{compute_mac, new_nonce, verify_mac, AuthPolicy, ChannelKind, AUTH_TIMEOUT, FAILURE_DELAY, MAC_LEN, NONCE_LEN};
pub use cipher::{encrypt_channel, CipherStream, Side};
pub use pipe::{pipe_pair, PipeEnd};
pub use stream::{is_timeout, send_message, Stream};
pub use bridge::{WebConfig, DEFAULT_WEB_PORT};
pub use server::{serve, ServerConfig, ServerHandle, ServiceKind, DEFAULT_RFB_PORT};
pub use usb::{forward_port, usb_pipe_pair, usb_pipe_pair_with, Forward, UsbDevice, UsbHost};
pub use throttle::{throttle, ProfileName, Throttled, TokenBucket, TransportProfile, BUCKET_MS};

use std::io;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("could not bind {addr}: {source}")]
    BindFailed { addr: String, source: io::Error },
    #[error("authentication failed")]
    AuthFailed,
    #[error("timed out")]
    Timeout,
    #[error("unknown service `{0}`")]
    ServiceUnknown(String),
    #[error("channel closed")]
    ChannelClosed,
    #[error("invalid transport profile: {0}")]
    InvalidProfile(String),
    #[error("invalid auth policy: {0}")]
    InvalidPolicy(String),
    #[error("bridge error: {0}")]
    Bridge(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}
