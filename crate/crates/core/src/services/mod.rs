//! Device management over the command channel: envelopes, the opcode
//! registry, payload schemas, the service implementations and a client.

mod client;
mod codec;
mod dispatch;
mod envelope;
pub mod opcodes;
mod ops;
mod shell;
mod wire;

pub use client::CmdClient;
pub use codec::Request;
pub use dispatch::{run_cmd_session, CmdContext, Dispatcher, AUTH_MODE_NONE, AUTH_MODE_SECRET, AUTH_MODE_SECRET_STREAM};
pub use envelope::{CommandEnvelope, HEADER_LEN, MAX_PAYLOAD};
pub use ops::{AppFilter, CompositeInputEvent, FirmwareSheet, Services, ShellOutput, TouchSample, Track, FS_CHUNK};
pub use shell::BUILTINS;
pub use wire::{PayloadReader, PayloadWriter};

use crate::device::DeviceError;
use std::io;
use thiserror::Error;

/// Error codes carried in error envelopes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u16)]
pub enum ErrorCode {
    NotFound = 1,
    IsDirectory = 2,
    NotADirectory = 3,
    PathEscape = 4,
    InvalidArgument = 5,
    DuplicateId = 6,
    QuotaExceeded = 7,
    UnknownCommand = 8,
    CommandFailed = 9,
    UnsupportedSensor = 10,
    UnknownOpcode = 11,
    Malformed = 12,
    AuthFailed = 13,
    BadCorrelation = 14,
    PayloadTooLarge = 15,
    Internal = 16,
}

impl ErrorCode {
    pub fn from_u16(v: u16) -> Option<Self> {
        use ErrorCode::*;
        [
            NotFound,
            IsDirectory,
            NotADirectory,
            PathEscape,
            InvalidArgument,
            DuplicateId,
            QuotaExceeded,
            UnknownCommand,
            CommandFailed,
            UnsupportedSensor,
            UnknownOpcode,
            Malformed,
            AuthFailed,
            BadCorrelation,
            PayloadTooLarge,
            Internal,
        ]
        .into_iter()
        .find(|c| *c as u16 == v)
    }
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("not found: {0}")]
    NotFound(String),
    #[error("is a directory: {0}")]
    IsDirectory(String),
    #[error("not a directory: {0}")]
    NotADirectory(String),
    #[error("path escapes the root: {0}")]
    PathEscape(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("package `{0}` is installed with another version")]
    DuplicateId(String),
    #[error("storage quota exceeded: {requested} bytes requested, {available} available")]
    QuotaExceeded { requested: u64, available: u64 },
    #[error("unknown command `{0}`")]
    UnknownCommand(String),
    #[error("command failed with exit code {exit_code}: {stderr}")]
    CommandFailed { exit_code: i32, stderr: String },
    #[error("unsupported sensor: {0}")]
    UnsupportedSensor(String),
    #[error("unknown opcode {0:#06x}")]
    UnknownOpcode(u16),
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("authentication failed")]
    AuthFailed,
    #[error("correlation id {0} is not above the previous one")]
    BadCorrelation(u32),
    #[error("payload of {0} bytes exceeds the limit")]
    PayloadTooLarge(u32),
    /// An error reported by the peer.
    #[error("{message}")]
    Remote { code: ErrorCode, message: String, detail: i32 },
    #[error("timed out")]
    Timeout,
    #[error("channel closed")]
    ChannelClosed,
    #[error(transparent)]
    Io(io::Error),
}

impl ServiceError {
    pub fn code(&self) -> ErrorCode {
        match self {
            ServiceError::NotFound(_) => ErrorCode::NotFound,
            ServiceError::IsDirectory(_) => ErrorCode::IsDirectory,
            ServiceError::NotADirectory(_) => ErrorCode::NotADirectory,
            ServiceError::PathEscape(_) => ErrorCode::PathEscape,
            ServiceError::InvalidArgument(_) => ErrorCode::InvalidArgument,
            ServiceError::DuplicateId(_) => ErrorCode::DuplicateId,
            ServiceError::QuotaExceeded { .. } => ErrorCode::QuotaExceeded,
            ServiceError::UnknownCommand(_) => ErrorCode::UnknownCommand,
            ServiceError::CommandFailed { .. } => ErrorCode::CommandFailed,
            ServiceError::UnsupportedSensor(_) => ErrorCode::UnsupportedSensor,
            ServiceError::UnknownOpcode(_) => ErrorCode::UnknownOpcode,
            ServiceError::Malformed(_) => ErrorCode::Malformed,
            ServiceError::AuthFailed => ErrorCode::AuthFailed,
            ServiceError::BadCorrelation(_) => ErrorCode::BadCorrelation,
            ServiceError::PayloadTooLarge(_) => ErrorCode::PayloadTooLarge,
            ServiceError::Remote { code, .. } => *code,
            ServiceError::Timeout | ServiceError::ChannelClosed | ServiceError::Io(_) => ErrorCode::Internal,
        }
    }

    /// Extra integer carried in error envelopes: the exit code for failed
    /// shell commands, zero otherwise.
    pub fn detail(&self) -> i32 {
        match self {
            ServiceError::CommandFailed { exit_code, .. } => *exit_code,
            ServiceError::Remote { detail, .. } => *detail,
            _ => 0,
        }
    }
}

impl From<io::Error> for ServiceError {
    fn from(e: io::Error) -> Self {
        match e.kind() {
            io::ErrorKind::UnexpectedEof
            | io::ErrorKind::ConnectionReset
            | io::ErrorKind::ConnectionAborted
            | io::ErrorKind::BrokenPipe
            | io::ErrorKind::NotConnected => ServiceError::ChannelClosed,
            io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut => ServiceError::Timeout,
            _ => ServiceError::Io(e),
        }
    }
}

impl From<DeviceError> for ServiceError {
    fn from(e: DeviceError) -> Self {
        match e {
            DeviceError::NotFound(p) => ServiceError::NotFound(p),
            DeviceError::IsDirectory(p) => ServiceError::IsDirectory(p),
            DeviceError::NotADirectory(p) => ServiceError::NotADirectory(p),
            DeviceError::PathEscape(p) => ServiceError::PathEscape(p),
            other => ServiceError::InvalidArgument(other.to_string()),
        }
    }
}
