use super::codec::*;
use super::dispatch::{AUTH_MODE_NONE, AUTH_MODE_SECRET_STREAM};
use super::envelope::CommandEnvelope;
use super::opcodes::*;
use super::ops::{AppFilter, CompositeInputEvent, FirmwareSheet, ShellOutput, FS_CHUNK};
use super::wire::PayloadReader;
use super::ServiceError;
use crate::device::{Alert, AppRecord, FsNode, ProcessRow, SensorKind, SensorSample, StatusReport};
use crate::transport::{compute_mac, encrypt_channel, send_message, ChannelKind, Side, Stream, NONCE_LEN};
use std::collections::VecDeque;
use std::io::Read;
use std::time::{Duration, Instant};

/// Command-channel client with typed calls for every service.
pub struct CmdClient {
    stream: Box<dyn Stream>,
    next_id: u32,
    events: VecDeque<Alert>,
    protocol_version: u8,
}

impl CmdClient {
    /// Reads the greeting and logs in when the server asks for a secret.
    pub fn connect(mut stream: Box<dyn Stream>, secret: Option<&[u8]>) -> Result<Self, ServiceError> {
        let mut head = [0u8; 6];
        stream.read_exact(&mut head)?;
        if &head[..4] != GREETING_MAGIC {
            return Err(ServiceError::Malformed("bad greeting".into()));
        }
        let mode = head[5];
        let mut client = CmdClient { stream, next_id: 1, events: VecDeque::new(), protocol_version: head[4] };
        if mode != AUTH_MODE_NONE {
            let mut nonce = [0u8; NONCE_LEN];
            client.stream.read_exact(&mut nonce)?;
            let secret = secret.ok_or(ServiceError::AuthFailed)?;
            let mac = compute_mac(secret, &nonce, ChannelKind::Cmd).to_vec();
            client.call(&super::codec::Request::Auth { mac })?;
            if mode == AUTH_MODE_SECRET_STREAM {
                let CmdClient { stream, next_id, events, protocol_version } = client;
                let stream: Box<dyn Stream> = Box::new(encrypt_channel(stream, secret, &nonce, Side::Client));
                client = CmdClient { stream, next_id, events, protocol_version };
            }
        }
        Ok(client)
    }

    pub fn protocol_version(&self) -> u8 {
        self.protocol_version
    }

    pub fn set_read_timeout(&self, t: Option<Duration>) -> Result<(), ServiceError> {
        Ok(self.stream.set_read_timeout_stream(t)?)
    }

    /// Sends an envelope as is.
    pub fn send_envelope(&mut self, env: &CommandEnvelope) -> Result<(), ServiceError> {
        send_message(&mut self.stream, &env.to_bytes())?;
        Ok(())
    }

    pub fn recv_envelope(&mut self) -> Result<CommandEnvelope, ServiceError> {
        CommandEnvelope::read_from(&mut self.stream)
    }

    /// Sends a request and waits for its response, queueing any alerts that
    /// arrive in between.
    pub fn call(&mut self, req: &Request) -> Result<Vec<u8>, ServiceError> {
        let id = self.next_id;
        self.next_id += 1;
        self.send_envelope(&CommandEnvelope::new(req.opcode(), id, req.to_payload()))?;
        loop {
            let env = self.recv_envelope()?;
            match (env.opcode, env.correlation_id) {
                (EVENT_ALERT, 0) => self.events.push_back(decode_alert(&env.payload)?),
                (ERROR, cid) if cid == id || cid == 0 => return Err(decode_error(&env.payload)?),
                (op, cid) if cid == id && op == req.opcode() => return Ok(env.payload),
                (op, cid) => {
                    return Err(ServiceError::Malformed(format!("unexpected response {op:#06x} for id {cid}, awaiting {id}")))
                }
            }
        }
    }

    /// Next pushed alert, waiting up to `timeout`.
    pub fn next_event(&mut self, timeout: Duration) -> Result<Option<Alert>, ServiceError> {
        if let Some(a) = self.events.pop_front() {
            return Ok(Some(a));
        }
        let deadline = Instant::now() + timeout;
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            if left.is_zero() {
                return Ok(None);
            }
            self.stream.set_read_timeout_stream(Some(left))?;
            let got = self.recv_envelope();
            self.stream.set_read_timeout_stream(None)?;
            match got {
                Ok(env) if env.opcode == EVENT_ALERT => return Ok(Some(decode_alert(&env.payload)?)),
                Ok(env) => return Err(ServiceError::Malformed(format!("unsolicited opcode {:#06x}", env.opcode))),
                Err(ServiceError::Timeout) => return Ok(None),
                Err(e) => return Err(e),
            }
        }
    }

    pub fn list_applications(&mut self, filter: AppFilter) -> Result<Vec<AppRecord>, ServiceError> {
        decode_apps(&self.call(&Request::ListApps(filter))?)
    }

    pub fn install_application(
        &mut self,
        id: &str,
        version: &str,
        package: &[u8],
        overwrite: bool,
    ) -> Result<AppRecord, ServiceError> {
        let req = Request::Install { id: id.into(), version: version.into(), overwrite, package: package.to_vec() };
        decode_apps(&self.call(&req)?)?
            .pop()
            .ok_or_else(|| ServiceError::Malformed("install returned no record".into()))
    }

    pub fn uninstall_application(&mut self, id: &str) -> Result<(), ServiceError> {
        self.call(&Request::Uninstall { id: id.into() }).map(drop)
    }

    pub fn list_processes(&mut self) -> Result<Vec<ProcessRow>, ServiceError> {
        decode_processes(&self.call(&Request::ListProcesses)?)
    }

    pub fn kill_process(&mut self, pid: u32) -> Result<(), ServiceError> {
        self.call(&Request::Kill { pid }).map(drop)
    }

    pub fn shell_exec(&mut self, line: &str) -> Result<ShellOutput, ServiceError> {
        decode_shell(&self.call(&Request::Shell { line: line.into() })?)
    }

    pub fn fs_list(&mut self, path: &str) -> Result<Vec<FsNode>, ServiceError> {
        decode_nodes(&self.call(&Request::FsList { path: path.into() })?)
    }

    pub fn fs_get(&mut self, path: &str) -> Result<Vec<u8>, ServiceError> {
        let p = self.call(&Request::FsGet { path: path.into() })?;
        let mut r = PayloadReader::new(&p);
        let data = r.bytes()?.to_vec();
        r.finish()?;
        Ok(data)
    }

    /// Uploads in chunks of at most 256 KiB.
    pub fn fs_put(&mut self, path: &str, data: &[u8]) -> Result<(), ServiceError> {
        let chunks: Vec<&[u8]> = if data.is_empty() { vec![data] } else { data.chunks(FS_CHUNK).collect() };
        let last = chunks.len() - 1;
        for (i, c) in chunks.into_iter().enumerate() {
            self.call(&Request::FsPut { path: path.into(), more: i != last, data: c.to_vec() })?;
        }
        Ok(())
    }

    pub fn fs_remove(&mut self, path: &str, recursive: bool) -> Result<(), ServiceError> {
        self.call(&Request::FsRemove { path: path.into(), recursive }).map(drop)
    }

    pub fn device_status(&mut self) -> Result<StatusReport, ServiceError> {
        decode_status(&self.call(&Request::Status)?)
    }

    pub fn sensor_read(&mut self, kind: SensorKind) -> Result<SensorSample, ServiceError> {
        decode_sample(&self.call(&Request::SensorRead { kind: kind.code() })?)
    }

    pub fn firmware_stage(&mut self, image: &[u8], version: &str) -> Result<FirmwareSheet, ServiceError> {
        decode_firmware(&self.call(&Request::Firmware { version: version.into(), image: image.to_vec() })?)
    }

    /// Returns the group id the device assigned.
    pub fn composite_input(&mut self, ev: &CompositeInputEvent) -> Result<u64, ServiceError> {
        let p = self.call(&Request::Composite(ev.clone()))?;
        let mut r = PayloadReader::new(&p);
        let g = r.u64()?;
        r.finish()?;
        Ok(g)
    }

    pub fn close(self) {
        self.stream.shutdown_stream();
    }
}
