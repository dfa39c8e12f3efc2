use super::codec::*;
use super::envelope::{CommandEnvelope, MAX_PAYLOAD};
use super::opcodes::*;
use super::ops::{Services, FS_CHUNK};
use super::ServiceError;
use crate::transport::{
    encrypt_channel, is_timeout, new_nonce, send_message, verify_mac, AuthPolicy, ChannelKind, Side, Stream, AUTH_TIMEOUT,
    FAILURE_DELAY, NONCE_LEN,
};
use std::sync::mpsc;
use std::time::Duration;

/// Auth mode byte in the greeting.
pub const AUTH_MODE_NONE: u8 = 0;
pub const AUTH_MODE_SECRET: u8 = 1;
pub const AUTH_MODE_SECRET_STREAM: u8 = 2;

/// How often an idle connection checks for alerts to push.
pub const EVENT_POLL: Duration = Duration::from_millis(50);

/// Everything a command-channel connection needs.
#[derive(Clone)]
pub struct CmdContext {
    pub services: Services,
    pub auth: AuthPolicy,
    pub encrypt: bool,
}

/// Decodes requests from one connection and runs them against the services.
pub struct Dispatcher {
    services: Services,
    source: u64,
    last_id: u32,
    upload: Option<(String, Vec<u8>)>,
}

fn error_envelope(id: u32, e: &ServiceError) -> CommandEnvelope {
    CommandEnvelope::new(ERROR, id, encode_error(e))
}

impl Dispatcher {
    pub fn new(services: Services, source: u64) -> Self {
        Dispatcher { services, source, last_id: 0, upload: None }
    }

    /// Returns the response for `env`: same opcode and correlation id on
    /// success, an error envelope otherwise.
    pub fn handle(&mut self, env: &CommandEnvelope) -> CommandEnvelope {
        let id = env.correlation_id;
        if id <= self.last_id {
            return error_envelope(id, &ServiceError::BadCorrelation(id));
        }
        self.last_id = id;
        match Request::decode(env.opcode, &env.payload).and_then(|req| self.run(req)) {
            Ok(payload) => CommandEnvelope::new(env.opcode, id, payload),
            Err(e) => error_envelope(id, &e),
        }
    }

    fn run(&mut self, req: Request) -> Result<Vec<u8>, ServiceError> {
        let s = &self.services;
        Ok(match req {
            Request::Auth { .. } => Vec::new(),
            Request::ListApps(f) => encode_apps(&s.list_applications(f)),
            Request::Install { id, version, overwrite, package } => {
                let rec = s.install_application(&id, &version, &package, overwrite)?;
                encode_apps(std::slice::from_ref(&rec))
            }
            Request::Uninstall { id } => {
                s.uninstall_application(&id)?;
                Vec::new()
            }
            Request::ListProcesses => encode_processes(&s.list_processes()),
            Request::Kill { pid } => {
                s.kill_process(pid)?;
                Vec::new()
            }
            Request::Shell { line } => encode_shell(&s.shell_exec(&line)?),
            Request::FsList { path } => encode_nodes(&s.fs_list(&path)?),
            Request::FsGet { path } => {
                let data = s.fs_get(&path)?;
                super::wire::PayloadWriter::new().bytes(&data).finish()
            }
            Request::FsPut { path, more, data } => {
                if data.len() > FS_CHUNK {
                    self.upload = None;
                    return Err(ServiceError::InvalidArgument(format!("chunk of {} bytes exceeds {FS_CHUNK}", data.len())));
                }
                let buf = match self.upload.take() {
                    Some((p, mut buf)) if p == path => {
                        buf.extend_from_slice(&data);
                        buf
                    }
                    _ => data,
                };
                if buf.len() > MAX_PAYLOAD as usize {
                    return Err(ServiceError::PayloadTooLarge(buf.len() as u32));
                }
                if more {
                    crate::device::normalize(&path)?;
                    self.upload = Some((path, buf));
                } else {
                    s.fs_put(&path, buf)?;
                }
                Vec::new()
            }
            Request::FsRemove { path, recursive } => {
                s.fs_remove(&path, recursive)?;
                Vec::new()
            }
            Request::Status => encode_status(&s.device_status()),
            Request::SensorRead { kind } => encode_sample(&s.sensor_read(kind)?),
            Request::Firmware { version, image } => encode_firmware(&s.firmware_stage(&image, &version)?),
            Request::Composite(ev) => {
                let group = s.composite_input(&ev, self.source)?;
                super::wire::PayloadWriter::new().u64(group).finish()
            }
        })
    }
}

fn greeting(mode: u8, nonce: &[u8; NONCE_LEN]) -> Vec<u8> {
    let mut g = GREETING_MAGIC.to_vec();
    g.extend_from_slice(&[PROTOCOL_VERSION, mode]);
    if mode != AUTH_MODE_NONE {
        g.extend_from_slice(nonce);
    }
    g
}

fn reject(stream: &mut Box<dyn Stream>, id: u32) -> ServiceError {
    std::thread::sleep(FAILURE_DELAY);
    let _ = send_message(stream, &error_envelope(id, &ServiceError::AuthFailed).to_bytes());
    stream.shutdown_stream();
    ServiceError::AuthFailed
}

/// Serves one command connection until the client leaves.
pub fn run_cmd_session(mut stream: Box<dyn Stream>, ctx: &CmdContext, id: u64) -> Result<u64, ServiceError> {
    let nonce = new_nonce();
    let mode = match (ctx.auth.secret(), ctx.encrypt) {
        (None, _) => AUTH_MODE_NONE,
        (Some(_), false) => AUTH_MODE_SECRET,
        (Some(_), true) => AUTH_MODE_SECRET_STREAM,
    };
    send_message(&mut stream, &greeting(mode, &nonce))?;
    let mut dispatcher = Dispatcher::new(ctx.services.clone(), id);
    if let Some(secret) = ctx.auth.secret() {
        stream.set_read_timeout_stream(Some(AUTH_TIMEOUT))?;
        let env = match CommandEnvelope::read_from(&mut stream) {
            Ok(env) => env,
            Err(ServiceError::Io(e)) if is_timeout(&e) => {
                stream.shutdown_stream();
                return Err(ServiceError::Timeout);
            }
            Err(_) => return Err(reject(&mut stream, 0)),
        };
        let ok = env.opcode == AUTH
            && matches!(Request::decode(AUTH, &env.payload), Ok(Request::Auth { mac }) if verify_mac(secret, &nonce, ChannelKind::Cmd, &mac));
        if !ok {
            return Err(reject(&mut stream, env.correlation_id));
        }
        let resp = dispatcher.handle(&env);
        send_message(&mut stream, &resp.to_bytes())?;
        if resp.opcode == ERROR {
            stream.shutdown_stream();
            return Err(ServiceError::BadCorrelation(env.correlation_id));
        }
        stream.set_read_timeout_stream(None)?;
        if mode == AUTH_MODE_SECRET_STREAM {
            stream = Box::new(encrypt_channel(stream, secret, &nonce, Side::Server));
        }
    }
    let alerts = ctx.services.device().subscribe();
    let mut reader = stream.try_clone_stream()?;
    let (tx, rx) = mpsc::channel();
    let reader_thread = std::thread::Builder::new().name(format!("cmd-read-{id}")).spawn(move || loop {
        let env = CommandEnvelope::read_from(&mut reader);
        let stop = env.is_err();
        if tx.send(env).is_err() || stop {
            break;
        }
    })?;
    let mut handled = 0u64;
    let result = (|| -> Result<(), ServiceError> {
        loop {
            match rx.recv_timeout(EVENT_POLL) {
                Ok(Ok(env)) => {
                    let resp = dispatcher.handle(&env);
                    send_message(&mut stream, &resp.to_bytes())?;
                    handled += 1;
                }
                Ok(Err(e)) => {
                    if let ServiceError::PayloadTooLarge(_) | ServiceError::Malformed(_) = e {
                        let _ = send_message(&mut stream, &error_envelope(0, &e).to_bytes());
                    }
                    return Err(e);
                }
                Err(mpsc::RecvTimeoutError::Timeout) => {}
                Err(mpsc::RecvTimeoutError::Disconnected) => return Ok(()),
            }
            for alert in alerts.try_iter() {
                let env = CommandEnvelope::new(EVENT_ALERT, 0, encode_alert(&alert));
                send_message(&mut stream, &env.to_bytes())?;
            }
        }
    })();
    stream.shutdown_stream();
    let _ = reader_thread.join();
    match result {
        Ok(()) | Err(ServiceError::ChannelClosed) => Ok(handled),
        Err(e) => Err(e),
    }
}
