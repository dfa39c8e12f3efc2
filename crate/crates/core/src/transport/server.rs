//! TCP accept loops and connection bookkeeping.

use super::bridge::{serve_web, WebConfig};
use super::stream::Stream;
use super::throttle::{throttle, TransportProfile};
use super::usb::UsbDevice;
use super::{AuthPolicy, TransportError};
use crate::device::Device;
use crate::encodings::EncodingId;
use crate::rfb::{run_session, RfbContext, DEFAULT_POLL};
use crate::services::{run_cmd_session, CmdContext, Services};
use std::collections::HashMap;
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

pub const DEFAULT_RFB_PORT: u16 = 5901;
const ACCEPT_IDLE: Duration = Duration::from_millis(10);

/// A device-side service reachable through the server or a forward.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ServiceKind {
    Rfb,
    Cmd,
}

impl ServiceKind {
    pub fn from_name(name: &str) -> Result<Self, TransportError> {
        match name {
            "rfb" => Ok(ServiceKind::Rfb),
            "cmd" => Ok(ServiceKind::Cmd),
            other => Err(TransportError::ServiceUnknown(other.to_string())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ServiceKind::Rfb => "rfb",
            ServiceKind::Cmd => "cmd",
        }
    }
}

#[derive(Clone)]
pub struct ServerConfig {
    pub bind: String,
    /// Port 0 picks a free port.
    pub rfb_port: u16,
    pub cmd_port: u16,
    pub auth: AuthPolicy,
    /// Encrypt channels after a shared-secret login.
    pub encrypt: bool,
    /// Applied to everything the server writes.
    pub profile: TransportProfile,
    pub encodings: Vec<EncodingId>,
    pub poll_interval: Duration,
    pub web: Option<WebConfig>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            bind: "127.0.0.1".into(),
            rfb_port: DEFAULT_RFB_PORT,
            cmd_port: crate::services::opcodes::DEFAULT_CMD_PORT,
            auth: AuthPolicy::None,
            encrypt: false,
            profile: TransportProfile::unthrottled(),
            encodings: EncodingId::ALL.to_vec(),
            poll_interval: DEFAULT_POLL,
            web: None,
        }
    }
}

impl ServerConfig {
    /// Loopback with ephemeral ports, for tests and examples.
    pub fn ephemeral() -> Self {
        ServerConfig { rfb_port: 0, cmd_port: 0, ..Self::default() }
    }
}

/// Open connections, so shutdown can close them.
#[derive(Default)]
pub(crate) struct Registry {
    next: AtomicU64,
    conns: Mutex<HashMap<u64, Box<dyn Stream>>>,
    threads: Mutex<Vec<JoinHandle<()>>>,
}

impl Registry {
    pub(crate) fn next_id(&self) -> u64 {
        self.next.fetch_add(1, Ordering::SeqCst) + 1
    }

    fn track(&self, id: u64, s: &dyn Stream) {
        if let Ok(c) = s.try_clone_stream() {
            self.conns.lock().unwrap().insert(id, c);
        }
    }

    fn forget(&self, id: u64) {
        self.conns.lock().unwrap().remove(&id);
    }

    pub(crate) fn spawn(&self, name: String, f: impl FnOnce() + Send + 'static) {
        if let Ok(h) = std::thread::Builder::new().name(name).spawn(f) {
            let mut t = self.threads.lock().unwrap();
            t.retain(|h| !h.is_finished());
            t.push(h);
        }
    }

    fn close_all(&self) {
        for (_, c) in self.conns.lock().unwrap().drain() {
            c.shutdown_stream();
        }
    }

    fn join_all(&self) {
        let threads = std::mem::take(&mut *self.threads.lock().unwrap());
        for h in threads {
            let _ = h.join();
        }
    }

    pub(crate) fn open_count(&self) -> usize {
        self.conns.lock().unwrap().len()
    }
}

/// State shared by every accept loop of one server.
pub(crate) struct Shared {
    pub(crate) rfb: RfbContext,
    pub(crate) cmd: CmdContext,
    pub(crate) profile: TransportProfile,
    pub(crate) registry: Registry,
    pub(crate) stop: AtomicBool,
}

impl Shared {
    /// Runs a session for `service` on its own thread.
    pub(crate) fn handle(self: &Arc<Self>, service: ServiceKind, stream: Box<dyn Stream>) {
        let id = self.registry.next_id();
        self.registry.track(id, stream.as_ref());
        let me = self.clone();
        self.registry.spawn(format!("{}-{id}", service.name()), move || {
            match service {
                ServiceKind::Rfb => match run_session(stream, &me.rfb, id) {
                    Ok(s) => log::debug!("rfb session {id} ended after {} updates", s.updates),
                    Err(e) => log::info!("rfb session {id} closed: {e}"),
                },
                ServiceKind::Cmd => match run_cmd_session(stream, &me.cmd, id) {
                    Ok(n) => log::debug!("cmd session {id} ended after {n} requests"),
                    Err(e) => log::info!("cmd session {id} closed: {e}"),
                },
            }
            me.registry.forget(id);
        });
    }

    fn wrap_tcp(&self, s: TcpStream) -> Box<dyn Stream> {
        let _ = s.set_nodelay(true);
        if self.profile.is_passthrough() {
            Box::new(s)
        } else {
            Box::new(throttle(s, &self.profile))
        }
    }
}

fn bind(addr: &str, port: u16) -> Result<TcpListener, TransportError> {
    let a = format!("{addr}:{port}");
    let l = TcpListener::bind(&a).map_err(|source| TransportError::BindFailed { addr: a, source })?;
    l.set_nonblocking(true)?;
    Ok(l)
}

fn accept_loop(listener: TcpListener, shared: Arc<Shared>, service: ServiceKind) {
    while !shared.stop.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((s, peer)) => {
                log::debug!("{} connection from {peer}", service.name());
                if s.set_nonblocking(false).is_ok() {
                    let stream = shared.wrap_tcp(s);
                    shared.handle(service, stream);
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => std::thread::sleep(ACCEPT_IDLE),
            Err(e) => {
                log::warn!("accept failed: {e}");
                std::thread::sleep(ACCEPT_IDLE);
            }
        }
    }
}

/// A running server. Dropping it without [`ServerHandle::shutdown`] leaves
/// the threads running.
pub struct ServerHandle {
    shared: Arc<Shared>,
    rfb_addr: SocketAddr,
    cmd_addr: SocketAddr,
    web_addr: Option<SocketAddr>,
    loops: Vec<JoinHandle<()>>,
}

/// Binds the listeners and starts accepting.
pub fn serve(config: ServerConfig, device: Arc<Device>) -> Result<ServerHandle, TransportError> {
    config.profile.validate()?;
    if config.encrypt && config.auth.secret().is_none() {
        return Err(TransportError::InvalidPolicy("encryption needs a shared secret".into()));
    }
    let rfb_l = bind(&config.bind, config.rfb_port)?;
    let cmd_l = bind(&config.bind, config.cmd_port)?;
    let web_l = match &config.web {
        Some(w) => Some(bind(&config.bind, w.port)?),
        None => None,
    };
    let rfb = RfbContext {
        device: device.clone(),
        auth: config.auth.clone(),
        encrypt: config.encrypt,
        supported: config.encodings.clone(),
        poll_interval: config.poll_interval,
        frame_step_ms: None,
    };
    let cmd = CmdContext { services: Services::new(device), auth: config.auth.clone(), encrypt: config.encrypt };
    let shared = Arc::new(Shared { rfb, cmd, profile: config.profile.clone(), registry: Registry::default(), stop: AtomicBool::new(false) });
    let rfb_addr = rfb_l.local_addr()?;
    let cmd_addr = cmd_l.local_addr()?;
    let web_addr = web_l.as_ref().map(|l| l.local_addr()).transpose()?;
    let mut loops = Vec::new();
    for (l, kind) in [(rfb_l, ServiceKind::Rfb), (cmd_l, ServiceKind::Cmd)] {
        let sh = shared.clone();
        loops.push(std::thread::Builder::new().name(format!("accept-{}", kind.name())).spawn(move || accept_loop(l, sh, kind))?);
    }
    if let (Some(l), Some(web)) = (web_l, config.web.clone()) {
        let sh = shared.clone();
        loops.push(std::thread::Builder::new().name("accept-web".into()).spawn(move || serve_web(l, sh, web))?);
    }
    log::info!("serving rfb on {rfb_addr}, cmd on {cmd_addr}");
    Ok(ServerHandle { shared, rfb_addr, cmd_addr, web_addr, loops })
}

impl ServerHandle {
    pub fn rfb_addr(&self) -> SocketAddr {
        self.rfb_addr
    }

    pub fn cmd_addr(&self) -> SocketAddr {
        self.cmd_addr
    }

    pub fn web_addr(&self) -> Option<SocketAddr> {
        self.web_addr
    }

    pub fn device(&self) -> &Arc<Device> {
        &self.shared.rfb.device
    }

    /// Number of sessions currently open.
    pub fn open_sessions(&self) -> usize {
        self.shared.registry.open_count()
    }

    /// Serves connections arriving over a USB-style link.
    pub fn attach_usb(&mut self, usb: UsbDevice) -> Result<(), TransportError> {
        let sh = self.shared.clone();
        self.loops.push(std::thread::Builder::new().name("accept-usb".into()).spawn(move || {
            while !sh.stop.load(Ordering::SeqCst) {
                match usb.accept_timeout(Duration::from_millis(20)) {
                    Ok(Some((kind, stream))) => sh.handle(kind, stream),
                    Ok(None) => {}
                    Err(_) => break,
                }
            }
        })?);
        Ok(())
    }

    /// Stops accepting, closes every session and waits for their threads.
    pub fn shutdown(self) {
        self.shared.stop.store(true, Ordering::SeqCst);
        for l in self.loops {
            let _ = l.join();
        }
        self.shared.registry.close_all();
        self.shared.registry.join_all();
    }
}
