//! A USB-style link between host and device: each connection is a throttled
//! in-memory pipe naming the device service it wants, and `forward_port`
//! exposes a service on a local TCP port in the manner of `adb forward`.

use super::pipe::{pipe_pair, PipeEnd};
use super::server::ServiceKind;
use super::stream::Stream;
use super::throttle::{throttle, TransportProfile};
use super::TransportError;
use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

type Incoming = (ServiceKind, Box<dyn Stream>);

/// Device side of the link.
pub struct UsbDevice {
    rx: Mutex<mpsc::Receiver<Incoming>>,
}

/// Host side of the link.
#[derive(Clone)]
pub struct UsbHost {
    tx: mpsc::Sender<Incoming>,
    profile: TransportProfile,
}

/// Creates a linked device/host pair using the usb profile.
pub fn usb_pipe_pair() -> (UsbDevice, UsbHost) {
    usb_pipe_pair_with(TransportProfile::usb())
}

pub fn usb_pipe_pair_with(profile: TransportProfile) -> (UsbDevice, UsbHost) {
    let (tx, rx) = mpsc::channel();
    (UsbDevice { rx: Mutex::new(rx) }, UsbHost { tx, profile })
}

fn shaped(end: PipeEnd, profile: &TransportProfile) -> Box<dyn Stream> {
    if profile.is_passthrough() {
        Box::new(end)
    } else {
        Box::new(throttle(end, profile))
    }
}

impl UsbHost {
    /// Opens a byte stream to the named device service (`rfb` or `cmd`).
    pub fn connect(&self, service: &str) -> Result<Box<dyn Stream>, TransportError> {
        let kind = ServiceKind::from_name(service)?;
        let (host_end, dev_end) = pipe_pair();
        self.tx.send((kind, shaped(dev_end, &self.profile))).map_err(|_| TransportError::ChannelClosed)?;
        Ok(shaped(host_end, &self.profile))
    }
}

impl UsbDevice {
    /// Waits for the next connection; `Ok(None)` on timeout.
    pub fn accept_timeout(&self, timeout: Duration) -> Result<Option<Incoming>, TransportError> {
        match self.rx.lock().unwrap().recv_timeout(timeout) {
            Ok(c) => Ok(Some(c)),
            Err(mpsc::RecvTimeoutError::Timeout) => Ok(None),
            Err(mpsc::RecvTimeoutError::Disconnected) => Err(TransportError::ChannelClosed),
        }
    }

    pub fn accept(&self) -> Result<Incoming, TransportError> {
        self.rx.lock().unwrap().recv().map_err(|_| TransportError::ChannelClosed)
    }
}

/// A running port forward.
pub struct Forward {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl Forward {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn stop(mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

fn pump(mut from: impl Read, mut to: impl Write, on_end: impl FnOnce()) {
    let mut buf = vec![0u8; 64 * 1024];
    loop {
        match from.read(&mut buf) {
            Ok(0) | Err(_) => break,
            Ok(n) => {
                if to.write_all(&buf[..n]).and_then(|_| to.flush()).is_err() {
                    break;
                }
            }
        }
    }
    on_end();
}

/// Listens on `127.0.0.1:local_port` (0 for any free port) and tunnels each
/// connection to `service` on the device.
pub fn forward_port(host: &UsbHost, local_port: u16, service: &str) -> Result<Forward, TransportError> {
    ServiceKind::from_name(service)?;
    let addr = format!("127.0.0.1:{local_port}");
    let listener = TcpListener::bind(&addr).map_err(|source| TransportError::BindFailed { addr, source })?;
    listener.set_nonblocking(true)?;
    let local = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let (host, service, stop2) = (host.clone(), service.to_string(), stop.clone());
    let thread = std::thread::Builder::new().name(format!("forward-{local_port}")).spawn(move || {
        while !stop2.load(Ordering::SeqCst) {
            match listener.accept() {
                Ok((tcp, _)) => {
                    let _ = tcp.set_nonblocking(false);
                    let _ = tcp.set_nodelay(true);
                    if let Err(e) = tunnel(&host, &service, tcp) {
                        log::warn!("forward to {service} failed: {e}");
                    }
                }
                Err(_) => std::thread::sleep(Duration::from_millis(10)),
            }
        }
    })?;
    Ok(Forward { addr: local, stop, thread: Some(thread) })
}

fn tunnel(host: &UsbHost, service: &str, tcp: TcpStream) -> Result<(), TransportError> {
    let dev = host.connect(service)?;
    let dev2 = dev.try_clone_stream()?;
    let tcp2 = tcp.try_clone()?;
    let (dev_close, tcp_close) = (dev.try_clone_stream()?, tcp.try_clone()?);
    let (dev_close2, tcp_close2) = (dev.try_clone_stream()?, tcp.try_clone()?);
    std::thread::spawn(move || {
        pump(tcp, dev, move || {
            dev_close.shutdown_stream();
            let _ = tcp_close.shutdown(std::net::Shutdown::Both);
        })
    });
    std::thread::spawn(move || {
        pump(dev2, tcp2, move || {
            dev_close2.shutdown_stream();
            let _ = tcp_close2.shutdown(std::net::Shutdown::Both);
        })
    });
    Ok(())
}
