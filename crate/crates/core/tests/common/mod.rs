#![allow(dead_code)]

use remoteframe::device::{standard_workload, Device, DeviceState, NodeKind, SimClock};
use remoteframe::services::{ErrorCode, Services};
use remoteframe::pixel::{FrameBuffer, PixelFormat, Rectangle};
use remoteframe::transport::Stream;
use remoteframe::encodings::EncodingId;
use remoteframe::rfb::{client_handshake, server_handshake, ServerInit, Session, UpdateMessage, SERVER_NAME};
use remoteframe::transport::{pipe_pair, AuthPolicy};
use std::io::{self, Read, Write};
use std::sync::{Arc, Mutex};
use std::time::Duration;

pub type Log = Arc<Mutex<Vec<(char, Vec<u8>)>>>;

/// Records every write, tagged with the writing side, before passing it on.
pub struct Tap {
    inner: Box<dyn Stream>,
    side: char,
    log: Log,
}

impl Tap {
    pub fn new(inner: Box<dyn Stream>, side: char, log: &Log) -> Self {
        Tap { inner, side, log: log.clone() }
    }
}

impl Read for Tap {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        self.inner.read(buf)
    }
}

impl Write for Tap {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.log.lock().unwrap().push((self.side, buf.to_vec()));
        self.inner.write_all(buf)?;
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

impl Stream for Tap {
    fn try_clone_stream(&self) -> io::Result<Box<dyn Stream>> {
        Ok(Box::new(Tap { inner: self.inner.try_clone_stream()?, side: self.side, log: self.log.clone() }))
    }

    fn shutdown_stream(&self) {
        self.inner.shutdown_stream()
    }

    fn set_read_timeout_stream(&self, timeout: Option<Duration>) -> io::Result<()> {
        self.inner.set_read_timeout_stream(timeout)
    }
}

/// One line per write: the side letter and the bytes in hex.
pub fn transcript(log: &Log) -> String {
    log.lock().unwrap().iter().map(|(side, bytes)| format!("{side} {}\n", hex::encode(bytes))).collect()
}

pub fn wire_bytes(log: &Log) -> Vec<u8> {
    log.lock().unwrap().iter().flat_map(|(_, b)| b.clone()).collect()
}

/// Device on the built-in workload with a clock that only moves when told.
pub fn manual_device() -> Arc<Device> {
    Device::new(DeviceState::fixture(), standard_workload(), SimClock::manual(0)).unwrap()
}

/// A 48×32 crop of the browser screen: a line of text above a photo.
pub fn golden_frame() -> FrameBuffer {
    let player = remoteframe::device::load_scenario(standard_workload()).unwrap();
    let full = player.frame_at(2_500);
    let crop = Rectangle::new(8, 592, 48, 32);
    let px = full.extract(&crop, &PixelFormat::canonical()).unwrap();
    FrameBuffer::from_pixels(crop.w, crop.h, PixelFormat::canonical(), px).unwrap()
}

pub fn golden_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Compares against a checked-in file, or rewrites it when
/// REMOTEFRAME_BLESS is set.
pub fn check_golden(name: &str, actual: &[u8]) {
    let path = golden_dir().join(name);
    if std::env::var_os("REMOTEFRAME_BLESS").is_some() {
        std::fs::create_dir_all(golden_dir()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(expected == actual, "{name} differs from the golden file ({} vs {} bytes)", actual.len(), expected.len());
}

/// A canonical framebuffer of `w×h` whose content mixes flat areas, a small
/// palette and noise, depending on `colors` (1 gives a uniform frame).
pub fn random_frame(seed: u64, w: u16, h: u16, colors: usize) -> FrameBuffer {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let palette: Vec<u32> = (0..colors.max(1)).map(|_| rng.gen::<u32>() & 0x00ff_ffff).collect();
    let mut fb = FrameBuffer::new(w, h, PixelFormat::canonical(), palette[0]);
    if colors <= 1 {
        return fb;
    }
    // A few filled boxes, then sprinkled pixels.
    for _ in 0..rng.gen_range(0..8) {
        let x = rng.gen_range(0..w);
        let y = rng.gen_range(0..h);
        let r = Rectangle::new(x, y, rng.gen_range(1..=w - x), rng.gen_range(1..=h - y));
        fb.fill_rect(r, palette[rng.gen_range(0..palette.len())]);
    }
    let density = rng.gen_range(0.0..1.0f64);
    for y in 0..h {
        for x in 0..w {
            if rng.gen_bool(density) {
                fb.set(x, y, palette[rng.gen_range(0..palette.len())]);
            }
        }
    }
    fb
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FsOp {
    Put(String, Vec<u8>),
    Get(String),
    Remove(String, bool),
    List(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FsOutcome {
    Done,
    Data(Vec<u8>),
    Paths(Vec<String>),
}

/// A random path over a small alphabet that overlaps the fixture tree.
pub fn random_path(rng: &mut impl rand::Rng) -> String {
    const COMPONENTS: [&str; 7] = ["a", "b", "sdcard", "data", "app", "..", "."];
    let depth = rng.gen_range(0..=4);
    let mut p = String::new();
    for _ in 0..depth {
        p.push('/');
        p.push_str(COMPONENTS[rng.gen_range(0..COMPONENTS.len())]);
    }
    if p.is_empty() {
        p.push('/');
    }
    p
}

pub fn random_fs_op(rng: &mut impl rand::Rng) -> FsOp {
    let path = random_path(rng);
    match rng.gen_range(0..4) {
        0 => {
            let n = rng.gen_range(0..64);
            FsOp::Put(path, (0..n).map(|_| rng.gen()).collect())
        }
        1 => FsOp::Get(path),
        2 => FsOp::Remove(path, rng.gen()),
        _ => FsOp::List(path),
    }
}

/// Reference tree: every path maps to `None` for a directory or the file
/// contents. The root is implicit.
#[derive(Debug, Default)]
pub struct FsModel {
    nodes: std::collections::BTreeMap<Vec<String>, Option<Vec<u8>>>,
}

impl FsModel {
    pub fn from_services(s: &Services) -> Self {
        let mut nodes = std::collections::BTreeMap::new();
        let state = s.device().state();
        for n in state.fs.walk() {
            let key: Vec<String> = n.path.split('/').filter(|c| !c.is_empty()).map(String::from).collect();
            let v = match n.kind {
                NodeKind::Dir => None,
                NodeKind::File => Some(state.fs.get(&n.path).unwrap()),
            };
            nodes.insert(key, v);
        }
        FsModel { nodes }
    }

    fn parts(path: &str) -> Result<Vec<String>, ErrorCode> {
        let mut out: Vec<String> = Vec::new();
        for c in path.split('/') {
            match c {
                "" | "." => {}
                ".." => {
                    out.pop().ok_or(ErrorCode::PathEscape)?;
                }
                c => out.push(c.to_string()),
            }
        }
        Ok(out)
    }

    fn show(parts: &[String]) -> String {
        format!("/{}", parts.join("/"))
    }

    pub fn apply(&mut self, op: &FsOp) -> Result<FsOutcome, ErrorCode> {
        match op {
            FsOp::Put(path, data) => {
                let p = Self::parts(path)?;
                if p.is_empty() {
                    return Err(ErrorCode::IsDirectory);
                }
                for i in 1..p.len() {
                    if let Some(Some(_)) = self.nodes.get(&p[..i]) {
                        return Err(ErrorCode::NotADirectory);
                    }
                }
                if let Some(None) = self.nodes.get(&p) {
                    return Err(ErrorCode::IsDirectory);
                }
                for i in 1..p.len() {
                    self.nodes.entry(p[..i].to_vec()).or_insert(None);
                }
                self.nodes.insert(p, Some(data.clone()));
                Ok(FsOutcome::Done)
            }
            FsOp::Get(path) => {
                let p = Self::parts(path)?;
                match self.nodes.get(&p) {
                    _ if p.is_empty() => Err(ErrorCode::IsDirectory),
                    Some(Some(d)) => Ok(FsOutcome::Data(d.clone())),
                    Some(None) => Err(ErrorCode::IsDirectory),
                    None => Err(ErrorCode::NotFound),
                }
            }
            FsOp::Remove(path, recursive) => {
                let p = Self::parts(path)?;
                if p.is_empty() {
                    return Err(ErrorCode::InvalidArgument);
                }
                match self.nodes.get(&p) {
                    None => Err(ErrorCode::NotFound),
                    Some(None) if !recursive => Err(ErrorCode::IsDirectory),
                    Some(_) => {
                        self.nodes.retain(|k, _| !k.starts_with(&p));
                        Ok(FsOutcome::Done)
                    }
                }
            }
            FsOp::List(path) => {
                let p = Self::parts(path)?;
                match self.nodes.get(&p) {
                    Some(Some(_)) => Ok(FsOutcome::Paths(vec![Self::show(&p)])),
                    None if !p.is_empty() => Err(ErrorCode::NotFound),
                    _ => Ok(FsOutcome::Paths(
                        self.nodes.keys().filter(|k| k.len() == p.len() + 1 && k.starts_with(&p)).map(|k| Self::show(k)).collect(),
                    )),
                }
            }
        }
    }
}

/// The same operation against the service layer.
pub fn run_fs_op(s: &Services, op: &FsOp) -> Result<FsOutcome, ErrorCode> {
    let r = match op {
        FsOp::Put(path, data) => s.fs_put(path, data.clone()).map(|_| FsOutcome::Done),
        FsOp::Get(path) => s.fs_get(path).map(FsOutcome::Data),
        FsOp::Remove(path, recursive) => s.fs_remove(path, *recursive).map(|_| FsOutcome::Done),
        FsOp::List(path) => s.fs_list(path).map(|nodes| FsOutcome::Paths(nodes.into_iter().map(|n| n.path).collect())),
    };
    r.map_err(|e| e.code())
}

/// A TCP relay that records every byte it forwards, in both directions.
pub struct Sniffer {
    pub addr: std::net::SocketAddr,
    captured: Arc<Mutex<Vec<u8>>>,
}

impl Sniffer {
    pub fn new(target: std::net::SocketAddr) -> Self {
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let captured = Arc::new(Mutex::new(Vec::new()));
        let cap = captured.clone();
        std::thread::spawn(move || {
            for client in listener.incoming() {
                let Ok(client) = client else { break };
                let Ok(server) = std::net::TcpStream::connect(target) else { continue };
                for (mut from, mut to) in [
                    (client.try_clone().unwrap(), server.try_clone().unwrap()),
                    (server, client),
                ] {
                    let cap = cap.clone();
                    std::thread::spawn(move || {
                        let mut buf = [0u8; 16 * 1024];
                        while let Ok(n) = from.read(&mut buf) {
                            if n == 0 {
                                break;
                            }
                            cap.lock().unwrap().extend_from_slice(&buf[..n]);
                            if to.write_all(&buf[..n]).is_err() {
                                break;
                            }
                        }
                        let _ = to.shutdown(std::net::Shutdown::Both);
                    });
                }
            }
        });
        Sniffer { addr, captured }
    }

    pub fn captured(&self) -> Vec<u8> {
        self.captured.lock().unwrap().clone()
    }
}

pub fn contains(haystack: &[u8], needle: &[u8]) -> bool {
    haystack.windows(needle.len()).any(|w| w == needle)
}

pub fn tcp(addr: std::net::SocketAddr) -> Box<dyn Stream> {
    let s = std::net::TcpStream::connect(addr).unwrap();
    s.set_nodelay(true).unwrap();
    Box::new(s)
}

pub const GOLDEN_NONCE: [u8; 16] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15];
pub const GOLDEN_SECRET: &[u8] = b"golden-secret";

pub fn golden_init() -> ServerInit {
    ServerInit { width: 480, height: 800, format: PixelFormat::canonical(), name: SERVER_NAME.into() }
}

pub fn handshake_transcript(policy: AuthPolicy, secret: Option<&'static [u8]>) -> String {
    let log = Log::default();
    let (s, c) = pipe_pair();
    let server_side = Box::new(Tap::new(Box::new(s), 'S', &log));
    let client_side = Box::new(Tap::new(Box::new(c), 'C', &log));
    let server = std::thread::spawn(move || server_handshake(server_side, &policy, false, &golden_init(), GOLDEN_NONCE).map(|a| a.shared));
    let (_, got) = client_handshake(client_side, secret, true).unwrap();
    assert!(server.join().unwrap().unwrap());
    assert_eq!(got, golden_init());
    transcript(&log)
}

/// The update a fresh session sends for a full request on `fb`.
pub fn golden_update(fb: &Arc<FrameBuffer>, enc: EncodingId) -> UpdateMessage {
    let mut s = Session::new(1, fb.width(), fb.height(), &EncodingId::ALL);
    s.handle_set_encodings(&[enc.code()]);
    s.handle_update_request(fb.bounds(), false, fb).unwrap().unwrap()
}
