//! HTTP front door: static viewer assets under `/viewer` and WebSocket
//! tunnels to the RFB (`/ws/rfb`) and command (`/ws/cmd`) services. Every
//! binary WebSocket message carries exactly one protocol message.

use super::pipe::{pipe_pair, PipeEnd};
use super::server::{ServiceKind, Shared};
use super::stream::{is_timeout, Stream};
use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Component, Path, PathBuf};
use std::sync::atomic::Ordering;
use std::sync::Arc;
use std::time::Duration;
use tungstenite::{Message, WebSocket};

pub const DEFAULT_WEB_PORT: u16 = 8080;
const BUILTIN_INDEX: &str = include_str!("../../viewer/index.html");
const MAX_HEAD: usize = 16 * 1024;
const PUMP_TICK: Duration = Duration::from_millis(10);

#[derive(Debug, Clone, Default)]
pub struct WebConfig {
    pub port: u16,
    /// Directory with the viewer build; a placeholder page otherwise.
    pub root: Option<PathBuf>,
}

pub(crate) fn serve_web(listener: TcpListener, shared: Arc<Shared>, cfg: WebConfig) {
    let cfg = Arc::new(cfg);
    while !shared.stop.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((s, _)) => {
                let (sh, cfg) = (shared.clone(), cfg.clone());
                let id = shared.registry.next_id();
                shared.registry.spawn(format!("web-{id}"), move || {
                    if let Err(e) = handle_http(s, sh, &cfg) {
                        log::debug!("web connection closed: {e}");
                    }
                });
            }
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => std::thread::sleep(PUMP_TICK),
            Err(_) => std::thread::sleep(PUMP_TICK),
        }
    }
}

/// Peeks the request head without consuming it.
fn peek_head(s: &TcpStream) -> std::io::Result<String> {
    let mut buf = vec![0u8; MAX_HEAD];
    for _ in 0..500 {
        let n = s.peek(&mut buf)?;
        if n == 0 {
            return Err(std::io::ErrorKind::UnexpectedEof.into());
        }
        if let Some(end) = buf[..n].windows(4).position(|w| w == b"\r\n\r\n") {
            return Ok(String::from_utf8_lossy(&buf[..end]).into_owned());
        }
        if n == MAX_HEAD {
            break;
        }
        std::thread::sleep(Duration::from_millis(2));
    }
    Err(std::io::Error::new(std::io::ErrorKind::InvalidData, "request head too long or incomplete"))
}

fn handle_http(s: TcpStream, shared: Arc<Shared>, cfg: &WebConfig) -> std::io::Result<()> {
    s.set_nonblocking(false)?;
    s.set_read_timeout(Some(Duration::from_secs(5)))?;
    let head = peek_head(&s)?;
    let mut lines = head.lines();
    let request = lines.next().unwrap_or_default().to_string();
    let path = request.split_whitespace().nth(1).unwrap_or("/").split('?').next().unwrap_or("/").to_string();
    let upgrade = lines.any(|l| {
        let l = l.to_ascii_lowercase();
        l.starts_with("upgrade:") && l.contains("websocket")
    });
    match (upgrade, path.as_str()) {
        (true, "/ws/rfb") => bridge(s, shared, ServiceKind::Rfb),
        (true, "/ws/cmd") => bridge(s, shared, ServiceKind::Cmd),
        (false, p) if p == "/viewer" || p.starts_with("/viewer/") => {
            consume(&s, head.len() + 4)?;
            serve_static(s, cfg, p)
        }
        _ => {
            consume(&s, head.len() + 4)?;
            respond(s, "404 Not Found", "text/plain", b"not found\n")
        }
    }
}

fn consume(mut s: &TcpStream, n: usize) -> std::io::Result<()> {
    let mut sink = vec![0u8; n];
    s.read_exact(&mut sink)
}

fn respond(mut s: TcpStream, status: &str, ctype: &str, body: &[u8]) -> std::io::Result<()> {
    let head = format!(
        "HTTP/1.1 {status}\r\nContent-Type: {ctype}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        body.len()
    );
    s.write_all(head.as_bytes())?;
    s.write_all(body)?;
    s.flush()
}

fn content_type(p: &Path) -> &'static str {
    match p.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js") | Some("mjs") => "text/javascript",
        Some("css") => "text/css",
        Some("json") => "application/json",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        Some("wasm") => "application/wasm",
        _ => "application/octet-stream",
    }
}

fn serve_static(s: TcpStream, cfg: &WebConfig, url: &str) -> std::io::Result<()> {
    let rel = url.trim_start_matches("/viewer").trim_start_matches('/');
    let rel = if rel.is_empty() { "index.html" } else { rel };
    let rel_path = Path::new(rel);
    if rel_path.components().any(|c| !matches!(c, Component::Normal(_))) {
        return respond(s, "404 Not Found", "text/plain", b"not found\n");
    }
    match &cfg.root {
        None if rel == "index.html" => respond(s, "200 OK", "text/html; charset=utf-8", BUILTIN_INDEX.as_bytes()),
        None => respond(s, "404 Not Found", "text/plain", b"not found\n"),
        Some(root) => match std::fs::read(root.join(rel_path)) {
            Ok(body) => respond(s, "200 OK", content_type(rel_path), &body),
            Err(_) => respond(s, "404 Not Found", "text/plain", b"not found\n"),
        },
    }
}

fn bridge(s: TcpStream, shared: Arc<Shared>, service: ServiceKind) -> std::io::Result<()> {
    let mut ws = tungstenite::accept(s).map_err(|e| std::io::Error::other(e.to_string()))?;
    let (session_end, pump_end) = pipe_pair();
    shared.handle(service, Box::new(session_end));
    ws.get_ref().set_read_timeout(Some(PUMP_TICK))?;
    pump_end.set_read_timeout_stream(Some(Duration::from_millis(1)))?;
    let result = pump(&mut ws, &pump_end);
    pump_end.close();
    let _ = ws.close(None);
    let _ = ws.flush();
    result
}

/// Moves messages both ways until either side closes.
fn pump(ws: &mut WebSocket<TcpStream>, pipe: &PipeEnd) -> std::io::Result<()> {
    let mut to_session = pipe.try_clone();
    loop {
        match ws.read() {
            Ok(Message::Binary(data)) => {
                if to_session.write_all(&data).is_err() {
                    return Ok(());
                }
            }
            Ok(Message::Close(_)) => return Ok(()),
            Ok(_) => {}
            Err(tungstenite::Error::Io(e)) if is_timeout(&e) => {}
            Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => return Ok(()),
            Err(e) => return Err(std::io::Error::other(e.to_string())),
        }
        loop {
            match pipe.recv_chunk() {
                Ok(Some(chunk)) => {
                    ws.send(Message::binary(chunk)).map_err(|e| std::io::Error::other(e.to_string()))?;
                }
                Ok(None) => return Ok(()),
                Err(e) if is_timeout(&e) => break,
                Err(e) => return Err(e),
            }
        }
    }
}
