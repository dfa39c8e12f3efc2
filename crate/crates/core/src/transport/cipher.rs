//! Optional whole-channel obfuscation after a shared-secret login: each
//! direction is XORed with SHA-256 in counter mode keyed by the login.
//! This keeps casual observers out; it is not a vetted cipher, and a real
//! deployment should put the channels inside a standard secure transport.

use super::auth::NONCE_LEN;
use super::stream::Stream;
use hmac::{Hmac, KeyInit, Mac};
use sha2::{Digest, Sha256};
use std::io::{self, Read, Write};
use std::sync::{Arc, Mutex};
use std::time::Duration;

/// Which side of the connection a wrapper sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Server,
    Client,
}

struct Keystream {
    key: [u8; 32],
    dir: u8,
    counter: u64,
    block: [u8; 32],
    used: usize,
}

impl Keystream {
    fn new(key: [u8; 32], dir: u8) -> Self {
        Keystream { key, dir, counter: 0, block: [0; 32], used: 32 }
    }

    fn apply(&mut self, data: &mut [u8]) {
        for b in data {
            if self.used == 32 {
                let mut h = Sha256::new();
                h.update(self.key);
                h.update([self.dir]);
                h.update(self.counter.to_be_bytes());
                self.block = h.finalize().into();
                self.counter += 1;
                self.used = 0;
            }
            *b ^= self.block[self.used];
            self.used += 1;
        }
    }
}

pub struct CipherStream<S> {
    inner: S,
    rx: Arc<Mutex<Keystream>>,
    tx: Arc<Mutex<Keystream>>,
}

fn session_key(secret: &[u8], nonce: &[u8; NONCE_LEN]) -> [u8; 32] {
    let mut mac = Hmac::<Sha256>::new_from_slice(secret).expect("any key length");
    mac.update(b"remoteframe-stream");
    mac.update(nonce);
    mac.finalize().into_bytes().into()
}

/// Wraps `inner` with the keystreams derived from the login.
pub fn encrypt_channel<S>(inner: S, secret: &[u8], nonce: &[u8; NONCE_LEN], side: Side) -> CipherStream<S> {
    let key = session_key(secret, nonce);
    let (tx_dir, rx_dir) = match side {
        Side::Server => (0x53, 0x43),
        Side::Client => (0x43, 0x53),
    };
    CipherStream {
        inner,
        rx: Arc::new(Mutex::new(Keystream::new(key, rx_dir))),
        tx: Arc::new(Mutex::new(Keystream::new(key, tx_dir))),
    }
}

impl<S: Read> Read for CipherStream<S> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.rx.lock().unwrap().apply(&mut buf[..n]);
        Ok(n)
    }
}

impl<S: Write> Write for CipherStream<S> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let mut data = buf.to_vec();
        // Hold the keystream lock across the write so clones cannot reorder.
        let mut ks = self.tx.lock().unwrap();
        ks.apply(&mut data);
        self.inner.write_all(&data)?;
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

impl<S: Stream + 'static> Stream for CipherStream<S> {
    fn try_clone_stream(&self) -> io::Result<Box<dyn Stream>> {
        Ok(Box::new(CipherStream { inner: self.inner.try_clone_stream()?, rx: self.rx.clone(), tx: self.tx.clone() }))
    }

    fn shutdown_stream(&self) {
        self.inner.shutdown_stream()
    }

    fn set_read_timeout_stream(&self, timeout: Option<Duration>) -> io::Result<()> {
        self.inner.set_read_timeout_stream(timeout)
    }
}
