//! Link emulation: a token bucket refilled in 100 ms buckets plus a fixed
//! per-write latency with optional jitter.

use super::stream::Stream;
use super::TransportError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::{self, Read, Write};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

const MIB: f64 = 1024.0 * 1024.0;
/// Refill granularity and burst size of the token bucket.
pub const BUCKET_MS: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileName {
    Usb,
    Wifi,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportProfile {
    pub name: ProfileName,
    /// Bytes per second; `None` means unlimited.
    pub bandwidth: Option<f64>,
    pub latency_ms: f64,
    pub jitter_ms: f64,
}

impl TransportProfile {
    pub fn usb() -> Self {
        TransportProfile { name: ProfileName::Usb, bandwidth: Some(30.0 * MIB), latency_ms: 1.0, jitter_ms: 0.0 }
    }

    pub fn wifi() -> Self {
        TransportProfile { name: ProfileName::Wifi, bandwidth: Some(2.5 * MIB), latency_ms: 5.0, jitter_ms: 2.0 }
    }

    /// No bandwidth cap and no delay.
    pub fn unthrottled() -> Self {
        TransportProfile { name: ProfileName::Custom, bandwidth: None, latency_ms: 0.0, jitter_ms: 0.0 }
    }

    pub fn custom(bandwidth: Option<f64>, latency_ms: f64, jitter_ms: f64) -> Result<Self, TransportError> {
        let p = TransportProfile { name: ProfileName::Custom, bandwidth, latency_ms, jitter_ms };
        p.validate()?;
        Ok(p)
    }

    /// Accepts `usb`, `wifi` and `unthrottled`.
    pub fn by_name(name: &str) -> Result<Self, TransportError> {
        match name {
            "usb" => Ok(Self::usb()),
            "wifi" => Ok(Self::wifi()),
            "unthrottled" | "none" => Ok(Self::unthrottled()),
            other => Err(TransportError::InvalidProfile(format!("unknown profile `{other}`"))),
        }
    }

    pub fn label(&self) -> &'static str {
        match (self.name, self.bandwidth) {
            (ProfileName::Usb, _) => "usb",
            (ProfileName::Wifi, _) => "wifi",
            (ProfileName::Custom, None) if self.latency_ms == 0.0 => "unthrottled",
            (ProfileName::Custom, _) => "custom",
        }
    }

    pub fn validate(&self) -> Result<(), TransportError> {
        if let Some(b) = self.bandwidth {
            if !(b > 0.0 && b.is_finite()) {
                return Err(TransportError::InvalidProfile("bandwidth must be positive".into()));
            }
        }
        if !(self.latency_ms >= 0.0 && self.jitter_ms >= 0.0) {
            return Err(TransportError::InvalidProfile("latency and jitter must be non-negative".into()));
        }
        Ok(())
    }

    pub fn is_passthrough(&self) -> bool {
        self.bandwidth.is_none() && self.latency_ms == 0.0 && self.jitter_ms == 0.0
    }
}

#[derive(Debug)]
pub struct TokenBucket {
    rate: f64,
    capacity: f64,
    tokens: f64,
    last: Instant,
}

impl TokenBucket {
    /// Starts empty, so the first bytes already pay for their bandwidth.
    pub fn new(rate: f64) -> Self {
        TokenBucket { rate, capacity: rate * BUCKET_MS as f64 / 1000.0, tokens: 0.0, last: Instant::now() }
    }

    pub fn capacity(&self) -> usize {
        (self.capacity as usize).max(1)
    }

    fn refill(&mut self) {
        let now = Instant::now();
        self.tokens = (self.tokens + now.duration_since(self.last).as_secs_f64() * self.rate).min(self.capacity);
        self.last = now;
    }

    /// Blocks until `n` (at most one bucket) bytes may pass.
    pub fn acquire(&mut self, n: usize) {
        let n = n as f64;
        self.refill();
        if self.tokens < n {
            std::thread::sleep(Duration::from_secs_f64((n - self.tokens) / self.rate));
            self.refill();
        }
        self.tokens -= n;
    }
}

struct Shaper {
    bucket: Option<TokenBucket>,
    rng: ChaCha8Rng,
}

/// Applies a profile to the writes of an inner stream. Reads pass through.
pub struct Throttled<S> {
    inner: S,
    profile: TransportProfile,
    shaper: Arc<Mutex<Shaper>>,
}

/// Wraps `channel` so its writes follow `profile`.
pub fn throttle<S: Stream>(channel: S, profile: &TransportProfile) -> Throttled<S> {
    Throttled {
        inner: channel,
        profile: profile.clone(),
        shaper: Arc::new(Mutex::new(Shaper {
            bucket: profile.bandwidth.map(TokenBucket::new),
            rng: ChaCha8Rng::seed_from_u64(0x7e1a),
        })),
    }
}

impl<S> Throttled<S> {
    pub fn get_ref(&self) -> &S {
        &self.inner
    }
}

impl<S: Read> Read for Throttled<S> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        self.inner.read(buf)
    }
}

impl<S: Write> Write for Throttled<S> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        if self.profile.is_passthrough() {
            return self.inner.write(buf);
        }
        let mut shaper = self.shaper.lock().unwrap_or_else(|e| e.into_inner());
        let jitter = if self.profile.jitter_ms > 0.0 { shaper.rng.gen_range(0.0..=self.profile.jitter_ms) } else { 0.0 };
        let delay = (self.profile.latency_ms + jitter) / 1000.0;
        if delay > 0.0 {
            std::thread::sleep(Duration::from_secs_f64(delay));
        }
        match shaper.bucket.as_mut() {
            None => self.inner.write_all(buf)?,
            Some(bucket) => {
                let step = bucket.capacity();
                for chunk in buf.chunks(step) {
                    bucket.acquire(chunk.len());
                    self.inner.write_all(chunk)?;
                }
            }
        }
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

impl<S: Stream + 'static> Stream for Throttled<S> {
    fn try_clone_stream(&self) -> io::Result<Box<dyn Stream>> {
        Ok(Box::new(Throttled {
            inner: self.inner.try_clone_stream()?,
            profile: self.profile.clone(),
            shaper: self.shaper.clone(),
        }))
    }

    fn shutdown_stream(&self) {
        self.inner.shutdown_stream()
    }

    fn set_read_timeout_stream(&self, timeout: Option<Duration>) -> io::Result<()> {
        self.inner.set_read_timeout_stream(timeout)
    }
}

#[cfg(test)]
mod tests {
    use super::super::pipe::pipe_pair;
    use super::*;

    #[test]
    fn one_mib_at_one_mib_per_second() {
        let (a, mut b) = pipe_pair();
        let mut t = throttle(a, &TransportProfile::custom(Some(MIB), 0.0, 0.0).unwrap());
        let data = vec![0xA5u8; 1 << 20];
        let reader = std::thread::spawn(move || {
            let mut got = vec![0u8; 1 << 20];
            b.read_exact(&mut got).unwrap();
            got
        });
        let start = Instant::now();
        t.write_all(&data).unwrap();
        let got = reader.join().unwrap();
        let secs = start.elapsed().as_secs_f64();
        assert!((0.9..=1.1).contains(&secs), "took {secs}");
        assert_eq!(got, data);
    }

    #[test]
    fn passthrough_is_transparent() {
        let (a, mut b) = pipe_pair();
        let mut t = throttle(a, &TransportProfile::unthrottled());
        t.write_all(b"abc").unwrap();
        let mut buf = [0u8; 3];
        b.read_exact(&mut buf).unwrap();
        assert_eq!(&buf, b"abc");
    }

    #[test]
    fn latency_applies_per_write() {
        let (a, _b) = pipe_pair();
        let mut t = throttle(a, &TransportProfile::custom(None, 20.0, 0.0).unwrap());
        let start = Instant::now();
        t.write_all(b"x").unwrap();
        assert!(start.elapsed() >= Duration::from_millis(20));
    }

    #[test]
    fn rejects_bad_profiles() {
        assert!(TransportProfile::custom(Some(0.0), 0.0, 0.0).is_err());
        assert!(TransportProfile::custom(None, -1.0, 0.0).is_err());
        assert!(TransportProfile::by_name("carrier-pigeon").is_err());
    }
}
