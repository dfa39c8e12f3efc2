//! Encoding benchmark: plays a scenario through an in-process server and a
//! headless client, and counts what crossed the wire.
//!
//! Each run owns its own device, server session and client. Runs are meant
//! to be executed one after another so their timings do not interfere.

mod report;

pub use report::{check_orderings, emit_report, mean_report, OrderingFailure, ReportFormat};

use crate::device::{Device, DeviceError, DeviceState, ScenarioScript, SimClock};
use crate::encodings::EncodingId;
use crate::rfb::{run_session, RfbClient, RfbContext, RfbError};
use crate::transport::{pipe_pair, throttle, Stream, TransportError, TransportProfile};
use serde::{Deserialize, Serialize};
use std::time::{Duration, Instant};
use thiserror::Error;

/// Minimum spacing between the client's update requests.
pub const REQUEST_INTERVAL: Duration = Duration::from_millis(16);

/// How long the client waits for a reply once the scenario is over.
const TAIL_GRACE_MS: u64 = 500;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("server unreachable: {0}")]
    ServerUnreachable(String),
    #[error("encoding {0} not supported by the server")]
    EncodingUnsupported(EncodingId),
    #[error("invalid benchmark configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Rfb(#[from] RfbError),
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// How the device clock relates to wall time during a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pacing {
    /// The device follows the wall clock; the client requests at most every
    /// [`REQUEST_INTERVAL`].
    RealTime,
    /// The device clock moves `step_ms` forward per screen read. Byte
    /// counters become independent of machine speed, and time-based
    /// metrics are reported in device time.
    Lockstep { step_ms: u64 },
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub scenario: ScenarioScript,
    pub encoding: EncodingId,
    pub profile: TransportProfile,
    pub pacing: Pacing,
    /// Stops the run early; the scenario length otherwise.
    pub duration_cap: Option<Duration>,
    /// Encodings the server offers.
    pub server_encodings: Vec<EncodingId>,
}

impl BenchConfig {
    pub fn new(scenario: ScenarioScript, encoding: EncodingId, profile: TransportProfile) -> Self {
        BenchConfig {
            scenario,
            encoding,
            profile,
            pacing: Pacing::RealTime,
            duration_cap: None,
            server_encodings: EncodingId::ALL.to_vec(),
        }
    }

    pub fn lockstep(mut self, step_ms: u64) -> Self {
        self.pacing = Pacing::Lockstep { step_ms };
        self
    }

    fn duration_ms(&self) -> u64 {
        let total = self.scenario.total_duration_ms();
        match self.duration_cap {
            Some(c) => total.min(c.as_millis() as u64),
            None => total,
        }
    }
}

/// The metrics of one (encoding, profile) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub encoding: String,
    pub profile: String,
    pub updates: u64,
    pub updates_per_second: f64,
    pub rectangles_received: u64,
    /// Pixel volume of every received rectangle, in bytes.
    pub data_captured: u64,
    /// Encoded payload bytes, rectangle headers excluded.
    pub data_compressed: u64,
    pub compression_ratio: f64,
    /// Seconds.
    pub wall_time: f64,
}

impl BenchReport {
    pub fn from_counts(
        encoding: &str,
        profile: &str,
        updates: u64,
        rectangles_received: u64,
        data_captured: u64,
        data_compressed: u64,
        wall_time: f64,
    ) -> Self {
        let compression_ratio = if data_compressed == 0 { 0.0 } else { data_captured as f64 / data_compressed as f64 };
        let updates_per_second = if wall_time > 0.0 { updates as f64 / wall_time } else { 0.0 };
        BenchReport {
            encoding: encoding.to_string(),
            profile: profile.to_string(),
            updates,
            updates_per_second,
            rectangles_received,
            data_captured,
            data_compressed,
            compression_ratio,
            wall_time,
        }
    }
}

#[derive(Default)]
struct Counters {
    updates: u64,
    rects: u64,
    captured: u64,
    compressed: u64,
    last_ms: u64,
}

/// Runs one benchmark: a fresh device plays the scenario, the client asks
/// for incremental updates until the scenario (or the cap) is over.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchReport, BenchError> {
    cfg.profile.validate()?;
    let duration = cfg.duration_ms();
    if duration == 0 {
        return Err(BenchError::InvalidConfig("duration must be positive".into()));
    }
    let clock = match cfg.pacing {
        Pacing::RealTime => SimClock::wall(),
        Pacing::Lockstep { step_ms: 0 } => return Err(BenchError::InvalidConfig("lockstep step must be positive".into())),
        Pacing::Lockstep { .. } => SimClock::manual(0),
    };
    let device = Device::new(DeviceState::fixture(), cfg.scenario.clone(), clock)?;
    let mut ctx = RfbContext::new(device.clone());
    ctx.supported = cfg.server_encodings.clone();
    match cfg.pacing {
        Pacing::RealTime => ctx.poll_interval = Duration::from_millis(10),
        Pacing::Lockstep { step_ms } => {
            ctx.poll_interval = Duration::from_millis(1);
            ctx.frame_step_ms = Some(step_ms);
        }
    }

    let (server_end, client_end) = pipe_pair();
    let server_stream: Box<dyn Stream> = Box::new(throttle(server_end, &cfg.profile));
    let client_stream: Box<dyn Stream> = Box::new(throttle(client_end, &cfg.profile));
    let server = std::thread::Builder::new()
        .name("bench-server".into())
        .spawn(move || run_session(server_stream, &ctx, 0))?;

    let mut client = match RfbClient::connect(client_stream, None) {
        Ok(c) => c,
        Err(e) => {
            let _ = server.join();
            return Err(BenchError::ServerUnreachable(e.to_string()));
        }
    };
    client.set_decoding(false);
    let result = drive(&mut client, cfg, &device, duration);
    client.close();
    let _ = server.join();
    let c = result?;

    let wall_ms = duration.max(c.last_ms);
    Ok(BenchReport::from_counts(
        cfg.encoding.name(),
        cfg.profile.label(),
        c.updates,
        c.rects,
        c.captured,
        c.compressed,
        wall_ms as f64 / 1000.0,
    ))
}

fn drive(client: &mut RfbClient, cfg: &BenchConfig, device: &Device, duration: u64) -> Result<Counters, BenchError> {
    let bpp = client.server_init().format.bytes_per_pixel();
    let screen = client.screen();
    let (idle_after, pause) = match cfg.pacing {
        Pacing::RealTime => (duration + TAIL_GRACE_MS, REQUEST_INTERVAL),
        // The server's clock only keeps moving while it finds nothing to
        // send, so ten idle steps past the end means the session is drained.
        Pacing::Lockstep { step_ms } => (duration + 10 * step_ms, Duration::ZERO),
    };
    let mut c = Counters::default();
    client.set_encodings(&[cfg.encoding.code()])?;
    client.request_update(screen, false)?;
    let mut last_request = Instant::now();
    loop {
        match client.poll_update(Duration::from_millis(20))? {
            Some(u) => {
                if u.rects.iter().any(|r| r.encoding != cfg.encoding) {
                    return Err(BenchError::EncodingUnsupported(cfg.encoding));
                }
                c.updates += 1;
                c.rects += u.rects.len() as u64;
                c.captured += u.captured_bytes(bpp) as u64;
                c.compressed += u.payload_bytes() as u64;
                c.last_ms = device.now_ms();
                if c.last_ms >= duration {
                    break;
                }
                let next = last_request + pause;
                let now = Instant::now();
                if next > now {
                    std::thread::sleep(next - now);
                }
                client.request_update(screen, true)?;
                last_request = Instant::now();
            }
            None => {
                if device.now_ms() >= idle_after {
                    break;
                }
            }
        }
    }
    Ok(c)
}
