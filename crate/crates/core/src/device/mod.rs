//! The simulated handset: scripted screen, application and process
//! registry, filesystem, status, read-only sensors and the input log.
//!
//! A [`Device`] is shared by every connection. Service mutations and input
//! events go through one mutex, so they are totally ordered; the framebuffer
//! is handed out as immutable snapshots.

mod fs;
mod generators;
mod input;
mod scenario;
mod sensors;

pub use fs::{normalize, FsNode, FsTree, NodeKind};
pub use generators::{builtin_generators, GeneratorId, Params, STATUS_BAR_HEIGHT};
pub use input::{HardButton, InputEntry, InputKind, InputLog};
pub use scenario::{load_scenario, standard_workload, ScenarioPlayer, ScenarioScript, Step};
pub use sensors::{default_sensor_scripts, SensorKind, SensorSample, SensorScript, PROXIMITY_FAR_CM};

use crate::pixel::FrameBuffer;
use serde::Deserialize;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{mpsc, Arc, Mutex, MutexGuard};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DeviceError {
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("time went backwards: {now} ms after {last} ms")]
    TimeRegression { last: u64, now: u64 },
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
    #[error("invalid fixture: {0}")]
    InvalidFixture(String),
}

/// Battery level at or below which a low-battery alert is raised.
pub const LOW_BATTERY_PCT: u8 = 15;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppRecord {
    pub id: String,
    pub name: String,
    pub version: String,
    pub running: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKind {
    Process,
    Service,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcessState {
    Running,
    Sleeping,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessRow {
    pub pid: u32,
    pub name: String,
    pub state: ProcessState,
    pub kind: ProcessKind,
    /// Package id of the owning application, if any.
    pub owner: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkKind {
    None,
    Wifi,
    Cellular,
    Usb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlertKind {
    LowBattery,
    StorageFull,
    ProcessDied,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alert {
    pub kind: AlertKind,
    pub t_ms: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatusReport {
    pub battery_pct: u8,
    pub uptime_s: u64,
    pub screen_on: bool,
    pub network: NetworkKind,
    pub alerts: Vec<Alert>,
}

#[derive(Debug, Deserialize)]
struct FixtureApp {
    id: String,
    name: String,
    version: String,
    running: bool,
}

#[derive(Debug, Deserialize)]
struct FixtureProcess {
    pid: u32,
    name: String,
    kind: ProcessKind,
    owner: Option<String>,
}

#[derive(Debug, Deserialize)]
struct FixtureFile {
    path: String,
    #[serde(default)]
    text: String,
    #[serde(default)]
    dir: bool,
}

#[derive(Debug, Deserialize)]
struct Fixture {
    version: u32,
    model: String,
    os_release: String,
    battery_pct: u8,
    network: NetworkKind,
    screen_on: bool,
    base_uptime_s: u64,
    storage_quota_bytes: u64,
    #[serde(rename = "app")]
    apps: Vec<FixtureApp>,
    #[serde(rename = "process")]
    processes: Vec<FixtureProcess>,
    #[serde(rename = "file")]
    files: Vec<FixtureFile>,
}

/// The fixture handset definition shipped with the crate.
pub const DEFAULT_FIXTURE: &str = include_str!("../../fixtures/device.toml");

/// Mutable handset state. Reached through [`Device::state`].
#[derive(Debug, Clone)]
pub struct DeviceState {
    pub model: String,
    pub os_release: String,
    pub apps: Vec<AppRecord>,
    pub processes: Vec<ProcessRow>,
    pub fs: FsTree,
    pub battery_pct: u8,
    pub screen_on: bool,
    pub network: NetworkKind,
    pub alerts: Vec<Alert>,
    pub base_uptime_s: u64,
    pub storage_quota_bytes: u64,
    pub sensors: Vec<SensorScript>,
    pub input: InputLog,
    next_pid: u32,
}

impl DeviceState {
    pub fn from_fixture(text: &str) -> Result<Self, DeviceError> {
        let f: Fixture = toml::from_str(text).map_err(|e| DeviceError::InvalidFixture(e.to_string()))?;
        if f.version != 1 {
            return Err(DeviceError::InvalidFixture(format!("unsupported fixture version {}", f.version)));
        }
        let mut fs = FsTree::new();
        for file in f.files {
            if file.dir {
                fs.mkdir(&file.path)?;
            } else {
                fs.put(&file.path, file.text.into_bytes())?;
            }
        }
        let next_pid = f.processes.iter().map(|p| p.pid).max().unwrap_or(1) + 1;
        let state = DeviceState {
            model: f.model,
            os_release: f.os_release,
            apps: f
                .apps
                .into_iter()
                .map(|a| AppRecord { id: a.id, name: a.name, version: a.version, running: a.running })
                .collect(),
            processes: f
                .processes
                .into_iter()
                .map(|p| ProcessRow {
                    pid: p.pid,
                    name: p.name,
                    state: ProcessState::Running,
                    kind: p.kind,
                    owner: p.owner,
                })
                .collect(),
            fs,
            battery_pct: f.battery_pct.min(100),
            screen_on: f.screen_on,
            network: f.network,
            alerts: Vec::new(),
            base_uptime_s: f.base_uptime_s,
            storage_quota_bytes: f.storage_quota_bytes,
            sensors: default_sensor_scripts(),
            input: InputLog::default(),
            next_pid,
        };
        state.check_consistency().map_err(DeviceError::InvalidFixture)?;
        Ok(state)
    }

    pub fn fixture() -> Self {
        Self::from_fixture(DEFAULT_FIXTURE).expect("bundled fixture is valid")
    }

    pub fn allocate_pid(&mut self) -> u32 {
        let pid = self.next_pid;
        self.next_pid += 1;
        pid
    }

    /// Registry invariants: unique package ids, unique non-zero pids, every
    /// running app owns a process row and every owned row names a running app.
    pub fn check_consistency(&self) -> Result<(), String> {
        let mut ids: Vec<&str> = self.apps.iter().map(|a| a.id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err("duplicate package id".into());
        }
        let mut pids: Vec<u32> = self.processes.iter().map(|p| p.pid).collect();
        pids.sort_unstable();
        if pids.windows(2).any(|w| w[0] == w[1]) || pids.first() == Some(&0) {
            return Err("duplicate or reserved pid".into());
        }
        for a in self.apps.iter().filter(|a| a.running) {
            if !self.processes.iter().any(|p| p.owner.as_deref() == Some(&a.id)) {
                return Err(format!("running app {} has no process", a.id));
            }
        }
        for p in &self.processes {
            if let Some(owner) = &p.owner {
                if !self.apps.iter().any(|a| &a.id == owner && a.running) {
                    return Err(format!("process {} owned by stopped or missing app {owner}", p.pid));
                }
            }
        }
        if !self.input.is_ordered() {
            return Err("input log out of order".into());
        }
        Ok(())
    }
}

/// Time source for the device.
#[derive(Debug)]
pub enum SimClock {
    Wall(Instant),
    Manual(AtomicU64),
}

impl SimClock {
    pub fn wall() -> Self {
        SimClock::Wall(Instant::now())
    }

    pub fn manual(start_ms: u64) -> Self {
        SimClock::Manual(AtomicU64::new(start_ms))
    }

    pub fn now_ms(&self) -> u64 {
        match self {
            SimClock::Wall(start) => start.elapsed().as_millis() as u64,
            SimClock::Manual(t) => t.load(Ordering::SeqCst),
        }
    }

    /// Moves a manual clock forward; no effect on a wall clock.
    pub fn advance(&self, ms: u64) {
        if let SimClock::Manual(t) = self {
            t.fetch_add(ms, Ordering::SeqCst);
        }
    }
}

/// A handset shared between all sessions.
pub struct Device {
    state: Mutex<DeviceState>,
    player: Mutex<ScenarioPlayer>,
    script: ScenarioScript,
    clock: SimClock,
    subscribers: Mutex<Vec<mpsc::Sender<Alert>>>,
    next_group: AtomicU64,
}

impl Device {
    pub fn new(state: DeviceState, script: ScenarioScript, clock: SimClock) -> Result<Arc<Self>, DeviceError> {
        let player = load_scenario(script.clone())?;
        let mut state = state;
        if !script.sensors.is_empty() {
            state.sensors = script.sensors.clone();
        }
        Ok(Arc::new(Device {
            state: Mutex::new(state),
            player: Mutex::new(player),
            script,
            clock,
            subscribers: Mutex::new(Vec::new()),
            next_group: AtomicU64::new(1),
        }))
    }

    /// Fixture state playing the benchmark workload on the wall clock.
    pub fn fixture() -> Arc<Self> {
        Self::new(DeviceState::fixture(), standard_workload(), SimClock::wall()).expect("fixture device")
    }

    pub fn clock(&self) -> &SimClock {
        &self.clock
    }

    pub fn now_ms(&self) -> u64 {
        self.clock.now_ms()
    }

    pub fn script(&self) -> &ScenarioScript {
        &self.script
    }

    pub fn dimensions(&self) -> (u16, u16) {
        (self.script.width, self.script.height)
    }

    /// Locks the mutable state. Keep the guard short-lived.
    pub fn state(&self) -> MutexGuard<'_, DeviceState> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Current screen contents.
    pub fn snapshot(&self) -> Arc<FrameBuffer> {
        let mut p = self.player.lock().unwrap_or_else(|e| e.into_inner());
        let now = self.clock.now_ms();
        p.advance(now).expect("clock is monotonic under the player lock")
    }

    /// A private player for a session that runs on its own clock.
    pub fn detached_player(&self) -> ScenarioPlayer {
        load_scenario(self.script.clone()).expect("script validated at construction")
    }

    pub fn skip_step(&self) {
        let mut p = self.player.lock().unwrap_or_else(|e| e.into_inner());
        p.skip_step();
    }

    pub fn next_group_id(&self) -> u64 {
        self.next_group.fetch_add(1, Ordering::SeqCst)
    }

    /// Registers for unsolicited alerts.
    pub fn subscribe(&self) -> mpsc::Receiver<Alert> {
        let (tx, rx) = mpsc::channel();
        self.subscribers.lock().unwrap_or_else(|e| e.into_inner()).push(tx);
        rx
    }

    /// Records an alert and pushes it to every live subscriber.
    pub fn raise_alert(&self, kind: AlertKind, message: impl Into<String>) {
        let alert = Alert { kind, t_ms: self.now_ms(), message: message.into() };
        self.state().alerts.push(alert.clone());
        self.subscribers
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .retain(|tx| tx.send(alert.clone()).is_ok());
    }

    /// Sets the battery level, raising a low-battery alert on the way down.
    pub fn set_battery(&self, pct: u8) {
        let pct = pct.min(100);
        let crossed = {
            let mut s = self.state();
            let was = s.battery_pct;
            s.battery_pct = pct;
            was > LOW_BATTERY_PCT && pct <= LOW_BATTERY_PCT
        };
        if crossed {
            self.raise_alert(AlertKind::LowBattery, format!("battery at {pct}%"));
        }
    }
}
