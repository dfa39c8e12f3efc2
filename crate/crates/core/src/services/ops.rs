//! Service semantics over the simulated device. Every call takes the device
//! state lock once, which makes it the single writer for mutations.

use super::shell;
use super::ServiceError;
use crate::device::{
    normalize, AppRecord, Device, DeviceState, FsNode, InputKind, ProcessRow, SensorKind, SensorSample, StatusReport,
};
use std::sync::Arc;

/// Largest fs_put chunk.
pub const FS_CHUNK: usize = 256 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AppFilter {
    All,
    Running,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShellOutput {
    pub exit_code: i32,
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FirmwareSheet {
    pub path: String,
    pub instructions: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TouchSample {
    /// Offset from the start of the gesture.
    pub t_ms: u32,
    pub x: u16,
    pub y: u16,
    pub buttons: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Track {
    pub id: u16,
    pub samples: Vec<TouchSample>,
}

/// A multi-track gesture delivered as one unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositeInputEvent {
    pub duration_ms: u32,
    pub tracks: Vec<Track>,
}

impl CompositeInputEvent {
    pub fn validate(&self) -> Result<(), ServiceError> {
        if self.tracks.is_empty() {
            return Err(ServiceError::InvalidArgument("composite event has no tracks".into()));
        }
        for (i, t) in self.tracks.iter().enumerate() {
            if self.tracks[..i].iter().any(|o| o.id == t.id) {
                return Err(ServiceError::InvalidArgument(format!("track id {} repeated", t.id)));
            }
            if t.samples.is_empty() {
                return Err(ServiceError::InvalidArgument(format!("track {} has no samples", t.id)));
            }
            if t.samples.windows(2).any(|w| w[1].t_ms < w[0].t_ms) {
                return Err(ServiceError::InvalidArgument(format!("track {} samples out of order", t.id)));
            }
            if t.samples.iter().any(|s| s.t_ms > self.duration_ms) {
                return Err(ServiceError::InvalidArgument(format!("track {} exceeds the duration", t.id)));
            }
        }
        Ok(())
    }
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 255
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-' | ':'))
        && !id.starts_with('.')
}

fn check_quota(state: &DeviceState, path: &str, new_len: usize) -> Result<(), ServiceError> {
    let old = state.fs.get(path).map(|d| d.len() as u64).unwrap_or(0);
    let used = state.fs.used_bytes() - old;
    if used + new_len as u64 > state.storage_quota_bytes {
        return Err(ServiceError::QuotaExceeded { requested: new_len as u64, available: state.storage_quota_bytes - used });
    }
    Ok(())
}

/// The service layer for one device, shared by every command connection.
#[derive(Clone)]
pub struct Services {
    device: Arc<Device>,
}

impl Services {
    pub fn new(device: Arc<Device>) -> Self {
        Services { device }
    }

    pub fn device(&self) -> &Arc<Device> {
        &self.device
    }

    pub fn list_applications(&self, filter: AppFilter) -> Vec<AppRecord> {
        let s = self.device.state();
        s.apps.iter().filter(|a| filter == AppFilter::All || a.running).cloned().collect()
    }

    pub fn install_application(
        &self,
        id: &str,
        version: &str,
        package: &[u8],
        overwrite: bool,
    ) -> Result<AppRecord, ServiceError> {
        if !valid_id(id) {
            return Err(ServiceError::InvalidArgument(format!("bad package id `{id}`")));
        }
        if package.is_empty() {
            return Err(ServiceError::InvalidArgument("empty package".into()));
        }
        if version.is_empty() {
            return Err(ServiceError::InvalidArgument("empty version".into()));
        }
        let path = format!("/data/app/{id}");
        let mut s = self.device.state();
        if let Some(existing) = s.apps.iter().find(|a| a.id == id) {
            if existing.version != version && !overwrite {
                return Err(ServiceError::DuplicateId(id.to_string()));
            }
        }
        check_quota(&s, &path, package.len())?;
        s.fs.put(&path, package.to_vec())?;
        let rec = match s.apps.iter_mut().find(|a| a.id == id) {
            Some(a) => {
                a.version = version.to_string();
                a.clone()
            }
            None => {
                let rec = AppRecord { id: id.into(), name: id.rsplit('.').next().unwrap_or(id).into(), version: version.into(), running: false };
                s.apps.push(rec.clone());
                rec
            }
        };
        Ok(rec)
    }

    pub fn uninstall_application(&self, id: &str) -> Result<(), ServiceError> {
        let mut s = self.device.state();
        let before = s.apps.len();
        s.apps.retain(|a| a.id != id);
        if s.apps.len() == before {
            return Err(ServiceError::NotFound(id.to_string()));
        }
        s.processes.retain(|p| p.owner.as_deref() != Some(id));
        let path = format!("/data/app/{id}");
        if s.fs.exists(&path) {
            s.fs.remove(&path, false)?;
        }
        Ok(())
    }

    pub fn list_processes(&self) -> Vec<ProcessRow> {
        self.device.state().processes.clone()
    }

    /// Removes the process. If an application owned it, the application
    /// stops and its other processes go with it.
    pub fn kill_process(&self, pid: u32) -> Result<(), ServiceError> {
        if pid == 0 {
            return Err(ServiceError::NotFound("pid 0".into()));
        }
        let mut s = self.device.state();
        let idx = s
            .processes
            .iter()
            .position(|p| p.pid == pid)
            .ok_or_else(|| ServiceError::NotFound(format!("pid {pid}")))?;
        let row = s.processes.remove(idx);
        if let Some(owner) = row.owner {
            s.processes.retain(|p| p.owner.as_deref() != Some(owner.as_str()));
            if let Some(app) = s.apps.iter_mut().find(|a| a.id == owner) {
                app.running = false;
            }
        }
        Ok(())
    }

    pub fn shell_exec(&self, line: &str) -> Result<ShellOutput, ServiceError> {
        let mut s = self.device.state();
        let out = shell::run(&mut s, line)?;
        if out.exit_code != 0 {
            return Err(ServiceError::CommandFailed {
                exit_code: out.exit_code,
                stderr: String::from_utf8_lossy(&out.stderr).trim_end().to_string(),
            });
        }
        Ok(out)
    }

    pub fn fs_list(&self, path: &str) -> Result<Vec<FsNode>, ServiceError> {
        Ok(self.device.state().fs.list(path)?)
    }

    pub fn fs_get(&self, path: &str) -> Result<Vec<u8>, ServiceError> {
        Ok(self.device.state().fs.get(path)?)
    }

    pub fn fs_put(&self, path: &str, data: Vec<u8>) -> Result<(), ServiceError> {
        normalize(path)?;
        let mut s = self.device.state();
        check_quota(&s, path, data.len())?;
        s.fs.put(path, data)?;
        Ok(())
    }

    pub fn fs_remove(&self, path: &str, recursive: bool) -> Result<(), ServiceError> {
        Ok(self.device.state().fs.remove(path, recursive)?)
    }

    pub fn device_status(&self) -> StatusReport {
        let now = self.device.now_ms();
        let s = self.device.state();
        StatusReport {
            battery_pct: s.battery_pct,
            uptime_s: s.base_uptime_s + now / 1000,
            screen_on: s.screen_on,
            network: s.network,
            alerts: s.alerts.clone(),
        }
    }

    pub fn sensor_read(&self, kind_code: u8) -> Result<SensorSample, ServiceError> {
        let now = self.device.now_ms();
        let kind = SensorKind::from_code(kind_code).ok_or_else(|| ServiceError::UnsupportedSensor(format!("code {kind_code}")))?;
        let s = self.device.state();
        let script = s
            .sensors
            .iter()
            .find(|sc| sc.kind == kind)
            .ok_or_else(|| ServiceError::UnsupportedSensor(kind.name().to_string()))?;
        Ok(script.sample(now))
    }

    pub fn firmware_stage(&self, image: &[u8], version: &str) -> Result<FirmwareSheet, ServiceError> {
        if image.is_empty() {
            return Err(ServiceError::InvalidArgument("empty firmware image".into()));
        }
        if !valid_id(version) {
            return Err(ServiceError::InvalidArgument(format!("bad version `{version}`")));
        }
        let file = format!("update-{version}.zip");
        let path = format!("/sdcard/{file}");
        let mut s = self.device.state();
        check_quota(&s, &path, image.len())?;
        s.fs.put(&path, image.to_vec())?;
        Ok(FirmwareSheet {
            path,
            instructions: vec![
                "Power off the device.".into(),
                "Hold Volume Up and Power until the recovery menu appears.".into(),
                format!("Choose \"apply update from sdcard\" and select {file}."),
                "Reboot once the update has been applied.".into(),
            ],
        })
    }

    /// Appends every sample under one group id while holding the state lock,
    /// so no other input lands inside the group.
    pub fn composite_input(&self, ev: &CompositeInputEvent, source: u64) -> Result<u64, ServiceError> {
        ev.validate()?;
        let (w, h) = self.device.dimensions();
        let mut samples: Vec<(u32, usize, u16, TouchSample)> = Vec::new();
        for (order, t) in ev.tracks.iter().enumerate() {
            samples.extend(t.samples.iter().map(|s| (s.t_ms, order, t.id, *s)));
        }
        samples.sort_by_key(|&(t, order, _, _)| (t, order));
        let group = self.device.next_group_id();
        let base = self.device.now_ms();
        let mut s = self.device.state();
        for (t, _, track, smp) in samples {
            let x = smp.x.min(w - 1);
            let y = smp.y.min(h - 1);
            let clamped = x != smp.x || y != smp.y;
            s.input.push(base + u64::from(t), source, Some(group), Some(track), InputKind::Pointer { x, y, buttons: smp.buttons }, clamped);
        }
        Ok(group)
    }
}
