//! Payload schemas for every opcode, shared by the dispatcher and client.

use super::opcodes::*;
use super::ops::{AppFilter, CompositeInputEvent, FirmwareSheet, ShellOutput, TouchSample, Track};
use super::wire::{PayloadReader, PayloadWriter};
use super::{ErrorCode, ServiceError};
use crate::device::{
    Alert, AlertKind, AppRecord, FsNode, NetworkKind, NodeKind, ProcessKind, ProcessRow, ProcessState, SensorKind,
    SensorSample, StatusReport,
};

/// A decoded request.
#[derive(Debug, Clone, PartialEq)]
pub enum Request {
    Auth { mac: Vec<u8> },
    ListApps(AppFilter),
    Install { id: String, version: String, overwrite: bool, package: Vec<u8> },
    Uninstall { id: String },
    ListProcesses,
    Kill { pid: u32 },
    Shell { line: String },
    FsList { path: String },
    FsGet { path: String },
    FsPut { path: String, more: bool, data: Vec<u8> },
    FsRemove { path: String, recursive: bool },
    Status,
    SensorRead { kind: u8 },
    Firmware { version: String, image: Vec<u8> },
    Composite(CompositeInputEvent),
}

impl Request {
    pub fn opcode(&self) -> u16 {
        match self {
            Request::Auth { .. } => AUTH,
            Request::ListApps(_) => LIST_APPS,
            Request::Install { .. } => INSTALL_APP,
            Request::Uninstall { .. } => UNINSTALL_APP,
            Request::ListProcesses => LIST_PROCESSES,
            Request::Kill { .. } => KILL_PROCESS,
            Request::Shell { .. } => SHELL_EXEC,
            Request::FsList { .. } => FS_LIST,
            Request::FsGet { .. } => FS_GET,
            Request::FsPut { .. } => FS_PUT,
            Request::FsRemove { .. } => FS_REMOVE,
            Request::Status => DEVICE_STATUS,
            Request::SensorRead { .. } => SENSOR_READ,
            Request::Firmware { .. } => FIRMWARE_STAGE,
            Request::Composite(_) => COMPOSITE_INPUT,
        }
    }

    pub fn to_payload(&self) -> Vec<u8> {
        let mut w = PayloadWriter::new();
        match self {
            Request::Auth { mac } => {
                w.bytes(mac);
            }
            Request::ListApps(f) => {
                w.u8(matches!(f, AppFilter::Running) as u8);
            }
            Request::Install { id, version, overwrite, package } => {
                w.str(id).str(version).u8(*overwrite as u8).bytes(package);
            }
            Request::Uninstall { id } => {
                w.str(id);
            }
            Request::ListProcesses | Request::Status => {}
            Request::Kill { pid } => {
                w.u32(*pid);
            }
            Request::Shell { line } => {
                w.str(line);
            }
            Request::FsList { path } | Request::FsGet { path } => {
                w.str(path);
            }
            Request::FsPut { path, more, data } => {
                w.str(path).u8(*more as u8).bytes(data);
            }
            Request::FsRemove { path, recursive } => {
                w.str(path).u8(*recursive as u8);
            }
            Request::SensorRead { kind } => {
                w.u8(*kind);
            }
            Request::Firmware { version, image } => {
                w.str(version).bytes(image);
            }
            Request::Composite(ev) => {
                w.u32(ev.duration_ms).u32(ev.tracks.len() as u32);
                for t in &ev.tracks {
                    w.u16(t.id).u32(t.samples.len() as u32);
                    for s in &t.samples {
                        w.u32(s.t_ms).u16(s.x).u16(s.y).u8(s.buttons);
                    }
                }
            }
        }
        w.finish()
    }

    pub fn decode(opcode: u16, payload: &[u8]) -> Result<Self, ServiceError> {
        let mut r = PayloadReader::new(payload);
        let flag = |v: u8| -> Result<bool, ServiceError> {
            match v {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(ServiceError::Malformed(format!("flag byte {v}"))),
            }
        };
        let req = match opcode {
            AUTH => Request::Auth { mac: r.bytes()?.to_vec() },
            LIST_APPS => Request::ListApps(if flag(r.u8()?)? { AppFilter::Running } else { AppFilter::All }),
            INSTALL_APP => Request::Install {
                id: r.str()?,
                version: r.str()?,
                overwrite: flag(r.u8()?)?,
                package: r.bytes()?.to_vec(),
            },
            UNINSTALL_APP => Request::Uninstall { id: r.str()? },
            LIST_PROCESSES => Request::ListProcesses,
            KILL_PROCESS => Request::Kill { pid: r.u32()? },
            SHELL_EXEC => Request::Shell { line: r.str()? },
            FS_LIST => Request::FsList { path: r.str()? },
            FS_GET => Request::FsGet { path: r.str()? },
            FS_PUT => Request::FsPut { path: r.str()?, more: flag(r.u8()?)?, data: r.bytes()?.to_vec() },
            FS_REMOVE => Request::FsRemove { path: r.str()?, recursive: flag(r.u8()?)? },
            DEVICE_STATUS => Request::Status,
            SENSOR_READ => Request::SensorRead { kind: r.u8()? },
            FIRMWARE_STAGE => Request::Firmware { version: r.str()?, image: r.bytes()?.to_vec() },
            COMPOSITE_INPUT => {
                let duration_ms = r.u32()?;
                let n = r.count(6)?;
                let mut tracks = Vec::with_capacity(n);
                for _ in 0..n {
                    let id = r.u16()?;
                    let m = r.count(9)?;
                    let mut samples = Vec::with_capacity(m);
                    for _ in 0..m {
                        samples.push(TouchSample { t_ms: r.u32()?, x: r.u16()?, y: r.u16()?, buttons: r.u8()? });
                    }
                    tracks.push(Track { id, samples });
                }
                Request::Composite(CompositeInputEvent { duration_ms, tracks })
            }
            other => return Err(ServiceError::UnknownOpcode(other)),
        };
        r.finish()?;
        Ok(req)
    }
}

pub fn encode_app(w: &mut PayloadWriter, a: &AppRecord) {
    w.str(&a.id).str(&a.name).str(&a.version).u8(a.running as u8);
}

pub fn decode_app(r: &mut PayloadReader) -> Result<AppRecord, ServiceError> {
    Ok(AppRecord { id: r.str()?, name: r.str()?, version: r.str()?, running: r.u8()? != 0 })
}

pub fn encode_apps(apps: &[AppRecord]) -> Vec<u8> {
    let mut w = PayloadWriter::new();
    w.u32(apps.len() as u32);
    for a in apps {
        encode_app(&mut w, a);
    }
    w.finish()
}

pub fn decode_apps(p: &[u8]) -> Result<Vec<AppRecord>, ServiceError> {
    let mut r = PayloadReader::new(p);
    let n = r.count(13)?;
    let v = (0..n).map(|_| decode_app(&mut r)).collect::<Result<_, _>>()?;
    r.finish()?;
    Ok(v)
}

pub fn encode_processes(rows: &[ProcessRow]) -> Vec<u8> {
    let mut w = PayloadWriter::new();
    w.u32(rows.len() as u32);
    for p in rows {
        w.u32(p.pid)
            .str(&p.name)
            .u8(matches!(p.state, ProcessState::Sleeping) as u8)
            .u8(matches!(p.kind, ProcessKind::Service) as u8)
            .str(p.owner.as_deref().unwrap_or(""));
    }
    w.finish()
}

pub fn decode_processes(p: &[u8]) -> Result<Vec<ProcessRow>, ServiceError> {
    let mut r = PayloadReader::new(p);
    let n = r.count(14)?;
    let mut v = Vec::with_capacity(n);
    for _ in 0..n {
        let pid = r.u32()?;
        let name = r.str()?;
        let state = if r.u8()? != 0 { ProcessState::Sleeping } else { ProcessState::Running };
        let kind = if r.u8()? != 0 { ProcessKind::Service } else { ProcessKind::Process };
        let owner = Some(r.str()?).filter(|s| !s.is_empty());
        v.push(ProcessRow { pid, name, state, kind, owner });
    }
    r.finish()?;
    Ok(v)
}

pub fn encode_shell(o: &ShellOutput) -> Vec<u8> {
    PayloadWriter::new().i32(o.exit_code).bytes(&o.stdout).bytes(&o.stderr).finish()
}

pub fn decode_shell(p: &[u8]) -> Result<ShellOutput, ServiceError> {
    let mut r = PayloadReader::new(p);
    let o = ShellOutput { exit_code: r.i32()?, stdout: r.bytes()?.to_vec(), stderr: r.bytes()?.to_vec() };
    r.finish()?;
    Ok(o)
}

pub fn encode_nodes(nodes: &[FsNode]) -> Vec<u8> {
    let mut w = PayloadWriter::new();
    w.u32(nodes.len() as u32);
    for n in nodes {
        w.str(&n.path).u8(matches!(n.kind, NodeKind::Dir) as u8).u64(n.size).u32(n.children.len() as u32);
        for c in &n.children {
            w.str(c);
        }
    }
    w.finish()
}

pub fn decode_nodes(p: &[u8]) -> Result<Vec<FsNode>, ServiceError> {
    let mut r = PayloadReader::new(p);
    let n = r.count(17)?;
    let mut v = Vec::with_capacity(n);
    for _ in 0..n {
        let path = r.str()?;
        let kind = if r.u8()? != 0 { NodeKind::Dir } else { NodeKind::File };
        let size = r.u64()?;
        let m = r.count(4)?;
        let children = (0..m).map(|_| r.str()).collect::<Result<_, _>>()?;
        v.push(FsNode { path, kind, size, children });
    }
    r.finish()?;
    Ok(v)
}

fn alert_code(k: AlertKind) -> u8 {
    match k {
        AlertKind::LowBattery => 1,
        AlertKind::StorageFull => 2,
        AlertKind::ProcessDied => 3,
    }
}

fn write_alert(w: &mut PayloadWriter, a: &Alert) {
    w.u8(alert_code(a.kind)).u64(a.t_ms).str(&a.message);
}

fn read_alert(r: &mut PayloadReader) -> Result<Alert, ServiceError> {
    let kind = match r.u8()? {
        1 => AlertKind::LowBattery,
        2 => AlertKind::StorageFull,
        3 => AlertKind::ProcessDied,
        k => return Err(ServiceError::Malformed(format!("alert kind {k}"))),
    };
    Ok(Alert { kind, t_ms: r.u64()?, message: r.str()? })
}

pub fn encode_alert(a: &Alert) -> Vec<u8> {
    let mut w = PayloadWriter::new();
    write_alert(&mut w, a);
    w.finish()
}

pub fn decode_alert(p: &[u8]) -> Result<Alert, ServiceError> {
    let mut r = PayloadReader::new(p);
    let a = read_alert(&mut r)?;
    r.finish()?;
    Ok(a)
}

pub fn encode_status(s: &StatusReport) -> Vec<u8> {
    let mut w = PayloadWriter::new();
    let net = match s.network {
        NetworkKind::None => 0,
        NetworkKind::Wifi => 1,
        NetworkKind::Cellular => 2,
        NetworkKind::Usb => 3,
    };
    w.u8(s.battery_pct).u64(s.uptime_s).u8(s.screen_on as u8).u8(net).u32(s.alerts.len() as u32);
    for a in &s.alerts {
        write_alert(&mut w, a);
    }
    w.finish()
}

pub fn decode_status(p: &[u8]) -> Result<StatusReport, ServiceError> {
    let mut r = PayloadReader::new(p);
    let battery_pct = r.u8()?;
    let uptime_s = r.u64()?;
    let screen_on = r.u8()? != 0;
    let network = match r.u8()? {
        0 => NetworkKind::None,
        1 => NetworkKind::Wifi,
        2 => NetworkKind::Cellular,
        3 => NetworkKind::Usb,
        n => return Err(ServiceError::Malformed(format!("network kind {n}"))),
    };
    let n = r.count(13)?;
    let alerts = (0..n).map(|_| read_alert(&mut r)).collect::<Result<_, _>>()?;
    r.finish()?;
    Ok(StatusReport { battery_pct, uptime_s, screen_on, network, alerts })
}

pub fn encode_sample(s: &SensorSample) -> Vec<u8> {
    let mut w = PayloadWriter::new();
    w.u8(s.kind.code()).u64(s.t_ms).u32(s.values.len() as u32);
    for v in &s.values {
        w.f64(*v);
    }
    w.finish()
}

pub fn decode_sample(p: &[u8]) -> Result<SensorSample, ServiceError> {
    let mut r = PayloadReader::new(p);
    let code = r.u8()?;
    let kind = SensorKind::from_code(code).ok_or_else(|| ServiceError::Malformed(format!("sensor kind {code}")))?;
    let t_ms = r.u64()?;
    let n = r.count(8)?;
    let values = (0..n).map(|_| r.f64()).collect::<Result<_, _>>()?;
    r.finish()?;
    Ok(SensorSample { kind, t_ms, values })
}

pub fn encode_firmware(f: &FirmwareSheet) -> Vec<u8> {
    let mut w = PayloadWriter::new();
    w.str(&f.path).u32(f.instructions.len() as u32);
    for i in &f.instructions {
        w.str(i);
    }
    w.finish()
}

pub fn decode_firmware(p: &[u8]) -> Result<FirmwareSheet, ServiceError> {
    let mut r = PayloadReader::new(p);
    let path = r.str()?;
    let n = r.count(4)?;
    let instructions = (0..n).map(|_| r.str()).collect::<Result<_, _>>()?;
    r.finish()?;
    Ok(FirmwareSheet { path, instructions })
}

/// Error payload: u16 code, message string, i32 detail.
pub fn encode_error(e: &ServiceError) -> Vec<u8> {
    PayloadWriter::new().u16(e.code() as u16).str(&e.to_string()).i32(e.detail()).finish()
}

pub fn decode_error(p: &[u8]) -> Result<ServiceError, ServiceError> {
    let mut r = PayloadReader::new(p);
    let raw = r.u16()?;
    let code = ErrorCode::from_u16(raw).ok_or_else(|| ServiceError::Malformed(format!("error code {raw}")))?;
    let message = r.str()?;
    let detail = r.i32()?;
    r.finish()?;
    Ok(ServiceError::Remote { code, message, detail })
}
