//! Opcode registry for the command channel.

pub const AUTH: u16 = 0x0000;
pub const LIST_APPS: u16 = 0x0001;
pub const INSTALL_APP: u16 = 0x0002;
pub const UNINSTALL_APP: u16 = 0x0003;
pub const LIST_PROCESSES: u16 = 0x0010;
pub const KILL_PROCESS: u16 = 0x0011;
pub const SHELL_EXEC: u16 = 0x0020;
pub const FS_LIST: u16 = 0x0030;
pub const FS_GET: u16 = 0x0031;
pub const FS_PUT: u16 = 0x0032;
pub const FS_REMOVE: u16 = 0x0033;
pub const DEVICE_STATUS: u16 = 0x0040;
pub const SENSOR_READ: u16 = 0x0050;
pub const FIRMWARE_STAGE: u16 = 0x0060;
pub const COMPOSITE_INPUT: u16 = 0x0070;
/// Unsolicited alert pushed by the server, correlation id 0.
pub const EVENT_ALERT: u16 = 0x00F0;
pub const ERROR: u16 = 0xFFFF;

/// Version byte sent in the channel greeting.
pub const PROTOCOL_VERSION: u8 = 1;
pub const GREETING_MAGIC: &[u8; 4] = b"RFCM";
pub const DEFAULT_CMD_PORT: u16 = 7001;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Request,
    Event,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpcodeInfo {
    pub code: u16,
    pub name: &'static str,
    pub direction: Direction,
    /// Whether the request changes device state.
    pub mutates: bool,
}

const fn req(code: u16, name: &'static str, mutates: bool) -> OpcodeInfo {
    OpcodeInfo { code, name, direction: Direction::Request, mutates }
}

pub const REGISTRY: &[OpcodeInfo] = &[
    req(AUTH, "auth", false),
    req(LIST_APPS, "list_applications", false),
    req(INSTALL_APP, "install_application", true),
    req(UNINSTALL_APP, "uninstall_application", true),
    req(LIST_PROCESSES, "list_processes", false),
    req(KILL_PROCESS, "kill_process", true),
    req(SHELL_EXEC, "shell_exec", true),
    req(FS_LIST, "fs_list", false),
    req(FS_GET, "fs_get", false),
    req(FS_PUT, "fs_put", true),
    req(FS_REMOVE, "fs_remove", true),
    req(DEVICE_STATUS, "device_status", false),
    req(SENSOR_READ, "sensor_read", false),
    req(FIRMWARE_STAGE, "firmware_stage", true),
    req(COMPOSITE_INPUT, "composite_input", true),
    OpcodeInfo { code: EVENT_ALERT, name: "event_alert", direction: Direction::Event, mutates: false },
    OpcodeInfo { code: ERROR, name: "error", direction: Direction::Error, mutates: false },
];

pub fn lookup(code: u16) -> Option<&'static OpcodeInfo> {
    REGISTRY.iter().find(|o| o.code == code)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_unique() {
        for (i, a) in REGISTRY.iter().enumerate() {
            assert!(REGISTRY[i + 1..].iter().all(|b| b.code != a.code && b.name != a.name));
        }
    }

    #[test]
    fn sensors_are_read_only() {
        let sensor: Vec<_> = REGISTRY.iter().filter(|o| o.name.starts_with("sensor")).collect();
        assert_eq!(sensor.len(), 1);
        assert!(sensor.iter().all(|o| !o.mutates && o.name.ends_with("read")));
    }
}
