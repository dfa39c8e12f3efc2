//! Append-only log of injected input events.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    Pointer { x: u16, y: u16, buttons: u8 },
    Key { keysym: u32, down: bool },
}

/// Device hard buttons, sent as ordinary key events with these keysyms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HardButton {
    Back,
    Home,
    Menu,
}

impl HardButton {
    pub const ALL: [HardButton; 3] = [HardButton::Back, HardButton::Home, HardButton::Menu];

    /// XF86Back, XF86HomePage and XF86MenuKB.
    pub fn keysym(self) -> u32 {
        match self {
            HardButton::Back => 0x1008_FF26,
            HardButton::Home => 0x1008_FF18,
            HardButton::Menu => 0x1008_FF65,
        }
    }

    pub fn from_keysym(keysym: u32) -> Option<HardButton> {
        HardButton::ALL.into_iter().find(|b| b.keysym() == keysym)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputEntry {
    pub seq: u64,
    pub t_ms: u64,
    /// Originating session or command-channel connection.
    pub source: u64,
    /// Composite group; every member of a group is contiguous in the log.
    pub group: Option<u64>,
    /// Multi-touch track within a group.
    pub track: Option<u16>,
    pub kind: InputKind,
    /// Set when the coordinates were pulled back inside the screen.
    pub clamped: bool,
}

#[derive(Debug, Clone, Default)]
pub struct InputLog {
    entries: Vec<InputEntry>,
    last_t: u64,
}

impl InputLog {
    /// Appends an entry; sequence numbers and timestamps are assigned here so
    /// they are monotone regardless of caller clocks.
    pub fn push(
        &mut self,
        t_ms: u64,
        source: u64,
        group: Option<u64>,
        track: Option<u16>,
        kind: InputKind,
        clamped: bool,
    ) -> &InputEntry {
        let t = t_ms.max(self.last_t);
        self.last_t = t;
        let seq = self.entries.len() as u64 + 1;
        self.entries.push(InputEntry { seq, t_ms: t, source, group, track, kind, clamped });
        self.entries.last().unwrap()
    }

    pub fn entries(&self) -> &[InputEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_ordered(&self) -> bool {
        self.entries
            .windows(2)
            .all(|w| w[1].seq == w[0].seq + 1 && w[1].t_ms >= w[0].t_ms)
    }

    /// True when every group occupies a contiguous run.
    pub fn groups_contiguous(&self) -> bool {
        let mut closed = std::collections::HashSet::new();
        let mut current: Option<u64> = None;
        for e in &self.entries {
            if e.group != current {
                if let Some(g) = current {
                    closed.insert(g);
                }
                if let Some(g) = e.group {
                    if closed.contains(&g) {
                        return false;
                    }
                }
                current = e.group;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_even_with_stale_time() {
        let mut log = InputLog::default();
        log.push(10, 1, None, None, InputKind::Key { keysym: 0x61, down: true }, false);
        log.push(5, 2, None, None, InputKind::Key { keysym: 0x61, down: false }, false);
        assert_eq!(log.entries()[1].t_ms, 10);
        assert!(log.is_ordered());
    }

    #[test]
    fn hard_buttons_round_trip() {
        for b in HardButton::ALL {
            assert_eq!(HardButton::from_keysym(b.keysym()), Some(b));
        }
        assert_eq!(HardButton::from_keysym(0x61), None);
        assert_eq!(HardButton::Home.keysym(), 0x1008ff18);
    }

    #[test]
    fn interleaved_group_detected() {
        let mut log = InputLog::default();
        let p = InputKind::Pointer { x: 0, y: 0, buttons: 0 };
        log.push(0, 1, Some(1), Some(0), p, false);
        log.push(0, 2, None, None, p, false);
        assert!(log.groups_contiguous());
        log.push(0, 1, Some(1), Some(1), p, false);
        assert!(!log.groups_contiguous());
    }
}
