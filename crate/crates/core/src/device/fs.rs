//! In-memory filesystem tree of the simulated device.

use super::DeviceError;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    File,
    Dir,
}

/// A listing entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FsNode {
    pub path: String,
    pub kind: NodeKind,
    pub size: u64,
    /// Child names (directories only).
    pub children: Vec<String>,
}

#[derive(Debug, Clone)]
enum Entry {
    File(Vec<u8>),
    Dir(BTreeMap<String, Entry>),
}

impl Entry {
    fn size(&self) -> u64 {
        match self {
            Entry::File(b) => b.len() as u64,
            Entry::Dir(c) => c.values().map(Entry::size).sum(),
        }
    }
}

/// Resolves `.` and `..` and returns the components below the root.
pub fn normalize(path: &str) -> Result<Vec<String>, DeviceError> {
    let mut parts: Vec<String> = Vec::new();
    for comp in path.split('/') {
        match comp {
            "" | "." => {}
            ".." => {
                if parts.pop().is_none() {
                    return Err(DeviceError::PathEscape(path.to_string()));
                }
            }
            c => {
                if c.contains('\0') {
                    return Err(DeviceError::InvalidArgument("path contains NUL".into()));
                }
                parts.push(c.to_string());
            }
        }
    }
    Ok(parts)
}

pub fn join(parts: &[String]) -> String {
    if parts.is_empty() {
        "/".into()
    } else {
        parts.iter().fold(String::new(), |acc, p| acc + "/" + p)
    }
}

#[derive(Debug, Clone)]
pub struct FsTree {
    root: BTreeMap<String, Entry>,
}

impl Default for FsTree {
    fn default() -> Self {
        Self::new()
    }
}

impl FsTree {
    pub fn new() -> Self {
        FsTree { root: BTreeMap::new() }
    }

    pub fn used_bytes(&self) -> u64 {
        self.root.values().map(Entry::size).sum()
    }

    fn lookup(&self, parts: &[String]) -> Option<&Entry> {
        let mut dir = &self.root;
        let (last, init) = parts.split_last()?;
        for p in init {
            match dir.get(p)? {
                Entry::Dir(c) => dir = c,
                Entry::File(_) => return None,
            }
        }
        dir.get(last)
    }

    pub fn exists(&self, path: &str) -> bool {
        normalize(path).map(|p| p.is_empty() || self.lookup(&p).is_some()).unwrap_or(false)
    }

    pub fn is_dir(&self, path: &str) -> bool {
        match normalize(path) {
            Ok(p) if p.is_empty() => true,
            Ok(p) => matches!(self.lookup(&p), Some(Entry::Dir(_))),
            Err(_) => false,
        }
    }

    fn node(parts: &[String], entry: &Entry) -> FsNode {
        match entry {
            Entry::File(b) => FsNode { path: join(parts), kind: NodeKind::File, size: b.len() as u64, children: vec![] },
            Entry::Dir(c) => FsNode {
                path: join(parts),
                kind: NodeKind::Dir,
                size: entry.size(),
                children: c.keys().cloned().collect(),
            },
        }
    }

    /// Entries of a directory, or the single node when `path` names a file.
    pub fn list(&self, path: &str) -> Result<Vec<FsNode>, DeviceError> {
        let parts = normalize(path)?;
        let dir = if parts.is_empty() {
            &self.root
        } else {
            match self.lookup(&parts) {
                Some(Entry::Dir(c)) => c,
                Some(e) => return Ok(vec![Self::node(&parts, e)]),
                None => return Err(DeviceError::NotFound(join(&parts))),
            }
        };
        Ok(dir
            .iter()
            .map(|(name, e)| {
                let mut p = parts.clone();
                p.push(name.clone());
                Self::node(&p, e)
            })
            .collect())
    }

    pub fn get(&self, path: &str) -> Result<Vec<u8>, DeviceError> {
        let parts = normalize(path)?;
        if parts.is_empty() {
            return Err(DeviceError::IsDirectory("/".into()));
        }
        match self.lookup(&parts) {
            Some(Entry::File(b)) => Ok(b.clone()),
            Some(Entry::Dir(_)) => Err(DeviceError::IsDirectory(join(&parts))),
            None => Err(DeviceError::NotFound(join(&parts))),
        }
    }

    /// Writes a file, creating intermediate directories.
    pub fn put(&mut self, path: &str, data: Vec<u8>) -> Result<(), DeviceError> {
        let parts = normalize(path)?;
        let (last, init) = parts.split_last().ok_or_else(|| DeviceError::IsDirectory("/".into()))?;
        let mut dir = &mut self.root;
        for (i, p) in init.iter().enumerate() {
            let e = dir.entry(p.clone()).or_insert_with(|| Entry::Dir(BTreeMap::new()));
            match e {
                Entry::Dir(c) => dir = c,
                Entry::File(_) => return Err(DeviceError::NotADirectory(join(&parts[..=i]))),
            }
        }
        if let Some(Entry::Dir(_)) = dir.get(last) {
            return Err(DeviceError::IsDirectory(join(&parts)));
        }
        dir.insert(last.clone(), Entry::File(data));
        Ok(())
    }

    pub fn mkdir(&mut self, path: &str) -> Result<(), DeviceError> {
        let parts = normalize(path)?;
        let mut dir = &mut self.root;
        for (i, p) in parts.iter().enumerate() {
            let e = dir.entry(p.clone()).or_insert_with(|| Entry::Dir(BTreeMap::new()));
            match e {
                Entry::Dir(c) => dir = c,
                Entry::File(_) => return Err(DeviceError::NotADirectory(join(&parts[..=i]))),
            }
        }
        Ok(())
    }

    pub fn remove(&mut self, path: &str, recursive: bool) -> Result<(), DeviceError> {
        let parts = normalize(path)?;
        let (last, init) = parts
            .split_last()
            .ok_or_else(|| DeviceError::InvalidArgument("cannot remove the root".into()))?;
        let mut dir = &mut self.root;
        for p in init {
            match dir.get_mut(p) {
                Some(Entry::Dir(c)) => dir = c,
                _ => return Err(DeviceError::NotFound(join(&parts))),
            }
        }
        match dir.get(last) {
            None => Err(DeviceError::NotFound(join(&parts))),
            Some(Entry::Dir(_)) if !recursive => Err(DeviceError::IsDirectory(join(&parts))),
            Some(_) => {
                dir.remove(last);
                Ok(())
            }
        }
    }

    /// Every path in the tree (files and directories), depth-first.
    pub fn walk(&self) -> Vec<FsNode> {
        fn rec(prefix: &mut Vec<String>, dir: &BTreeMap<String, Entry>, out: &mut Vec<FsNode>) {
            for (name, e) in dir {
                prefix.push(name.clone());
                out.push(FsTree::node(prefix, e));
                if let Entry::Dir(c) = e {
                    rec(prefix, c, out);
                }
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        rec(&mut Vec::new(), &self.root, &mut out);
        out
    }
}
