//! Built-in shell commands run against the simulated device.

use super::ops::ShellOutput;
use super::ServiceError;
use crate::device::{DeviceError, DeviceState, NodeKind, ProcessKind};
use std::fmt::Write as _;

pub const BUILTINS: [&str; 6] = ["ls", "cat", "echo", "ps", "rm", "uname"];

/// Splits on whitespace, honouring single and double quotes.
pub fn tokenize(line: &str) -> Result<Vec<String>, ServiceError> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut in_word = false;
    let mut quote: Option<char> = None;
    for c in line.chars() {
        match (quote, c) {
            (Some(q), c) if c == q => quote = None,
            (Some(_), c) => cur.push(c),
            (None, '\'' | '"') => {
                quote = Some(c);
                in_word = true;
            }
            (None, c) if c.is_whitespace() => {
                if in_word {
                    out.push(std::mem::take(&mut cur));
                    in_word = false;
                }
            }
            (None, c) => {
                cur.push(c);
                in_word = true;
            }
        }
    }
    if quote.is_some() {
        return Err(ServiceError::InvalidArgument("unterminated quote".into()));
    }
    if in_word {
        out.push(cur);
    }
    Ok(out)
}

fn describe(e: &DeviceError) -> &'static str {
    match e {
        DeviceError::NotFound(_) => "No such file or directory",
        DeviceError::IsDirectory(_) => "Is a directory",
        DeviceError::NotADirectory(_) => "Not a directory",
        DeviceError::PathEscape(_) => "Permission denied",
        _ => "Invalid argument",
    }
}

pub fn run(state: &mut DeviceState, line: &str) -> Result<ShellOutput, ServiceError> {
    let args = tokenize(line)?;
    let Some((cmd, rest)) = args.split_first() else {
        return Err(ServiceError::InvalidArgument("empty command line".into()));
    };
    let mut stdout = String::new();
    let mut stderr = String::new();
    let mut code = 0;
    match cmd.as_str() {
        "echo" => {
            stdout.push_str(&rest.join(" "));
            stdout.push('\n');
        }
        "uname" => {
            if rest.iter().any(|a| a == "-a") {
                let _ = writeln!(stdout, "Linux {} 2.6.35 #1 PREEMPT armv7l GNU/Linux", state.model);
            } else {
                stdout.push_str("Linux\n");
            }
        }
        "ps" => {
            stdout.push_str("PID   KIND    NAME\n");
            for p in &state.processes {
                let kind = match p.kind {
                    ProcessKind::Process => "process",
                    ProcessKind::Service => "service",
                };
                let _ = writeln!(stdout, "{:<5} {:<7} {}", p.pid, kind, p.name);
            }
        }
        "ls" => {
            let targets: Vec<&str> = if rest.is_empty() { vec!["/"] } else { rest.iter().map(String::as_str).collect() };
            for t in targets {
                match state.fs.list(t) {
                    Ok(nodes) => {
                        for n in nodes {
                            let name = n.path.rsplit('/').next().unwrap_or(&n.path);
                            let suffix = if n.kind == NodeKind::Dir { "/" } else { "" };
                            let _ = writeln!(stdout, "{name}{suffix}");
                        }
                    }
                    Err(e) => {
                        let _ = writeln!(stderr, "ls: {t}: {}", describe(&e));
                        code = 1;
                    }
                }
            }
        }
        "cat" => {
            let mut bytes = Vec::new();
            for t in rest {
                match state.fs.get(t) {
                    Ok(d) => bytes.extend(d),
                    Err(e) => {
                        let _ = writeln!(stderr, "cat: {t}: {}", describe(&e));
                        code = 1;
                    }
                }
            }
            return Ok(ShellOutput { exit_code: code, stdout: bytes, stderr: stderr.into_bytes() });
        }
        "rm" => {
            let recursive = rest.iter().any(|a| a == "-r" || a == "-rf");
            let paths: Vec<&String> = rest.iter().filter(|a| !a.starts_with('-')).collect();
            if paths.is_empty() {
                stderr.push_str("rm: missing operand\n");
                code = 1;
            }
            for t in paths {
                if let Err(e) = state.fs.remove(t, recursive) {
                    let _ = writeln!(stderr, "rm: {t}: {}", describe(&e));
                    code = 1;
                }
            }
        }
        other => return Err(ServiceError::UnknownCommand(other.to_string())),
    }
    Ok(ShellOutput { exit_code: code, stdout: stdout.into_bytes(), stderr: stderr.into_bytes() })
}
