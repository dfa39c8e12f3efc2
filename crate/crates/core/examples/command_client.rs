//! A tour of the command channel against an in-process server.

use remoteframe::device::{Device, SensorKind};
use remoteframe::services::{AppFilter, CmdClient};
use remoteframe::transport::{serve, AuthPolicy, ServerConfig};
use std::net::TcpStream;
use std::time::Duration;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let secret = b"s3cret".to_vec();
    let config = ServerConfig { auth: AuthPolicy::shared_secret(secret.clone())?, ..ServerConfig::ephemeral() };
    let server = serve(config, Device::fixture())?;
    let mut c = CmdClient::connect(Box::new(TcpStream::connect(server.cmd_addr())?), Some(&secret))?;
    println!("protocol version {}", c.protocol_version());

    for app in c.list_applications(AppFilter::All)? {
        println!("app  {:<24} {:<8} {}", app.id, app.version, if app.running { "running" } else { "stopped" });
    }
    for p in c.list_processes()? {
        println!("proc {:>5} {:<24} {:?}", p.pid, p.name, p.kind);
    }

    let out = c.shell_exec("uname -a")?;
    print!("shell: {}", String::from_utf8_lossy(&out.stdout));

    c.fs_put("/sdcard/notes/todo.txt", b"buy milk\n")?;
    println!("fs: {:?}", String::from_utf8(c.fs_get("/sdcard/notes/todo.txt")?)?);
    for n in c.fs_list("/sdcard")? {
        println!("fs: {} ({:?}, {} bytes)", n.path, n.kind, n.size);
    }

    let rec = c.install_application("org.example.hello", "0.1", b"not really an apk", false)?;
    println!("installed {} {}", rec.id, rec.version);

    let gps = c.sensor_read(SensorKind::Gps)?;
    println!("gps at {} ms: {:?}", gps.t_ms, gps.values);
    let status = c.device_status()?;
    println!("battery {}%, up {} s, {:?}", status.battery_pct, status.uptime_s, status.network);

    server.device().set_battery(9);
    if let Some(alert) = c.next_event(Duration::from_secs(1))? {
        println!("alert: {:?} {}", alert.kind, alert.message);
    }

    match c.fs_get("/nope") {
        Err(e) => println!("expected failure: {e}"),
        Ok(_) => unreachable!(),
    }
    c.close();
    server.shutdown();
    Ok(())
}
