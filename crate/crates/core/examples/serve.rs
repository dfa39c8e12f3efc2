//! Serves the simulated handset on the default ports until interrupted.
//!
//!     cargo run --example serve -- [seconds]
//!
//! Point any RFB 3.8 viewer at 127.0.0.1:5901; the command channel listens
//! on 7001 and the browser bridge on 8080.

use remoteframe::device::Device;
use remoteframe::transport::{serve, ServerConfig, WebConfig, DEFAULT_WEB_PORT};
use std::time::Duration;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::init();
    let seconds: Option<u64> = std::env::args().nth(1).map(|s| s.parse()).transpose()?;
    let config = ServerConfig { web: Some(WebConfig { port: DEFAULT_WEB_PORT, root: None }), ..ServerConfig::default() };
    let handle = serve(config, Device::fixture())?;
    println!("rfb {}  cmd {}  viewer http://{}/viewer/", handle.rfb_addr(), handle.cmd_addr(), handle.web_addr().unwrap());
    match seconds {
        Some(s) => {
            std::thread::sleep(Duration::from_secs(s));
            println!("{} sessions open at shutdown", handle.open_sessions());
            handle.shutdown();
        }
        None => loop {
            std::thread::park();
        },
    }
    Ok(())
}
