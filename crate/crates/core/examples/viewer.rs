//! Headless viewer: follows the screen for a few seconds and saves the last
//! frame as a PPM image.
//!
//!     cargo run --example viewer -- [host:port] [encoding]
//!
//! Without an address an in-process server is started.

use remoteframe::device::Device;
use remoteframe::encodings::EncodingId;
use remoteframe::rfb::RfbClient;
use remoteframe::transport::{serve, ServerConfig};
use std::io::Write;
use std::net::TcpStream;
use std::time::{Duration, Instant};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let local;
    let addr = match args.next() {
        Some(a) => a,
        None => {
            local = serve(ServerConfig::ephemeral(), Device::fixture())?;
            local.rfb_addr().to_string()
        }
    };
    let encoding: EncodingId = args.next().as_deref().unwrap_or("tight").parse()?;

    let mut client = RfbClient::connect(Box::new(TcpStream::connect(&addr)?), None)?;
    let init = client.server_init().clone();
    println!("connected to `{}` {}x{}", init.name, init.width, init.height);
    client.set_encodings(&[encoding.code()])?;
    client.request_update(client.screen(), false)?;

    let (mut updates, mut rects, mut bytes) = (0, 0, 0);
    let start = Instant::now();
    while start.elapsed() < Duration::from_secs(3) {
        if let Some(u) = client.poll_update(Duration::from_millis(100))? {
            updates += 1;
            rects += u.rects.len();
            bytes += u.payload_bytes();
            client.request_update(client.screen(), true)?;
        }
    }
    println!("{updates} updates, {rects} rectangles, {bytes} payload bytes with {encoding}");

    let fb = client.mirror();
    let mut out = std::io::BufWriter::new(std::fs::File::create("viewer.ppm")?);
    write!(out, "P6\n{} {}\n255\n", fb.width(), fb.height())?;
    for &p in fb.pixels() {
        out.write_all(&[(p >> 16) as u8, (p >> 8) as u8, p as u8])?;
    }
    println!("last frame written to viewer.ppm");
    client.close();
    Ok(())
}
