//! The USB-style link: the device side serves over an in-memory pipe and a
//! local TCP port is forwarded to it, the way `adb forward` is used.

use remoteframe::device::Device;
use remoteframe::encodings::EncodingId;
use remoteframe::rfb::RfbClient;
use remoteframe::services::CmdClient;
use remoteframe::transport::{forward_port, serve, usb_pipe_pair_with, ServerConfig, TransportProfile};
use std::net::TcpStream;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut server = serve(ServerConfig::ephemeral(), Device::fixture())?;
    let (device_side, host_side) = usb_pipe_pair_with(TransportProfile::usb());
    server.attach_usb(device_side)?;

    let rfb = forward_port(&host_side, 0, "rfb")?;
    let cmd = forward_port(&host_side, 0, "cmd")?;
    println!("rfb forwarded to {}, cmd to {}", rfb.local_addr(), cmd.local_addr());

    let mut viewer = RfbClient::connect(Box::new(TcpStream::connect(rfb.local_addr())?), None)?;
    viewer.set_encodings(&[EncodingId::Tight.code()])?;
    viewer.request_update(viewer.screen(), false)?;
    let u = viewer.read_update()?;
    println!("first update over the link: {} rects, {} bytes", u.rects.len(), u.payload_bytes());

    let mut c = CmdClient::connect(Box::new(TcpStream::connect(cmd.local_addr())?), None)?;
    println!("battery {}%", c.device_status()?.battery_pct);

    if let Err(e) = forward_port(&host_side, 0, "adb") {
        println!("unknown service refused: {e}");
    }
    viewer.close();
    c.close();
    rfb.stop();
    cmd.stop();
    server.shutdown();
    Ok(())
}
