//! Remote control of simulated handsets over RFB, with a binary command
//! channel for device management and a benchmark harness for comparing
//! rectangle encodings over emulated USB and WiFi links.
//!
//! ```
//! use remoteframe::device::Device;
//! use remoteframe::rfb::RfbClient;
//! use remoteframe::transport::{serve, ServerConfig};
//!
//! # fn main() -> Result<(), Box<dyn std::error::Error>> {
//! let server = serve(ServerConfig::ephemeral(), Device::fixture())?;
//! let stream = std::net::TcpStream::connect(server.rfb_addr())?;
//! let mut viewer = RfbClient::connect(Box::new(stream), None)?;
//! viewer.request_update(viewer.screen(), false)?;
//! viewer.read_update()?;
//! server.shutdown();
//! # Ok(())
//! # }
//! ```

pub mod bench;
pub mod device;
pub mod encodings;
pub mod pixel;
pub mod rfb;
pub mod services;
pub mod transport;
