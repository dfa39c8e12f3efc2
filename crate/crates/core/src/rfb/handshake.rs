use super::messages::{read_exact, read_u16, read_u32};
use super::RfbError;
use crate::pixel::PixelFormat;
use crate::transport::{
    compute_mac, encrypt_channel, send_message, verify_mac, AuthPolicy, ChannelKind, Side, Stream, AUTH_TIMEOUT,
    FAILURE_DELAY, NONCE_LEN,
};
use std::io::Read;

pub const VERSION: &[u8; 12] = b"RFB 003.008\n";
pub const SERVER_NAME: &str = "remoteframe-sim";
pub const SECURITY_NONE: u8 = 1;
/// Shared-secret challenge/response.
pub const SECURITY_MAC: u8 = 129;
/// Shared-secret login followed by keystream encryption of the channel.
pub const SECURITY_MAC_STREAM: u8 = 130;

/// Parameters announced in ServerInit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServerInit {
    pub width: u16,
    pub height: u16,
    pub format: PixelFormat,
    pub name: String,
}

impl ServerInit {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + self.name.len());
        out.extend_from_slice(&self.width.to_be_bytes());
        out.extend_from_slice(&self.height.to_be_bytes());
        out.extend_from_slice(&self.format.to_wire());
        out.extend_from_slice(&(self.name.len() as u32).to_be_bytes());
        out.extend_from_slice(self.name.as_bytes());
        out
    }

    pub fn read_from<R: Read + ?Sized>(r: &mut R) -> Result<Self, RfbError> {
        let width = read_u16(r)?;
        let height = read_u16(r)?;
        let block: [u8; 16] = read_exact(r)?;
        let format = PixelFormat::from_wire(&block)?;
        let name = read_string(r, 4096)?;
        Ok(ServerInit { width, height, format, name })
    }
}

fn reason(text: &str) -> Vec<u8> {
    let mut out = (text.len() as u32).to_be_bytes().to_vec();
    out.extend_from_slice(text.as_bytes());
    out
}

fn read_string<R: Read + ?Sized>(r: &mut R, cap: u32) -> Result<String, RfbError> {
    let n = read_u32(r)?;
    if n > cap {
        return Err(RfbError::Protocol(format!("string of {n} bytes")));
    }
    let mut b = vec![0u8; n as usize];
    r.read_exact(&mut b)?;
    Ok(String::from_utf8_lossy(&b).into_owned())
}

/// Parses a `RFB xxx.yyy\n` version string.
pub fn parse_version(v: &[u8; 12]) -> Option<(u16, u16)> {
    if &v[..4] != b"RFB " || v[7] != b'.' || v[11] != b'\n' {
        return None;
    }
    let num = |s: &[u8]| std::str::from_utf8(s).ok()?.parse::<u16>().ok();
    Some((num(&v[4..7])?, num(&v[8..11])?))
}

/// What the server side of a handshake produced.
pub struct Accepted {
    pub stream: Box<dyn Stream>,
    pub shared: bool,
}

/// Runs the server side up to and including ServerInit. `nonce` is only
/// used for shared-secret logins.
pub fn server_handshake(
    mut stream: Box<dyn Stream>,
    policy: &AuthPolicy,
    encrypt: bool,
    init: &ServerInit,
    nonce: [u8; NONCE_LEN],
) -> Result<Accepted, RfbError> {
    stream.set_read_timeout_stream(Some(AUTH_TIMEOUT))?;
    send_message(&mut stream, VERSION)?;
    let client: [u8; 12] = read_exact(&mut stream)?;
    if parse_version(&client) != Some((3, 8)) {
        let mut msg = vec![0u8];
        msg.extend(reason("only RFB 003.008 is supported"));
        let _ = send_message(&mut stream, &msg);
        stream.shutdown_stream();
        return Err(RfbError::VersionMismatch(String::from_utf8_lossy(&client).trim_end().to_string()));
    }
    let offered = match (policy.secret(), encrypt) {
        (None, _) => SECURITY_NONE,
        (Some(_), false) => SECURITY_MAC,
        (Some(_), true) => SECURITY_MAC_STREAM,
    };
    send_message(&mut stream, &[1, offered])?;
    let [chosen] = read_exact::<_, 1>(&mut stream)?;
    let mut ok = chosen == offered;
    if ok {
        if let Some(secret) = policy.secret() {
            send_message(&mut stream, &nonce)?;
            let tag: [u8; 32] = read_exact(&mut stream)?;
            ok = verify_mac(secret, &nonce, ChannelKind::Rfb, &tag);
        }
    }
    if !ok {
        std::thread::sleep(FAILURE_DELAY);
        let mut msg = 1u32.to_be_bytes().to_vec();
        msg.extend(reason("authentication failed"));
        let _ = send_message(&mut stream, &msg);
        stream.shutdown_stream();
        return Err(RfbError::AuthFailed(format!("security type {chosen}")));
    }
    send_message(&mut stream, &0u32.to_be_bytes())?;
    if offered == SECURITY_MAC_STREAM {
        let secret = policy.secret().expect("stream mode implies a secret");
        stream = Box::new(encrypt_channel(stream, secret, &nonce, Side::Server));
    }
    let [shared] = read_exact::<_, 1>(&mut stream)?;
    send_message(&mut stream, &init.to_bytes())?;
    stream.set_read_timeout_stream(None)?;
    Ok(Accepted { stream, shared: shared != 0 })
}

/// Runs the client side and returns the (possibly wrapped) stream and the
/// server's parameters.
pub fn client_handshake(
    mut stream: Box<dyn Stream>,
    secret: Option<&[u8]>,
    shared: bool,
) -> Result<(Box<dyn Stream>, ServerInit), RfbError> {
    let server: [u8; 12] = read_exact(&mut stream)?;
    if parse_version(&server) != Some((3, 8)) {
        return Err(RfbError::VersionMismatch(String::from_utf8_lossy(&server).trim_end().to_string()));
    }
    send_message(&mut stream, VERSION)?;
    let [n] = read_exact::<_, 1>(&mut stream)?;
    if n == 0 {
        let why = read_string(&mut stream, 4096)?;
        return Err(RfbError::VersionMismatch(why));
    }
    let mut types = vec![0u8; n as usize];
    stream.read_exact(&mut types)?;
    let chosen = if secret.is_some() {
        types.iter().copied().find(|&t| t == SECURITY_MAC || t == SECURITY_MAC_STREAM)
    } else {
        types.iter().copied().find(|&t| t == SECURITY_NONE)
    }
    .ok_or_else(|| RfbError::AuthFailed(format!("no usable security type in {types:?}")))?;
    send_message(&mut stream, &[chosen])?;
    let mut nonce = [0u8; NONCE_LEN];
    if let Some(secret) = secret {
        nonce = read_exact(&mut stream)?;
        send_message(&mut stream, &compute_mac(secret, &nonce, ChannelKind::Rfb))?;
    }
    let result = read_u32(&mut stream)?;
    if result != 0 {
        let why = read_string(&mut stream, 4096).unwrap_or_default();
        return Err(RfbError::AuthFailed(why));
    }
    if chosen == SECURITY_MAC_STREAM {
        stream = Box::new(encrypt_channel(stream, secret.unwrap_or_default(), &nonce, Side::Client));
    }
    send_message(&mut stream, &[shared as u8])?;
    let init = ServerInit::read_from(&mut stream)?;
    Ok((stream, init))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn server_init_prefix() {
        let init = ServerInit { width: 480, height: 800, format: PixelFormat::canonical(), name: SERVER_NAME.into() };
        let b = init.to_bytes();
        assert_eq!(&b[..4], &[0x01, 0xE0, 0x03, 0x20]);
        assert_eq!(b.len(), 4 + 16 + 4 + 15);
        assert_eq!(ServerInit::read_from(&mut &b[..]).unwrap(), init);
    }

    #[test]
    fn versions() {
        assert_eq!(parse_version(b"RFB 003.008\n"), Some((3, 8)));
        assert_eq!(parse_version(b"RFB 002.000\n"), Some((2, 0)));
        assert_eq!(parse_version(b"HTTP/1.1 200"), None);
    }
}
