//! Login for both channels: no authentication, or a shared secret proven by
//! an HMAC-SHA256 over a fresh server nonce and the channel kind.

use super::TransportError;
use hmac::{Hmac, KeyInit, Mac};
use rand::RngCore;
use sha2::Sha256;
use std::fmt;
use std::time::Duration;

type HmacSha256 = Hmac<Sha256>;

pub const NONCE_LEN: usize = 16;
pub const MAC_LEN: usize = 32;
/// How long a client may take to answer the challenge.
pub const AUTH_TIMEOUT: Duration = Duration::from_secs(5);
/// Fixed pause before a failed login is reported, whatever went wrong.
pub const FAILURE_DELAY: Duration = Duration::from_millis(250);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    Rfb = 1,
    Cmd = 2,
}

#[derive(Clone, PartialEq, Eq, Default)]
pub enum AuthPolicy {
    #[default]
    None,
    SharedSecret(Vec<u8>),
}

impl fmt::Debug for AuthPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AuthPolicy::None => f.write_str("None"),
            AuthPolicy::SharedSecret(_) => f.write_str("SharedSecret(..)"),
        }
    }
}

impl AuthPolicy {
    pub fn shared_secret(secret: impl Into<Vec<u8>>) -> Result<Self, TransportError> {
        let secret = secret.into();
        if secret.is_empty() {
            return Err(TransportError::InvalidPolicy("shared secret must not be empty".into()));
        }
        Ok(AuthPolicy::SharedSecret(secret))
    }

    pub fn secret(&self) -> Option<&[u8]> {
        match self {
            AuthPolicy::None => None,
            AuthPolicy::SharedSecret(s) => Some(s),
        }
    }
}

pub fn new_nonce() -> [u8; NONCE_LEN] {
    let mut n = [0u8; NONCE_LEN];
    rand::thread_rng().fill_bytes(&mut n);
    n
}

/// The client's answer to a challenge.
pub fn compute_mac(secret: &[u8], nonce: &[u8; NONCE_LEN], kind: ChannelKind) -> [u8; MAC_LEN] {
    let mut mac = HmacSha256::new_from_slice(secret).expect("hmac accepts any key length");
    mac.update(nonce);
    mac.update(&[kind as u8]);
    mac.finalize().into_bytes().into()
}

/// Constant-time check of a client's answer.
pub fn verify_mac(secret: &[u8], nonce: &[u8; NONCE_LEN], kind: ChannelKind, tag: &[u8]) -> bool {
    let mut mac = HmacSha256::new_from_slice(secret).expect("hmac accepts any key length");
    mac.update(nonce);
    mac.update(&[kind as u8]);
    mac.verify_slice(tag).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mac_binds_nonce_and_kind() {
        let n1 = [1u8; NONCE_LEN];
        let n2 = [2u8; NONCE_LEN];
        let tag = compute_mac(b"s3cret", &n1, ChannelKind::Rfb);
        assert!(verify_mac(b"s3cret", &n1, ChannelKind::Rfb, &tag));
        assert!(!verify_mac(b"s3cret", &n2, ChannelKind::Rfb, &tag));
        assert!(!verify_mac(b"s3cret", &n1, ChannelKind::Cmd, &tag));
        assert!(!verify_mac(b"other", &n1, ChannelKind::Rfb, &tag));
        assert!(!verify_mac(b"s3cret", &n1, ChannelKind::Rfb, &tag[..31]));
    }

    #[test]
    fn rfc4231_case_2() {
        let mut mac = HmacSha256::new_from_slice(b"Jefe").unwrap();
        mac.update(b"what do ya want for nothing?");
        let out: [u8; 32] = mac.finalize().into_bytes().into();
        assert_eq!(out[..4], [0x5b, 0xdc, 0xc1, 0x46]);
        assert_eq!(out[28..], [0x64, 0xec, 0x38, 0x43]);
    }

    #[test]
    fn empty_secret_rejected() {
        assert!(AuthPolicy::shared_secret(Vec::new()).is_err());
    }
}
