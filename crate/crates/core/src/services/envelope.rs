use super::ServiceError;
use std::io::Read;

/// Largest payload a single envelope may carry.
pub const MAX_PAYLOAD: u32 = 64 * 1024 * 1024;
pub const HEADER_LEN: usize = 10;

/// One request, response or event on the command channel:
/// u16 opcode, u32 correlation id, u32 payload length, payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandEnvelope {
    pub opcode: u16,
    pub correlation_id: u32,
    pub payload: Vec<u8>,
}

impl CommandEnvelope {
    pub fn new(opcode: u16, correlation_id: u32, payload: Vec<u8>) -> Self {
        CommandEnvelope { opcode, correlation_id, payload }
    }

    pub fn payload_len(&self) -> u32 {
        self.payload.len() as u32
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(&self.opcode.to_be_bytes());
        out.extend_from_slice(&self.correlation_id.to_be_bytes());
        out.extend_from_slice(&self.payload_len().to_be_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    /// Parses exactly one envelope from `bytes`.
    pub fn parse(bytes: &[u8]) -> Result<Self, ServiceError> {
        let mut r = bytes;
        let env = Self::read_from(&mut r)?;
        if !r.is_empty() {
            return Err(ServiceError::Malformed(format!("{} bytes after envelope", r.len())));
        }
        Ok(env)
    }

    pub fn read_from<R: Read + ?Sized>(r: &mut R) -> Result<Self, ServiceError> {
        let mut h = [0u8; HEADER_LEN];
        r.read_exact(&mut h)?;
        let opcode = u16::from_be_bytes([h[0], h[1]]);
        let correlation_id = u32::from_be_bytes([h[2], h[3], h[4], h[5]]);
        let len = u32::from_be_bytes([h[6], h[7], h[8], h[9]]);
        if len > MAX_PAYLOAD {
            return Err(ServiceError::PayloadTooLarge(len));
        }
        let mut payload = vec![0u8; len as usize];
        r.read_exact(&mut payload)?;
        Ok(CommandEnvelope { opcode, correlation_id, payload })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn oversize_rejected_before_allocation() {
        let mut h = vec![0, 1, 0, 0, 0, 7];
        h.extend_from_slice(&(MAX_PAYLOAD + 1).to_be_bytes());
        assert!(matches!(CommandEnvelope::parse(&h), Err(ServiceError::PayloadTooLarge(_))));
    }

    #[test]
    fn length_mismatch_detected() {
        let mut b = CommandEnvelope::new(1, 1, vec![1, 2, 3]).to_bytes();
        b.pop();
        assert!(CommandEnvelope::parse(&b).is_err());
        b.extend_from_slice(&[3, 4]);
        assert!(CommandEnvelope::parse(&b).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(opcode in any::<u16>(), id in any::<u32>(), payload in prop::collection::vec(any::<u8>(), 0..4096)) {
            let env = CommandEnvelope::new(opcode, id, payload);
            prop_assert_eq!(CommandEnvelope::parse(&env.to_bytes()).unwrap(), env);
        }
    }

    #[test]
    fn round_trip_at_cap() {
        let env = CommandEnvelope::new(0x32, 9, vec![0x5A; MAX_PAYLOAD as usize]);
        assert_eq!(CommandEnvelope::parse(&env.to_bytes()).unwrap(), env);
    }
}
