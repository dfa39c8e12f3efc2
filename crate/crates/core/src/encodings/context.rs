use super::EncodingError;
use flate2::{Compress, Compression, Decompress, FlushCompress, FlushDecompress};

/// One persistent zlib (RFC 1950) deflate stream, sync-flushed per call.
pub(crate) struct Deflater {
    inner: Compress,
}

impl Deflater {
    fn new(level: u32) -> Self {
        Deflater { inner: Compress::new(Compression::new(level), true) }
    }

    pub fn compress(&mut self, input: &[u8]) -> Result<Vec<u8>, EncodingError> {
        let mut out = Vec::with_capacity(input.len() / 4 + 64);
        let start = self.inner.total_in();
        loop {
            if out.capacity() - out.len() < 64 {
                out.reserve(out.capacity().max(256));
            }
            let consumed = (self.inner.total_in() - start) as usize;
            self.inner
                .compress_vec(&input[consumed..], &mut out, FlushCompress::Sync)
                .map_err(|e| EncodingError::CompressionFailure(e.to_string()))?;
            let consumed = (self.inner.total_in() - start) as usize;
            if consumed == input.len() && out.len() < out.capacity() {
                return Ok(out);
            }
        }
    }
}

/// The matching persistent inflate stream.
pub(crate) struct Inflater {
    inner: Decompress,
}

impl Inflater {
    fn new() -> Self {
        Inflater { inner: Decompress::new(true) }
    }

    /// Inflates one sync-flushed chunk that must expand to exactly `expected` bytes.
    pub fn inflate(&mut self, input: &[u8], expected: usize) -> Result<Vec<u8>, EncodingError> {
        let mut out = Vec::with_capacity(expected + 1);
        let start_in = self.inner.total_in();
        loop {
            let consumed = (self.inner.total_in() - start_in) as usize;
            let before = (consumed, out.len());
            self.inner
                .decompress_vec(&input[consumed..], &mut out, FlushDecompress::Sync)
                .map_err(|e| EncodingError::Malformed(format!("inflate: {e}")))?;
            let consumed = (self.inner.total_in() - start_in) as usize;
            if (consumed, out.len()) == before || out.len() > expected {
                break;
            }
            if consumed == input.len() && out.len() < out.capacity() {
                break;
            }
        }
        let consumed = (self.inner.total_in() - start_in) as usize;
        if out.len() != expected || consumed != input.len() {
            return Err(EncodingError::Malformed(format!(
                "inflated {} of {expected} bytes from {consumed}/{} input bytes",
                out.len(),
                input.len()
            )));
        }
        Ok(out)
    }
}

/// Server-side DEFLATE state for one connection: one stream for Zlib and
/// four for Tight. Never share a context between connections.
pub struct CompressionContext {
    pub(crate) zlib: Deflater,
    pub(crate) tight: [Deflater; 4],
}

impl CompressionContext {
    pub fn new() -> Self {
        Self::with_level(6)
    }

    pub fn with_level(level: u32) -> Self {
        let level = level.min(9);
        CompressionContext {
            zlib: Deflater::new(level),
            tight: std::array::from_fn(|_| Deflater::new(level)),
        }
    }
}

impl Default for CompressionContext {
    fn default() -> Self {
        Self::new()
    }
}

/// Client-side inflate state mirroring a [`CompressionContext`].
pub struct DecompressionContext {
    pub(crate) zlib: Inflater,
    pub(crate) tight: [Inflater; 4],
}

impl DecompressionContext {
    pub fn new() -> Self {
        DecompressionContext { zlib: Inflater::new(), tight: std::array::from_fn(|_| Inflater::new()) }
    }

    pub(crate) fn reset_tight(&mut self, stream: usize) {
        self.tight[stream] = Inflater::new();
    }
}

impl Default for DecompressionContext {
    fn default() -> Self {
        Self::new()
    }
}

impl std::fmt::Debug for CompressionContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CompressionContext").field("zlib_in", &self.zlib.inner.total_in()).finish()
    }
}

impl std::fmt::Debug for DecompressionContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DecompressionContext").field("zlib_out", &self.zlib.inner.total_out()).finish()
    }
}
