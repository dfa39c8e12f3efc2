use std::io::{self, Read, Write};
use std::net::{Shutdown, TcpStream};
use std::time::Duration;

/// A duplex byte channel that sessions can split between a reader thread
/// and a writer.
pub trait Stream: Read + Write + Send {
    fn try_clone_stream(&self) -> io::Result<Box<dyn Stream>>;
    /// Closes both directions; blocked readers on every clone wake up.
    fn shutdown_stream(&self);
    fn set_read_timeout_stream(&self, timeout: Option<Duration>) -> io::Result<()>;
}

impl Stream for TcpStream {
    fn try_clone_stream(&self) -> io::Result<Box<dyn Stream>> {
        Ok(Box::new(self.try_clone()?))
    }

    fn shutdown_stream(&self) {
        let _ = self.shutdown(Shutdown::Both);
    }

    fn set_read_timeout_stream(&self, timeout: Option<Duration>) -> io::Result<()> {
        self.set_read_timeout(timeout)
    }
}

impl Stream for Box<dyn Stream> {
    fn try_clone_stream(&self) -> io::Result<Box<dyn Stream>> {
        (**self).try_clone_stream()
    }

    fn shutdown_stream(&self) {
        (**self).shutdown_stream()
    }

    fn set_read_timeout_stream(&self, timeout: Option<Duration>) -> io::Result<()> {
        (**self).set_read_timeout_stream(timeout)
    }
}

/// True for the error kinds a read timeout produces on any platform.
pub fn is_timeout(e: &io::Error) -> bool {
    matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut)
}

/// Writes one protocol message with a single write call and flushes it, so
/// message-preserving channels see exactly one chunk.
pub fn send_message<W: Write + ?Sized>(w: &mut W, msg: &[u8]) -> io::Result<()> {
    w.write_all(msg)?;
    w.flush()
}
