//! In-memory duplex pipe. Writes are kept as separate chunks so a reader
//! can recover message boundaries with [`PipeEnd::recv_chunk`].

use super::stream::Stream;
use std::collections::VecDeque;
use std::io::{self, Read, Write};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

#[derive(Default)]
struct ChanState {
    chunks: VecDeque<Vec<u8>>,
    offset: usize,
    closed: bool,
}

#[derive(Default)]
struct Chan {
    state: Mutex<ChanState>,
    cv: Condvar,
}

impl Chan {
    fn close(&self) {
        self.state.lock().unwrap().closed = true;
        self.cv.notify_all();
    }

    fn push(&self, data: &[u8]) -> io::Result<()> {
        let mut s = self.state.lock().unwrap();
        if s.closed {
            return Err(io::ErrorKind::BrokenPipe.into());
        }
        if !data.is_empty() {
            s.chunks.push_back(data.to_vec());
            self.cv.notify_all();
        }
        Ok(())
    }

    /// Waits for data; `Ok(None)` means closed and drained.
    fn wait<'a>(
        &'a self,
        timeout: Option<Duration>,
    ) -> io::Result<Option<std::sync::MutexGuard<'a, ChanState>>> {
        let deadline = timeout.map(|t| Instant::now() + t);
        let mut s = self.state.lock().unwrap();
        loop {
            if !s.chunks.is_empty() {
                return Ok(Some(s));
            }
            if s.closed {
                return Ok(None);
            }
            s = match deadline {
                None => self.cv.wait(s).unwrap(),
                Some(d) => {
                    let now = Instant::now();
                    if now >= d {
                        return Err(io::ErrorKind::TimedOut.into());
                    }
                    self.cv.wait_timeout(s, d - now).unwrap().0
                }
            };
        }
    }
}

/// Closes both directions when the last clone of an end is dropped.
struct EndGuard {
    rx: Arc<Chan>,
    tx: Arc<Chan>,
}

impl Drop for EndGuard {
    fn drop(&mut self) {
        self.rx.close();
        self.tx.close();
    }
}

pub struct PipeEnd {
    guard: Arc<EndGuard>,
    timeout: Arc<Mutex<Option<Duration>>>,
}

/// Creates a connected pair of pipe ends.
pub fn pipe_pair() -> (PipeEnd, PipeEnd) {
    let a = Arc::new(Chan::default());
    let b = Arc::new(Chan::default());
    let end = |rx: &Arc<Chan>, tx: &Arc<Chan>| PipeEnd {
        guard: Arc::new(EndGuard { rx: rx.clone(), tx: tx.clone() }),
        timeout: Arc::new(Mutex::new(None)),
    };
    (end(&a, &b), end(&b, &a))
}

impl PipeEnd {
    /// Returns the rest of the next written chunk, or `None` once closed.
    pub fn recv_chunk(&self) -> io::Result<Option<Vec<u8>>> {
        let timeout = *self.timeout.lock().unwrap();
        let Some(mut s) = self.guard.rx.wait(timeout)? else {
            return Ok(None);
        };
        let off = s.offset;
        s.offset = 0;
        let mut chunk = s.chunks.pop_front().unwrap();
        chunk.drain(..off);
        Ok(Some(chunk))
    }

    pub fn try_clone(&self) -> PipeEnd {
        PipeEnd { guard: self.guard.clone(), timeout: self.timeout.clone() }
    }

    pub fn close(&self) {
        self.guard.rx.close();
        self.guard.tx.close();
    }
}

impl Read for PipeEnd {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        if buf.is_empty() {
            return Ok(0);
        }
        let timeout = *self.timeout.lock().unwrap();
        let Some(mut s) = self.guard.rx.wait(timeout)? else {
            return Ok(0);
        };
        let mut n = 0;
        while n < buf.len() {
            let off = s.offset;
            let Some(front) = s.chunks.front() else { break };
            let take = (front.len() - off).min(buf.len() - n);
            buf[n..n + take].copy_from_slice(&front[off..off + take]);
            n += take;
            if off + take == front.len() {
                s.chunks.pop_front();
                s.offset = 0;
            } else {
                s.offset = off + take;
            }
        }
        Ok(n)
    }
}

impl Write for PipeEnd {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.guard.tx.push(buf)?;
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

impl Stream for PipeEnd {
    fn try_clone_stream(&self) -> io::Result<Box<dyn Stream>> {
        Ok(Box::new(self.try_clone()))
    }

    fn shutdown_stream(&self) {
        self.close();
    }

    fn set_read_timeout_stream(&self, timeout: Option<Duration>) -> io::Result<()> {
        *self.timeout.lock().unwrap() = timeout;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bytes_arrive_in_order() {
        let (mut a, mut b) = pipe_pair();
        a.write_all(b"hello ").unwrap();
        a.write_all(b"world").unwrap();
        let mut buf = [0u8; 8];
        b.read_exact(&mut buf).unwrap();
        assert_eq!(&buf, b"hello wo");
        assert_eq!(b.recv_chunk().unwrap().unwrap(), b"rld");
    }

    #[test]
    fn drop_closes_peer() {
        let (a, mut b) = pipe_pair();
        let c = a.try_clone();
        drop(a);
        drop(c);
        let mut buf = [0u8; 1];
        assert_eq!(b.read(&mut buf).unwrap(), 0);
        assert!(b.write(b"x").is_err());
    }

    #[test]
    fn read_timeout() {
        let (_a, mut b) = pipe_pair();
        b.set_read_timeout_stream(Some(Duration::from_millis(10))).unwrap();
        let err = b.read(&mut [0u8; 1]).unwrap_err();
        assert!(super::super::stream::is_timeout(&err));
    }
}
