use std::io::{self, Read, Write};

use super::service::Server;
use crate::protocol::codec::HEADER_LEN;

/// In-process byte pipe to a [`Server`]. Complete request frames written to
/// it are answered synchronously; the response bytes are then readable.
#[derive(Debug)]
pub struct LocalConnection {
    server: Server,
    pending: Vec<u8>,
    responses: Vec<u8>,
    read_at: usize,
}

impl LocalConnection {
    pub fn new(server: Server) -> Self {
        LocalConnection {
            server,
            pending: Vec::new(),
            responses: Vec::new(),
            read_at: 0,
        }
    }

    pub fn server(&self) -> &Server {
        &self.server
    }

    fn pump(&mut self) -> io::Result<()> {
        loop {
            if self.pending.len() < HEADER_LEN {
                return Ok(());
            }
            let len = u32::from_le_bytes(self.pending[1..HEADER_LEN].try_into().unwrap()) as usize;
            if len > self.server.max_request_body() {
                return Err(io::Error::new(io::ErrorKind::InvalidData, "request frame too large"));
            }
            if self.pending.len() < HEADER_LEN + len {
                return Ok(());
            }
            if self.read_at == self.responses.len() {
                self.responses.clear();
                self.read_at = 0;
            }
            let frame: Vec<u8> = self.pending.drain(..HEADER_LEN + len).collect();
            self.server
                .respond_raw(frame[0], &frame[HEADER_LEN..], &mut self.responses)?;
        }
    }
}

impl Write for LocalConnection {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.pending.extend_from_slice(buf);
        self.pump()?;
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

impl Read for LocalConnection {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let available = &self.responses[self.read_at..];
        let n = available.len().min(buf.len());
        buf[..n].copy_from_slice(&available[..n]);
        self.read_at += n;
        Ok(n)
    }
}
