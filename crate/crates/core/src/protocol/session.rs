use std::io::{BufReader, Read, Write};
use std::net::{TcpStream, ToSocketAddrs};

use serde::Serialize;

use super::codec::{Opcode, QueryMessage, ResponseMessage, ServerInfo, HEADER_LEN, INFO_LEN, STREAM_CHUNK};
use crate::error::{Error, Result};
use crate::multiset::Multiset;

/// One request as the server saw it, with the size of what came back.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TranscriptEntry {
    pub request: QueryMessage,
    pub response_payload_len: u64,
    pub error: Option<u16>,
}

/// Append-only log of the requests a session has sent.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Transcript {
    entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub(crate) fn push(&mut self, entry: TranscriptEntry) {
        self.entries.push(entry);
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Only FETCH and XOR_FETCH requests, the online part of a transcript.
    pub fn queries(&self) -> impl Iterator<Item = &TranscriptEntry> {
        self.entries
            .iter()
            .filter(|e| matches!(e.request.opcode, Opcode::Fetch | Opcode::XorFetch))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Traffic {
    pub requests: u64,
    /// Index bytes sent.
    pub upload_payload: u64,
    /// Response payload bytes received.
    pub download_payload: u64,
    /// Everything on the wire, headers included.
    pub upload_wire: u64,
    pub download_wire: u64,
}

impl Traffic {
    pub fn since(&self, earlier: &Traffic) -> Traffic {
        Traffic {
            requests: self.requests - earlier.requests,
            upload_payload: self.upload_payload - earlier.upload_payload,
            download_payload: self.download_payload - earlier.download_payload,
            upload_wire: self.upload_wire - earlier.upload_wire,
            download_wire: self.download_wire - earlier.download_wire,
        }
    }
}

/// Buffered TCP connection usable as a session transport.
pub struct TcpConnection {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

impl TcpConnection {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(TcpConnection {
            reader: BufReader::new(stream.try_clone()?),
            writer: stream,
        })
    }
}

impl Read for TcpConnection {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        self.reader.read(buf)
    }
}

impl Write for TcpConnection {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.writer.write(buf)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.writer.flush()
    }
}

/// A client connection after the INFO exchange. One request in flight at a time.
pub struct Session<C> {
    conn: C,
    pub(crate) info: ServerInfo,
    transcript: Transcript,
    traffic: Traffic,
}

impl Session<TcpConnection> {
    pub fn connect_tcp(addr: impl ToSocketAddrs) -> Result<Self> {
        Session::connect(TcpConnection::connect(addr)?)
    }
}

impl<C: Read + Write> Session<C> {
    pub fn connect(conn: C) -> Result<Self> {
        let mut session = Session {
            conn,
            info: ServerInfo {
                n: 0,
                beta: 0,
                mode: super::codec::ServerMode::Default,
            },
            transcript: Transcript::default(),
            traffic: Traffic::default(),
        };
        let payload = session.exchange(&QueryMessage::info(), INFO_LEN)?;
        session.info = ServerInfo::decode(&payload)?;
        Ok(session)
    }

    pub fn info(&self) -> ServerInfo {
        self.info
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn traffic(&self) -> Traffic {
        self.traffic
    }

    pub fn connection(&self) -> &C {
        &self.conn
    }

    fn send(&mut self, req: &QueryMessage) -> Result<()> {
        let frame = req.encode();
        self.conn.write_all(&frame)?;
        self.conn.flush()?;
        self.traffic.requests += 1;
        self.traffic.upload_wire += frame.len() as u64;
        self.traffic.upload_payload += (frame.len() - HEADER_LEN) as u64;
        Ok(())
    }

    fn receive(&mut self, max_body: usize) -> Result<ResponseMessage> {
        let resp = ResponseMessage::read_from(&mut self.conn, max_body)?;
        let body = match &resp {
            ResponseMessage::Ok(p) => p.len(),
            ResponseMessage::Error(_) => 2,
        };
        self.traffic.download_wire += (HEADER_LEN + body) as u64;
        self.traffic.download_payload += resp.payload_len() as u64;
        Ok(resp)
    }

    /// Single-frame request whose OK payload must be exactly `expected_len`.
    fn exchange(&mut self, req: &QueryMessage, expected_len: usize) -> Result<Vec<u8>> {
        self.send(req)?;
        let resp = self.receive(expected_len.max(2))?;
        let (len, error) = match &resp {
            ResponseMessage::Ok(p) => (p.len() as u64, None),
            ResponseMessage::Error(code) => (0, Some(*code)),
        };
        self.transcript.push(TranscriptEntry {
            request: req.clone(),
            response_payload_len: len,
            error,
        });
        match resp {
            ResponseMessage::Error(code) => Err(Error::Server(code)),
            ResponseMessage::Ok(p) if p.len() != expected_len => Err(Error::Framing(format!(
                "expected {expected_len} payload bytes, got {}",
                p.len()
            ))),
            ResponseMessage::Ok(p) => Ok(p),
        }
    }

    fn check_indices(&self, one_based: &[u64]) -> Result<()> {
        if let Some(&bad) = one_based.iter().find(|&&i| i == 0 || i > self.info.n) {
            return Err(Error::param(format!("index {bad} outside [1, {}]", self.info.n)));
        }
        Ok(())
    }

    /// FETCH for 1-based indices; entries come back in request order.
    pub fn fetch(&mut self, one_based: &[u64]) -> Result<Vec<Vec<u8>>> {
        self.check_indices(one_based)?;
        let beta = self.info.beta as usize;
        let req = QueryMessage::for_indices(Opcode::Fetch, one_based);
        let payload = self.exchange(&req, one_based.len() * beta)?;
        Ok(payload.chunks_exact(beta.max(1)).map(<[u8]>::to_vec).collect())
    }

    /// FETCH for a redacted multiset; returns the concatenated entries.
    pub fn fetch_multiset(&mut self, redacted: &Multiset) -> Result<Vec<u8>> {
        self.check_indices(redacted.elements())?;
        let req = QueryMessage::for_multiset(Opcode::Fetch, redacted);
        self.exchange(&req, redacted.size() * self.info.beta as usize)
    }

    /// XOR_FETCH for a redacted multiset; returns one entry-sized parity.
    pub fn xor_fetch(&mut self, redacted: &Multiset) -> Result<Vec<u8>> {
        self.check_indices(redacted.elements())?;
        let req = QueryMessage::for_multiset(Opcode::XorFetch, redacted);
        self.exchange(&req, self.info.beta as usize)
    }

    /// Downloads the whole database: exactly `n * beta` payload bytes in
    /// index order. A short stream is an integrity error.
    pub fn stream_database(&mut self) -> Result<Vec<(u64, Vec<u8>)>> {
        let req = QueryMessage::stream();
        self.send(&req)?;
        let total = self.info.n * self.info.beta;
        let mut body = Vec::with_capacity(total as usize);
        while (body.len() as u64) < total {
            let resp = match self.receive(STREAM_CHUNK) {
                Ok(r) => r,
                Err(e @ (Error::Io(_) | Error::Framing(_))) => {
                    return Err(Error::integrity(format!(
                        "database stream broke after {} of {total} bytes: {e}",
                        body.len()
                    )))
                }
                Err(e) => return Err(e),
            };
            match resp {
                ResponseMessage::Ok(chunk) if !chunk.is_empty() => body.extend_from_slice(&chunk),
                ResponseMessage::Ok(_) => return Err(Error::integrity("empty stream chunk")),
                ResponseMessage::Error(code) => return Err(Error::Server(code)),
            }
        }
        if body.len() as u64 != total {
            return Err(Error::integrity("database stream overran n * beta"));
        }
        self.transcript.push(TranscriptEntry {
            request: req,
            response_payload_len: total,
            error: None,
        });
        let beta = self.info.beta as usize;
        Ok(body
            .chunks_exact(beta)
            .enumerate()
            .map(|(i, e)| (i as u64 + 1, e.to_vec()))
            .collect())
    }
}
