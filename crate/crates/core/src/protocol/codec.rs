//! Framed binary messages.
//!
//! Request:  `opcode u8 | body length u32 LE | body`
//! Response: `status u8 | body length u32 LE | body`
//!
//! FETCH and XOR_FETCH bodies are 0-based u64 LE indices. An error response
//! body is exactly a u16 LE error code.

use std::fmt;
use std::io::{self, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiset::Multiset;

pub const HEADER_LEN: usize = 5;
pub const INDEX_WIDTH: usize = 8;
pub const INFO_LEN: usize = 17;
/// Chunk size for STREAM responses.
pub const STREAM_CHUNK: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Opcode {
    Info = 0x01,
    Stream = 0x02,
    Fetch = 0x03,
    XorFetch = 0x04,
}

impl Opcode {
    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0x01 => Some(Opcode::Info),
            0x02 => Some(Opcode::Stream),
            0x03 => Some(Opcode::Fetch),
            0x04 => Some(Opcode::XorFetch),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ServerMode {
    /// The server XORs the requested entries (baseSPIDER).
    Cooperative,
    /// The server only returns entries by index (SPIDER).
    Default,
}

impl ServerMode {
    pub fn to_byte(self) -> u8 {
        match self {
            ServerMode::Cooperative => 0,
            ServerMode::Default => 1,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(ServerMode::Cooperative),
            1 => Some(ServerMode::Default),
            _ => None,
        }
    }
}

impl fmt::Display for ServerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ServerMode::Cooperative => "cooperative",
            ServerMode::Default => "default",
        })
    }
}

impl std::str::FromStr for ServerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cooperative" => Ok(ServerMode::Cooperative),
            "default" => Ok(ServerMode::Default),
            other => Err(Error::param(format!("unknown server mode {other:?}"))),
        }
    }
}

/// Error codes carried by error responses.
pub mod codes {
    pub const MALFORMED: u16 = 0x0001;
    pub const UNSUPPORTED_OPCODE: u16 = 0x0002;
    pub const INDEX_OUT_OF_RANGE: u16 = 0x0003;
    pub const TOO_MANY_INDICES: u16 = 0x0004;
    pub const EMPTY_REQUEST: u16 = 0x0005;
    pub const BUSY: u16 = 0x0006;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryMessage {
    pub opcode: Opcode,
    /// 0-based database indices.
    pub indices: Vec<u64>,
}

impl QueryMessage {
    pub fn info() -> Self {
        QueryMessage {
            opcode: Opcode::Info,
            indices: Vec::new(),
        }
    }

    pub fn stream() -> Self {
        QueryMessage {
            opcode: Opcode::Stream,
            indices: Vec::new(),
        }
    }

    /// Request for the given 1-based indices. This is the one place where
    /// client indices become wire indices.
    pub fn for_indices(opcode: Opcode, one_based: &[u64]) -> Self {
        QueryMessage {
            opcode,
            indices: one_based.iter().map(|&i| i - 1).collect(),
        }
    }

    /// Request for a redacted multiset, in ascending order.
    pub fn for_multiset(opcode: Opcode, redacted: &Multiset) -> Self {
        QueryMessage::for_indices(opcode, redacted.elements())
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.indices.len() * INDEX_WIDTH);
        self.encode_into(&mut out);
        out
    }

    pub fn encode_into(&self, out: &mut Vec<u8>) {
        out.push(self.opcode as u8);
        out.extend_from_slice(&((self.indices.len() * INDEX_WIDTH) as u32).to_le_bytes());
        for i in &self.indices {
            out.extend_from_slice(&i.to_le_bytes());
        }
    }

    pub(crate) fn from_parts(opcode: u8, body: &[u8]) -> Result<Self> {
        let opcode = Opcode::from_byte(opcode)
            .ok_or_else(|| Error::Framing(format!("unknown opcode {opcode:#04x}")))?;
        let indices = match opcode {
            Opcode::Info | Opcode::Stream => {
                if !body.is_empty() {
                    return Err(Error::Framing(format!("{opcode:?} takes no body")));
                }
                Vec::new()
            }
            Opcode::Fetch | Opcode::XorFetch => {
                if !body.len().is_multiple_of(INDEX_WIDTH) {
                    return Err(Error::Framing("index body not a multiple of 8 bytes".into()));
                }
                body.chunks_exact(INDEX_WIDTH)
                    .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
                    .collect()
            }
        };
        Ok(QueryMessage { opcode, indices })
    }

    /// Decodes one frame from the front of `buf`, returning the message and
    /// the number of bytes used. Incomplete input is a framing error.
    pub fn decode(buf: &[u8]) -> Result<(Self, usize)> {
        let (op, body, used) = split_frame(buf)?;
        Ok((QueryMessage::from_parts(op, body)?, used))
    }

    /// Decodes a buffer holding exactly one frame.
    pub fn decode_exact(buf: &[u8]) -> Result<Self> {
        let (msg, used) = QueryMessage::decode(buf)?;
        if used != buf.len() {
            return Err(Error::Framing(format!(
                "declared length {} but {} body bytes present",
                used - HEADER_LEN,
                buf.len() - HEADER_LEN
            )));
        }
        Ok(msg)
    }

    /// Reads one request, refusing bodies over `max_body` bytes. Returns
    /// `Ok(None)` on a clean end of stream.
    pub fn read_from<R: Read>(reader: &mut R, max_body: usize) -> Result<Option<Self>> {
        let Some((op, body)) = read_frame(reader, max_body)? else {
            return Ok(None);
        };
        QueryMessage::from_parts(op, &body).map(Some)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResponseMessage {
    Ok(Vec<u8>),
    Error(u16),
}

impl ResponseMessage {
    pub fn payload_len(&self) -> usize {
        match self {
            ResponseMessage::Ok(p) => p.len(),
            ResponseMessage::Error(_) => 0,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.encode_into(&mut out);
        out
    }

    pub fn encode_into(&self, out: &mut Vec<u8>) {
        match self {
            ResponseMessage::Ok(payload) => write_header_and_body(out, 0x00, payload),
            ResponseMessage::Error(code) => write_header_and_body(out, 0x01, &code.to_le_bytes()),
        }
    }

    pub fn write_to<W: Write>(&self, writer: &mut W) -> io::Result<()> {
        match self {
            ResponseMessage::Ok(payload) => write_ok(writer, payload),
            ResponseMessage::Error(_) => writer.write_all(&self.encode()),
        }
    }

    fn from_parts(status: u8, body: &[u8]) -> Result<Self> {
        match status {
            0x00 => Ok(ResponseMessage::Ok(body.to_vec())),
            0x01 => {
                let code: [u8; 2] = body
                    .try_into()
                    .map_err(|_| Error::Framing("error body must be 2 bytes".into()))?;
                Ok(ResponseMessage::Error(u16::from_le_bytes(code)))
            }
            s => Err(Error::Framing(format!("unknown status {s:#04x}"))),
        }
    }

    pub fn decode(buf: &[u8]) -> Result<(Self, usize)> {
        let (status, body, used) = split_frame(buf)?;
        Ok((ResponseMessage::from_parts(status, body)?, used))
    }

    pub fn decode_exact(buf: &[u8]) -> Result<Self> {
        let (msg, used) = ResponseMessage::decode(buf)?;
        if used != buf.len() {
            return Err(Error::Framing("trailing bytes after response frame".into()));
        }
        Ok(msg)
    }

    pub fn read_from<R: Read>(reader: &mut R, max_body: usize) -> Result<Self> {
        match read_frame(reader, max_body)? {
            Some((status, body)) => ResponseMessage::from_parts(status, &body),
            None => Err(Error::Io(io::Error::new(
                io::ErrorKind::UnexpectedEof,
                "connection closed while awaiting response",
            ))),
        }
    }
}

/// Writes an OK frame without copying the payload.
pub fn write_ok<W: Write>(writer: &mut W, payload: &[u8]) -> io::Result<()> {
    let mut header = [0u8; HEADER_LEN];
    header[1..].copy_from_slice(&(payload.len() as u32).to_le_bytes());
    writer.write_all(&header)?;
    writer.write_all(payload)
}

fn write_header_and_body(out: &mut Vec<u8>, tag: u8, body: &[u8]) {
    out.push(tag);
    out.extend_from_slice(&(body.len() as u32).to_le_bytes());
    out.extend_from_slice(body);
}

fn split_frame(buf: &[u8]) -> Result<(u8, &[u8], usize)> {
    if buf.len() < HEADER_LEN {
        return Err(Error::Framing(format!("truncated header ({} bytes)", buf.len())));
    }
    let len = u32::from_le_bytes(buf[1..HEADER_LEN].try_into().unwrap()) as usize;
    let end = HEADER_LEN
        .checked_add(len)
        .filter(|&e| e <= buf.len())
        .ok_or_else(|| {
            Error::Framing(format!(
                "declared length {len} exceeds the {} body bytes present",
                buf.len() - HEADER_LEN
            ))
        })?;
    Ok((buf[0], &buf[HEADER_LEN..end], end))
}

pub(crate) fn read_frame<R: Read>(reader: &mut R, max_body: usize) -> Result<Option<(u8, Vec<u8>)>> {
    let mut header = [0u8; HEADER_LEN];
    let mut got = 0;
    while got < HEADER_LEN {
        match reader.read(&mut header[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(Error::Framing("connection closed mid-header".into())),
            Ok(r) => got += r,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let len = u32::from_le_bytes(header[1..].try_into().unwrap()) as usize;
    if len > max_body {
        return Err(Error::Framing(format!("frame body {len} exceeds limit {max_body}")));
    }
    let mut body = vec![0u8; len];
    reader.read_exact(&mut body).map_err(|e| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            Error::Framing("connection closed mid-body".into())
        } else {
            Error::Io(e)
        }
    })?;
    Ok(Some((header[0], body)))
}

/// `(n, beta, mode)` as returned by INFO.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServerInfo {
    pub n: u64,
    pub beta: u64,
    pub mode: ServerMode,
}

impl ServerInfo {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(INFO_LEN);
        out.extend_from_slice(&self.n.to_le_bytes());
        out.extend_from_slice(&self.beta.to_le_bytes());
        out.push(self.mode.to_byte());
        out
    }

    pub fn decode(payload: &[u8]) -> Result<Self> {
        if payload.len() != INFO_LEN {
            return Err(Error::Framing(format!("INFO payload has {} bytes", payload.len())));
        }
        let mode = ServerMode::from_byte(payload[16])
            .ok_or_else(|| Error::Framing(format!("unknown mode byte {}", payload[16])))?;
        Ok(ServerInfo {
            n: u64::from_le_bytes(payload[..8].try_into().unwrap()),
            beta: u64::from_le_bytes(payload[8..16].try_into().unwrap()),
            mode,
        })
    }
}
