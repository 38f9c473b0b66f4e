use std::io::{self, BufReader, BufWriter, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use log::{debug, info, warn};

use super::db::Database;
use crate::error::{Error, Result};
use crate::hints::ceil_sqrt;
use crate::protocol::codec::{
    codes, read_frame, write_ok, Opcode, QueryMessage, ResponseMessage, ServerInfo, ServerMode,
    INDEX_WIDTH, STREAM_CHUNK,
};

/// XOR of the entries at the given 0-based indices, each counted as often as
/// it appears. Every index is validated before any entry is read.
pub fn server_answer_xor_fetch(db: &Database, indices: &[u64]) -> Result<Vec<u8>, u16> {
    if indices.is_empty() {
        return Err(codes::EMPTY_REQUEST);
    }
    if indices.iter().any(|&i| i >= db.n()) {
        return Err(codes::INDEX_OUT_OF_RANGE);
    }
    let mut acc = db.read_entry(indices[0]).to_vec();
    for &i in &indices[1..] {
        for (a, e) in acc.iter_mut().zip(db.read_entry(i)) {
            *a ^= e;
        }
        db.counters().xor_ops.fetch_add(1, Ordering::Relaxed);
    }
    Ok(acc)
}

/// Entries at the given 0-based indices concatenated in request order.
pub fn server_answer_fetch(db: &Database, indices: &[u64]) -> Result<Vec<u8>, u16> {
    if indices.iter().any(|&i| i >= db.n()) {
        return Err(codes::INDEX_OUT_OF_RANGE);
    }
    let mut out = Vec::with_capacity(indices.len() * db.beta() as usize);
    for &i in indices {
        out.extend_from_slice(db.read_entry(i));
    }
    Ok(out)
}

/// Request handling over a shared read-only database.
#[derive(Debug, Clone)]
pub struct Server {
    db: Arc<Database>,
    mode: ServerMode,
    max_indices: usize,
    io_bytes_per_ms: Option<f64>,
}

impl Server {
    pub fn new(db: Arc<Database>, mode: ServerMode) -> Self {
        let max_indices = 4 * ceil_sqrt(db.n()) as usize;
        Server {
            db,
            mode,
            max_indices,
            io_bytes_per_ms: None,
        }
    }

    pub fn with_max_indices(mut self, max: usize) -> Self {
        self.max_indices = max;
        self
    }

    /// Sleeps `bytes / rate` milliseconds after each entry read batch.
    pub fn with_io_throughput(mut self, bytes_per_ms: Option<f64>) -> Self {
        self.io_bytes_per_ms = bytes_per_ms.filter(|r| *r > 0.0);
        self
    }

    pub fn database(&self) -> &Arc<Database> {
        &self.db
    }

    pub fn mode(&self) -> ServerMode {
        self.mode
    }

    pub fn max_indices(&self) -> usize {
        self.max_indices
    }

    pub fn info(&self) -> ServerInfo {
        ServerInfo {
            n: self.db.n(),
            beta: self.db.beta(),
            mode: self.mode,
        }
    }

    fn simulate_io(&self, bytes: usize) {
        if let Some(rate) = self.io_bytes_per_ms {
            thread::sleep(Duration::from_secs_f64(bytes as f64 / rate / 1000.0));
        }
    }

    pub(crate) fn max_request_body(&self) -> usize {
        self.max_indices * INDEX_WIDTH
    }

    /// Writes the response frame(s) for one request. STREAM produces
    /// `ceil(n * beta / 1 MiB)` OK frames; everything else exactly one frame.
    pub fn respond<W: Write>(&self, req: &QueryMessage, out: &mut W) -> io::Result<()> {
        self.db.counters().requests.fetch_add(1, Ordering::Relaxed);
        match req.opcode {
            Opcode::Info => write_ok(out, &self.info().encode()),
            Opcode::Stream => {
                for chunk in self.db.bytes().chunks(STREAM_CHUNK) {
                    self.simulate_io(chunk.len());
                    write_ok(out, chunk)?;
                }
                Ok(())
            }
            Opcode::Fetch | Opcode::XorFetch if req.indices.len() > self.max_indices => {
                ResponseMessage::Error(codes::TOO_MANY_INDICES).write_to(out)
            }
            Opcode::Fetch => match server_answer_fetch(&self.db, &req.indices) {
                Ok(payload) => {
                    self.simulate_io(payload.len());
                    write_ok(out, &payload)
                }
                Err(code) => ResponseMessage::Error(code).write_to(out),
            },
            Opcode::XorFetch if self.mode == ServerMode::Default => {
                ResponseMessage::Error(codes::UNSUPPORTED_OPCODE).write_to(out)
            }
            Opcode::XorFetch => match server_answer_xor_fetch(&self.db, &req.indices) {
                Ok(payload) => {
                    self.simulate_io(req.indices.len() * self.db.beta() as usize);
                    write_ok(out, &payload)
                }
                Err(code) => ResponseMessage::Error(code).write_to(out),
            },
        }
    }

    /// Answers a raw frame, mapping decode failures to error responses.
    pub(crate) fn respond_raw<W: Write>(&self, opcode: u8, body: &[u8], out: &mut W) -> io::Result<()> {
        if Opcode::from_byte(opcode).is_none() {
            return ResponseMessage::Error(codes::UNSUPPORTED_OPCODE).write_to(out);
        }
        match QueryMessage::from_parts(opcode, body) {
            Ok(req) => self.respond(&req, out),
            Err(_) => ResponseMessage::Error(codes::MALFORMED).write_to(out),
        }
    }

    /// Serves one connection until the peer closes it.
    pub fn serve_session<S: Read + Write>(&self, stream: S) -> Result<()>
    where
        for<'a> &'a S: Read + Write,
    {
        let mut reader = BufReader::new(&stream);
        let mut writer = BufWriter::new(&stream);
        loop {
            match read_frame(&mut reader, self.max_request_body()) {
                Ok(None) => return Ok(()),
                Ok(Some((op, body))) => {
                    self.respond_raw(op, &body, &mut writer)?;
                    writer.flush()?;
                }
                Err(Error::Framing(msg)) => {
                    // oversized or cut-off frame: the stream can't be resynchronised
                    debug!("closing session: {msg}");
                    let _ = ResponseMessage::Error(codes::TOO_MANY_INDICES).write_to(&mut writer);
                    let _ = writer.flush();
                    return Ok(());
                }
                Err(e) => return Err(e),
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub mode: ServerMode,
    pub listen: String,
    pub db_path: PathBuf,
    pub max_sessions: usize,
    pub max_indices: Option<usize>,
    pub io_bytes_per_ms: Option<f64>,
}

impl ServerConfig {
    pub fn new(db_path: impl Into<PathBuf>, mode: ServerMode) -> Self {
        ServerConfig {
            mode,
            listen: "127.0.0.1:0".into(),
            db_path: db_path.into(),
            max_sessions: 256,
            max_indices: None,
            io_bytes_per_ms: None,
        }
    }
}

/// A running TCP service. Dropping the handle stops accepting connections.
pub struct ServerHandle {
    addr: SocketAddr,
    server: Server,
    shutdown: Arc<AtomicBool>,
    accept: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn server(&self) -> &Server {
        &self.server
    }

    /// Blocks until the accept loop exits.
    pub fn wait(mut self) {
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        // wake the blocking accept
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if self.accept.is_some() {
            self.stop();
        }
    }
}

/// Loads the database named in `config` and serves it over TCP.
pub fn serve(config: &ServerConfig) -> Result<ServerHandle> {
    let db = Arc::new(Database::load(&config.db_path)?);
    serve_database(db, config)
}

pub fn serve_database(db: Arc<Database>, config: &ServerConfig) -> Result<ServerHandle> {
    let mut server = Server::new(db, config.mode).with_io_throughput(config.io_bytes_per_ms);
    if let Some(max) = config.max_indices {
        server = server.with_max_indices(max);
    }
    let listener = TcpListener::bind(&config.listen)?;
    let addr = listener.local_addr()?;
    info!(
        "serving n = {} entries of {} bytes in {} mode on {addr}",
        server.db.n(),
        server.db.beta(),
        server.mode
    );
    let shutdown = Arc::new(AtomicBool::new(false));
    let sessions = Arc::new(AtomicUsize::new(0));
    let max_sessions = config.max_sessions.max(1);
    let accept = {
        let server = server.clone();
        let shutdown = shutdown.clone();
        thread::spawn(move || {
            for conn in listener.incoming() {
                if shutdown.load(Ordering::SeqCst) {
                    break;
                }
                let stream = match conn {
                    Ok(s) => s,
                    Err(e) => {
                        warn!("accept failed: {e}");
                        continue;
                    }
                };
                let _ = stream.set_nodelay(true);
                if sessions.fetch_add(1, Ordering::SeqCst) >= max_sessions {
                    sessions.fetch_sub(1, Ordering::SeqCst);
                    let mut s = stream;
                    let _ = ResponseMessage::Error(codes::BUSY).write_to(&mut s);
                    continue;
                }
                let server = server.clone();
                let sessions = sessions.clone();
                thread::spawn(move || {
                    if let Err(e) = server.serve_session(stream) {
                        debug!("session ended with error: {e}");
                    }
                    sessions.fetch_sub(1, Ordering::SeqCst);
                });
            }
        })
    };
    Ok(ServerHandle {
        addr,
        server,
        shutdown,
        accept: Some(accept),
    })
}
