//! Byte-stream transports: in-process pipes by default, loopback TCP on
//! request. Every endpoint handles each connection on its own thread.

use std::collections::BTreeMap;
use std::io::{self, Read, Write};
use std::net::{Shutdown, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};

use serde::{Deserialize, Serialize};

pub type ReadHalf = Box<dyn Read + Send>;
pub type WriteHalf = Box<dyn Write + Send>;

/// A connected duplex stream that can be split for relaying.
pub struct Conn {
    pub reader: ReadHalf,
    pub writer: WriteHalf,
}

impl Read for Conn {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        self.reader.read(buf)
    }
}

impl Write for Conn {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.writer.write(buf)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.writer.flush()
    }
}

struct PipeReader {
    rx: Receiver<Vec<u8>>,
    buf: Vec<u8>,
    pos: usize,
}

impl Read for PipeReader {
    fn read(&mut self, out: &mut [u8]) -> io::Result<usize> {
        if self.pos == self.buf.len() {
            match self.rx.recv() {
                Ok(chunk) => {
                    self.buf = chunk;
                    self.pos = 0;
                }
                // Peer writer dropped: end of stream.
                Err(_) => return Ok(0),
            }
        }
        let n = out.len().min(self.buf.len() - self.pos);
        out[..n].copy_from_slice(&self.buf[self.pos..self.pos + n]);
        self.pos += n;
        Ok(n)
    }
}

struct PipeWriter(Sender<Vec<u8>>);

impl Write for PipeWriter {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        if buf.is_empty() {
            return Ok(0);
        }
        self.0.send(buf.to_vec()).map_err(|_| io::Error::new(io::ErrorKind::BrokenPipe, "pipe closed"))?;
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

/// Two connected in-memory ends.
pub fn pipe() -> (Conn, Conn) {
    let (atx, arx) = channel();
    let (btx, brx) = channel();
    let a =
        Conn { reader: Box::new(PipeReader { rx: brx, buf: Vec::new(), pos: 0 }), writer: Box::new(PipeWriter(atx)) };
    let b =
        Conn { reader: Box::new(PipeReader { rx: arx, buf: Vec::new(), pos: 0 }), writer: Box::new(PipeWriter(btx)) };
    (a, b)
}

/// Write half of a TCP stream that half-closes on drop, so a relay can
/// propagate end-of-stream.
struct TcpWriter(TcpStream);

impl Write for TcpWriter {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.0.write(buf)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.0.flush()
    }
}

impl Drop for TcpWriter {
    fn drop(&mut self) {
        let _ = self.0.shutdown(Shutdown::Write);
    }
}

fn tcp_conn(s: TcpStream) -> io::Result<Conn> {
    s.set_nodelay(true)?;
    Ok(Conn { reader: Box::new(s.try_clone()?), writer: Box::new(TcpWriter(s)) })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransportKind {
    #[default]
    Pipe,
    Tcp,
}

pub type Handler = Arc<dyn Fn(Conn) + Send + Sync>;

enum Binding {
    Pipe(Handler),
    Tcp { addr: std::net::SocketAddr, stop: Arc<AtomicBool>, accept: Option<JoinHandle<()>> },
}

/// Named endpoints reachable by `connect`.
pub struct Network {
    kind: TransportKind,
    bindings: Mutex<BTreeMap<String, Binding>>,
    workers: Mutex<Vec<JoinHandle<()>>>,
}

impl Network {
    pub fn new(kind: TransportKind) -> Arc<Self> {
        Arc::new(Self { kind, bindings: Mutex::default(), workers: Mutex::default() })
    }

    pub fn kind(&self) -> TransportKind {
        self.kind
    }

    pub fn bind(self: &Arc<Self>, name: &str, handler: Handler) -> io::Result<()> {
        let binding = match self.kind {
            TransportKind::Pipe => Binding::Pipe(handler),
            TransportKind::Tcp => {
                let listener = TcpListener::bind("127.0.0.1:0")?;
                let addr = listener.local_addr()?;
                let stop = Arc::new(AtomicBool::new(false));
                let flag = Arc::clone(&stop);
                let accept = thread::spawn(move || {
                    let mut workers = Vec::new();
                    for s in listener.incoming() {
                        if flag.load(Ordering::SeqCst) {
                            break;
                        }
                        let Ok(conn) = s.and_then(tcp_conn) else { continue };
                        let h = Arc::clone(&handler);
                        workers.push(thread::spawn(move || h(conn)));
                    }
                    for w in workers {
                        let _ = w.join();
                    }
                });
                Binding::Tcp { addr, stop, accept: Some(accept) }
            }
        };
        self.bindings.lock().expect("bindings lock").insert(name.to_string(), binding);
        Ok(())
    }

    pub fn connect(&self, name: &str) -> io::Result<Conn> {
        let bindings = self.bindings.lock().expect("bindings lock");
        let b = bindings
            .get(name)
            .ok_or_else(|| io::Error::new(io::ErrorKind::NotFound, format!("no endpoint named {name}")))?;
        match b {
            Binding::Pipe(handler) => {
                let (client, server) = pipe();
                let h = Arc::clone(handler);
                self.workers.lock().expect("workers lock").push(thread::spawn(move || h(server)));
                Ok(client)
            }
            Binding::Tcp { addr, .. } => tcp_conn(TcpStream::connect(addr)?),
        }
    }

    /// Stops accept loops and joins every connection thread.
    pub fn shutdown(&self) {
        let bindings = std::mem::take(&mut *self.bindings.lock().expect("bindings lock"));
        for (_, b) in bindings {
            if let Binding::Tcp { addr, stop, mut accept } = b {
                stop.store(true, Ordering::SeqCst);
                // Wake the blocking accept.
                let _ = TcpStream::connect(addr);
                if let Some(h) = accept.take() {
                    let _ = h.join();
                }
            }
        }
        for w in std::mem::take(&mut *self.workers.lock().expect("workers lock")) {
            let _ = w.join();
        }
    }
}
