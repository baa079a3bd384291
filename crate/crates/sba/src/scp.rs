//! Service communication proxy: routes a connection by a cleartext target
//! name, then relays the secure channel's bytes unmodified. Everything it
//! forwards is copied to an inspection log.

use std::io::{self, Read, Write};
use std::sync::{Arc, Mutex, Weak};
use std::thread;

use qore_core::handshake::{read_frame, write_frame};

use crate::transport::{Conn, Network};

pub struct Scp {
    net: Weak<Network>,
    log: Arc<Mutex<Vec<u8>>>,
}

/// Open a connection to `target` through the proxy at `scp`.
pub fn connect_via(net: &Network, scp: &str, target: &str) -> io::Result<Conn> {
    let mut conn = net.connect(scp)?;
    write_frame(&mut conn, target.as_bytes()).map_err(|e| io::Error::new(io::ErrorKind::Other, e.to_string()))?;
    Ok(conn)
}

impl Scp {
    /// Holds the network weakly so a binding does not keep it alive.
    pub fn new(net: &Arc<Network>) -> Self {
        Self { net: Arc::downgrade(net), log: Arc::default() }
    }

    /// Bytes relayed so far, both directions interleaved.
    pub fn observed(&self) -> Vec<u8> {
        self.log.lock().expect("log lock").clone()
    }

    pub fn serve(&self, mut conn: Conn) {
        let Ok(route) = read_frame(&mut conn) else { return };
        let Some(net) = self.net.upgrade() else { return };
        let Ok(upstream) = net.connect(&String::from_utf8_lossy(&route)) else { return };
        let Conn { reader: down_r, writer: down_w } = conn;
        let Conn { reader: up_r, writer: up_w } = upstream;
        let log = self.log.clone();
        let t = thread::spawn(move || pump(down_r, up_w, &log));
        pump(up_r, down_w, &self.log);
        let _ = t.join();
    }
}

/// Copy until end of stream; dropping the writer propagates it.
fn pump(mut from: Box<dyn Read + Send>, mut to: Box<dyn Write + Send>, log: &Mutex<Vec<u8>>) {
    let mut buf = [0u8; 16 * 1024];
    loop {
        let n = match from.read(&mut buf) {
            Ok(0) | Err(_) => break,
            Ok(n) => n,
        };
        log.lock().expect("log lock").extend_from_slice(&buf[..n]);
        if to.write_all(&buf[..n]).and_then(|()| to.flush()).is_err() {
            break;
        }
    }
}
