//! Minimal HTTP/1.1 server exposing any [`Scorer`] on `/v1/score`.
//!
//! Intended for tests and local tooling: one thread per connection,
//! `Connection: close`, no keep-alive.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use super::client::SCORE_PATH;
use super::protocol::{decode_request, encode_error, encode_response};
use super::Scorer;

pub struct LoopbackServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    requests: Arc<AtomicUsize>,
    handle: Option<JoinHandle<()>>,
}

impl LoopbackServer {
    /// Bind an ephemeral port on 127.0.0.1 and start serving.
    pub fn spawn(scorer: Arc<dyn Scorer>) -> std::io::Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let requests = Arc::new(AtomicUsize::new(0));
        let (stop_flag, counter) = (stop.clone(), requests.clone());
        let handle = std::thread::spawn(move || {
            for stream in listener.incoming() {
                if stop_flag.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = stream else { continue };
                counter.fetch_add(1, Ordering::SeqCst);
                let scorer = scorer.clone();
                std::thread::spawn(move || {
                    if let Err(e) = handle_connection(stream, scorer.as_ref()) {
                        log::debug!("loopback connection: {e}");
                    }
                });
            }
        });
        Ok(Self {
            addr,
            stop,
            requests,
            handle: Some(handle),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Base URL, without the score path.
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Connections accepted so far.
    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}

impl Drop for LoopbackServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // Wake the accept loop so it observes the flag.
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn handle_connection(stream: TcpStream, scorer: &dyn Scorer) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            if name.trim().eq_ignore_ascii_case("content-length") {
                content_length = value.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body)?;

    let mut parts = request_line.split_whitespace();
    let (method, path) = (parts.next().unwrap_or(""), parts.next().unwrap_or(""));
    let (status, payload) = if method != "POST" || path != SCORE_PATH {
        ("404 Not Found", encode_error("", &format!("no route for {method} {path}")))
    } else {
        match std::str::from_utf8(&body).map_err(|e| e.to_string()).and_then(|t| decode_request(t).map_err(|e| e.to_string())) {
            Err(e) => ("400 Bad Request", encode_error("", &e)),
            Ok(req) => match req.validate().and_then(|_| scorer.score(&req)) {
                Ok(resp) => ("200 OK", encode_response(&resp)),
                Err(e) => ("200 OK", encode_error(&req.id, &e.to_string())),
            },
        }
    };
    let mut out = stream;
    write!(
        out,
        "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        payload.len()
    )?;
    out.write_all(payload.as_bytes())?;
    out.flush()
}
