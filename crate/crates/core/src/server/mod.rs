//! Interactive mode: a session served over one TCP port.
//!
//! Each connection speaks newline-delimited JSON. A connection that opens
//! with an HTTP `GET` is upgraded to a WebSocket instead, with one
//! protocol message per text frame, so browsers can attach directly.

mod protocol;
mod session;

pub use protocol::{
    parse_inbound, AckPayload, AttachPayload, Envelope, ErrorPayload, HelloPayload, Inbound, ProtocolError,
    ResumePayload, SnapshotPayload, SpawnPayload, SteerPayload, TimeScalePayload, WireObject, WireValidator,
};
pub use session::{Session, SESSION_DT};

use std::collections::VecDeque;
use std::io::{self, BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use tungstenite::Message;

/// Outbound messages buffered per client before the oldest is dropped.
pub const QUEUE_CAPACITY: usize = 16;

#[derive(Debug, Default)]
struct QueueState {
    items: VecDeque<Envelope>,
    closed: bool,
    dropped: u64,
}

/// Bounded outbound queue. When full, the oldest snapshot goes first so a
/// slow reader sees fresh state and still gets every reply.
#[derive(Debug, Default)]
pub struct OutQueue {
    state: Mutex<QueueState>,
    ready: Condvar,
}

impl OutQueue {
    pub fn push(&self, env: Envelope) {
        let mut st = self.state.lock().unwrap_or_else(|e| e.into_inner());
        if st.closed {
            return;
        }
        if st.items.len() >= QUEUE_CAPACITY {
            let victim = st.items.iter().position(|e| e.kind == "snapshot").unwrap_or(0);
            st.items.remove(victim);
            st.dropped += 1;
        }
        st.items.push_back(env);
        self.ready.notify_one();
    }

    /// Waits up to `timeout` for a message. `None` on timeout or once
    /// closed and drained.
    pub fn pop_timeout(&self, timeout: Duration) -> Option<Envelope> {
        let st = self.state.lock().unwrap_or_else(|e| e.into_inner());
        let (mut st, _) = self
            .ready
            .wait_timeout_while(st, timeout, |s| s.items.is_empty() && !s.closed)
            .unwrap_or_else(|e| e.into_inner());
        st.items.pop_front()
    }

    pub fn close(&self) {
        self.state.lock().unwrap_or_else(|e| e.into_inner()).closed = true;
        self.ready.notify_all();
    }

    pub fn is_closed(&self) -> bool {
        self.state.lock().unwrap_or_else(|e| e.into_inner()).closed
    }

    pub fn len(&self) -> usize {
        self.state.lock().unwrap_or_else(|e| e.into_inner()).items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Messages discarded so far because the queue was full.
    pub fn dropped(&self) -> u64 {
        self.state.lock().unwrap_or_else(|e| e.into_inner()).dropped
    }
}

struct Client {
    id: u64,
    queue: Arc<OutQueue>,
    subscribed: bool,
}

enum Event {
    Joined(u64, Arc<OutQueue>),
    Line(u64, String),
    Left(u64),
}

/// Shared outbound sequence counter.
#[derive(Debug, Default)]
struct Seq(AtomicU64);

impl Seq {
    fn next(&self) -> u64 {
        self.0.fetch_add(1, Ordering::Relaxed) + 1
    }
}

/// A running server. Dropping it does not stop it; call
/// [`ServerHandle::shutdown`].
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    threads: Vec<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops stepping and accepting; open connections are closed.
    pub fn shutdown(mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // unblock accept()
        let _ = TcpStream::connect(self.addr);
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }

    /// Blocks until the server stops on its own (it never does unless
    /// the step loop fails).
    pub fn wait(mut self) {
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}

/// Binds `addr` and serves the session until shut down. Port 0 picks a
/// free port; see [`ServerHandle::local_addr`].
pub fn serve(session: Session, addr: impl std::net::ToSocketAddrs) -> io::Result<ServerHandle> {
    let listener = TcpListener::bind(addr)?;
    let addr = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let (tx, rx) = mpsc::channel::<Event>();

    let accept = {
        let stop = stop.clone();
        thread::Builder::new().name("accept".into()).spawn(move || accept_loop(listener, tx, stop))?
    };
    let stepper = {
        let stop = stop.clone();
        thread::Builder::new().name("step".into()).spawn(move || step_loop(session, rx, stop))?
    };
    Ok(ServerHandle {
        addr,
        stop,
        threads: vec![accept, stepper],
    })
}

fn accept_loop(listener: TcpListener, tx: Sender<Event>, stop: Arc<AtomicBool>) {
    let mut next_id = 0u64;
    for stream in listener.incoming() {
        if stop.load(Ordering::SeqCst) {
            break;
        }
        let Ok(stream) = stream else { continue };
        next_id += 1;
        let (id, tx, stop) = (next_id, tx.clone(), stop.clone());
        let _ = thread::Builder::new()
            .name(format!("client-{id}"))
            .spawn(move || {
                let queue = Arc::new(OutQueue::default());
                if tx.send(Event::Joined(id, queue.clone())).is_err() {
                    return;
                }
                if let Err(e) = serve_client(id, stream, &queue, &tx, &stop) {
                    eprintln!("client {id}: {e}");
                }
                queue.close();
                let _ = tx.send(Event::Left(id));
            });
    }
}

/// How long a new connection may stay silent before it is taken to be a
/// line client waiting for `hello`. Browsers send their upgrade request
/// immediately.
const SNIFF_TIMEOUT: Duration = Duration::from_millis(250);

fn is_http(stream: &TcpStream) -> io::Result<bool> {
    let mut head = [0u8; 3];
    stream.set_read_timeout(Some(SNIFF_TIMEOUT))?;
    match stream.peek(&mut head) {
        Ok(n) => Ok(n == 3 && &head == b"GET"),
        Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => Ok(false),
        Err(e) => Err(e),
    }
}

fn serve_client(id: u64, stream: TcpStream, queue: &Arc<OutQueue>, tx: &Sender<Event>, stop: &AtomicBool) -> io::Result<()> {
    stream.set_nodelay(true)?;
    if is_http(&stream)? {
        serve_websocket(id, stream, queue, tx, stop)
    } else {
        serve_lines(id, stream, queue, tx, stop)
    }
}

fn serve_lines(id: u64, stream: TcpStream, queue: &Arc<OutQueue>, tx: &Sender<Event>, stop: &AtomicBool) -> io::Result<()> {
    stream.set_read_timeout(None)?;
    let mut out = stream.try_clone()?;
    let writer_queue = queue.clone();
    let writer = thread::spawn(move || {
        while !writer_queue.is_closed() || !writer_queue.is_empty() {
            if let Some(env) = writer_queue.pop_timeout(Duration::from_millis(50)) {
                let mut line = env.to_line();
                line.push('\n');
                if out.write_all(line.as_bytes()).is_err() {
                    break;
                }
            }
        }
        let _ = out.shutdown(std::net::Shutdown::Both);
    });
    let reader = BufReader::new(stream);
    for line in reader.lines() {
        if stop.load(Ordering::SeqCst) {
            break;
        }
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if tx.send(Event::Line(id, line)).is_err() {
            break;
        }
    }
    queue.close();
    let _ = writer.join();
    Ok(())
}

fn serve_websocket(id: u64, stream: TcpStream, queue: &Arc<OutQueue>, tx: &Sender<Event>, stop: &AtomicBool) -> io::Result<()> {
    stream.set_read_timeout(None)?;
    let mut ws = tungstenite::accept(stream).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?;
    ws.get_ref().set_read_timeout(Some(Duration::from_millis(5)))?;
    loop {
        if stop.load(Ordering::SeqCst) || queue.is_closed() {
            let _ = ws.close(None);
            let _ = ws.flush();
            return Ok(());
        }
        match ws.read() {
            Ok(Message::Text(text)) => {
                if tx.send(Event::Line(id, text)).is_err() {
                    return Ok(());
                }
            }
            Ok(Message::Close(_)) => return Ok(()),
            Ok(_) => {}
            Err(tungstenite::Error::Io(e)) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {}
            Err(tungstenite::Error::ConnectionClosed) | Err(tungstenite::Error::AlreadyClosed) => return Ok(()),
            Err(e) => return Err(io::Error::new(io::ErrorKind::Other, e.to_string())),
        }
        while let Some(env) = queue.pop_timeout(Duration::ZERO) {
            if let Err(e) = ws.send(Message::Text(env.to_line())) {
                return Err(io::Error::new(io::ErrorKind::Other, e.to_string()));
            }
        }
    }
}

fn reply_error(queue: &OutQueue, seq: &Seq, ack: Option<u64>, err: &ProtocolError) {
    queue.push(Envelope::new(
        "error",
        seq.next(),
        ErrorPayload {
            ack,
            code: err.code().into(),
            message: err.to_string(),
        },
    ));
}

fn handle_line(session: &mut Session, client: &mut Client, line: &str, seq: &Seq) {
    match parse_inbound(line) {
        Ok((n, msg)) => {
            let kind = msg.kind();
            let subscribe = matches!(msg, Inbound::Subscribe);
            match session.handle(msg) {
                Ok(()) => {
                    client.subscribed |= subscribe;
                    client.queue.push(Envelope::new(
                        "ack",
                        seq.next(),
                        AckPayload {
                            ack: n,
                            command: kind.into(),
                        },
                    ));
                }
                Err(e) => reply_error(&client.queue, seq, Some(n), &e),
            }
        }
        Err(e) => {
            let ack = serde_json::from_str::<serde_json::Value>(line)
                .ok()
                .and_then(|v| v.get("seq").and_then(|s| s.as_u64()));
            reply_error(&client.queue, seq, ack, &e);
        }
    }
}

fn step_loop(mut session: Session, rx: Receiver<Event>, stop: Arc<AtomicBool>) {
    let seq = Seq::default();
    let mut clients: Vec<Client> = Vec::new();
    let mut next_tick = Instant::now();
    while !stop.load(Ordering::SeqCst) {
        // drain inbound traffic until the next step is due
        loop {
            let wait = next_tick.saturating_duration_since(Instant::now());
            let event = if wait.is_zero() {
                match rx.try_recv() {
                    Ok(e) => e,
                    Err(_) => break,
                }
            } else {
                match rx.recv_timeout(wait) {
                    Ok(e) => e,
                    Err(mpsc::RecvTimeoutError::Timeout) => break,
                    Err(mpsc::RecvTimeoutError::Disconnected) => return,
                }
            };
            match event {
                Event::Joined(id, queue) => {
                    queue.push(Envelope::new("hello", seq.next(), session.hello()));
                    clients.push(Client {
                        id,
                        queue,
                        subscribed: false,
                    });
                }
                Event::Left(id) => clients.retain(|c| c.id != id),
                Event::Line(id, line) => {
                    if let Some(c) = clients.iter_mut().find(|c| c.id == id) {
                        handle_line(&mut session, c, &line, &seq);
                    }
                }
            }
        }

        let scale = session.time_scale();
        match session.tick() {
            Ok(problems) => {
                for p in problems {
                    let err = ProtocolError::Rejected(p);
                    for c in &clients {
                        reply_error(&c.queue, &seq, None, &err);
                    }
                }
            }
            Err(e) => {
                let err = ProtocolError::Rejected(format!("simulation stopped: {e}"));
                for c in &clients {
                    reply_error(&c.queue, &seq, None, &err);
                    c.queue.close();
                }
                return;
            }
        }
        let snapshot = session.snapshot();
        for c in clients.iter().filter(|c| c.subscribed) {
            c.queue.push(Envelope::new("snapshot", seq.next(), &snapshot));
        }
        // paused sessions keep broadcasting at the nominal rate
        let period = if scale > 0.0 { session.dt() / scale } else { session.dt() };
        next_tick += Duration::from_secs_f64(period.min(1.0));
        let now = Instant::now();
        if next_tick < now {
            next_tick = now;
        }
    }
    for c in &clients {
        c.queue.close();
    }
}
