use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use tungstenite::{Message, WebSocket};

use iag_core::runtime::write_schedule;

use crate::protocol::Push;
use crate::queue::ReportQueue;
use crate::session::Session;

const POLL: Duration = Duration::from_millis(10);

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub ticks_per_second: f64,
    /// Per-client push buffer before coalescing starts.
    pub report_capacity: usize,
    /// Append every tick report as a JSON line.
    pub trace: Option<PathBuf>,
    /// Rewrite the accepted command schedule after every change.
    pub record: Option<PathBuf>,
}

impl Default for ServeOptions {
    fn default() -> ServeOptions {
        ServeOptions { ticks_per_second: 2.0, report_capacity: 256, trace: None, record: None }
    }
}

#[derive(Default)]
struct Outbox {
    responses: Vec<String>,
    pushes: Option<ReportQueue>,
}

type SharedOutbox = Arc<Mutex<Outbox>>;

enum Inbound {
    Connected(u64, SharedOutbox),
    Frame(u64, String),
    Closed(u64),
}

pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    sim_thread: JoinHandle<io::Result<Session>>,
    accept_thread: JoinHandle<()>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stop serving and hand back the session.
    pub fn shutdown(self) -> io::Result<Session> {
        self.stop.store(true, Ordering::SeqCst);
        let _ = self.accept_thread.join();
        self.sim_thread.join().expect("simulation thread panicked")
    }

    /// Serve until the process is interrupted.
    pub fn wait(self) -> io::Result<Session> {
        let _ = self.accept_thread.join();
        self.sim_thread.join().expect("simulation thread panicked")
    }
}

/// Bind `addr` and serve `session`. One thread owns the simulation; each
/// client gets a thread that forwards its frames in receipt order.
pub fn serve(mut session: Session, addr: &str, options: ServeOptions) -> io::Result<ServerHandle> {
    let listener = TcpListener::bind(addr)?;
    listener.set_nonblocking(true)?;
    let addr = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let (tx, rx) = mpsc::channel();
    let mut trace = options.trace.as_ref().map(File::create).transpose()?.map(BufWriter::new);
    let record = options.record.clone();
    if let Some(path) = &record {
        std::fs::write(path, "")?;
    }
    let capacity = options.report_capacity;

    let sim_stop = stop.clone();
    session.set_speed(options.ticks_per_second).map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
    let sim_thread = thread::spawn(move || {
        run_simulation(&mut session, rx, &sim_stop, capacity, &mut trace, record.as_ref())?;
        Ok(session)
    });

    let accept_stop = stop.clone();
    let accept_thread = thread::spawn(move || accept_loop(listener, tx, accept_stop));
    Ok(ServerHandle { addr, stop, sim_thread, accept_thread })
}

fn accept_loop(listener: TcpListener, tx: Sender<Inbound>, stop: Arc<AtomicBool>) {
    let mut next_id = 0;
    let mut clients = Vec::new();
    while !stop.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, _)) => {
                next_id += 1;
                let (tx, stop, id) = (tx.clone(), stop.clone(), next_id);
                clients.push(thread::spawn(move || {
                    let _ = client_loop(stream, id, &tx, &stop);
                    let _ = tx.send(Inbound::Closed(id));
                }));
            }
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => thread::sleep(POLL),
            Err(_) => thread::sleep(POLL),
        }
    }
    for c in clients {
        let _ = c.join();
    }
}

fn client_loop(stream: TcpStream, id: u64, tx: &Sender<Inbound>, stop: &AtomicBool) -> tungstenite::Result<()> {
    stream.set_nonblocking(false)?;
    let mut ws: WebSocket<TcpStream> = tungstenite::accept(stream).map_err(|e| match e {
        tungstenite::HandshakeError::Failure(e) => e,
        tungstenite::HandshakeError::Interrupted(_) => tungstenite::Error::Io(io::ErrorKind::WouldBlock.into()),
    })?;
    ws.get_ref().set_read_timeout(Some(POLL))?;
    let outbox: SharedOutbox = Arc::default();
    if tx.send(Inbound::Connected(id, outbox.clone())).is_err() {
        return Ok(());
    }
    while !stop.load(Ordering::SeqCst) {
        match ws.read() {
            Ok(Message::Text(text)) => {
                if tx.send(Inbound::Frame(id, text.to_string())).is_err() {
                    break;
                }
            }
            Ok(Message::Close(_)) => break,
            Ok(_) => {}
            Err(tungstenite::Error::Io(e)) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {}
            Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => break,
            Err(e) => return Err(e),
        }
        let (responses, pushes) = {
            let mut out = outbox.lock().expect("outbox lock");
            let responses = std::mem::take(&mut out.responses);
            let pushes = out.pushes.as_mut().map(ReportQueue::drain).unwrap_or_default();
            (responses, pushes)
        };
        for r in responses {
            ws.send(Message::text(r))?;
        }
        for p in pushes {
            ws.send(Message::text(p.to_json()))?;
        }
    }
    let _ = ws.close(None);
    let _ = ws.flush();
    Ok(())
}

fn run_simulation(
    session: &mut Session,
    rx: Receiver<Inbound>,
    stop: &AtomicBool,
    capacity: usize,
    trace: &mut Option<BufWriter<File>>,
    record: Option<&PathBuf>,
) -> io::Result<()> {
    let mut clients: BTreeMap<u64, SharedOutbox> = BTreeMap::new();
    let mut next_tick = Instant::now();
    let mut logged = 0;
    while !stop.load(Ordering::SeqCst) {
        let timeout = if session.paused() { POLL } else { next_tick.saturating_duration_since(Instant::now()).min(POLL) };
        match rx.recv_timeout(timeout) {
            Ok(Inbound::Connected(id, outbox)) => {
                outbox.lock().expect("outbox lock").pushes = Some(ReportQueue::new(capacity));
                clients.insert(id, outbox);
            }
            Ok(Inbound::Closed(id)) => {
                clients.remove(&id);
            }
            Ok(Inbound::Frame(id, text)) => {
                let was_paused = session.paused();
                let handled = session.handle_text(&text);
                if let Some(out) = clients.get(&id) {
                    out.lock().expect("outbox lock").responses.push(handled.response.to_json());
                }
                broadcast(&clients, &handled.pushes, trace)?;
                if was_paused && !session.paused() {
                    next_tick = Instant::now();
                }
            }
            Err(RecvTimeoutError::Timeout) => {}
            Err(RecvTimeoutError::Disconnected) => break,
        }
        if !session.paused() && Instant::now() >= next_tick {
            let pushes = session.tick();
            broadcast(&clients, &pushes, trace)?;
            next_tick += Duration::from_secs_f64(1.0 / session.ticks_per_second());
            if next_tick < Instant::now() {
                next_tick = Instant::now();
            }
        }
        let log = session.sim().command_log();
        if log.len() != logged {
            logged = log.len();
            if let Some(path) = record {
                std::fs::write(path, write_schedule(log))?;
            }
        }
    }
    if let Some(t) = trace {
        t.flush()?;
    }
    Ok(())
}

fn broadcast(clients: &BTreeMap<u64, SharedOutbox>, pushes: &[Push], trace: &mut Option<BufWriter<File>>) -> io::Result<()> {
    for p in pushes {
        if let (Push::TickReport { report, .. }, Some(t)) = (p, trace.as_mut()) {
            writeln!(t, "{}", report.to_json_line())?;
            t.flush()?;
        }
        for out in clients.values() {
            if let Some(q) = out.lock().expect("outbox lock").pushes.as_mut() {
                q.push(p.clone());
            }
        }
    }
    Ok(())
}
