//! Live service: one task owns the session and ticks it at 50 Hz; client
//! connections feed it commands and receive telemetry through a broadcast.
//!
//! Plain TCP clients and WebSocket clients share one port. A connection
//! whose first bytes are `GET ` is treated as a WebSocket upgrade.

use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::{broadcast, mpsc};
use tokio::time::Instant;
use tokio_tungstenite::tungstenite::Message;

use crate::protocol::{parse_command, Command};
use crate::session::Session;

pub const TICK: Duration = Duration::from_millis(20);

pub struct ServeOptions {
    /// Trajectory CSV written when the service stops.
    pub record: Option<PathBuf>,
}

type Frames = broadcast::Sender<Arc<str>>;
type Commands = mpsc::UnboundedSender<(u64, Command)>;

/// Runs until `shutdown` resolves. Returns the session so callers can
/// inspect or dump it.
pub async fn serve(
    listener: TcpListener,
    session: Session,
    options: ServeOptions,
    shutdown: impl Future<Output = ()>,
) -> anyhow::Result<Session> {
    let (frames, _) = broadcast::channel::<Arc<str>>(256);
    let (cmd_tx, cmd_rx) = mpsc::unbounded_channel();
    let (stop_tx, stop_rx) = tokio::sync::watch::channel(false);

    let sim = tokio::spawn(run_loop(session, cmd_rx, frames.clone(), stop_rx));
    let accept = {
        let frames = frames.clone();
        async move {
            loop {
                match listener.accept().await {
                    Ok((stream, peer)) => {
                        let (frames, cmds) = (frames.clone(), cmd_tx.clone());
                        tokio::spawn(async move {
                            if let Err(e) = handle(stream, peer, frames, cmds).await {
                                log::debug!("{peer}: {e}");
                            }
                            log::info!("{peer} disconnected");
                        });
                    }
                    Err(e) => log::warn!("accept failed: {e}"),
                }
            }
        }
    };
    tokio::select! {
        _ = accept => {}
        _ = shutdown => {}
    }
    let _ = stop_tx.send(true);
    let session = sim.await?;
    if let (Some(path), Some(traj)) = (&options.record, session.trajectory()) {
        let file = std::fs::File::create(path)?;
        flappy_core::dynamics::write_trajectory_csv(traj, file)?;
        log::info!("wrote {} states to {}", traj.len(), path.display());
    }
    Ok(session)
}

/// Fixed-dt loop paced to wall clock. When a tick starts more than a full
/// period late the schedule slips instead of catching up, and `lag` counts it.
async fn run_loop(
    mut session: Session,
    mut commands: mpsc::UnboundedReceiver<(u64, Command)>,
    frames: Frames,
    mut stop: tokio::sync::watch::Receiver<bool>,
) -> Session {
    let mut next = Instant::now();
    loop {
        tokio::select! {
            _ = tokio::time::sleep_until(next) => {}
            _ = stop.changed() => return session,
        }
        let now = Instant::now();
        if now > next + TICK {
            session.note_lag();
            next = now;
        }
        next += TICK;
        while let Ok((seq, cmd)) = commands.try_recv() {
            session.submit(seq, cmd);
        }
        if let Some(frame) = session.tick() {
            // no receivers is fine: the loop runs headless
            let _ = frames.send(Arc::from(frame.to_line()));
        }
    }
}

async fn handle(
    stream: TcpStream,
    peer: SocketAddr,
    frames: Frames,
    commands: Commands,
) -> anyhow::Result<()> {
    let mut head = [0u8; 4];
    let n = peek_exact(&stream, &mut head).await?;
    if &head[..n] == b"GET " {
        log::info!("{peer} connected (websocket)");
        websocket(stream, frames, commands).await
    } else {
        log::info!("{peer} connected (tcp)");
        plain(stream, frames, commands).await
    }
}

/// Peeks until `buf` is full or the peer stops sending.
async fn peek_exact(stream: &TcpStream, buf: &mut [u8]) -> std::io::Result<usize> {
    let deadline = Instant::now() + Duration::from_millis(500);
    loop {
        let n = tokio::select! {
            r = stream.peek(buf) => r?,
            _ = tokio::time::sleep_until(deadline) => return Ok(0),
        };
        if n == 0 || n == buf.len() || !b"GET ".starts_with(&buf[..n]) {
            return Ok(n);
        }
        tokio::time::sleep(Duration::from_millis(5)).await;
    }
}

/// Returns the reply line for a bad command, if any.
fn dispatch(line: &str, commands: &Commands) -> Option<String> {
    let line = line.trim();
    if line.is_empty() {
        return None;
    }
    match parse_command(line) {
        Ok(cmd) => {
            let _ = commands.send(cmd);
            None
        }
        Err(reply) => Some(reply.to_line()),
    }
}

async fn plain(stream: TcpStream, frames: Frames, commands: Commands) -> anyhow::Result<()> {
    let (read, mut write) = stream.into_split();
    let mut lines = BufReader::new(read).lines();
    let mut rx = frames.subscribe();
    loop {
        tokio::select! {
            line = lines.next_line() => {
                let Some(line) = line? else { return Ok(()) };
                if let Some(reply) = dispatch(&line, &commands) {
                    write.write_all(format!("{reply}\n").as_bytes()).await?;
                }
            }
            frame = rx.recv() => match frame {
                Ok(f) => {
                    write.write_all(f.as_bytes()).await?;
                    write.write_all(b"\n").await?;
                }
                Err(broadcast::error::RecvError::Lagged(n)) => log::warn!("slow client skipped {n} frames"),
                Err(broadcast::error::RecvError::Closed) => return Ok(()),
            }
        }
    }
}

async fn websocket(stream: TcpStream, frames: Frames, commands: Commands) -> anyhow::Result<()> {
    let ws = tokio_tungstenite::accept_async(stream).await?;
    let (mut sink, mut source) = ws.split();
    let mut rx = frames.subscribe();
    loop {
        tokio::select! {
            msg = source.next() => {
                let Some(msg) = msg else { return Ok(()) };
                match msg? {
                    Message::Text(text) => {
                        for line in text.lines() {
                            if let Some(reply) = dispatch(line, &commands) {
                                sink.send(Message::Text(reply)).await?;
                            }
                        }
                    }
                    Message::Close(_) => return Ok(()),
                    _ => {}
                }
            }
            frame = rx.recv() => match frame {
                Ok(f) => sink.send(Message::Text(f.to_string())).await?,
                Err(broadcast::error::RecvError::Lagged(n)) => log::warn!("slow client skipped {n} frames"),
                Err(broadcast::error::RecvError::Closed) => return Ok(()),
            }
        }
    }
}
