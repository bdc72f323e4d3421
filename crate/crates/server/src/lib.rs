//! WebSocket front end for a running simulation.
//!
//! One task owns the [`Simulation`]. Sessions talk to it only through a
//! command queue (applied between ticks, in arrival order) and receive
//! snapshots from a broadcast channel.

pub mod protocol;

use std::collections::VecDeque;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use gridnav_core::scenario::{Command, Simulation};
use tokio::sync::{broadcast, mpsc, oneshot};
use tokio::task::JoinHandle;
use tokio::time::Instant;
use tower_http::services::ServeDir;

use crate::protocol::{command_name, parse_command, MapMessage, Reply, Snapshot};

#[derive(Debug, thiserror::Error)]
pub enum ServerError {
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
    #[error("server failed: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub addr: SocketAddr,
    /// Simulated seconds per wall-clock second; 0 runs as fast as possible.
    pub time_scale: f64,
    /// Snapshot interval while paused or finished.
    pub keepalive: Duration,
    /// Directory served at `/`.
    pub static_dir: Option<PathBuf>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            addr: SocketAddr::from(([127, 0, 0, 1], 8080)),
            time_scale: 1.0,
            keepalive: Duration::from_millis(500),
            static_dir: None,
        }
    }
}

struct Request {
    id: Option<serde_json::Value>,
    command: Command,
    reply: mpsc::UnboundedSender<String>,
}

#[derive(Clone)]
struct AppState {
    commands: mpsc::UnboundedSender<Request>,
    snapshots: broadcast::Sender<String>,
    map: std::sync::Arc<String>,
}

/// A server running in the background.
pub struct ServerHandle {
    pub addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    http: JoinHandle<Result<(), std::io::Error>>,
    sim: JoinHandle<()>,
}

impl ServerHandle {
    pub async fn shutdown(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        let _ = self.http.await;
        self.sim.abort();
        let _ = self.sim.await;
    }
}

/// Binds and starts serving; `addr` port 0 picks a free port.
pub async fn start(sim: Simulation, config: ServerConfig) -> Result<ServerHandle, ServerError> {
    let listener = tokio::net::TcpListener::bind(config.addr)
        .await
        .map_err(|source| ServerError::Bind {
            addr: config.addr,
            source,
        })?;
    let addr = listener.local_addr()?;

    let (cmd_tx, cmd_rx) = mpsc::unbounded_channel();
    let (snap_tx, _) = broadcast::channel(1024);
    let state = AppState {
        commands: cmd_tx,
        snapshots: snap_tx.clone(),
        map: std::sync::Arc::new(serde_json::to_string(&MapMessage::capture(&sim)).expect("map serializes")),
    };

    let mut app = Router::new()
        .route("/ws", get(ws_handler))
        .route("/healthz", get(|| async { "ok" }));
    app = match &config.static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.route("/", get(|| async { "gridnav server; connect a client to /ws" })),
    };
    let app = app.with_state(state);

    let sim_task = tokio::spawn(run_loop(sim, config.clone(), cmd_rx, snap_tx));
    let (shutdown_tx, shutdown_rx) = oneshot::channel::<()>();
    let http = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = shutdown_rx.await;
            })
            .await
    });
    tracing::info!(%addr, "listening");
    Ok(ServerHandle {
        addr,
        shutdown: Some(shutdown_tx),
        http,
        sim: sim_task,
    })
}

/// Serves until interrupted with Ctrl-C.
pub async fn serve(sim: Simulation, config: ServerConfig) -> Result<(), ServerError> {
    let handle = start(sim, config).await?;
    tokio::signal::ctrl_c().await?;
    handle.shutdown().await;
    Ok(())
}

struct LoopState {
    sim: Simulation,
    paused: bool,
    held: VecDeque<Request>,
}

impl LoopState {
    fn handle(&mut self, req: Request) {
        let name = command_name(&req.command);
        let reply = match req.command {
            Command::Pause => {
                self.paused = true;
                Reply::ack(req.id, name)
            }
            Command::Resume => {
                self.paused = false;
                let _ = req.reply.send(json(&Reply::ack(req.id, name)));
                while let Some(held) = self.held.pop_front() {
                    self.handle(held);
                }
                return;
            }
            _ if self.paused => {
                self.held.push_back(req);
                return;
            }
            command => match self.sim.apply(command) {
                Ok(()) => Reply::ack(req.id, name),
                Err(e) => Reply::error(req.id, e.to_string()),
            },
        };
        let _ = req.reply.send(json(&reply));
    }
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("message serializes")
}

async fn run_loop(
    sim: Simulation,
    config: ServerConfig,
    mut commands: mpsc::UnboundedReceiver<Request>,
    snapshots: broadcast::Sender<String>,
) {
    let mut state = LoopState {
        sim,
        paused: false,
        held: VecDeque::new(),
    };
    let period = if config.time_scale > 0.0 {
        Some(Duration::from_secs_f64(state.sim.params().robot.dt / config.time_scale))
    } else {
        None
    };
    let mut next = Instant::now();
    let _ = snapshots.send(json(&Snapshot::capture(&state.sim, Vec::new(), false)));
    loop {
        while let Ok(req) = commands.try_recv() {
            state.handle(req);
        }
        let report = if state.paused { None } else { state.sim.step() };
        match report {
            Some(report) => {
                let _ = snapshots.send(json(&Snapshot::capture(&state.sim, report.events, false)));
                match period {
                    Some(p) => {
                        next += p;
                        let now = Instant::now();
                        if next < now {
                            next = now;
                        }
                        tokio::time::sleep_until(next).await;
                    }
                    None => tokio::task::yield_now().await,
                }
            }
            None => {
                let _ = snapshots.send(json(&Snapshot::capture(&state.sim, Vec::new(), state.paused)));
                tokio::select! {
                    req = commands.recv() => match req {
                        Some(req) => state.handle(req),
                        None => return,
                    },
                    _ = tokio::time::sleep(config.keepalive) => {}
                }
                next = Instant::now();
            }
        }
    }
}

async fn ws_handler(ws: WebSocketUpgrade, State(state): State<AppState>) -> Response {
    ws.on_upgrade(move |socket| session(socket, state)).into_response()
}

async fn session(socket: WebSocket, state: AppState) {
    let (mut sink, mut stream) = socket.split();
    let mut snapshots = state.snapshots.subscribe();
    let (reply_tx, mut replies) = mpsc::unbounded_channel::<String>();
    if sink.send(Message::Text(state.map.as_str().into())).await.is_err() {
        return;
    }
    loop {
        tokio::select! {
            snap = snapshots.recv() => match snap {
                Ok(text) => {
                    if sink.send(Message::Text(text.into())).await.is_err() {
                        break;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(n)) => {
                    tracing::debug!(skipped = n, "slow client");
                }
                Err(broadcast::error::RecvError::Closed) => break,
            },
            Some(text) = replies.recv() => {
                if sink.send(Message::Text(text.into())).await.is_err() {
                    break;
                }
            }
            incoming = stream.next() => match incoming {
                Some(Ok(Message::Text(text))) => match parse_command(text.as_str()) {
                    Ok((id, command)) => {
                        let req = Request { id, command, reply: reply_tx.clone() };
                        if state.commands.send(req).is_err() {
                            break;
                        }
                    }
                    Err((id, message)) => {
                        let _ = reply_tx.send(json(&Reply::error(id, message)));
                    }
                },
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                Some(Ok(_)) => {}
            },
        }
    }
}
