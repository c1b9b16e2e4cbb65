//! Control plane process: telemetry listener plus HTTP API.

use std::io;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use smartcook_core::wire::{self, DeviceLine};
use thiserror::Error;
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::watch;
use tokio::task::JoinHandle;

use crate::api::{self, AppState};
use crate::clock::Clock;
use crate::config::{ConfigError, ServiceConfig};
use crate::gateway::{Gateway, GatewayError};
use crate::hub::{Hub, HubConfig};
use crate::registry::TokenRegistry;

#[derive(Debug, Error)]
pub enum ServeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot listen on {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: io::Error,
    },
    #[error("cannot open telemetry log {path}: {source}")]
    Log {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

/// A running control plane. Dropping it without [`Server::shutdown`]
/// leaves the tasks running until the runtime stops.
pub struct Server {
    http_addr: SocketAddr,
    telemetry_addr: SocketAddr,
    hub: Arc<Hub>,
    stop: watch::Sender<bool>,
    tasks: Vec<JoinHandle<()>>,
}

async fn bind(addr: SocketAddr) -> Result<TcpListener, ServeError> {
    TcpListener::bind(addr)
        .await
        .map_err(|source| ServeError::Bind { addr, source })
}

impl Server {
    pub async fn start(cfg: &ServiceConfig, clock: Arc<dyn Clock>) -> Result<Server, ServeError> {
        cfg.validate()?;
        let kb = cfg.doneness_table()?;
        let model = cfg.interaction_model()?;

        let mut hub = Hub::new(
            HubConfig {
                ring_capacity: cfg.ring_capacity,
                staleness_ms: cfg.staleness_ms(),
                predictor: cfg.predictor,
            },
            clock,
        );
        if let Some(path) = &cfg.log_path {
            hub = hub.with_log(path).map_err(|source| ServeError::Log {
                path: path.clone(),
                source,
            })?;
        }
        let hub = Arc::new(hub);

        let http = bind(cfg.http_addr).await?;
        let telemetry = bind(cfg.telemetry_addr).await?;
        let http_addr = http.local_addr().map_err(|source| ServeError::Bind {
            addr: cfg.http_addr,
            source,
        })?;
        let telemetry_addr = telemetry.local_addr().map_err(|source| ServeError::Bind {
            addr: cfg.telemetry_addr,
            source,
        })?;

        let gateway = Gateway::new(Arc::new(model), &format!("http://{http_addr}/"))?;
        let (stop, stop_rx) = watch::channel(false);
        let state = AppState {
            hub: hub.clone(),
            tokens: Arc::new(TokenRegistry::new(cfg.tokens.clone())),
            kb: Arc::new(kb),
            gateway: Arc::new(gateway),
            shutdown: stop_rx.clone(),
        };
        let app = api::router(state, cfg.ui_dir.as_deref());

        let mut http_stop = stop_rx.clone();
        let http_task = tokio::spawn(async move {
            let serve = axum::serve(http, app).with_graceful_shutdown(async move {
                stopped(&mut http_stop).await;
            });
            if let Err(e) = serve.await {
                tracing::error!("http server failed: {e}");
            }
        });
        let telemetry_task = tokio::spawn(accept_devices(telemetry, hub.clone(), stop_rx));
        tracing::info!(%http_addr, %telemetry_addr, "control plane listening");

        Ok(Server {
            http_addr,
            telemetry_addr,
            hub,
            stop,
            tasks: vec![http_task, telemetry_task],
        })
    }

    pub fn http_addr(&self) -> SocketAddr {
        self.http_addr
    }

    pub fn telemetry_addr(&self) -> SocketAddr {
        self.telemetry_addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.http_addr)
    }

    pub fn hub(&self) -> &Arc<Hub> {
        &self.hub
    }

    /// Stops accepting work, closes device connections and event streams,
    /// and flushes the telemetry log.
    pub async fn shutdown(self) -> io::Result<()> {
        let _ = self.stop.send(true);
        for task in self.tasks {
            let _ = task.await;
        }
        self.hub.flush_log()
    }
}

async fn stopped(stop: &mut watch::Receiver<bool>) {
    let _ = stop.wait_for(|s| *s).await;
}

async fn accept_devices(listener: TcpListener, hub: Arc<Hub>, mut stop: watch::Receiver<bool>) {
    let mut connections = tokio::task::JoinSet::new();
    loop {
        tokio::select! {
            accepted = listener.accept() => match accepted {
                Ok((stream, peer)) => {
                    let hub = hub.clone();
                    let stop = stop.clone();
                    connections.spawn(async move {
                        if let Err(e) = serve_device(stream, hub, stop).await {
                            tracing::debug!(%peer, "device connection ended: {e}");
                        }
                    });
                }
                Err(e) => tracing::warn!("telemetry accept failed: {e}"),
            },
            _ = stopped(&mut stop) => break,
        }
    }
    // Connections watch the same signal; wait for them to unregister.
    while connections.join_next().await.is_some() {}
}

async fn serve_device(
    stream: TcpStream,
    hub: Arc<Hub>,
    mut stop: watch::Receiver<bool>,
) -> io::Result<()> {
    let (read, mut write) = stream.into_split();
    let mut lines = BufReader::new(read).lines();

    let device_id = match lines.next_line().await? {
        Some(line) => match wire::parse_device_line(&line) {
            Ok(DeviceLine::Hello(id)) => id,
            _ => {
                write
                    .write_all(format!("{}\n", wire::encode_error("expected_hello")).as_bytes())
                    .await?;
                return Ok(());
            }
        },
        None => return Ok(()),
    };
    let (conn_id, mut commands) = hub.connect(&device_id);
    tracing::info!(device = %device_id, "device connected");

    let result = async {
        loop {
            tokio::select! {
                line = lines.next_line() => {
                    let Some(line) = line? else { return Ok(()) };
                    if line.trim().is_empty() {
                        continue;
                    }
                    match wire::parse_device_line(&line) {
                        Ok(DeviceLine::Sample(s)) if s.device_id == device_id => {
                            let _ = hub.ingest(s);
                        }
                        Ok(DeviceLine::Error(code)) => {
                            tracing::debug!(device = %device_id, "device reported {code}");
                        }
                        _ => hub.note_malformed(&device_id),
                    }
                }
                cmd = commands.recv() => {
                    // None means a newer connection took over this device.
                    let Some(cmd) = cmd else { return Ok(()) };
                    let mut out = wire::encode_command(cmd);
                    out.push('\n');
                    write.write_all(out.as_bytes()).await?;
                }
                _ = stopped(&mut stop) => return Ok(()),
            }
        }
    }
    .await;

    hub.disconnect(&device_id, conn_id);
    tracing::info!(device = %device_id, "device disconnected");
    result
}
