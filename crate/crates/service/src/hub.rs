//! Shared control-plane state: one [`DeviceSession`] per device, the
//! command links to connected devices, the telemetry log and the event bus.
//!
//! Locks are only held for the duration of a synchronous session call;
//! nothing awaits while holding one. Events go out on a broadcast channel,
//! so a slow subscriber loses events rather than stalling ingest.

use std::collections::{BTreeMap, HashMap};
use std::io;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};

use serde::Serialize;
use smartcook_core::predictor::{Prediction, PredictorConfig, TemperatureSample};
use smartcook_core::thermal::DeviceCommand;
use thiserror::Error;
use tokio::sync::{broadcast, mpsc};

use crate::clock::Clock;
use crate::session::{
    AlarmEvent, AlarmMode, ConnectionState, Delivery, DeviceSession, IngestError, SessionError,
};
use crate::store::TelemetryLog;

const EVENT_BUFFER: usize = 1024;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HubError {
    #[error("unknown device {0}")]
    UnknownDevice(String),
    #[error(transparent)]
    Session(#[from] SessionError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum HubEvent {
    Sample(TemperatureSample),
    Alarm(AlarmEvent),
    Connected { device_id: String },
    Disconnected { device_id: String },
}

impl HubEvent {
    pub fn device_id(&self) -> &str {
        match self {
            HubEvent::Sample(s) => &s.device_id,
            HubEvent::Alarm(a) => &a.device_id,
            HubEvent::Connected { device_id } | HubEvent::Disconnected { device_id } => device_id,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct HubConfig {
    pub ring_capacity: usize,
    pub staleness_ms: u64,
    pub predictor: PredictorConfig,
}

impl Default for HubConfig {
    fn default() -> Self {
        HubConfig {
            ring_capacity: 10_000,
            staleness_ms: 10_000,
            predictor: PredictorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reading {
    pub temp_f: f64,
    pub t_ms: u64,
    pub stale: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetStatus {
    pub target_f: Option<f64>,
    pub pending: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviceSummary {
    pub device_id: String,
    pub state: ConnectionState,
    pub samples: usize,
    pub dropped: u64,
}

struct Link {
    conn_id: u64,
    commands: mpsc::UnboundedSender<DeviceCommand>,
}

pub struct Hub {
    config: HubConfig,
    clock: Arc<dyn Clock>,
    sessions: Mutex<BTreeMap<String, Arc<Mutex<DeviceSession>>>>,
    links: Mutex<HashMap<String, Link>>,
    log: Option<Mutex<TelemetryLog>>,
    events: broadcast::Sender<HubEvent>,
    next_conn: AtomicU64,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

impl Hub {
    pub fn new(config: HubConfig, clock: Arc<dyn Clock>) -> Self {
        Hub {
            config,
            clock,
            sessions: Mutex::new(BTreeMap::new()),
            links: Mutex::new(HashMap::new()),
            log: None,
            events: broadcast::channel(EVENT_BUFFER).0,
            next_conn: AtomicU64::new(1),
        }
    }

    pub fn with_log(mut self, path: impl AsRef<Path>) -> io::Result<Self> {
        self.log = Some(Mutex::new(TelemetryLog::open(path)?));
        Ok(self)
    }

    pub fn config(&self) -> &HubConfig {
        &self.config
    }

    pub fn now_ms(&self) -> u64 {
        self.clock.now_ms()
    }

    pub fn subscribe(&self) -> broadcast::Receiver<HubEvent> {
        self.events.subscribe()
    }

    fn publish(&self, event: HubEvent) {
        // No subscribers is fine.
        let _ = self.events.send(event);
    }

    fn session(&self, device_id: &str) -> Result<Arc<Mutex<DeviceSession>>, HubError> {
        lock(&self.sessions)
            .get(device_id)
            .cloned()
            .ok_or_else(|| HubError::UnknownDevice(device_id.to_string()))
    }

    fn session_or_create(&self, device_id: &str) -> Arc<Mutex<DeviceSession>> {
        lock(&self.sessions)
            .entry(device_id.to_string())
            .or_insert_with(|| {
                Arc::new(Mutex::new(DeviceSession::new(
                    device_id,
                    self.config.ring_capacity,
                    self.config.predictor,
                )))
            })
            .clone()
    }

    /// Runs `f` against a device's session under its lock.
    pub fn with_session<R>(
        &self,
        device_id: &str,
        f: impl FnOnce(&mut DeviceSession) -> R,
    ) -> Result<R, HubError> {
        let session = self.session(device_id)?;
        let mut guard = lock(&session);
        Ok(f(&mut guard))
    }

    /// Registers a device connection. Returns the connection id and the
    /// receiving end of its command channel; a deferred target is queued
    /// on it immediately.
    pub fn connect(&self, device_id: &str) -> (u64, mpsc::UnboundedReceiver<DeviceCommand>) {
        let conn_id = self.next_conn.fetch_add(1, Ordering::Relaxed);
        let (tx, rx) = mpsc::unbounded_channel();
        let session = self.session_or_create(device_id);
        {
            let mut s = lock(&session);
            s.set_connected(true, self.now_ms());
            if let Some(target) = s.take_pending_target() {
                let _ = tx.send(DeviceCommand::SetTarget(target));
            }
            lock(&self.links).insert(
                device_id.to_string(),
                Link {
                    conn_id,
                    commands: tx,
                },
            );
        }
        self.publish(HubEvent::Connected {
            device_id: device_id.to_string(),
        });
        (conn_id, rx)
    }

    /// Drops a connection unless a newer one for the same device replaced it.
    pub fn disconnect(&self, device_id: &str, conn_id: u64) {
        let Ok(session) = self.session(device_id) else {
            return;
        };
        let mut s = lock(&session);
        let mut links = lock(&self.links);
        if links.get(device_id).is_some_and(|l| l.conn_id == conn_id) {
            links.remove(device_id);
            s.set_connected(false, self.now_ms());
            drop(links);
            drop(s);
            self.publish(HubEvent::Disconnected {
                device_id: device_id.to_string(),
            });
        }
    }

    pub fn ingest(&self, sample: TemperatureSample) -> Result<Option<AlarmEvent>, HubError> {
        let session = self.session(&sample.device_id)?;
        let now = self.now_ms();
        let alarm = {
            let mut s = lock(&session);
            match s.ingest(sample.clone(), now) {
                Ok(alarm) => alarm,
                Err(IngestError::Order(e)) => {
                    tracing::debug!(device = %sample.device_id, "dropped sample: {e}");
                    return Ok(None);
                }
                Err(e) => {
                    tracing::debug!("dropped sample: {e}");
                    return Ok(None);
                }
            }
        };
        if let Some(log) = &self.log {
            if let Err(e) = lock(log).append(&sample) {
                tracing::warn!("telemetry log append failed: {e}");
            }
        }
        // Alarm first: a subscriber that has seen the sample can rely on
        // any alarm it triggered already being queued.
        if let Some(ev) = &alarm {
            self.publish(HubEvent::Alarm(ev.clone()));
        }
        self.publish(HubEvent::Sample(sample));
        Ok(alarm)
    }

    pub fn note_malformed(&self, device_id: &str) {
        if let Ok(session) = self.session(device_id) {
            lock(&session).note_malformed();
        }
    }

    pub fn flush_log(&self) -> io::Result<()> {
        match &self.log {
            Some(log) => lock(log).flush(),
            None => Ok(()),
        }
    }

    pub fn devices(&self) -> Vec<DeviceSummary> {
        let now = self.now_ms();
        let sessions: Vec<_> = lock(&self.sessions).values().cloned().collect();
        sessions
            .iter()
            .map(|s| {
                let s = lock(s);
                DeviceSummary {
                    device_id: s.device_id().to_string(),
                    state: s.state(now, self.config.staleness_ms),
                    samples: s.store().len(),
                    dropped: s.dropped(),
                }
            })
            .collect()
    }

    pub fn current_temperature(&self, device_id: &str) -> Result<Option<Reading>, HubError> {
        let now = self.now_ms();
        self.with_session(device_id, |s| {
            let stale = s.state(now, self.config.staleness_ms) != ConnectionState::Connected;
            s.current_temperature()
                .map(|(temp_f, t_ms)| Reading { temp_f, t_ms, stale })
        })
    }

    pub fn set_target(&self, device_id: &str, temp_f: f64) -> Result<TargetStatus, HubError> {
        let delivery = self.with_session(device_id, |s| s.set_target(temp_f))??;
        if delivery == Delivery::Forward {
            let sent = lock(&self.links)
                .get(device_id)
                .map(|l| l.commands.send(DeviceCommand::SetTarget(temp_f)).is_ok())
                .unwrap_or(false);
            if !sent {
                // The connection went away between the session check and now.
                self.with_session(device_id, |s| {
                    s.set_connected(false, self.now_ms());
                    s.set_target(temp_f)
                })??;
            }
        }
        self.target(device_id)
    }

    pub fn target(&self, device_id: &str) -> Result<TargetStatus, HubError> {
        self.with_session(device_id, |s| TargetStatus {
            target_f: s.target_f(),
            pending: s.target_pending(),
        })
    }

    pub fn prediction(&self, device_id: &str) -> Result<Prediction, HubError> {
        self.with_session(device_id, |s| s.prediction())
    }

    pub fn arm_alarm(&self, device_id: &str, mode: AlarmMode) -> Result<f64, HubError> {
        Ok(self.with_session(device_id, |s| s.arm_alarm(mode))??)
    }

    pub fn history(&self, device_id: &str, since_ms: u64) -> Result<Vec<TemperatureSample>, HubError> {
        self.with_session(device_id, |s| s.history(since_ms))
    }

    /// Sends an arbitrary command to a connected device.
    pub fn send_command(&self, device_id: &str, cmd: DeviceCommand) -> bool {
        lock(&self.links)
            .get(device_id)
            .is_some_and(|l| l.commands.send(cmd).is_ok())
    }
}
