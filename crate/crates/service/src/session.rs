//! Per-device control-plane state.
//!
//! A session owns the device's retained telemetry, the prediction window,
//! the cook's target and the alarm. It has a single writer (the device's
//! ingest path plus API commands, serialized by the hub's lock) and no I/O.

use serde::{Deserialize, Serialize};
use smartcook_core::predictor::{
    Prediction, PredictorConfig, PushError, SampleWindow, TemperatureSample,
};
use smartcook_core::{settable, MAX_SETTABLE_F, MIN_SETTABLE_F};
use thiserror::Error;

use crate::store::TelemetryStore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConnectionState {
    Connected,
    Stale,
    Disconnected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum AlarmMode {
    /// Follows the session target, including later changes to it.
    AtTarget,
    AtTemp { temp_f: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alarm {
    pub mode: AlarmMode,
    pub armed: bool,
    pub fired: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlarmEvent {
    pub device_id: String,
    pub threshold_f: f64,
    pub temp_f: f64,
    pub seq: u64,
    pub t_ms: u64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error(transparent)]
    Order(#[from] PushError),
    #[error("sample for {got} arrived on the connection of {expected}")]
    WrongDevice { expected: String, got: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SessionError {
    #[error("{0} °F is outside {MIN_SETTABLE_F}..={MAX_SETTABLE_F} °F")]
    OutOfRange(f64),
    #[error("no target set")]
    NoTarget,
}

/// Whether a new target could be pushed to the device right away.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delivery {
    Forward,
    Deferred,
}

#[derive(Debug, Clone)]
pub struct DeviceSession {
    device_id: String,
    store: TelemetryStore,
    window: SampleWindow,
    target_f: Option<f64>,
    target_pending: bool,
    alarm: Option<Alarm>,
    connected: bool,
    last_arrival_ms: Option<u64>,
    dropped: u64,
}

impl DeviceSession {
    pub fn new(device_id: impl Into<String>, ring_capacity: usize, predictor: PredictorConfig) -> Self {
        DeviceSession {
            device_id: device_id.into(),
            store: TelemetryStore::new(ring_capacity),
            window: SampleWindow::new(predictor),
            target_f: None,
            target_pending: false,
            alarm: None,
            connected: false,
            last_arrival_ms: None,
            dropped: 0,
        }
    }

    pub fn device_id(&self) -> &str {
        &self.device_id
    }

    pub fn store(&self) -> &TelemetryStore {
        &self.store
    }

    pub fn window(&self) -> &SampleWindow {
        &self.window
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    pub fn target_f(&self) -> Option<f64> {
        self.target_f
    }

    pub fn target_pending(&self) -> bool {
        self.target_pending
    }

    pub fn alarm(&self) -> Option<Alarm> {
        self.alarm
    }

    pub fn set_connected(&mut self, connected: bool, now_ms: u64) {
        self.connected = connected;
        if connected {
            self.last_arrival_ms = Some(now_ms);
        }
    }

    /// Takes the deferred target, if any, for delivery on a fresh connection.
    pub fn take_pending_target(&mut self) -> Option<f64> {
        if self.target_pending {
            self.target_pending = false;
            self.target_f
        } else {
            None
        }
    }

    pub fn state(&self, now_ms: u64, staleness_ms: u64) -> ConnectionState {
        if !self.connected {
            return ConnectionState::Disconnected;
        }
        match self.last_arrival_ms {
            Some(t) if now_ms.saturating_sub(t) > staleness_ms => ConnectionState::Stale,
            _ => ConnectionState::Connected,
        }
    }

    /// Accepts a sample in stream order and evaluates the alarm. Rejected
    /// samples leave everything but the drop counter untouched.
    pub fn ingest(
        &mut self,
        sample: TemperatureSample,
        now_ms: u64,
    ) -> Result<Option<AlarmEvent>, IngestError> {
        if sample.device_id != self.device_id {
            self.dropped += 1;
            return Err(IngestError::WrongDevice {
                expected: self.device_id.clone(),
                got: sample.device_id,
            });
        }
        if let Err(e) = self.window.push(sample.clone()) {
            self.dropped += 1;
            return Err(e.into());
        }
        self.last_arrival_ms = Some(now_ms);
        let event = self.evaluate_alarm(&sample);
        self.store.push(sample);
        Ok(event)
    }

    pub fn note_malformed(&mut self) {
        self.dropped += 1;
    }

    fn threshold(&self, mode: AlarmMode) -> Option<f64> {
        match mode {
            AlarmMode::AtTarget => self.target_f,
            AlarmMode::AtTemp { temp_f } => Some(temp_f),
        }
    }

    fn evaluate_alarm(&mut self, sample: &TemperatureSample) -> Option<AlarmEvent> {
        let alarm = self.alarm?;
        if !alarm.armed || alarm.fired {
            return None;
        }
        let threshold = self.threshold(alarm.mode)?;
        if sample.temp_f < threshold {
            return None;
        }
        self.alarm = Some(Alarm {
            fired: true,
            ..alarm
        });
        Some(AlarmEvent {
            device_id: self.device_id.clone(),
            threshold_f: threshold,
            temp_f: sample.temp_f,
            seq: sample.seq,
            t_ms: sample.t_ms,
        })
    }

    pub fn current_temperature(&self) -> Option<(f64, u64)> {
        self.store.latest().map(|s| (s.temp_f, s.t_ms))
    }

    pub fn set_target(&mut self, temp_f: f64) -> Result<Delivery, SessionError> {
        if !settable(temp_f) {
            return Err(SessionError::OutOfRange(temp_f));
        }
        self.target_f = Some(temp_f);
        if self.connected {
            self.target_pending = false;
            Ok(Delivery::Forward)
        } else {
            self.target_pending = true;
            Ok(Delivery::Deferred)
        }
    }

    pub fn prediction(&self) -> Prediction {
        match self.target_f {
            Some(target) => self.window.predict(target),
            None => Prediction::Indeterminate,
        }
    }

    /// Arms (or re-arms) the alarm and returns its current threshold.
    pub fn arm_alarm(&mut self, mode: AlarmMode) -> Result<f64, SessionError> {
        let threshold = match mode {
            AlarmMode::AtTarget => self.target_f.ok_or(SessionError::NoTarget)?,
            AlarmMode::AtTemp { temp_f } if !settable(temp_f) => {
                return Err(SessionError::OutOfRange(temp_f))
            }
            AlarmMode::AtTemp { temp_f } => temp_f,
        };
        self.alarm = Some(Alarm {
            mode,
            armed: true,
            fired: false,
        });
        Ok(threshold)
    }

    pub fn alarm_threshold(&self) -> Option<f64> {
        self.alarm.and_then(|a| self.threshold(a.mode))
    }

    pub fn history(&self, since_ms: u64) -> Vec<TemperatureSample> {
        self.store.since(since_ms)
    }
}
