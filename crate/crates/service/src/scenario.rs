//! Scripted end-to-end runs in simulated time.
//!
//! A scenario starts an in-process control plane, connects a simulated
//! probe over TCP, and interleaves scripted utterances and checks with the
//! probe's samples. The clock only moves when the script says so, so a
//! run is reproducible bit for bit.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::mpsc as std_mpsc;
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use smartcook_core::predictor::TemperatureSample;
use smartcook_core::thermal::{self, DeviceCommand, Simulator, TelemetrySink, ThermalParams};
use smartcook_core::wire;
use thiserror::Error;
use tokio::sync::{broadcast, mpsc};

use crate::clock::ManualClock;
use crate::config::ServiceConfig;
use crate::device::TcpSink;
use crate::gateway::{SpeechRequest, SpeechResponse};
use crate::hub::HubEvent;
use crate::server::{ServeError, Server};
use crate::session::AlarmEvent;

const EVENT_TIMEOUT: Duration = Duration::from_secs(10);
const FLOAT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub device_id: String,
    pub token: String,
    pub cadence_s: f64,
    pub duration_s: f64,
    /// Defaults to twice the cadence so readings between samples count
    /// as fresh.
    #[serde(default)]
    pub staleness_timeout_s: Option<f64>,
    pub thermal: ThermalParams,
    #[serde(default, rename = "step")]
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Step {
    pub at_s: f64,
    pub say: Option<String>,
    /// Overrides the scenario token for this utterance.
    pub token: Option<String>,
    pub expect_speech: Option<String>,
    pub expect_intent: Option<String>,
    /// A device command name such as `target_up`, sent through the hub.
    pub command: Option<String>,
    pub expect_temperature: Option<f64>,
    /// `eta`, `indeterminate` or `at_target`.
    pub expect_prediction: Option<String>,
    pub expect_minutes: Option<u64>,
    pub expect_target: Option<f64>,
    pub expect_alarms: Option<usize>,
    pub expect_samples: Option<usize>,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario file: {0}")]
    Parse(String),
    #[error("scenario {field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error(transparent)]
    Serve(#[from] ServeError),
    #[error("http: {0}")]
    Http(#[from] reqwest::Error),
    #[error("device: {0}")]
    Device(String),
    #[error("timed out waiting for {0}")]
    Timeout(String),
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScenarioError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let invalid = |field: &str, reason: &str| {
            Err(ScenarioError::Invalid {
                field: field.to_string(),
                reason: reason.to_string(),
            })
        };
        if self.device_id.is_empty() || self.token.is_empty() {
            return invalid("device_id", "device id and token must be non-empty");
        }
        if !(self.cadence_s > 0.0 && self.cadence_s.is_finite()) {
            return invalid("cadence_s", "must be positive");
        }
        if !(self.duration_s >= 0.0 && self.duration_s.is_finite()) {
            return invalid("duration_s", "must be non-negative");
        }
        if let Some(s) = self.staleness_timeout_s {
            if !(s > 0.0 && s.is_finite()) {
                return invalid("staleness_timeout_s", "must be positive");
            }
        }
        self.thermal
            .validate()
            .or_else(|e| invalid("thermal", &e.to_string()))?;
        let mut prev = 0.0;
        for (i, step) in self.steps.iter().enumerate() {
            if !(step.at_s >= prev && step.at_s.is_finite()) {
                return invalid(&format!("step[{i}].at_s"), "steps must be in time order");
            }
            prev = step.at_s;
            if step.expect_speech.is_some() && step.say.is_none() {
                return invalid(&format!("step[{i}]"), "expect_speech needs say");
            }
            if let Some(kind) = &step.expect_prediction {
                if !["eta", "indeterminate", "at_target"].contains(&kind.as_str()) {
                    return invalid(&format!("step[{i}].expect_prediction"), "unknown kind");
                }
            }
            if let Some(cmd) = &step.command {
                parse_command_name(cmd)
                    .map_err(|reason| ScenarioError::Invalid {
                        field: format!("step[{i}].command"),
                        reason,
                    })?;
            }
        }
        Ok(())
    }

    fn service_config(&self) -> ServiceConfig {
        ServiceConfig {
            http_addr: ([127, 0, 0, 1], 0).into(),
            telemetry_addr: ([127, 0, 0, 1], 0).into(),
            staleness_timeout_s: self.staleness_timeout_s.unwrap_or(2.0 * self.cadence_s),
            tokens: BTreeMap::from([(self.token.clone(), self.device_id.clone())]),
            ..ServiceConfig::default()
        }
    }
}

fn parse_command_name(name: &str) -> Result<DeviceCommand, String> {
    wire::parse_command(&serde_json::json!({ "cmd": name }).to_string())
        .map_err(|e| e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub at_s: f64,
    pub what: String,
    pub expected: String,
    pub actual: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exchange {
    pub at_s: f64,
    pub said: String,
    pub reply: SpeechResponse,
}

/// A prediction as served by the API when a step checked it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionTrace {
    pub at_s: f64,
    pub body: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub name: String,
    pub checks: Vec<Check>,
    pub exchanges: Vec<Exchange>,
    pub predictions: Vec<PredictionTrace>,
    pub samples: Vec<TemperatureSample>,
    pub alarms: Vec<AlarmEvent>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

enum GateMsg {
    Pending(u64),
    Finished(Result<(), String>),
}

/// Holds each sample until the driver lets it through.
struct Gate {
    inner: TcpSink,
    pending: mpsc::UnboundedSender<GateMsg>,
    go: std_mpsc::Receiver<()>,
}

impl TelemetrySink for Gate {
    type Error = std::io::Error;

    fn emit(&mut self, sample: &TemperatureSample) -> std::io::Result<()> {
        let stopped = || std::io::Error::other("scenario driver stopped");
        self.pending
            .send(GateMsg::Pending(sample.t_ms))
            .map_err(|_| stopped())?;
        self.go.recv().map_err(|_| stopped())?;
        self.inner.emit(sample)
    }

    fn poll_commands(&mut self) -> Vec<DeviceCommand> {
        self.inner.poll_commands()
    }
}

fn spawn_device(
    scenario: &Scenario,
    addr: SocketAddr,
    pending: mpsc::UnboundedSender<GateMsg>,
    go: std_mpsc::Receiver<()>,
) -> Result<thread::JoinHandle<()>, ScenarioError> {
    let mut sim = Simulator::new(scenario.device_id.clone(), scenario.thermal, 0)
        .map_err(|e| ScenarioError::Device(e.to_string()))?;
    let sink = TcpSink::connect(addr, &scenario.device_id)
        .map_err(|e| ScenarioError::Device(e.to_string()))?;
    let (cadence, duration) = (scenario.cadence_s, scenario.duration_s);
    Ok(thread::spawn(move || {
        let mut gate = Gate {
            inner: sink,
            pending: pending.clone(),
            go,
        };
        let result = thermal::run(&mut sim, cadence, duration, &mut gate)
            .map(|_| ())
            .map_err(|e| e.to_string());
        gate.inner.close();
        let _ = pending.send(GateMsg::Finished(result));
    }))
}

struct Driver {
    scenario: Scenario,
    server: Server,
    clock: Arc<ManualClock>,
    http: reqwest::Client,
    events: broadcast::Receiver<HubEvent>,
    report: Report,
}

pub async fn run(scenario: &Scenario) -> Result<Report, ScenarioError> {
    scenario.validate()?;
    let clock = Arc::new(ManualClock::new(0));
    let server = Server::start(&scenario.service_config(), clock.clone()).await?;
    let events = server.hub().subscribe();
    let mut driver = Driver {
        scenario: scenario.clone(),
        http: reqwest::Client::new(),
        events,
        clock,
        report: Report {
            name: scenario.name.clone(),
            checks: Vec::new(),
            exchanges: Vec::new(),
            predictions: Vec::new(),
            samples: Vec::new(),
            alarms: Vec::new(),
        },
        server,
    };
    let result = driver.drive().await;
    let Driver { server, report, .. } = driver;
    let _ = server.shutdown().await;
    result.map(|()| report)
}

impl Driver {
    async fn drive(&mut self) -> Result<(), ScenarioError> {
        let (pending_tx, mut pending) = mpsc::unbounded_channel();
        let (go, go_rx) = std_mpsc::channel();
        let device = spawn_device(
            &self.scenario,
            self.server.telemetry_addr(),
            pending_tx,
            go_rx,
        )?;
        let device_id = self.scenario.device_id.clone();
        self.wait_for("device connection", |ev| {
            matches!(ev, HubEvent::Connected { device_id: d } if *d == device_id)
        })
        .await?;

        let steps = self.scenario.steps.clone();
        let mut next = 0;
        let outcome = loop {
            let msg = tokio::time::timeout(EVENT_TIMEOUT, pending.recv())
                .await
                .map_err(|_| ScenarioError::Timeout("next sample".into()))?;
            match msg {
                Some(GateMsg::Pending(t_ms)) => {
                    while next < steps.len() && to_ms(steps[next].at_s) < t_ms {
                        self.run_step(&steps[next]).await?;
                        next += 1;
                    }
                    self.clock.set(t_ms);
                    let _ = go.send(());
                    self.wait_for("sample ingest", |ev| {
                        matches!(ev, HubEvent::Sample(s) if s.t_ms == t_ms)
                    })
                    .await?;
                }
                Some(GateMsg::Finished(r)) => break r,
                None => break Err("device thread vanished".to_string()),
            }
        };
        let _ = device.join();
        outcome.map_err(ScenarioError::Device)?;
        for step in &steps[next..] {
            self.run_step(step).await?;
        }
        Ok(())
    }

    /// Consumes hub events, recording samples and alarms, until one
    /// matches.
    async fn wait_for(
        &mut self,
        what: &str,
        done: impl Fn(&HubEvent) -> bool,
    ) -> Result<(), ScenarioError> {
        let wait = async {
            loop {
                match self.events.recv().await {
                    Ok(ev) => {
                        self.record(&ev);
                        if done(&ev) {
                            return Ok(());
                        }
                    }
                    Err(broadcast::error::RecvError::Lagged(_)) => {
                        return Err(ScenarioError::Device("event stream lagged".into()))
                    }
                    Err(broadcast::error::RecvError::Closed) => {
                        return Err(ScenarioError::Device("event stream closed".into()))
                    }
                }
            }
        };
        tokio::time::timeout(EVENT_TIMEOUT, wait)
            .await
            .map_err(|_| ScenarioError::Timeout(what.to_string()))?
    }

    fn drain_events(&mut self) {
        while let Ok(ev) = self.events.try_recv() {
            self.record(&ev);
        }
    }

    fn record(&mut self, ev: &HubEvent) {
        match ev {
            HubEvent::Sample(s) if s.device_id == self.scenario.device_id => {
                self.report.samples.push(s.clone())
            }
            HubEvent::Alarm(a) if a.device_id == self.scenario.device_id => {
                self.report.alarms.push(a.clone())
            }
            _ => {}
        }
    }

    fn check(&mut self, at_s: f64, what: &str, expected: String, actual: String, passed: bool) {
        self.report.checks.push(Check {
            at_s,
            what: what.to_string(),
            expected,
            actual,
            passed,
        });
    }

    fn url(&self, tail: &str) -> String {
        format!("{}/api/devices/{}/{tail}", self.server.base_url(), self.scenario.device_id)
    }

    async fn get_json(&self, tail: &str) -> Result<Option<Value>, ScenarioError> {
        let resp = self.http.get(self.url(tail)).send().await?;
        if resp.status() == reqwest::StatusCode::NO_CONTENT {
            return Ok(None);
        }
        Ok(Some(resp.error_for_status()?.json().await?))
    }

    async fn run_step(&mut self, step: &Step) -> Result<(), ScenarioError> {
        let at = step.at_s;
        self.clock.set(to_ms(at));
        self.drain_events();

        if let Some(name) = &step.command {
            let cmd = parse_command_name(name).map_err(ScenarioError::Device)?;
            let sent = self.server.hub().send_command(&self.scenario.device_id, cmd);
            self.check(at, "command delivered", name.clone(), sent.to_string(), sent);
        }

        if let Some(text) = &step.say {
            let req = SpeechRequest {
                text: text.clone(),
                token: step.token.clone().unwrap_or_else(|| self.scenario.token.clone()),
                session_id: format!("{}-{}", self.scenario.name, to_ms(at)),
            };
            let reply: SpeechResponse = self
                .http
                .post(format!("{}/api/assistant/utterance", self.server.base_url()))
                .json(&req)
                .send()
                .await?
                .error_for_status()?
                .json()
                .await?;
            if let Some(want) = &step.expect_speech {
                let ok = reply.speech == *want;
                self.check(at, "speech", want.clone(), reply.speech.clone(), ok);
            }
            if let Some(want) = &step.expect_intent {
                let ok = reply.intent == *want;
                self.check(at, "intent", want.clone(), reply.intent.clone(), ok);
            }
            self.report.exchanges.push(Exchange {
                at_s: at,
                said: text.clone(),
                reply,
            });
        }

        if let Some(want) = step.expect_temperature {
            let got = self.get_json("temperature").await?;
            let actual = got.as_ref().and_then(|v| v["temp_f"].as_f64());
            let ok = actual.is_some_and(|t| (t - want).abs() < FLOAT_TOLERANCE);
            self.check(at, "temperature", want.to_string(), fmt_opt(actual), ok);
        }

        if step.expect_prediction.is_some() || step.expect_minutes.is_some() {
            let got = self.get_json("prediction").await?.unwrap_or_default();
            let kind = got["kind"].as_str().unwrap_or("").to_string();
            if let Some(want) = &step.expect_prediction {
                let ok = kind == *want;
                self.check(at, "prediction", want.clone(), kind.clone(), ok);
            }
            if let Some(want) = step.expect_minutes {
                let actual = got["minutes"].as_u64();
                self.check(at, "minutes", want.to_string(), fmt_opt(actual), actual == Some(want));
            }
            self.report.predictions.push(PredictionTrace { at_s: at, body: got });
        }

        if let Some(want) = step.expect_target {
            let got = self.get_json("target").await?.unwrap_or_default();
            let actual = got["target_f"].as_f64();
            let ok = actual.is_some_and(|t| (t - want).abs() < FLOAT_TOLERANCE);
            self.check(at, "target", want.to_string(), fmt_opt(actual), ok);
        }

        if let Some(want) = step.expect_alarms {
            let n = self.report.alarms.len();
            self.check(at, "alarms fired", want.to_string(), n.to_string(), n == want);
        }

        if let Some(want) = step.expect_samples {
            let n = self.report.samples.len();
            self.check(at, "samples received", want.to_string(), n.to_string(), n == want);
        }
        Ok(())
    }
}

fn to_ms(seconds: f64) -> u64 {
    (seconds * 1000.0).round() as u64
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "none".to_string(), |v| v.to_string())
}
