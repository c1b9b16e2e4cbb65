//! Assistant gateway: utterance in, spoken reply out.
//!
//! The gateway only talks to the control plane over its public HTTP API,
//! the same way a hosted skill handler would. Every request produces
//! speech, including bad tokens, unmatched utterances and outages.

use std::sync::Arc;
use std::time::Duration;

use reqwest::{StatusCode, Url};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use smartcook_core::intent::{InteractionModel, IntentMatch};
use thiserror::Error;

use crate::speech::{self, ResponseTemplates, MINUTES, TEMPERATURE};

const REQUEST_TIMEOUT: Duration = Duration::from_secs(5);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeechRequest {
    pub text: String,
    #[serde(default)]
    pub token: String,
    #[serde(default)]
    pub session_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeechResponse {
    pub speech: String,
    pub intent: String,
    pub end_session: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub session_id: String,
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("intent {0} has no reply template")]
    MissingTemplate(String),
    #[error("invalid control plane url {0:?}")]
    BadUrl(String),
    #[error(transparent)]
    Client(#[from] reqwest::Error),
}

/// Why a control-plane call produced no usable answer.
#[derive(Debug)]
enum CallError {
    Transport,
    Unauthorized,
    UnknownDevice,
    Internal(String),
}

impl From<reqwest::Error> for CallError {
    fn from(e: reqwest::Error) -> Self {
        if e.is_connect() || e.is_timeout() || e.is_request() {
            CallError::Transport
        } else {
            CallError::Internal(e.to_string())
        }
    }
}

pub struct Gateway {
    model: Arc<InteractionModel>,
    templates: ResponseTemplates,
    http: reqwest::Client,
    base: Url,
}

impl Gateway {
    pub fn new(model: Arc<InteractionModel>, control_plane: &str) -> Result<Self, GatewayError> {
        let templates = ResponseTemplates::default();
        for name in model.intent_names() {
            if !templates.contains(name) {
                return Err(GatewayError::MissingTemplate(name.to_string()));
            }
        }
        let base = Url::parse(control_plane)
            .ok()
            .filter(|u| !u.cannot_be_a_base())
            .ok_or_else(|| GatewayError::BadUrl(control_plane.to_string()))?;
        let http = reqwest::Client::builder().timeout(REQUEST_TIMEOUT).build()?;
        Ok(Gateway {
            model,
            templates,
            http,
            base,
        })
    }

    pub fn model(&self) -> &InteractionModel {
        &self.model
    }

    pub async fn handle(&self, req: &SpeechRequest) -> SpeechResponse {
        let respond = |speech: String, intent: &str| SpeechResponse {
            speech,
            intent: intent.to_string(),
            end_session: false,
            session_id: req.session_id.clone(),
        };
        let Some(hit) = self.model.match_utterance(&req.text) else {
            return respond(speech::HELP.to_string(), "none");
        };
        let speech = match self.dispatch(&hit, &req.token).await {
            Ok(s) => s,
            Err(CallError::Transport) => speech::INTERNET_ERROR.to_string(),
            Err(CallError::Unauthorized) => speech::UNAUTHORIZED.to_string(),
            Err(CallError::UnknownDevice) => speech::UNKNOWN_DEVICE.to_string(),
            Err(CallError::Internal(why)) => {
                tracing::warn!(intent = %hit.intent_name, "internal error: {why}");
                speech::INTERNAL_ERROR.to_string()
            }
        };
        respond(speech, &hit.intent_name)
    }

    async fn dispatch(&self, hit: &IntentMatch, token: &str) -> Result<String, CallError> {
        let device = self.resolve(token).await?;
        match hit.intent_name.as_str() {
            speech::CURRENT_TEMP => self.current_temperature(&device).await,
            speech::SET_TARGET_TEMP => match first_number(hit) {
                Some(n) => self.set_target(&device, n).await,
                None => Ok(speech::NO_TEMPERATURE_HEARD.to_string()),
            },
            speech::COOK_TIME => self.cook_time(&device).await,
            speech::SET_TARGET_ALARM => self.set_alarm(&device, first_number(hit)).await,
            other => Err(CallError::Internal(format!("no handler for {other}"))),
        }
    }

    fn url(&self, segments: &[&str]) -> Url {
        let mut url = self.base.clone();
        url.path_segments_mut()
            .expect("base url checked at construction")
            .pop_if_empty()
            .extend(segments);
        url
    }

    fn render(&self, key: &str, values: &[(&'static str, i64)]) -> Result<String, CallError> {
        self.templates
            .render(key, values)
            .map_err(|e| CallError::Internal(e.to_string()))
    }

    async fn resolve(&self, token: &str) -> Result<String, CallError> {
        let mut url = self.url(&["api", "whoami"]);
        url.query_pairs_mut().append_pair("token", token);
        let resp = self.http.get(url).send().await?;
        match resp.status() {
            StatusCode::OK => {
                let body: Value = resp.json().await?;
                body["device_id"]
                    .as_str()
                    .map(str::to_string)
                    .ok_or_else(|| CallError::Internal("whoami without device_id".into()))
            }
            StatusCode::UNAUTHORIZED => Err(CallError::Unauthorized),
            s => Err(CallError::Internal(format!("whoami returned {s}"))),
        }
    }

    async fn current_temperature(&self, device: &str) -> Result<String, CallError> {
        let resp = self
            .http
            .get(self.url(&["api", "devices", device, "temperature"]))
            .send()
            .await?;
        match resp.status() {
            StatusCode::OK => {
                let body: Value = resp.json().await?;
                let temp = body["temp_f"]
                    .as_f64()
                    .ok_or_else(|| CallError::Internal("reading without temp_f".into()))?;
                let mut speech =
                    self.render(speech::CURRENT_TEMP, &[(TEMPERATURE, speech::spoken_degrees(temp))])?;
                if body["stale"].as_bool() == Some(true) {
                    speech.push_str(speech::STALE_SUFFIX);
                }
                Ok(speech)
            }
            StatusCode::NO_CONTENT => Ok(speech::NO_READING.to_string()),
            StatusCode::NOT_FOUND => Err(CallError::UnknownDevice),
            s => Err(CallError::Internal(format!("temperature returned {s}"))),
        }
    }

    async fn set_target(&self, device: &str, temp: u32) -> Result<String, CallError> {
        let resp = self
            .http
            .post(self.url(&["api", "devices", device, "target"]))
            .json(&json!({ "temp_f": temp }))
            .send()
            .await?;
        match resp.status() {
            StatusCode::OK => {
                let body: Value = resp.json().await?;
                let target = body["target_f"]
                    .as_f64()
                    .ok_or_else(|| CallError::Internal("target without target_f".into()))?;
                self.render(
                    speech::SET_TARGET_TEMP,
                    &[(TEMPERATURE, speech::spoken_degrees(target))],
                )
            }
            StatusCode::UNPROCESSABLE_ENTITY => Ok(speech::out_of_range(temp)),
            StatusCode::NOT_FOUND => Err(CallError::UnknownDevice),
            s => Err(CallError::Internal(format!("target returned {s}"))),
        }
    }

    async fn cook_time(&self, device: &str) -> Result<String, CallError> {
        let resp = self
            .http
            .get(self.url(&["api", "devices", device, "prediction"]))
            .send()
            .await?;
        match resp.status() {
            StatusCode::OK => {
                let body: Value = resp.json().await?;
                match body["kind"].as_str() {
                    Some("eta") => {
                        let minutes = body["minutes"]
                            .as_i64()
                            .ok_or_else(|| CallError::Internal("eta without minutes".into()))?;
                        self.render(speech::COOK_TIME, &[(MINUTES, minutes)])
                    }
                    Some("at_target") => Ok(speech::AT_TARGET.to_string()),
                    Some("indeterminate") => Ok(speech::INDETERMINATE.to_string()),
                    other => Err(CallError::Internal(format!("unknown prediction {other:?}"))),
                }
            }
            StatusCode::NOT_FOUND => Err(CallError::UnknownDevice),
            s => Err(CallError::Internal(format!("prediction returned {s}"))),
        }
    }

    async fn set_alarm(&self, device: &str, temp: Option<u32>) -> Result<String, CallError> {
        let body = match temp {
            Some(t) => json!({ "mode": "at_temp", "temp_f": t }),
            None => json!({ "mode": "at_target" }),
        };
        let resp = self
            .http
            .post(self.url(&["api", "devices", device, "alarm"]))
            .json(&body)
            .send()
            .await?;
        match resp.status() {
            StatusCode::OK => match temp {
                Some(t) => self.render(speech::SET_TARGET_ALARM, &[(TEMPERATURE, t as i64)]),
                None => self.render(speech::SET_TARGET_ALARM_AT_TARGET, &[]),
            },
            StatusCode::CONFLICT => Ok(speech::NO_TARGET.to_string()),
            StatusCode::UNPROCESSABLE_ENTITY => Ok(speech::out_of_range(temp.unwrap_or_default())),
            StatusCode::NOT_FOUND => Err(CallError::UnknownDevice),
            s => Err(CallError::Internal(format!("alarm returned {s}"))),
        }
    }
}

/// The first numeric slot value, in slot-name order.
fn first_number(hit: &IntentMatch) -> Option<u32> {
    hit.slots.values().find_map(|v| v.as_number())
}
