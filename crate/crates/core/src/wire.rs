//! Newline-delimited JSON telemetry protocol between probe and control plane.
//!
//! Device → control plane: a `{"hello":"<device_id>"}` record, then one
//! sample per line with exactly the keys `device_id`, `seq`, `t_ms` and
//! `temp_f` (one decimal place). Control plane → device: one command per
//! line, e.g. `{"cmd":"set_target","temp_f":135.0}`. Unknown keys are
//! ignored; an unknown `cmd` is answered with `{"err":"unknown_cmd"}`.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::predictor::TemperatureSample;
use crate::thermal::{round_tenth, DeviceCommand};

pub const UNKNOWN_CMD: &str = "unknown_cmd";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("malformed line: {0}")]
    Malformed(String),
    #[error("unknown command {0:?}")]
    UnknownCommand(String),
}

#[derive(Serialize)]
struct SampleLine<'a> {
    device_id: &'a str,
    seq: u64,
    t_ms: u64,
    temp_f: f64,
}

/// Encodes a sample without the trailing newline.
pub fn encode_sample(sample: &TemperatureSample) -> String {
    serde_json::to_string(&SampleLine {
        device_id: &sample.device_id,
        seq: sample.seq,
        t_ms: sample.t_ms,
        temp_f: round_tenth(sample.temp_f),
    })
    .expect("sample serializes")
}

pub fn encode_hello(device_id: &str) -> String {
    serde_json::json!({ "hello": device_id }).to_string()
}

pub fn encode_error(code: &str) -> String {
    serde_json::json!({ "err": code }).to_string()
}

/// A line received by the control plane from a device.
#[derive(Debug, Clone, PartialEq)]
pub enum DeviceLine {
    Hello(String),
    Sample(TemperatureSample),
    Error(String),
}

pub fn parse_device_line(line: &str) -> Result<DeviceLine, WireError> {
    let malformed = || WireError::Malformed(truncate(line));
    let value: Value = serde_json::from_str(line.trim()).map_err(|_| malformed())?;
    let obj = value.as_object().ok_or_else(malformed)?;
    if let Some(id) = obj.get("hello") {
        return id
            .as_str()
            .filter(|s| !s.is_empty())
            .map(|s| DeviceLine::Hello(s.to_string()))
            .ok_or_else(malformed);
    }
    if let Some(code) = obj.get("err") {
        return Ok(DeviceLine::Error(code.as_str().unwrap_or_default().to_string()));
    }
    let device_id = obj.get("device_id").and_then(Value::as_str);
    let seq = obj.get("seq").and_then(Value::as_u64);
    let t_ms = obj.get("t_ms").and_then(Value::as_u64);
    let temp_f = obj
        .get("temp_f")
        .and_then(Value::as_f64)
        .filter(|t| t.is_finite());
    match (device_id, seq, t_ms, temp_f) {
        (Some(device_id), Some(seq), Some(t_ms), Some(temp_f)) => {
            Ok(DeviceLine::Sample(TemperatureSample {
                device_id: device_id.to_string(),
                seq,
                t_ms,
                temp_f,
            }))
        }
        _ => Err(malformed()),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "cmd", rename_all = "snake_case")]
enum CommandLine {
    SetTarget { temp_f: f64 },
    ArmAlarm,
    Disarm,
    TargetUp,
    TargetDown,
    StartTimer,
}

pub fn encode_command(cmd: DeviceCommand) -> String {
    let line = match cmd {
        DeviceCommand::SetTarget(temp_f) => CommandLine::SetTarget { temp_f },
        DeviceCommand::ArmAlarm => CommandLine::ArmAlarm,
        DeviceCommand::Disarm => CommandLine::Disarm,
        DeviceCommand::TargetUp => CommandLine::TargetUp,
        DeviceCommand::TargetDown => CommandLine::TargetDown,
        DeviceCommand::StartTimer => CommandLine::StartTimer,
    };
    serde_json::to_string(&line).expect("command serializes")
}

pub fn parse_command(line: &str) -> Result<DeviceCommand, WireError> {
    let value: Value =
        serde_json::from_str(line.trim()).map_err(|_| WireError::Malformed(truncate(line)))?;
    let name = value
        .get("cmd")
        .and_then(Value::as_str)
        .ok_or_else(|| WireError::Malformed(truncate(line)))?
        .to_string();
    let known = [
        "set_target",
        "arm_alarm",
        "disarm",
        "target_up",
        "target_down",
        "start_timer",
    ];
    if !known.contains(&name.as_str()) {
        return Err(WireError::UnknownCommand(name));
    }
    let parsed: CommandLine =
        serde_json::from_value(value).map_err(|_| WireError::Malformed(truncate(line)))?;
    Ok(match parsed {
        CommandLine::SetTarget { temp_f } => DeviceCommand::SetTarget(temp_f),
        CommandLine::ArmAlarm => DeviceCommand::ArmAlarm,
        CommandLine::Disarm => DeviceCommand::Disarm,
        CommandLine::TargetUp => DeviceCommand::TargetUp,
        CommandLine::TargetDown => DeviceCommand::TargetDown,
        CommandLine::StartTimer => DeviceCommand::StartTimer,
    })
}

fn truncate(line: &str) -> String {
    line.chars().take(80).collect()
}
