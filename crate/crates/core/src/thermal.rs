//! Simulated probe thermometer.
//!
//! The food heats toward the heat-source temperature following Newton's law
//! of heating, `T(t+dt) = env + (T(t) − env)·e^(−k·dt)`. Readings may carry
//! seeded Gaussian noise; the underlying physics stays noise-free so the
//! noise does not random-walk.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::predictor::TemperatureSample;
use crate::{settable, MAX_SETTABLE_F, MIN_SETTABLE_F};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("heating coefficient must be positive, got {0}")]
    NonPositiveK(f64),
    #[error("noise sigma must be non-negative, got {0}")]
    NegativeNoise(f64),
    #[error("temperatures must be finite")]
    NonFinite,
    #[error("time step must be positive, got {0} s")]
    NonPositiveStep(f64),
    #[error("target {0} °F is outside {MIN_SETTABLE_F}..={MAX_SETTABLE_F} °F")]
    TargetOutOfRange(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalParams {
    pub t0_f: f64,
    pub env_f: f64,
    pub k_per_s: f64,
    #[serde(default)]
    pub noise_sigma_f: f64,
    #[serde(default)]
    pub seed: u64,
}

impl ThermalParams {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.t0_f.is_finite() && self.env_f.is_finite()) {
            return Err(SimError::NonFinite);
        }
        if !(self.k_per_s > 0.0 && self.k_per_s.is_finite()) {
            return Err(SimError::NonPositiveK(self.k_per_s));
        }
        if !(self.noise_sigma_f >= 0.0 && self.noise_sigma_f.is_finite()) {
            return Err(SimError::NegativeNoise(self.noise_sigma_f));
        }
        Ok(())
    }

    /// Noise-free temperature `t_s` seconds after the start.
    pub fn temperature_at(&self, t_s: f64) -> f64 {
        newtonian(self.t0_f, self.env_f, self.k_per_s, t_s)
    }
}

/// One Newtonian heating step.
pub fn newtonian(temp_f: f64, env_f: f64, k_per_s: f64, dt_s: f64) -> f64 {
    env_f + (temp_f - env_f) * (-k_per_s * dt_s).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DeviceCommand {
    TargetUp,
    TargetDown,
    StartTimer,
    SetTarget(f64),
    ArmAlarm,
    Disarm,
}

/// The thermometer's registers as shown on its display.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceState {
    pub device_id: String,
    pub current_f: f64,
    pub target_f: f64,
    pub elapsed_ms: u64,
    pub timer_running: bool,
    pub alarm_armed: bool,
    pub alarm_fired: bool,
    pub sim_clock_ms: u64,
}

/// Target shown on a freshly powered-on probe.
pub const DEFAULT_TARGET_F: f64 = 145.0;

impl DeviceState {
    pub fn new(device_id: impl Into<String>, current_f: f64, epoch_ms: u64) -> Self {
        DeviceState {
            device_id: device_id.into(),
            current_f,
            target_f: DEFAULT_TARGET_F,
            elapsed_ms: 0,
            timer_running: false,
            alarm_armed: false,
            alarm_fired: false,
            sim_clock_ms: epoch_ms,
        }
    }

    pub fn elapsed_s(&self) -> f64 {
        self.elapsed_ms as f64 / 1000.0
    }

    /// Applies a button press or remote command. Rejected commands leave the
    /// state unchanged.
    pub fn apply_command(&mut self, cmd: DeviceCommand) -> Result<(), SimError> {
        match cmd {
            DeviceCommand::TargetUp => {
                self.target_f = (self.target_f + 1.0).clamp(MIN_SETTABLE_F, MAX_SETTABLE_F)
            }
            DeviceCommand::TargetDown => {
                self.target_f = (self.target_f - 1.0).clamp(MIN_SETTABLE_F, MAX_SETTABLE_F)
            }
            DeviceCommand::SetTarget(t) => {
                if !settable(t) {
                    return Err(SimError::TargetOutOfRange(t));
                }
                self.target_f = t;
            }
            DeviceCommand::StartTimer => {
                self.timer_running = true;
                self.elapsed_ms = 0;
            }
            DeviceCommand::ArmAlarm => {
                self.alarm_armed = true;
                self.alarm_fired = false;
            }
            DeviceCommand::Disarm => {
                self.alarm_armed = false;
                self.alarm_fired = false;
            }
        }
        self.check_alarm();
        Ok(())
    }

    fn check_alarm(&mut self) {
        if self.alarm_armed && !self.alarm_fired && self.current_f >= self.target_f {
            self.alarm_fired = true;
        }
    }
}

#[derive(Debug, Clone)]
pub struct Simulator {
    params: ThermalParams,
    state: DeviceState,
    food_f: f64,
    rng: ChaCha8Rng,
    noise: Normal<f64>,
    next_seq: u64,
}

impl Simulator {
    pub fn new(
        device_id: impl Into<String>,
        params: ThermalParams,
        epoch_ms: u64,
    ) -> Result<Self, SimError> {
        params.validate()?;
        Ok(Simulator {
            state: DeviceState::new(device_id, params.t0_f, epoch_ms),
            food_f: params.t0_f,
            rng: ChaCha8Rng::seed_from_u64(params.seed),
            noise: Normal::new(0.0, params.noise_sigma_f).map_err(|_| SimError::NegativeNoise(params.noise_sigma_f))?,
            next_seq: 1,
            params,
        })
    }

    pub fn state(&self) -> &DeviceState {
        &self.state
    }

    pub fn params(&self) -> &ThermalParams {
        &self.params
    }

    pub fn apply_command(&mut self, cmd: DeviceCommand) -> Result<(), SimError> {
        self.state.apply_command(cmd)
    }

    /// Advances the simulated clock by `dt_s` (rounded to whole milliseconds).
    pub fn step(&mut self, dt_s: f64) -> Result<&DeviceState, SimError> {
        if !(dt_s > 0.0 && dt_s.is_finite()) {
            return Err(SimError::NonPositiveStep(dt_s));
        }
        let dt_ms = (dt_s * 1000.0).round().max(1.0) as u64;
        self.food_f = newtonian(
            self.food_f,
            self.params.env_f,
            self.params.k_per_s,
            dt_ms as f64 / 1000.0,
        );
        let jitter = if self.params.noise_sigma_f > 0.0 {
            self.noise.sample(&mut self.rng)
        } else {
            0.0
        };
        self.state.current_f = self.food_f + jitter;
        self.state.sim_clock_ms += dt_ms;
        if self.state.timer_running {
            self.state.elapsed_ms += dt_ms;
        }
        self.state.check_alarm();
        Ok(&self.state)
    }

    /// Steps once and returns the reading as it goes on the wire.
    pub fn tick(&mut self, dt_s: f64) -> Result<TemperatureSample, SimError> {
        self.step(dt_s)?;
        let sample = TemperatureSample {
            device_id: self.state.device_id.clone(),
            seq: self.next_seq,
            t_ms: self.state.sim_clock_ms,
            temp_f: round_tenth(self.state.current_f),
        };
        self.next_seq += 1;
        Ok(sample)
    }
}

/// Wire precision is one decimal place.
pub fn round_tenth(temp_f: f64) -> f64 {
    (temp_f * 10.0).round() / 10.0
}

/// Receives telemetry from [`run`] and hands back remote commands.
pub trait TelemetrySink {
    type Error: std::error::Error;

    fn emit(&mut self, sample: &TemperatureSample) -> Result<(), Self::Error>;

    /// Commands that arrived since the last call, in arrival order.
    fn poll_commands(&mut self) -> Vec<DeviceCommand> {
        Vec::new()
    }
}

#[derive(Debug, Error)]
pub enum RunError<E: std::error::Error> {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("telemetry transport failed: {0}")]
    Transport(E),
}

/// Emits `⌊duration / cadence⌋` samples, applying inbound commands before
/// each step. Commands that the device rejects are dropped.
pub fn run<S: TelemetrySink>(
    sim: &mut Simulator,
    cadence_s: f64,
    duration_s: f64,
    sink: &mut S,
) -> Result<DeviceState, RunError<S::Error>> {
    if !(cadence_s > 0.0 && cadence_s.is_finite()) {
        return Err(SimError::NonPositiveStep(cadence_s).into());
    }
    let count = (duration_s.max(0.0) / cadence_s + 1e-9).floor() as u64;
    for _ in 0..count {
        for cmd in sink.poll_commands() {
            let _ = sim.apply_command(cmd);
        }
        let sample = sim.tick(cadence_s)?;
        sink.emit(&sample).map_err(RunError::Transport)?;
    }
    for cmd in sink.poll_commands() {
        let _ = sim.apply_command(cmd);
    }
    Ok(sim.state().clone())
}
