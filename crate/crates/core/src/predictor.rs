//! Time-to-temperature prediction.
//!
//! The remaining time is the temperature gap divided by the heating rate,
//! where the rate is the least-squares slope of the most recent samples.
//! With a two-sample window this is exactly
//! `Δtime / Δtemp × (target − current)`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One timestamped probe reading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureSample {
    pub device_id: String,
    pub seq: u64,
    pub t_ms: u64,
    pub temp_f: f64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PushError {
    #[error("sample seq {got} does not follow {last}")]
    OutOfOrder { last: u64, got: u64 },
    #[error("sample time {got} ms precedes {last} ms")]
    TimeRegression { last: u64, got: u64 },
}

/// Tunables for the sliding-window slope estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictorConfig {
    pub capacity: usize,
    pub min_samples: usize,
    pub min_span_ms: u64,
    /// Slopes at or below this many °F/s are treated as "not heating".
    pub rate_floor_f_per_s: f64,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        PredictorConfig {
            capacity: 8,
            min_samples: 2,
            min_span_ms: 5_000,
            rate_floor_f_per_s: 0.001,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleWindow {
    config: PredictorConfig,
    samples: VecDeque<TemperatureSample>,
}

impl SampleWindow {
    pub fn new(config: PredictorConfig) -> Self {
        assert!(config.capacity > 0, "window capacity must be positive");
        SampleWindow {
            config,
            samples: VecDeque::with_capacity(config.capacity),
        }
    }

    pub fn config(&self) -> &PredictorConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn latest(&self) -> Option<&TemperatureSample> {
        self.samples.back()
    }

    /// Oldest first.
    pub fn samples(&self) -> impl Iterator<Item = &TemperatureSample> {
        self.samples.iter()
    }

    /// Appends a sample, evicting the oldest one when full. Samples whose
    /// seq does not strictly increase, or whose time goes backwards, are
    /// refused and leave the window untouched.
    pub fn push(&mut self, sample: TemperatureSample) -> Result<(), PushError> {
        if let Some(last) = self.samples.back() {
            if sample.seq <= last.seq {
                return Err(PushError::OutOfOrder {
                    last: last.seq,
                    got: sample.seq,
                });
            }
            if sample.t_ms < last.t_ms {
                return Err(PushError::TimeRegression {
                    last: last.t_ms,
                    got: sample.t_ms,
                });
            }
        }
        if self.samples.len() == self.config.capacity {
            self.samples.pop_front();
        }
        self.samples.push_back(sample);
        Ok(())
    }

    /// Least-squares slope of temperature against time, °F/s. `None` when
    /// the window is too short, spans too little time, or is not heating
    /// faster than the rate floor.
    pub fn heating_rate(&self) -> Option<f64> {
        let n = self.samples.len();
        if n < self.config.min_samples.max(2) {
            return None;
        }
        let first = self.samples.front()?.t_ms;
        let last = self.samples.back()?.t_ms;
        if last - first < self.config.min_span_ms {
            return None;
        }

        // Times relative to the first sample keep the sums small and make
        // the estimate independent of the clock's epoch.
        let nf = n as f64;
        let secs = |s: &TemperatureSample| (s.t_ms - first) as f64 / 1000.0;
        let mean_t = self.samples.iter().map(secs).sum::<f64>() / nf;
        let mean_y = self.samples.iter().map(|s| s.temp_f).sum::<f64>() / nf;
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for s in &self.samples {
            let dt = secs(s) - mean_t;
            sxy += dt * (s.temp_f - mean_y);
            sxx += dt * dt;
        }
        if sxx <= 0.0 {
            return None;
        }
        let slope = sxy / sxx;
        (slope.is_finite() && slope > self.config.rate_floor_f_per_s).then_some(slope)
    }

    pub fn predict(&self, target_f: f64) -> Prediction {
        let Some(current) = self.latest() else {
            return Prediction::Indeterminate;
        };
        if current.temp_f >= target_f {
            return Prediction::AlreadyAtTarget;
        }
        match self.heating_rate() {
            Some(rate) => {
                let seconds = (target_f - current.temp_f) / rate;
                if seconds.is_finite() && seconds > 0.0 {
                    Prediction::Eta {
                        seconds_remaining: seconds,
                        rate_f_per_s: rate,
                    }
                } else {
                    Prediction::Indeterminate
                }
            }
            None => Prediction::Indeterminate,
        }
    }
}

impl Default for SampleWindow {
    fn default() -> Self {
        SampleWindow::new(PredictorConfig::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Prediction {
    Eta {
        seconds_remaining: f64,
        rate_f_per_s: f64,
    },
    Indeterminate,
    AlreadyAtTarget,
}

impl Prediction {
    /// Whole minutes remaining, rounded up. Sub-millisecond float residue
    /// is dropped first so an exact 450 s does not become 8.0000001 min.
    pub fn minutes(&self) -> Option<u64> {
        match *self {
            Prediction::Eta {
                seconds_remaining, ..
            } => {
                let ms = (seconds_remaining * 1000.0).round();
                Some((ms / 60_000.0).ceil().max(1.0) as u64)
            }
            _ => None,
        }
    }
}
