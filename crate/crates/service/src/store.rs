//! Telemetry retention: a bounded per-device ring and an optional
//! append-only log written in the telemetry wire format.

use std::collections::VecDeque;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use smartcook_core::predictor::TemperatureSample;
use smartcook_core::wire::{self, DeviceLine};

/// Arrival-ordered ring of one device's samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryStore {
    capacity: usize,
    samples: VecDeque<TemperatureSample>,
}

impl TelemetryStore {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        TelemetryStore {
            capacity,
            samples: VecDeque::new(),
        }
    }

    pub fn push(&mut self, sample: TemperatureSample) {
        if self.samples.len() == self.capacity {
            self.samples.pop_front();
        }
        self.samples.push_back(sample);
    }

    pub fn latest(&self) -> Option<&TemperatureSample> {
        self.samples.back()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = &TemperatureSample> {
        self.samples.iter()
    }

    /// Retained samples with `t_ms >= since_ms`, oldest first.
    pub fn since(&self, since_ms: u64) -> Vec<TemperatureSample> {
        let start = self.samples.partition_point(|s| s.t_ms < since_ms);
        self.samples.range(start..).cloned().collect()
    }
}

/// Append-only sample log, one wire-format line per accepted sample.
#[derive(Debug)]
pub struct TelemetryLog {
    path: PathBuf,
    writer: BufWriter<File>,
}

impl TelemetryLog {
    pub fn open(path: impl AsRef<Path>) -> io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(TelemetryLog {
            path,
            writer: BufWriter::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, sample: &TemperatureSample) -> io::Result<()> {
        self.writer.write_all(wire::encode_sample(sample).as_bytes())?;
        self.writer.write_all(b"\n")
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.writer.flush()
    }
}

impl Drop for TelemetryLog {
    fn drop(&mut self) {
        let _ = self.writer.flush();
    }
}

/// Reads a log back in append order. Lines that are not samples (for
/// example a torn final line) are skipped.
pub fn replay(path: impl AsRef<Path>) -> io::Result<Vec<TemperatureSample>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for line in reader.lines() {
        if let Ok(DeviceLine::Sample(s)) = wire::parse_device_line(&line?) {
            out.push(s);
        }
    }
    Ok(out)
}
