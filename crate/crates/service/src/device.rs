//! Device side of the telemetry link, for driving a simulator over TCP.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpStream};
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use smartcook_core::predictor::TemperatureSample;
use smartcook_core::thermal::{DeviceCommand, TelemetrySink};
use smartcook_core::wire::{self, WireError};

/// Blocking telemetry connection. Inbound commands are read on a
/// background thread and handed out by `poll_commands`.
pub struct TcpSink {
    writer: Arc<Mutex<TcpStream>>,
    inbound: mpsc::Receiver<DeviceCommand>,
}

fn write_line(stream: &Mutex<TcpStream>, line: &str) -> io::Result<()> {
    let mut s = stream.lock().unwrap_or_else(|p| p.into_inner());
    s.write_all(line.as_bytes())?;
    s.write_all(b"\n")?;
    s.flush()
}

impl TcpSink {
    pub fn connect(addr: SocketAddr, device_id: &str) -> io::Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        let reader = stream.try_clone()?;
        let writer = Arc::new(Mutex::new(stream));
        write_line(&writer, &wire::encode_hello(device_id))?;

        let (tx, inbound) = mpsc::channel();
        let replies = writer.clone();
        thread::spawn(move || {
            for line in BufReader::new(reader).lines() {
                let Ok(line) = line else { break };
                match wire::parse_command(&line) {
                    Ok(cmd) => {
                        if tx.send(cmd).is_err() {
                            break;
                        }
                    }
                    Err(WireError::UnknownCommand(_)) => {
                        if write_line(&replies, &wire::encode_error(wire::UNKNOWN_CMD)).is_err() {
                            break;
                        }
                    }
                    Err(WireError::Malformed(l)) => tracing::debug!("ignoring line {l:?}"),
                }
            }
        });
        Ok(TcpSink { writer, inbound })
    }

    /// Ends the telemetry stream. The reader thread exits once the server
    /// closes its side.
    pub fn close(&self) {
        let s = self.writer.lock().unwrap_or_else(|p| p.into_inner());
        let _ = s.shutdown(std::net::Shutdown::Write);
    }
}

impl TelemetrySink for TcpSink {
    type Error = io::Error;

    fn emit(&mut self, sample: &TemperatureSample) -> io::Result<()> {
        write_line(&self.writer, &wire::encode_sample(sample))
    }

    fn poll_commands(&mut self) -> Vec<DeviceCommand> {
        self.inbound.try_iter().collect()
    }
}

/// Spaces emissions out in wall-clock time, `interval` apart.
pub struct Paced<S> {
    inner: S,
    interval: Duration,
    next: Option<Instant>,
}

impl<S> Paced<S> {
    pub fn new(inner: S, interval: Duration) -> Self {
        Paced {
            inner,
            interval,
            next: None,
        }
    }

    pub fn into_inner(self) -> S {
        self.inner
    }
}

impl<S: TelemetrySink> TelemetrySink for Paced<S> {
    type Error = S::Error;

    fn emit(&mut self, sample: &TemperatureSample) -> Result<(), S::Error> {
        let now = Instant::now();
        let due = self.next.unwrap_or(now + self.interval);
        if due > now {
            thread::sleep(due - now);
        }
        self.next = Some(due.max(now) + self.interval);
        self.inner.emit(sample)
    }

    fn poll_commands(&mut self) -> Vec<DeviceCommand> {
        self.inner.poll_commands()
    }
}
