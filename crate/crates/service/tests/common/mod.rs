#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use smartcook_core::predictor::TemperatureSample;
use smartcook_core::wire;
use smartcook_service::clock::ManualClock;
use smartcook_service::{Server, ServiceConfig};
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader, Lines};
use tokio::net::tcp::{OwnedReadHalf, OwnedWriteHalf};
use tokio::net::TcpStream;

pub const TOKEN: &str = "tok-1";
pub const DEVICE: &str = "probe-1";

pub fn config() -> ServiceConfig {
    ServiceConfig {
        http_addr: ([127, 0, 0, 1], 0).into(),
        telemetry_addr: ([127, 0, 0, 1], 0).into(),
        tokens: BTreeMap::from([(TOKEN.to_string(), DEVICE.to_string())]),
        ..ServiceConfig::default()
    }
}

pub async fn start(cfg: ServiceConfig) -> (Server, Arc<ManualClock>) {
    let clock = Arc::new(ManualClock::new(1_000_000));
    let server = Server::start(&cfg, clock.clone()).await.expect("server starts");
    (server, clock)
}

pub fn sample(seq: u64, t_s: u64, temp_f: f64) -> TemperatureSample {
    TemperatureSample {
        device_id: DEVICE.to_string(),
        seq,
        t_ms: t_s * 1000,
        temp_f,
    }
}

/// A hand-driven probe on the telemetry port.
pub struct Probe {
    pub lines: Lines<BufReader<OwnedReadHalf>>,
    pub write: OwnedWriteHalf,
}

impl Probe {
    pub async fn connect(server: &Server, device_id: &str) -> Probe {
        let stream = TcpStream::connect(server.telemetry_addr()).await.unwrap();
        let (read, write) = stream.into_split();
        let mut probe = Probe {
            lines: BufReader::new(read).lines(),
            write,
        };
        probe.send_raw(&wire::encode_hello(device_id)).await;
        probe
    }

    pub async fn send_raw(&mut self, line: &str) {
        self.write.write_all(line.as_bytes()).await.unwrap();
        self.write.write_all(b"\n").await.unwrap();
    }

    pub async fn send(&mut self, s: &TemperatureSample) {
        self.send_raw(&wire::encode_sample(s)).await;
    }

    pub async fn next_line(&mut self) -> Option<String> {
        tokio::time::timeout(Duration::from_secs(5), self.lines.next_line())
            .await
            .expect("line within 5 s")
            .unwrap()
    }
}

/// Polls until `f` holds; the telemetry path is asynchronous.
pub async fn eventually<F: FnMut() -> bool>(mut f: F) {
    for _ in 0..500 {
        if f() {
            return;
        }
        tokio::time::sleep(Duration::from_millis(10)).await;
    }
    panic!("condition not reached within 5 s");
}

pub fn samples_seen(server: &Server) -> usize {
    server
        .hub()
        .devices()
        .iter()
        .find(|d| d.device_id == DEVICE)
        .map_or(0, |d| d.samples)
}
