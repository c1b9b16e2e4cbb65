mod common;

use std::time::Duration;

use common::*;
use reqwest::StatusCode;
use serde_json::{json, Value};
use smartcook_core::thermal::DeviceCommand;
use smartcook_core::wire;

async fn get(server: &smartcook_service::Server, path: &str) -> (StatusCode, Value) {
    let resp = reqwest::get(format!("{}{path}", server.base_url())).await.unwrap();
    let status = resp.status();
    let text = resp.text().await.unwrap();
    let body = if text.is_empty() {
        Value::Null
    } else {
        serde_json::from_str(&text).unwrap_or(Value::String(text))
    };
    (status, body)
}

async fn post(server: &smartcook_service::Server, path: &str, body: Value) -> (StatusCode, Value) {
    let resp = reqwest::Client::new()
        .post(format!("{}{path}", server.base_url()))
        .json(&body)
        .send()
        .await
        .unwrap();
    let status = resp.status();
    (status, resp.json().await.unwrap_or(Value::Null))
}

#[tokio::test]
async fn device_lifecycle_over_http() {
    let (server, _clock) = start(config()).await;

    let (status, _) = get(&server, "/api/devices/probe-1/temperature").await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let mut probe = Probe::connect(&server, DEVICE).await;
    eventually(|| !server.hub().devices().is_empty()).await;
    let (status, body) = get(&server, "/api/devices/probe-1/temperature").await;
    assert_eq!(status, StatusCode::NO_CONTENT);
    assert_eq!(body, Value::Null);

    let (status, body) = get(&server, "/api/devices/probe-1/prediction").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!({ "kind": "indeterminate" }));

    // 2°F per minute from 120°F
    for (i, temp) in [120.0, 121.0, 122.0].into_iter().enumerate() {
        probe.send(&sample(i as u64 + 1, 30 * i as u64, temp)).await;
    }
    eventually(|| samples_seen(&server) == 3).await;

    let (status, body) = get(&server, "/api/devices/probe-1/temperature").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["temp_f"], json!(122.0));
    assert_eq!(body["t_ms"], json!(60_000));
    assert_eq!(body["stale"], json!(false));

    let (status, body) = post(&server, "/api/devices/probe-1/target", json!({ "temp_f": 1000 })).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(body["error"].as_str().unwrap().contains("1000"));

    let (status, body) = post(&server, "/api/devices/probe-1/alarm", json!({ "mode": "at_target" })).await;
    assert_eq!(status, StatusCode::CONFLICT, "{body}");

    let (status, body) = post(&server, "/api/devices/probe-1/target", json!({ "temp_f": 137 })).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!({ "target_f": 137.0, "pending": false }));
    assert_eq!(
        probe.next_line().await.unwrap(),
        wire::encode_command(DeviceCommand::SetTarget(137.0))
    );

    let (_, body) = get(&server, "/api/devices/probe-1/prediction").await;
    assert_eq!(body["kind"], "eta");
    assert_eq!(body["seconds"], json!(450.0));
    assert_eq!(body["minutes"], json!(8));

    let (status, body) = post(
        &server,
        "/api/devices/probe-1/alarm",
        json!({ "mode": "at_temp", "temp_f": 125 }),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["threshold_f"], json!(125.0));
    assert_eq!(body["mode"], "at_temp");

    let (_, body) = get(&server, "/api/devices/probe-1/history?since_ms=30000").await;
    let seqs: Vec<_> = body["samples"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["seq"].as_u64().unwrap())
        .collect();
    assert_eq!(seqs, [2, 3]);

    let (_, body) = get(&server, "/api/devices").await;
    assert_eq!(body["devices"][0]["device_id"], DEVICE);
    assert_eq!(body["devices"][0]["state"], "connected");
    assert_eq!(body["devices"][0]["samples"], 3);

    server.shutdown().await.unwrap();
}

#[tokio::test]
async fn readings_go_stale_without_telemetry() {
    let (server, clock) = start(config()).await;
    let mut probe = Probe::connect(&server, DEVICE).await;
    probe.send(&sample(1, 0, 100.0)).await;
    eventually(|| samples_seen(&server) == 1).await;
    clock.advance(10_001);
    let (_, body) = get(&server, "/api/devices/probe-1/temperature").await;
    assert_eq!(body["stale"], json!(true));
    let (_, body) = get(&server, "/api/devices").await;
    assert_eq!(body["devices"][0]["state"], "stale");
    server.shutdown().await.unwrap();
}

#[tokio::test]
async fn target_set_while_offline_is_delivered_on_reconnect() {
    let (server, _clock) = start(config()).await;
    let probe = Probe::connect(&server, DEVICE).await;
    eventually(|| !server.hub().devices().is_empty()).await;
    drop(probe);
    eventually(|| {
        server.hub().devices()[0].state == smartcook_service::session::ConnectionState::Disconnected
    })
    .await;

    let (status, body) = post(&server, "/api/devices/probe-1/target", json!({ "temp_f": 160 })).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!({ "target_f": 160.0, "pending": true }));

    let mut probe = Probe::connect(&server, DEVICE).await;
    assert_eq!(
        probe.next_line().await.unwrap(),
        wire::encode_command(DeviceCommand::SetTarget(160.0))
    );
    let (_, body) = get(&server, "/api/devices/probe-1/target").await;
    assert_eq!(body, json!({ "target_f": 160.0, "pending": false }));
    server.shutdown().await.unwrap();
}

#[tokio::test]
async fn telemetry_rejects_bad_lines_without_dropping_the_connection() {
    let (server, _clock) = start(config()).await;
    let mut probe = Probe::connect(&server, DEVICE).await;
    probe.send_raw("not json").await;
    probe.send_raw(r#"{"device_id":"probe-1","seq":1}"#).await;
    // A sample claiming another device's id is not accepted on this link.
    let mut other = sample(1, 0, 150.0);
    other.device_id = "probe-2".into();
    probe.send(&other).await;
    probe.send(&sample(1, 0, 100.0)).await;
    eventually(|| samples_seen(&server) == 1).await;
    assert_eq!(server.hub().devices()[0].dropped, 3);
    server.shutdown().await.unwrap();
}

#[tokio::test]
async fn first_line_must_be_hello() {
    let (server, _clock) = start(config()).await;
    let stream = tokio::net::TcpStream::connect(server.telemetry_addr()).await.unwrap();
    let (read, write) = stream.into_split();
    let mut probe = Probe {
        lines: tokio::io::AsyncBufReadExt::lines(tokio::io::BufReader::new(read)),
        write,
    };
    probe.send(&sample(1, 0, 100.0)).await;
    assert_eq!(probe.next_line().await.unwrap(), r#"{"err":"expected_hello"}"#);
    assert_eq!(probe.next_line().await, None);
    assert!(server.hub().devices().is_empty());
    server.shutdown().await.unwrap();
}

#[tokio::test]
async fn legacy_endpoint_speaks_the_latest_reading() {
    let (server, _clock) = start(config()).await;

    let resp = reqwest::get(format!("{}/NewHotStuff/Aimtemp?token={TOKEN}", server.base_url()))
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::OK);

    let mut probe = Probe::connect(&server, DEVICE).await;
    probe.send(&sample(1, 0, 120.3)).await;
    eventually(|| samples_seen(&server) == 1).await;

    let resp = reqwest::get(format!("{}/NewHotStuff/Aimtemp?token={TOKEN}", server.base_url()))
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    assert_eq!(
        resp.text().await.unwrap(),
        r#"{"message":"Your food is currently at 120 degrees Fahrenheit."}"#
    );

    for query in ["?token=wrong", "?token=", ""] {
        let resp = reqwest::get(format!("{}/NewHotStuff/Aimtemp{query}", server.base_url()))
            .await
            .unwrap();
        assert_eq!(resp.status(), StatusCode::UNAUTHORIZED, "{query}");
    }
    server.shutdown().await.unwrap();
}

#[tokio::test]
async fn whoami_resolves_tokens() {
    let (server, _clock) = start(config()).await;
    let (status, body) = get(&server, &format!("/api/whoami?token={TOKEN}")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!({ "device_id": DEVICE }));
    let (status, _) = get(&server, "/api/whoami?token=nope").await;
    assert_eq!(status, StatusCode::UNAUTHORIZED);
    server.shutdown().await.unwrap();
}

#[tokio::test]
async fn knowledge_base_passthrough() {
    let (server, _clock) = start(config()).await;

    let (_, body) = get(&server, "/api/kb").await;
    assert_eq!(body["categories"].as_array().unwrap().len(), 4);
    assert_eq!(body["entries"].as_array().unwrap().len(), 16);

    let (status, body) = get(&server, "/api/kb/classify?category=beef_lamb_veal_duck&temp_f=132").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["entry"]["name"], "Medium rare");
    assert_eq!(body["below_range"], false);

    let (_, body) = get(&server, "/api/kb/classify?category=poultry&temp_f=100").await;
    assert_eq!(body["below_range"], true);
    assert_eq!(body["usda_minimum_f"], json!(165.0));

    let (status, body) =
        get(&server, "/api/kb/target_range?category=beef_lamb_veal_duck&doneness=medium%20rare").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["doneness"], "Medium rare");
    assert_eq!(body["lower_f"], json!(130.0));
    assert_eq!(body["upper_f"], json!(135.0));

    let (status, _) = get(&server, "/api/kb/target_range?category=fish&doneness=crispy").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = get(&server, "/api/kb/classify?category=tofu&temp_f=100").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    server.shutdown().await.unwrap();
}

#[tokio::test]
async fn event_stream_carries_samples_and_alarms() {
    let (server, _clock) = start(config()).await;
    let mut probe = Probe::connect(&server, DEVICE).await;
    eventually(|| !server.hub().devices().is_empty()).await;
    server
        .hub()
        .arm_alarm(DEVICE, smartcook_service::session::AlarmMode::AtTemp { temp_f: 101.0 })
        .unwrap();

    let (status, _) = get(&server, "/api/devices/nobody/stream").await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let mut resp = reqwest::get(format!("{}/api/devices/probe-1/stream", server.base_url()))
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    assert_eq!(resp.headers()["content-type"], "text/event-stream");

    probe.send(&sample(1, 0, 100.0)).await;
    probe.send(&sample(2, 30, 102.0)).await;

    let mut text = String::new();
    while text.matches("event:").count() < 3 {
        let chunk = tokio::time::timeout(Duration::from_secs(5), resp.chunk())
            .await
            .expect("stream data")
            .unwrap()
            .expect("stream open");
        text.push_str(std::str::from_utf8(&chunk).unwrap());
    }
    let events: Vec<&str> = text
        .lines()
        .filter_map(|l| l.strip_prefix("event: ").or_else(|| l.strip_prefix("event:")))
        .collect();
    assert_eq!(events, ["sample", "alarm", "sample"]);
    assert!(text.contains(r#""threshold_f":101.0"#));

    // Shutdown must not hang on the open stream.
    tokio::time::timeout(Duration::from_secs(5), server.shutdown())
        .await
        .expect("shutdown completes")
        .unwrap();
}

#[tokio::test]
async fn static_ui_is_served_when_configured() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<h1>cook</h1>").unwrap();
    let mut cfg = config();
    cfg.ui_dir = Some(dir.path().to_path_buf());
    let (server, _clock) = start(cfg).await;
    let resp = reqwest::get(format!("{}/ui/index.html", server.base_url())).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    assert_eq!(resp.text().await.unwrap(), "<h1>cook</h1>");
    server.shutdown().await.unwrap();

    let (server, _clock) = start(config()).await;
    let resp = reqwest::get(format!("{}/ui/index.html", server.base_url())).await.unwrap();
    assert_eq!(resp.status(), StatusCode::NOT_FOUND);
    server.shutdown().await.unwrap();
}

#[tokio::test]
async fn occupied_port_is_reported() {
    let (first, _clock) = start(config()).await;
    let mut cfg = config();
    cfg.http_addr = first.http_addr();
    let err = match smartcook_service::Server::start(
        &cfg,
        std::sync::Arc::new(smartcook_service::clock::ManualClock::new(0)),
    )
    .await
    {
        Ok(_) => panic!("second bind succeeded"),
        Err(e) => e,
    };
    assert!(err.to_string().contains(&first.http_addr().to_string()), "{err}");
    first.shutdown().await.unwrap();
}

#[tokio::test]
async fn shutdown_flushes_the_log() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("telemetry.log");
    let mut cfg = config();
    cfg.log_path = Some(path.clone());
    let (server, _clock) = start(cfg).await;
    let mut probe = Probe::connect(&server, DEVICE).await;
    let sent: Vec<_> = (1..=5).map(|i| sample(i, i * 30, 70.0 + i as f64)).collect();
    for s in &sent {
        probe.send(s).await;
    }
    eventually(|| samples_seen(&server) == 5).await;
    server.shutdown().await.unwrap();
    assert_eq!(smartcook_service::store::replay(&path).unwrap(), sent);
}
