mod common;

use std::sync::Arc;

use common::*;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use smartcook_core::predictor::TemperatureSample;
use smartcook_service::clock::ManualClock;
use smartcook_service::gateway::{Gateway, SpeechRequest};
use smartcook_service::hub::{Hub, HubConfig};
use smartcook_service::session::AlarmMode;
use smartcook_service::speech;
use smartcook_service::store;

fn clean_stream(temps: &[f64]) -> Vec<TemperatureSample> {
    temps
        .iter()
        .enumerate()
        .map(|(i, &t)| sample(i as u64 + 1, 15 * i as u64, t))
        .collect()
}

/// Everything a client can observe about one device.
fn observe(hub: &Hub) -> String {
    format!(
        "{:?}|{:?}|{:?}|{:?}",
        hub.current_temperature(DEVICE).unwrap(),
        hub.history(DEVICE, 0).unwrap(),
        hub.prediction(DEVICE).unwrap(),
        hub.target(DEVICE).unwrap(),
    )
}

fn fresh_hub(ring: usize) -> Hub {
    let hub = Hub::new(
        HubConfig {
            ring_capacity: ring,
            ..HubConfig::default()
        },
        Arc::new(ManualClock::new(0)),
    );
    hub.connect(DEVICE);
    hub.set_target(DEVICE, 150.0).unwrap();
    hub.arm_alarm(DEVICE, AlarmMode::AtTarget).unwrap();
    hub
}

fn feed(hub: &Hub, stream: &[TemperatureSample]) -> Vec<u64> {
    stream
        .iter()
        .filter_map(|s| hub.ingest(s.clone()).unwrap())
        .map(|a| a.seq)
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn replayed_and_duplicated_samples_change_nothing(
        temps in prop::collection::vec(60.0f64..200.0, 1..40),
        resend in prop::collection::vec((any::<prop::sample::Index>(), any::<prop::sample::Index>()), 0..30),
    ) {
        let clean = clean_stream(&temps);
        // After delivering clean[..=at], resend some already-delivered sample.
        let mut noisy = Vec::new();
        let mut inserts: Vec<(usize, usize)> = resend
            .iter()
            .map(|(at, which)| {
                let at = at.index(clean.len());
                (at, which.index(at + 1))
            })
            .collect();
        inserts.sort();
        let mut k = 0;
        for (i, s) in clean.iter().enumerate() {
            noisy.push(s.clone());
            while k < inserts.len() && inserts[k].0 == i {
                noisy.push(clean[inserts[k].1].clone());
                k += 1;
            }
        }

        let a = fresh_hub(16);
        let b = fresh_hub(16);
        let alarms_a = feed(&a, &clean);
        let alarms_b = feed(&b, &noisy);
        prop_assert_eq!(observe(&a), observe(&b));
        prop_assert_eq!(alarms_a, alarms_b);
        prop_assert_eq!(b.devices()[0].dropped as usize, noisy.len() - clean.len());
    }

    #[test]
    fn log_replay_reconstructs_the_ring(
        temps in prop::collection::vec((600u32..2000).prop_map(|x| f64::from(x) / 10.0), 0..60),
        ring in 1usize..20,
        dups in prop::collection::vec(any::<prop::sample::Index>(), 0..10),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.log");
        let hub = fresh_hub(ring).with_log(&path).unwrap();
        let clean = clean_stream(&temps);
        let mut stream = clean.clone();
        if !clean.is_empty() {
            for d in &dups {
                stream.push(clean[d.index(clean.len())].clone());
            }
        }
        feed(&hub, &stream);
        hub.flush_log().unwrap();

        let replayed = store::replay(&path).unwrap();
        prop_assert_eq!(&replayed, &clean);
        let tail = replayed[replayed.len().saturating_sub(ring)..].to_vec();
        prop_assert_eq!(hub.history(DEVICE, 0).unwrap(), tail);
    }
}

fn fuzzed_utterance(rng: &mut StdRng) -> String {
    const WORDS: &[&str] = &[
        "what's", "the", "temperature", "of", "my", "food", "how", "hot", "is", "set", "target",
        "to", "degrees", "thermometer", "tell", "alarm", "for", "when", "will", "be", "ready",
        "long", "until", "done", "notify", "me", "an", "let", "know", "medium", "rare", "well",
        "beef", "chicken", "current", "internal", "one", "hundred", "and", "sixty", "five",
        "135", "0", "99999999999999999999", "-40", "165.5", "¿", "温度", "\u{0}", "''", "{Temp_stt}",
        "", " ", "\t", "!!!", "safe", "moist", "alert",
    ];
    const SEEDS: &[&str] = &[
        "how hot is my food",
        "set thermometer to 165 degrees",
        "when will my food be ready",
        "notify me when my food is done",
        "set an alarm for when my food is 150 degrees",
        "let me know when my steak is medium rare",
        "set thermometer to 1000 degrees",
        "set thermometer to five hundred and seventy three degrees",
    ];
    match rng.random_range(0..4) {
        0 => SEEDS[rng.random_range(0..SEEDS.len())].to_string(),
        1 => {
            let mut s = SEEDS[rng.random_range(0..SEEDS.len())].to_string();
            let cut = rng.random_range(0..=s.len());
            while !s.is_char_boundary(cut.min(s.len())) {
                s.pop();
            }
            s.truncate(cut.min(s.len()));
            s
        }
        2 => (0..rng.random_range(0..12))
            .map(|_| WORDS[rng.random_range(0..WORDS.len())])
            .collect::<Vec<_>>()
            .join(" "),
        _ => (0..rng.random_range(0..40))
            .map(|_| char::from_u32(rng.random_range(0..0x3000)).unwrap_or('?'))
            .collect(),
    }
}

#[tokio::test]
async fn every_utterance_gets_speech() {
    let (server, _clock) = start(config()).await;
    let mut probe = Probe::connect(&server, DEVICE).await;
    for i in 1..=4 {
        probe.send(&sample(i, i * 30, 100.0 + i as f64)).await;
    }
    eventually(|| samples_seen(&server) == 4).await;

    let model = Arc::new(config().interaction_model().unwrap());
    let names: Vec<String> = model.intent_names().map(str::to_string).collect();
    let gateway = Gateway::new(model, &server.base_url()).unwrap();
    let mut rng = StdRng::seed_from_u64(7);
    for i in 0..1000 {
        let text = fuzzed_utterance(&mut rng);
        let token = if i % 10 == 0 { "bogus" } else { TOKEN };
        let reply = gateway
            .handle(&SpeechRequest {
                text: text.clone(),
                token: token.to_string(),
                session_id: i.to_string(),
            })
            .await;
        assert!(!reply.speech.is_empty(), "{text:?}");
        assert!(!reply.end_session);
        assert_eq!(reply.session_id, i.to_string());
        assert!(
            reply.intent == "none" || names.contains(&reply.intent),
            "{text:?} -> {}",
            reply.intent
        );
        assert_ne!(reply.speech, speech::INTERNAL_ERROR, "{text:?}");
        assert_ne!(reply.speech, speech::INTERNET_ERROR, "{text:?}");
    }
    server.shutdown().await.unwrap();
}

#[tokio::test]
async fn unreachable_control_plane_is_spoken_about() {
    // Bind then drop to get a port with nothing listening.
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let model = Arc::new(config().interaction_model().unwrap());
    let gateway = Gateway::new(model, &format!("http://127.0.0.1:{port}")).unwrap();
    let ask = |text: &str| SpeechRequest {
        text: text.to_string(),
        token: TOKEN.to_string(),
        session_id: String::new(),
    };
    let reply = gateway.handle(&ask("how hot is my food")).await;
    assert_eq!(reply.speech, "Internet error.");
    assert_eq!(reply.intent, "CurrentTempIntent");
    let reply = gateway.handle(&ask("play some music")).await;
    assert_eq!(reply.speech, speech::HELP);
    assert_eq!(reply.intent, "none");
    let reply = gateway.handle(&ask("")).await;
    assert_eq!(reply.intent, "none");
}

#[tokio::test]
async fn gateway_round_trip() {
    let (server, _clock) = start(config()).await;
    let model = Arc::new(config().interaction_model().unwrap());
    let gateway = Gateway::new(model, &server.base_url()).unwrap();
    let ask = |text: &str| SpeechRequest {
        text: text.to_string(),
        token: TOKEN.to_string(),
        session_id: "s".into(),
    };

    // No probe has ever connected.
    let reply = gateway.handle(&ask("how hot is my food")).await;
    assert_eq!(reply.speech, speech::UNKNOWN_DEVICE);

    let mut probe = Probe::connect(&server, DEVICE).await;
    probe.send(&sample(1, 0, 120.3)).await;
    eventually(|| samples_seen(&server) == 1).await;

    let reply = gateway.handle(&ask("what's the current temperature of my food")).await;
    assert_eq!(reply.speech, "Your food is currently at 120 degrees Fahrenheit.");

    let reply = gateway.handle(&ask("set thermometer to 165 degrees")).await;
    assert_eq!(reply.speech, "Ok, your Target Temperature has been set to 165 degrees.");
    assert_eq!(server.hub().target(DEVICE).unwrap().target_f, Some(165.0));

    let reply = gateway
        .handle(&ask("set thermometer to one hundred and thirty five degrees"))
        .await;
    assert_eq!(reply.speech, "Ok, your Target Temperature has been set to 135 degrees.");

    let reply = gateway.handle(&ask("set thermometer to 1000 degrees")).await;
    assert_eq!(reply.speech, speech::out_of_range(1000));
    assert_eq!(server.hub().target(DEVICE).unwrap().target_f, Some(135.0));

    let reply = gateway.handle(&ask("set an alarm for when my food is 20 degrees")).await;
    assert_eq!(reply.speech, speech::out_of_range(20));

    let reply = gateway.handle(&ask("when will my food be done")).await;
    assert_eq!(reply.speech, speech::INDETERMINATE);

    server.shutdown().await.unwrap();
}
