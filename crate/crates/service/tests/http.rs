use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use futures::StreamExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use rd_service::api::{SessionLog, StepResponse};
use rd_service::{replay_session, App, ManualClock, ServiceConfig};
use rhythm_dungeon::canonical;
use rhythm_dungeon::ledger::{Chain, ChainWriter};

const T0_US: u64 = 1_000_000_000;

fn app(clock: Arc<ManualClock>) -> App {
    let config = ServiceConfig { seed: 42, p_fetch_percent: 100, lead_in_ms: 2_000 };
    App::new(ChainWriter::new(0), None, clock, config)
}

async fn call(router: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let body = body.map_or_else(Body::empty, |v| Body::from(v.to_string()));
    let req = Request::builder().method(method).uri(uri).body(body).unwrap();
    let resp = router.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    let text = std::str::from_utf8(&bytes).unwrap();
    let value: Value = serde_json::from_str(text).unwrap();
    // Every body is canonical JSON.
    assert_eq!(canonical::to_string(&value).unwrap(), text);
    (status, value)
}

async fn start(router: &Router, name: &str, offset: i64) -> (StatusCode, Value) {
    call(router, "POST", "/sessions", Some(json!({"name": name, "seed": 7, "clock_offset_us": offset}))).await
}

/// Presses matching `buttons` exactly on the announced beats.
fn on_beat(view: &Value, buttons: [&str; 4]) -> Value {
    let beats = view["schedule"]["beat_times_us"].as_array().unwrap();
    let inputs: Vec<Value> = beats
        .iter()
        .zip(buttons)
        .map(|(t, b)| json!({"at_us": t, "button": b}))
        .collect();
    json!({ "inputs": inputs })
}

#[tokio::test]
async fn start_gives_a_fresh_character_in_battle() {
    let router = app(Arc::new(ManualClock::new(T0_US))).router();
    let (status, body) = start(&router, "Ayla", 0).await;
    assert_eq!(status, StatusCode::CREATED);
    let view = &body["view"];
    assert_eq!(view["character"]["level"], 1);
    assert_eq!(view["room_index"], 0);
    assert_eq!(view["phase"], "InBattle");
    assert_eq!(view["schedule"]["bpm"], 80);
    // First judged beat: origin + 4 beats of 750 ms.
    assert_eq!(view["schedule"]["beat_times_us"][0], T0_US + 2_000_000 + 3_000_000);

    let (_, other) = start(&router, "Ayla", 0).await;
    assert_ne!(other["session_id"], body["session_id"]);

    let (status, err) = start(&router, "", 0).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(err["error"], "BadName");
}

#[tokio::test]
async fn perfect_window_attacks_and_empty_window_stumbles() {
    let router = app(Arc::new(ManualClock::new(T0_US))).router();
    let (_, body) = start(&router, "Ayla", 0).await;
    let id = body["session_id"].as_str().unwrap().to_owned();
    let enemy_before = body["view"]["enemy"]["current_health"].as_u64().unwrap();

    let (status, step) = call(&router, "POST", &format!("/sessions/{id}/window"), Some(on_beat(&body["view"], ["L", "L", "R", "R"]))).await;
    assert_eq!(status, StatusCode::OK);
    let event = &step["events"][0]["WindowJudged"];
    assert_eq!(event["action"], "Attack");
    assert!(step["view"]["enemy"]["current_health"].as_u64().unwrap() < enemy_before);

    let (_, step) = call(&router, "POST", &format!("/sessions/{id}/window"), Some(json!({"inputs": []}))).await;
    let event = &step["events"][0]["WindowJudged"];
    assert_eq!(event["action"], "Stumble");
    assert_eq!(event["judgements"], json!(["Miss", "Miss", "Miss", "Miss"]));
    assert_eq!(step["view"]["tally"]["miss"], 4);

    let (status, err) = call(&router, "POST", "/sessions/nope/window", Some(json!({"inputs": []}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(err["error"], "UnknownSession");
}

#[tokio::test]
async fn client_clock_offset_is_applied_both_ways() {
    let router = app(Arc::new(ManualClock::new(T0_US))).router();
    let (_, plain) = start(&router, "Ayla", 0).await;
    let (_, shifted) = start(&router, "Ayla", 5_000).await;
    let a = plain["view"]["schedule"]["beat_times_us"][0].as_i64().unwrap();
    let b = shifted["view"]["schedule"]["beat_times_us"][0].as_i64().unwrap();
    assert_eq!(b - a, 5_000);

    let id = shifted["session_id"].as_str().unwrap();
    let (_, step) = call(&router, "POST", &format!("/sessions/{id}/window"), Some(on_beat(&shifted["view"], ["U", "D", "U", "D"]))).await;
    assert_eq!(step["events"][0]["WindowJudged"]["action"], "Dodge");
}

#[tokio::test]
async fn presses_after_the_deadline_close_the_window() {
    let router = app(Arc::new(ManualClock::new(T0_US))).router();
    let (_, body) = start(&router, "Ayla", 0).await;
    let id = body["session_id"].as_str().unwrap();
    let deadline = body["view"]["schedule"]["capture_deadline_us"].as_u64().unwrap();
    let late = json!({"inputs": [{"at_us": deadline + 1, "button": "L"}]});
    let (status, err) = call(&router, "POST", &format!("/sessions/{id}/window"), Some(late)).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["error"], "WindowClosed");
    let edge = json!({"inputs": [{"at_us": deadline, "button": "L"}]});
    let (status, _) = call(&router, "POST", &format!("/sessions/{id}/window"), Some(edge)).await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn dead_session_uploads_and_replays_offline() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chain_0.ndjson");
    let clock = Arc::new(ManualClock::new(T0_US));
    let app = App::open(&path, clock.clone(), ServiceConfig { seed: 1, p_fetch_percent: 100, lead_in_ms: 500 }).unwrap();
    let router = app.clone().router();

    let (_, body) = start(&router, "Ayla", 0).await;
    let id = body["session_id"].as_str().unwrap().to_owned();
    let (status, err) = call(&router, "POST", &format!("/sessions/{id}/upload"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["error"], "SessionActive");

    // One clean hit, then stand still until the enemy wins.
    let mut view = body["view"].clone();
    let mut first = true;
    while view["phase"] != "Dead" {
        let req = if first { on_beat(&view, ["L", "L", "R", "R"]) } else { json!({"inputs": []}) };
        first = false;
        let (status, step) = call(&router, "POST", &format!("/sessions/{id}/window"), Some(req)).await;
        assert_eq!(status, StatusCode::OK, "{step}");
        view = step["view"].clone();
    }

    let (_, log) = call(&router, "GET", &format!("/sessions/{id}/log"), None).await;
    let log: SessionLog = serde_json::from_value(log).unwrap();

    clock.advance(60_000_000);
    let (status, up) = call(&router, "POST", &format!("/sessions/{id}/upload"), None).await;
    assert_eq!(status, StatusCode::OK);
    let char_id = up["receipt"]["Uploaded"]["character_id"].as_u64().unwrap();
    let (status, again) = call(&router, "POST", &format!("/sessions/{id}/upload"), None).await;
    assert_eq!((status, again["error"].as_str()), (StatusCode::CONFLICT, Some("AlreadyUploaded")));

    let (status, record) = call(&router, "GET", &format!("/chain/characters/{char_id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(record["origin_game"], "RhythmDungeon");
    assert_eq!(record["character"]["name"], "Ayla");
    assert_eq!(record["character"]["weakness"], "Miss");
    let (_, all) = call(&router, "GET", "/chain/characters", None).await;
    assert_eq!(all[char_id.to_string()], record);
    let (status, _) = call(&router, "GET", "/chain/characters/999", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    // The file on disk is the served chain.
    let on_disk = Chain::load(&path).unwrap();
    assert_eq!(on_disk.to_ndjson(), app.chain().to_ndjson());
    let (_, digest) = call(&router, "GET", "/chain/state-digest", None).await;
    assert_eq!(digest["digest"], on_disk.replay().unwrap().state_digest().to_hex());
    assert_eq!(digest["height"], 1);
    let (_, blocks) = call(&router, "GET", "/chain/blocks?from=0", None).await;
    assert_eq!(blocks.as_array().unwrap().len(), 1);
    let (_, none) = call(&router, "GET", "/chain/blocks?from=5", None).await;
    assert_eq!(none, json!([]));

    // Offline replay of the submitted inputs reproduces the server log.
    let (session, events) = replay_session(&log.start, &log.ops, &on_disk).unwrap();
    assert_eq!(canonical::to_string(&events).unwrap(), canonical::to_string(&log.events).unwrap());
    assert_eq!(session.phase, rhythm_dungeon::games::dungeon::Phase::Dead);
}

#[tokio::test]
async fn between_rooms_the_window_call_spawns_and_allocation_works() {
    let router = app(Arc::new(ManualClock::new(T0_US))).router();
    let (_, body) = start(&router, "Ayla", 0).await;
    let id = body["session_id"].as_str().unwrap().to_owned();
    let mut view = body["view"].clone();
    // Win the first room with perfect attacks.
    let mut rounds = 0;
    while view["phase"] == "InBattle" {
        let (_, step) = call(&router, "POST", &format!("/sessions/{id}/window"), Some(on_beat(&view, ["L", "L", "R", "R"]))).await;
        view = step["view"].clone();
        rounds += 1;
        assert!(rounds < 200);
    }
    assert_eq!(view["phase"], "Exploring");
    assert_eq!(view["room_index"], 1);
    assert!(view["schedule"].is_null());

    let (status, err) = call(&router, "POST", &format!("/sessions/{id}/allocate"), Some(json!({"attribute": "luck"}))).await;
    // No points at level 1 after a 10-xp room.
    assert_eq!((status, err["error"].as_str()), (StatusCode::CONFLICT, Some("NoPoints")));

    let (_, step) = call(&router, "POST", &format!("/sessions/{id}/window"), Some(json!({}))).await;
    let step: StepResponse = serde_json::from_value(step).unwrap();
    assert!(matches!(step.events[0], rhythm_dungeon::games::dungeon::SessionEvent::EnemySpawned { room: 1, .. }));

    let (status, err) = call(&router, "POST", &format!("/sessions/{id}/retire"), None).await;
    assert_eq!((status, err["error"].as_str()), (StatusCode::CONFLICT, Some("InBattle")));
}

#[tokio::test]
async fn stream_announces_the_open_window() {
    let router = app(Arc::new(ManualClock::new(T0_US))).router();
    let (_, body) = start(&router, "Ayla", 0).await;
    let id = body["session_id"].as_str().unwrap();
    let req = Request::builder().uri(format!("/sessions/{id}/stream")).body(Body::empty()).unwrap();
    let resp = router.clone().oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    let mut frames = resp.into_body().into_data_stream();
    let first = frames.next().await.unwrap().unwrap();
    let text = std::str::from_utf8(&first).unwrap();
    assert!(text.starts_with("event: window\n"), "{text}");
    let data = text.lines().find_map(|l| l.strip_prefix("data: ")).unwrap();
    let a: Value = serde_json::from_str(data).unwrap();
    assert_eq!(a, body["view"]["schedule"]);

    // The next window is pushed once the current one is judged.
    call(&router, "POST", &format!("/sessions/{id}/window"), Some(json!({"inputs": []}))).await;
    let second = frames.next().await.unwrap().unwrap();
    let text = std::str::from_utf8(&second).unwrap();
    assert!(text.contains("\"window_index\":1"), "{text}");
}

#[tokio::test]
async fn time_endpoint_reads_the_clock() {
    let clock = Arc::new(ManualClock::new(T0_US));
    let router = app(clock.clone()).router();
    clock.advance(250);
    let (_, t) = call(&router, "GET", "/time", None).await;
    assert_eq!(t["server_us"], T0_US + 250);
}
