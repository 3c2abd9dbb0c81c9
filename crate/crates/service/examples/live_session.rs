//! Drives the live HTTP API in-process: start a session, answer every
//! announced window with on-beat presses until the character falls, upload
//! it and read the ledger back.

use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::Request;
use axum::Router;
use serde_json::{json, Value};
use tower::ServiceExt;

use rd_service::{App, ManualClock, ServiceConfig};
use rhythm_dungeon::ChainWriter;

async fn call(router: &Router, method: &str, uri: &str, body: Option<Value>) -> Value {
    let body = body.map_or_else(Body::empty, |v| Body::from(v.to_string()));
    let req = Request::builder().method(method).uri(uri).body(body).expect("valid request");
    let resp = router.clone().oneshot(req).await.expect("infallible router");
    let bytes = to_bytes(resp.into_body(), usize::MAX).await.expect("body");
    serde_json::from_slice(&bytes).expect("json body")
}

#[tokio::main(flavor = "current_thread")]
async fn main() {
    let clock = Arc::new(ManualClock::new(1_000_000_000));
    let config = ServiceConfig { seed: 5, p_fetch_percent: 0, ..ServiceConfig::default() };
    let router = App::new(ChainWriter::new(0), None, clock.clone(), config).router();

    let started = call(&router, "POST", "/sessions", Some(json!({"name": "Lyra", "seed": 1}))).await;
    let id = started["session_id"].as_str().expect("session id").to_owned();
    let mut view = started["view"].clone();
    println!("session {id}: fighting {}", view["enemy"]["character"]["name"]);

    let mut windows = 0;
    while view["phase"] != "Dead" {
        let body = match view["schedule"].as_object() {
            Some(schedule) => {
                // Charge, then attack, always on the beat.
                let buttons = if windows % 2 == 0 { ["D", "D", "D", "D"] } else { ["L", "L", "R", "R"] };
                let inputs: Vec<Value> = schedule["beat_times_us"]
                    .as_array()
                    .expect("four beats")
                    .iter()
                    .zip(buttons)
                    .map(|(t, b)| json!({"at_us": t, "button": b}))
                    .collect();
                clock.set(schedule["capture_deadline_us"].as_u64().expect("deadline"));
                json!({ "inputs": inputs })
            }
            None => json!({ "inputs": [] }),
        };
        let step = call(&router, "POST", &format!("/sessions/{id}/window"), Some(body)).await;
        view = step["view"].clone();
        windows += 1;
    }
    println!("fell in room {} after {windows} windows, mistakes {}", view["room_index"], view["tally"]);

    let upload = call(&router, "POST", &format!("/sessions/{id}/upload"), None).await;
    println!("receipt {}", upload["receipt"]);
    println!("characters {}", call(&router, "GET", "/chain/characters", None).await);
    println!("state {}", call(&router, "GET", "/chain/state-digest", None).await);
}
