mod common;

use common::{http, study_cases, Service};
use serde_json::json;
use tumorsynth_core::turing::SessionOptions;

fn service(dir: &std::path::Path) -> Service {
    let real = study_cases(dir, "real", 3);
    let synth = study_cases(dir, "synth", 3);
    Service::start(
        &dir.join("sessions"),
        real,
        synth,
        SessionOptions {
            n_per_class: 2,
            ..SessionOptions::default()
        },
    )
}

fn create(svc: &Service) -> String {
    let r = http(svc.addr, "POST", "/sessions", None);
    assert_eq!(r.status, 201, "{}", String::from_utf8_lossy(&r.body));
    assert_eq!(r.json()["total"], 4);
    r.json()["session_id"].as_str().unwrap().to_string()
}

fn current(svc: &Service, id: &str) -> String {
    http(svc.addr, "GET", &format!("/sessions/{id}/next"), None).json()["item_id"]
        .as_str()
        .unwrap()
        .to_string()
}

fn answer(svc: &Service, id: &str, item: &str, confidence: f64) -> common::HttpResponse {
    let body = json!({ "item_id": item, "judgment": "real", "confidence": confidence });
    http(svc.addr, "POST", &format!("/sessions/{id}/responses"), Some(&body))
}

#[test]
fn health_and_unknown_ids() {
    let dir = tempfile::tempdir().unwrap();
    let svc = service(dir.path());
    let h = http(svc.addr, "GET", "/health", None);
    assert_eq!((h.status, h.json()["status"].as_str()), (200, Some("ok")));

    let r = http(svc.addr, "GET", "/sessions/nope/next", None);
    assert_eq!((r.status, r.json()["error"].as_str()), (404, Some("unknown_session")));
    let id = create(&svc);
    let r = http(
        svc.addr,
        "GET",
        &format!("/sessions/{id}/items/item-999/image.png"),
        None,
    );
    assert_eq!((r.status, r.json()["error"].as_str()), (404, Some("unknown_item")));
}

#[test]
fn next_item_carries_png_and_no_truth() {
    let dir = tempfile::tempdir().unwrap();
    let svc = service(dir.path());
    let id = create(&svc);
    let r = http(svc.addr, "GET", &format!("/sessions/{id}/next"), None);
    let v = r.json();
    assert_eq!(v["status"], "active");
    assert_eq!(
        (v["position"].as_u64(), v["total"].as_u64(), v["answered"].as_u64()),
        (Some(1), Some(4), Some(0))
    );
    assert!(v.get("truth").is_none() && v.get("case_ref").is_none());
    use base64::Engine;
    let png = base64::engine::general_purpose::STANDARD
        .decode(v["image_png_base64"].as_str().unwrap())
        .unwrap();
    let direct = http(
        svc.addr,
        "GET",
        &format!("/sessions/{id}/{}", v["image_url"].as_str().unwrap()),
        None,
    );
    assert_eq!(direct.header("content-type"), Some("image/png"));
    assert_eq!(direct.body, png);
}

#[test]
fn response_validation_status_codes() {
    let dir = tempfile::tempdir().unwrap();
    let svc = service(dir.path());
    let id = create(&svc);
    let first = current(&svc, &id);

    let r = answer(&svc, &id, &first, 1.5);
    assert_eq!((r.status, r.json()["error"].as_str()), (422, Some("bad_confidence")));
    let r = answer(&svc, &id, "item-004", 0.5);
    assert_eq!((r.status, r.json()["error"].as_str()), (409, Some("out_of_order")));
    let r = http(
        svc.addr,
        "POST",
        &format!("/sessions/{id}/responses"),
        Some(&json!({ "item_id": first })),
    );
    assert_eq!(r.status, 400);

    let r = answer(&svc, &id, &first, 0.5);
    assert_eq!(r.status, 200);
    assert_eq!(
        (r.json()["answered"].as_u64(), r.json()["status"].as_str()),
        (Some(1), Some("active"))
    );
    let r = answer(&svc, &id, &first, 0.5);
    assert_eq!(
        (r.status, r.json()["error"].as_str()),
        (409, Some("duplicate_response"))
    );

    let r = http(svc.addr, "GET", &format!("/sessions/{id}/results"), None);
    assert_eq!((r.status, r.json()["error"].as_str()), (409, Some("incomplete")));
}

#[test]
fn completion_and_early_finalize() {
    let dir = tempfile::tempdir().unwrap();
    let svc = service(dir.path());
    let id = create(&svc);
    for _ in 0..4 {
        let item = current(&svc, &id);
        assert_eq!(answer(&svc, &id, &item, 0.8).status, 200);
    }
    let next = http(svc.addr, "GET", &format!("/sessions/{id}/next"), None).json();
    assert_eq!(next["status"], "complete");
    let r = answer(&svc, &id, "item-001", 0.5);
    assert_eq!(r.status, 409);
    let res = http(svc.addr, "GET", &format!("/sessions/{id}/results"), None).json();
    assert_eq!(res["n_answered"], 4);
    assert_eq!(res["accuracy"], 0.5);

    let early = create(&svc);
    let item = current(&svc, &early);
    answer(&svc, &early, &item, 1.0);
    let f = http(svc.addr, "POST", &format!("/sessions/{early}/finalize"), None);
    assert_eq!((f.status, f.json()["finalized_early"].as_bool()), (200, Some(true)));
    let res = http(svc.addr, "GET", &format!("/sessions/{early}/results"), None).json();
    assert_eq!(
        (res["n_items"].as_u64(), res["n_answered"].as_u64()),
        (Some(4), Some(1))
    );

    let status = http(svc.addr, "GET", &format!("/sessions/{early}"), None).json();
    assert_eq!(status["status"], "complete");
}

#[test]
fn create_rejects_bad_options() {
    let dir = tempfile::tempdir().unwrap();
    let svc = service(dir.path());
    let r = http(svc.addr, "POST", "/sessions", Some(&json!({ "n_per_class": 10 })));
    assert_eq!(
        (r.status, r.json()["error"].as_str()),
        (422, Some("insufficient_items"))
    );
    let r = http(svc.addr, "POST", "/sessions", Some(&json!({ "colour": "red" })));
    assert_eq!(r.status, 400);
    let r = http(
        svc.addr,
        "POST",
        "/sessions",
        Some(&json!({ "overlay": true, "slice_selection": "random" })),
    );
    assert_eq!((r.status, r.json()["overlay"].as_bool()), (201, Some(true)));
}

#[test]
fn sessions_survive_restart_mid_study() {
    let dir = tempfile::tempdir().unwrap();
    let svc = service(dir.path());
    let id = create(&svc);
    let first = current(&svc, &id);
    answer(&svc, &id, &first, 0.9);
    svc.stop();
    let svc = service(dir.path());
    let next = http(svc.addr, "GET", &format!("/sessions/{id}/next"), None).json();
    assert_eq!(
        (next["answered"].as_u64(), next["position"].as_u64()),
        (Some(1), Some(2))
    );
}
