//! End-to-end checks of the REST service against a live listener.

use semint_core::publish::{serve, ServeError};
use semint_core::Config;
use std::path::{Path, PathBuf};

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn test_config(tmp: &Path, port: u16) -> Config {
    let data = data_dir();
    Config::parse(
        &format!(
            r#"{{"port":{port},"data_dir":"{}","cep_rules":"{}","inference_rules":"{}","vocabularies":["{}","{}"]}}"#,
            tmp.join("out").display(),
            data.join("rules/drought.cep").display(),
            data.join("rules/drought.rules").display(),
            data.join("vocab/ssn.vocab").display(),
            data.join("vocab/ikon.vocab").display(),
        ),
        Path::new("."),
    )
    .unwrap()
}

fn demo_csv() -> String {
    std::fs::read_to_string(data_dir().join("scenarios/drought/sensors.csv")).unwrap()
}

fn demo_ik_lines() -> Vec<String> {
    std::fs::read_to_string(data_dir().join("scenarios/drought/ik.jsonl"))
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect()
}

#[tokio::test]
async fn health_endpoint_reports_ok() {
    let tmp = tempfile::tempdir().unwrap();
    let handle = serve(test_config(tmp.path(), 0)).await.unwrap();
    let url = format!("http://{}/health", handle.addr());
    let body: serde_json::Value = reqwest::get(&url).await.unwrap().json().await.unwrap();
    assert_eq!(body, serde_json::json!({"status": "ok"}));
    handle.shutdown().await;
}

#[tokio::test]
async fn csv_ingest_flush_reason_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let handle = serve(test_config(tmp.path(), 0)).await.unwrap();
    let base = format!("http://{}", handle.addr());
    let client = reqwest::Client::new();

    let resp = client
        .post(format!("{base}/ingest/sensor"))
        .header("content-type", "text/csv")
        .body(demo_csv())
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), 202);
    let body: serde_json::Value = resp.json().await.unwrap();
    assert_eq!(body["accepted"], 12);

    for line in demo_ik_lines() {
        let resp = client
            .post(format!("{base}/ingest/ik"))
            .header("content-type", "application/json")
            .body(line)
            .send()
            .await
            .unwrap();
        assert_eq!(resp.status(), 202);
    }

    let resp = client
        .post(format!("{base}/control/flush?t=3600"))
        .send()
        .await
        .unwrap();
    let body: serde_json::Value = resp.json().await.unwrap();
    assert_eq!(body["events"], 5);

    let resp = client
        .post(format!("{base}/control/reason"))
        .send()
        .await
        .unwrap();
    let body: serde_json::Value = resp.json().await.unwrap();
    assert_eq!(body["recommendations"], 1);

    let events: serde_json::Value = client
        .get(format!("{base}/events/composite"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(events.as_array().unwrap().len(), 5);

    let recs: serde_json::Value = client
        .get(format!("{base}/recommendations"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let recs = recs.as_array().unwrap();
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0]["event"], "Drought");
    assert!((recs[0]["cf"].as_f64().unwrap() - 0.10).abs() < 1e-9);

    // The stores were persisted into the data directory.
    assert!(tmp.path().join("out/triples.nt").exists());
    assert!(tmp.path().join("out/events.ndjson").exists());

    handle.shutdown().await;
}

#[tokio::test]
async fn sparql_endpoint_queries_aligned_triples() {
    let tmp = tempfile::tempdir().unwrap();
    let handle = serve(test_config(tmp.path(), 0)).await.unwrap();
    let base = format!("http://{}", handle.addr());
    let client = reqwest::Client::new();

    client
        .post(format!("{base}/ingest/sensor"))
        .header("content-type", "text/csv")
        .body(demo_csv())
        .send()
        .await
        .unwrap();

    let resp = client
        .post(format!("{base}/query/sparql"))
        .body("SELECT ?o WHERE { ?o rdf:type ssn:Observation }")
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), 200);
    let body: serde_json::Value = resp.json().await.unwrap();
    assert_eq!(body["vars"], serde_json::json!(["o"]));
    assert_eq!(body["rows"].as_array().unwrap().len(), 12);

    let resp = client
        .post(format!("{base}/query/sparql"))
        .body("SELECT gibberish {")
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), 400);
    let body: serde_json::Value = resp.json().await.unwrap();
    assert_eq!(body["code"], "sparql.syntax");
    assert_eq!(body["status"], 400);

    handle.shutdown().await;
}

#[tokio::test]
async fn invalid_batch_is_rejected_whole() {
    let tmp = tempfile::tempdir().unwrap();
    let handle = serve(test_config(tmp.path(), 0)).await.unwrap();
    let base = format!("http://{}", handle.addr());
    let client = reqwest::Client::new();

    let bad = "sensor_id,property,value,unit,timestamp\n\
               ws1,Temperature,15.0,C,0\n\
               ws1,Temperature,abc,C,900\n";
    let resp = client
        .post(format!("{base}/ingest/sensor"))
        .header("content-type", "text/csv")
        .body(bad)
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), 422);
    let body: serde_json::Value = resp.json().await.unwrap();
    assert_eq!(body["code"], "ingest.invalid");

    // Nothing from the bad batch is visible anywhere.
    let rows: serde_json::Value = client
        .post(format!("{base}/query/sparql"))
        .body("SELECT ?s ?p ?o WHERE { ?s ?p ?o }")
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(rows["rows"].as_array().unwrap().len(), 0);

    let events: serde_json::Value = client
        .get(format!("{base}/events/composite"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert!(events.as_array().unwrap().is_empty());

    handle.shutdown().await;
}

#[tokio::test]
async fn json_reading_array_is_accepted() {
    let tmp = tempfile::tempdir().unwrap();
    let handle = serve(test_config(tmp.path(), 0)).await.unwrap();
    let base = format!("http://{}", handle.addr());
    let client = reqwest::Client::new();

    let resp = client
        .post(format!("{base}/ingest/sensor"))
        .header("content-type", "application/json")
        .body(r#"[{"sensor_id":"ws1","property":"Temperature","value":21.5,"unit":"C","t":100}]"#)
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), 202);
    let body: serde_json::Value = resp.json().await.unwrap();
    assert_eq!(body["accepted"], 1);

    handle.shutdown().await;
}

#[tokio::test]
async fn bad_ik_payloads_return_api_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let handle = serve(test_config(tmp.path(), 0)).await.unwrap();
    let base = format!("http://{}", handle.addr());
    let client = reqwest::Client::new();

    for (body, expected_status) in [
        ("{not json", 422),
        (r#"{"indicator":"MugumoTree"}"#, 422),
        (
            r#"{"indicator":"M","state":"S","lat":95.0,"lon":0,"observer":"o","t":10}"#,
            422,
        ),
    ] {
        let resp = client
            .post(format!("{base}/ingest/ik"))
            .header("content-type", "application/json")
            .body(body)
            .send()
            .await
            .unwrap();
        assert_eq!(resp.status(), expected_status, "{body}");
        let err: serde_json::Value = resp.json().await.unwrap();
        assert!(err["code"].is_string());
        assert!(err["message"].is_string());
    }

    handle.shutdown().await;
}

#[tokio::test]
async fn unknown_route_is_json_404() {
    let tmp = tempfile::tempdir().unwrap();
    let handle = serve(test_config(tmp.path(), 0)).await.unwrap();
    let url = format!("http://{}/nope", handle.addr());
    let resp = reqwest::get(&url).await.unwrap();
    assert_eq!(resp.status(), 404);
    let body: serde_json::Value = resp.json().await.unwrap();
    assert_eq!(body["code"], "not_found");
    handle.shutdown().await;
}

#[tokio::test]
async fn port_conflict_is_reported() {
    let tmp1 = tempfile::tempdir().unwrap();
    let tmp2 = tempfile::tempdir().unwrap();
    let first = serve(test_config(tmp1.path(), 0)).await.unwrap();
    let port = first.addr().port();
    match serve(test_config(tmp2.path(), port)).await {
        Err(ServeError::PortInUse(p)) => assert_eq!(p, port),
        Err(other) => panic!("expected PortInUse, got {other}"),
        Ok(_) => panic!("expected PortInUse, second bind succeeded"),
    }
    first.shutdown().await;
}

#[tokio::test]
async fn missing_rule_file_fails_startup_naming_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = test_config(tmp.path(), 0);
    config.cep_rules = tmp.path().join("missing.cep");
    let err = match serve(config).await {
        Err(err) => err,
        Ok(_) => panic!("startup should fail without the rule file"),
    };
    assert!(err.to_string().contains("missing.cep"), "{err}");
}
