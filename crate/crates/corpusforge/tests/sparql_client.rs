use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;

use corpusforge::sparql::{
    fetch_facts, query_key, ArchiveMode, ClientConfig, FetchConfig, SparqlClient, SparqlError,
};
use corpusforge_core::units::{UnitRegistry, WikidataUnits};

const PROPERTIES: &str = r#"{"head":{"vars":["property","propertyLabel"]},"results":{"bindings":[
 {"property":{"type":"uri","value":"http://www.wikidata.org/entity/P2048"},"propertyLabel":{"type":"literal","value":"height","xml:lang":"en"}}]}}"#;

const STATEMENTS: &str = r#"{"head":{"vars":[]},"results":{"bindings":[
 {"article":{"type":"uri","value":"https://en.wikipedia.org/wiki/Eiffel_Tower"},
  "entity":{"type":"uri","value":"http://www.wikidata.org/entity/Q243"},
  "value":{"type":"literal","value":"+330"},
  "unit":{"type":"uri","value":"http://www.wikidata.org/entity/Q11573"}},
 {"article":{"type":"uri","value":"https://en.wikipedia.org/wiki/Broken"},
  "entity":{"type":"uri","value":"http://www.wikidata.org/entity/Q1"},
  "value":{"type":"literal","value":"not a number"},
  "unit":{"type":"uri","value":"http://www.wikidata.org/entity/Q11573"}}]}}"#;

/// Serves a scripted list of (status, body) responses, one per request,
/// and records each request body.
fn serve(script: Vec<(u16, &'static str)>) -> (String, Arc<Mutex<Vec<String>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&seen);
    thread::spawn(move || {
        for (status, body) in script {
            let Ok((stream, _)) = listener.accept() else {
                return;
            };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 {
                    break;
                }
                let lower = line.to_ascii_lowercase();
                if let Some(v) = lower.strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                if line == "\r\n" {
                    break;
                }
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            log.lock().unwrap().push(String::from_utf8(buf).unwrap());
            let mut stream = stream;
            let resp = format!(
                "HTTP/1.1 {status} X\r\nContent-Type: application/sparql-results+json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
            stream.write_all(resp.as_bytes()).unwrap();
        }
    });
    (format!("http://{addr}/sparql"), seen)
}

fn client(endpoint: String, retries: u32) -> ClientConfig {
    ClientConfig {
        endpoint: Some(endpoint),
        retries,
        backoff_ms: 5,
        timeout_s: 10,
        ..ClientConfig::default()
    }
}

#[test]
fn retries_server_errors_then_succeeds() {
    let (url, seen) = serve(vec![(503, "busy"), (502, "busy"), (200, PROPERTIES)]);
    let c = SparqlClient::new(client(url, 2));
    let res = c.query("SELECT 1").unwrap();
    assert_eq!(res.results.bindings.len(), 1);
    let seen = seen.lock().unwrap();
    assert_eq!(seen.len(), 3);
    assert!(seen[0].contains("query=SELECT"));
}

#[test]
fn gives_up_after_retries() {
    let (url, seen) = serve(vec![(503, "a"), (503, "b"), (503, "c")]);
    let c = SparqlClient::new(client(url, 1));
    assert!(matches!(
        c.query("q"),
        Err(SparqlError::Http { status: 503 })
    ));
    assert_eq!(seen.lock().unwrap().len(), 2);
}

#[test]
fn client_errors_are_not_retried() {
    let (url, seen) = serve(vec![(400, "bad query"), (200, PROPERTIES)]);
    let c = SparqlClient::new(client(url, 3));
    assert!(matches!(
        c.query("q"),
        Err(SparqlError::Http { status: 400 })
    ));
    assert_eq!(seen.lock().unwrap().len(), 1);
}

#[test]
fn fetch_records_then_replays_offline() {
    let dir = tempfile::tempdir().unwrap();
    let (url, _) = serve(vec![(200, PROPERTIES), (200, STATEMENTS)]);
    let registry = UnitRegistry::builtin();
    let wd = WikidataUnits::builtin();
    let mut cfg = FetchConfig {
        client: ClientConfig {
            archive: Some(dir.path().to_path_buf()),
            archive_mode: ArchiveMode::Record,
            ..client(url, 0)
        },
        ..FetchConfig::default()
    };
    let (facts, report) =
        fetch_facts(&SparqlClient::new(cfg.client.clone()), &cfg, &registry, &wd).unwrap();
    assert_eq!(facts.len(), 1);
    assert_eq!(report.malformed_rows, 1);
    assert_eq!(facts[0].entity.label, "Eiffel Tower");
    assert_eq!(facts[0].unit.id, "Q11573");
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);

    // the server is gone; replay must not touch the network
    cfg.client.endpoint = Some("http://127.0.0.1:9/unreachable".into());
    cfg.client.archive_mode = ArchiveMode::Replay;
    let (again, _) =
        fetch_facts(&SparqlClient::new(cfg.client.clone()), &cfg, &registry, &wd).unwrap();
    assert_eq!(again, facts);

    let c = SparqlClient::new(cfg.client.clone());
    match c.query("never recorded") {
        Err(SparqlError::ArchiveMiss(p)) => {
            assert!(p.ends_with(format!("{}.json", query_key("never recorded"))))
        }
        other => panic!("{other:?}"),
    }
}
