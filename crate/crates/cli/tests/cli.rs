use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use inkcheck_core::ink::InkFile;
use inkcheck_core::synth::{gen_test_session, SessionParams};
use inkcheck_service::{Message, PROTOCOL_VERSION};
use serde_json::Value;

fn inkcheck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_inkcheck")).args(args).env_remove("INKCHECK_STORE_ROOT").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_str(String::from_utf8(o.stderr.clone()).unwrap().trim()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const TWO_SAMPLES: &str = r#"{"format":"ink-json","version":1,"session_id":"two","test_id":"CDT","subject_pseudonym":"p","page":{"w_mm":210.0,"h_mm":297.0},"source":"digital-paper","samples":[{"t":0,"x":0.0,"y":0.0,"p":0.5,"c":true},{"t":10000,"x":3.0,"y":4.0,"p":0.5,"c":true}]}"#;

#[test]
fn analyze_two_sample_stroke() {
    let dir = tempfile::tempdir().unwrap();
    let ink = dir.path().join("two.json");
    std::fs::write(&ink, TWO_SAMPLES).unwrap();
    let o = inkcheck(&["analyze", p(&ink)]);
    assert!(o.status.success(), "{o:?}");
    let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
    let header = rdr.headers().unwrap().clone();
    let col = header.iter().position(|h| h == "path_length_mm").unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(&rows[0][1], "stroke");
    assert_eq!(&rows[0][col], "5");
    assert_eq!(&rows.last().unwrap()[1], "document");

    let o = inkcheck(&["analyze", p(&ink), "--features", "json"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["strokes"][0]["values"]["path_length_mm"], 5.0);

    let out = dir.path().join("f.csv");
    assert!(inkcheck(&["analyze", p(&ink), "-o", p(&out)]).status.success());
    assert!(std::fs::read_to_string(out).unwrap().starts_with("session_id,level,index,"));
}

#[test]
fn synth_then_score_perfect_clock() {
    let dir = tempfile::tempdir().unwrap();
    let o = inkcheck(&["synth", "CDT", "--seed", "7", "--out", p(dir.path())]);
    assert!(o.status.success(), "{o:?}");
    let files: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let ink = files["ink"].as_str().unwrap().to_string();

    let o = inkcheck(&["score", &ink]);
    assert!(o.status.success(), "{o:?}");
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["score"]["kind"], "cdt");
    assert_eq!(r["score"]["total"], 6);
    let with_template = inkcheck(&["score", &ink, "--template", files["template"].as_str().unwrap()]);
    assert_eq!(with_template.stdout, o.stdout);

    // Same seed, same bytes.
    let again = tempfile::tempdir().unwrap();
    inkcheck(&["synth", "CDT", "--seed", "7", "--out", p(again.path())]);
    for name in ["synth-cdt-7.ink.json", "synth-cdt-7.manifest.json"] {
        assert_eq!(std::fs::read(dir.path().join(name)).unwrap(), std::fs::read(again.path().join(name)).unwrap());
    }
}

#[test]
fn usage_errors_exit_2() {
    let o = inkcheck(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(inkcheck(&["analyze"]).status.code(), Some(2));
    assert_eq!(inkcheck(&["analyze", "x", "--features", "xml"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"store_rot":"x"}"#).unwrap();
    let o = inkcheck(&["--config", p(&cfg), "analyze", "x"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["code"], "config_error");
}

#[test]
fn runtime_errors_exit_1_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = inkcheck(&["analyze", p(&dir.path().join("missing.json"))]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"]["code"], "runtime_error");

    let o = inkcheck(&["synth", "XYZ", "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"]["code"], "unknown_test");

    let bad = dir.path().join("back.json");
    std::fs::write(&bad, TWO_SAMPLES.replace(r#""t":0,"#, r#""t":20000,"#)).unwrap();
    let o = inkcheck(&["analyze", p(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"]["code"], "non_monotonic_timestamp");

    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, format!(r#"{{"store_root":"{}"}}"#, p(dir.path()))).unwrap();
    let o = inkcheck(&["--config", p(&cfg), "replay", "nope"]);
    assert_eq!(stderr_json(&o)["error"]["code"], "unknown_session");
}

/// Runs `serve` on ephemeral ports and returns the child with its addresses.
fn spawn_server(cfg: &Path) -> (std::process::Child, Value) {
    let mut child = Command::new(env!("CARGO_BIN_EXE_inkcheck"))
        .args(["serve", "--config", p(cfg)])
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.as_mut().unwrap()).read_line(&mut line).unwrap();
    (child, serde_json::from_str(&line).unwrap())
}

fn stream(addr: &str, file: &InkFile) {
    let mut s = TcpStream::connect(addr).unwrap();
    let mut rd = BufReader::new(s.try_clone().unwrap());
    let mut send = |m: &Message| writeln!(s, "{}", m.encode()).unwrap();
    send(&Message::Hello { version: PROTOCOL_VERSION });
    send(&Message::StartSession {
        session_id: file.session_id.clone(),
        test_id: file.test_id.clone(),
        subject_pseudonym: file.subject_pseudonym.clone(),
        page: file.page,
        source: file.source,
        template: None,
    });
    for (i, chunk) in file.samples.chunks(32).enumerate() {
        send(&Message::Samples { session_id: file.session_id.clone(), seq: i as u64 + 1, samples: chunk.to_vec() });
    }
    send(&Message::EndSession { session_id: file.session_id.clone() });
    loop {
        let mut line = String::new();
        assert!(rd.read_line(&mut line).unwrap() > 0);
        match Message::decode(&line).unwrap() {
            Message::SessionSummary { .. } => break,
            Message::Error { message, .. } => panic!("{message}"),
            _ => {}
        }
    }
}

#[test]
fn serve_rebuild_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store");
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        serde_json::json!({ "store_root": store, "listen": "127.0.0.1:0", "http_listen": "127.0.0.1:0" }).to_string(),
    )
    .unwrap();
    let (mut child, addrs) = spawn_server(&cfg);
    let g = gen_test_session("AKT", &SessionParams::default(), 4).unwrap();
    stream(addrs["listen"].as_str().unwrap(), &InkFile::from_session(&g.session));
    child.kill().unwrap();
    child.wait().unwrap();

    let session_dir = store.join(&g.session.meta.session_id);
    let o = inkcheck(&["rebuild", p(&session_dir), "--check"]);
    assert!(o.status.success(), "{o:?}");

    // A tampered artifact fails the check, and a rebuild restores it.
    let derived = std::fs::read(session_dir.join("derived.json")).unwrap();
    std::fs::write(session_dir.join("derived.json"), b"{}").unwrap();
    let o = inkcheck(&["rebuild", p(&session_dir), "--check"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"]["code"], "check_failed");
    assert!(inkcheck(&["rebuild", p(&session_dir)]).status.success());
    assert_eq!(std::fs::read(session_dir.join("derived.json")).unwrap(), derived);

    let samples = g.session.samples();
    let (t1, t2) = (samples[10].t.to_string(), samples[30].t.to_string());
    let o = inkcheck(&[
        "--config",
        p(&cfg),
        "replay",
        &g.session.meta.session_id,
        "--speed",
        "8",
        "--from-t",
        &t1,
        "--to-t",
        &t2,
    ]);
    assert!(o.status.success(), "{o:?}");
    let lines: Vec<Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 22);
    assert_eq!(lines[0]["event"]["sample"]["t"].as_u64().unwrap().to_string(), t1);
    assert_eq!(lines[20]["event"]["sample"]["t"].as_u64().unwrap().to_string(), t2);
    assert_eq!(lines[21]["event"]["done"], true);
    let o = inkcheck(&["--config", p(&cfg), "replay", &g.session.meta.session_id, "--speed", "0"]);
    assert_eq!(stderr_json(&o)["error"]["code"], "invalid_speed");
}
