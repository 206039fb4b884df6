//! Helpers shared by the integration tests: a minimal HTTP/1.1 client, an
//! in-process service handle and small on-disk study fixtures.

#![allow(dead_code)]

use std::io::{Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::mpsc;
use std::thread::JoinHandle;

use serde_json::Value;
use tumorsynth_cli::server::{router, serve_on, AppState};
use tumorsynth_core::phantom::{phantom, PhantomSpec};
use tumorsynth_core::turing::{SessionOptions, SessionStore, StudyCase};
use tumorsynth_core::volgrid::{write_mask, write_volume};

pub fn tumorsynth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tumorsynth"))
        .args(args)
        .env_clear()
        .output()
        .expect("binary runs")
}

pub struct HttpResponse {
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl HttpResponse {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| {
            panic!(
                "status {} body not JSON ({e}): {}",
                self.status,
                String::from_utf8_lossy(&self.body)
            )
        })
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }
}

/// One request per connection, `Connection: close`.
pub fn http(addr: SocketAddr, method: &str, path: &str, body: Option<&Value>) -> HttpResponse {
    let payload = body.map(|b| b.to_string()).unwrap_or_default();
    let mut s = TcpStream::connect(addr).expect("connect");
    write!(
        s,
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{payload}",
        payload.len()
    )
    .unwrap();
    let mut raw = Vec::new();
    s.read_to_end(&mut raw).expect("read response");
    let split = raw
        .windows(4)
        .position(|w| w == b"\r\n\r\n")
        .expect("header terminator");
    let head = String::from_utf8(raw[..split].to_vec()).unwrap();
    let mut lines = head.split("\r\n");
    let status = lines.next().unwrap().split(' ').nth(1).unwrap().parse().unwrap();
    let headers: Vec<(String, String)> = lines
        .filter_map(|l| l.split_once(':'))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect();
    let mut body = raw[split + 4..].to_vec();
    let chunked = headers
        .iter()
        .any(|(k, v)| k.eq_ignore_ascii_case("transfer-encoding") && v.eq_ignore_ascii_case("chunked"));
    if chunked {
        body = dechunk(&body);
    }
    HttpResponse { status, headers, body }
}

fn dechunk(mut raw: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    loop {
        let eol = raw.windows(2).position(|w| w == b"\r\n").expect("chunk size line");
        let size = usize::from_str_radix(std::str::from_utf8(&raw[..eol]).unwrap().trim(), 16).unwrap();
        if size == 0 {
            return out;
        }
        out.extend_from_slice(&raw[eol + 2..eol + 2 + size]);
        raw = &raw[eol + 4 + size..];
    }
}

/// The service running on a background runtime; stops on drop.
pub struct Service {
    pub addr: SocketAddr,
    stop: Option<mpsc::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl Service {
    pub fn start(sessions: &Path, real: Vec<StudyCase>, synth: Vec<StudyCase>, defaults: SessionOptions) -> Service {
        let store = SessionStore::open(sessions).expect("open store");
        let app = router(AppState::new(store, real, synth, defaults), None);
        let (stop, stopped) = mpsc::channel::<()>();
        let (ready, bound) = mpsc::channel();
        let thread = std::thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread()
                .worker_threads(2)
                .enable_all()
                .build()
                .unwrap();
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
                ready.send(listener.local_addr().unwrap()).unwrap();
                let shutdown = async move {
                    let _ = tokio::task::spawn_blocking(move || stopped.recv()).await;
                };
                serve_on(listener, app, shutdown).await.unwrap();
            });
        });
        let addr = bound.recv().expect("service bound");
        Service {
            addr,
            stop: Some(stop),
            thread: Some(thread),
        }
    }

    pub fn stop(mut self) {
        self.shutdown();
    }

    fn shutdown(&mut self) {
        drop(self.stop.take());
        if let Some(t) = self.thread.take() {
            t.join().expect("service thread");
        }
    }
}

impl Drop for Service {
    fn drop(&mut self) {
        self.shutdown();
    }
}

/// Writes a small phantom with a spherical lesion and returns
/// `(image, lesion mask)` paths.
pub fn lesion_case(dir: &Path, name: &str, seed: u64, radius_mm: f64) -> (PathBuf, PathBuf) {
    let spec = PhantomSpec {
        noise_hu: 8.0,
        seed,
        ..PhantomSpec::small()
    };
    let p = phantom(&spec);
    let c = p.pancreas.centroid().unwrap().map(|v| v.round() as usize);
    let (v, m) = p.with_lesion(c, radius_mm, (spec.pancreas_hu - 40.0) as f32);
    let (image, mask) = (
        dir.join(format!("{name}.nii.gz")),
        dir.join(format!("{name}_mask.nii.gz")),
    );
    write_volume(&v, &image).unwrap();
    write_mask(&m, &mask).unwrap();
    (image, mask)
}

/// `n` study cases named `{prefix}_{i}` cycling over a few distinct scans.
pub fn study_cases(dir: &Path, prefix: &str, n: usize) -> Vec<StudyCase> {
    let scans: Vec<_> = (0..3)
        .map(|k| lesion_case(dir, &format!("{prefix}_scan{k}"), k, 3.0 + 3.0 * k as f64))
        .collect();
    (0..n)
        .map(|i| {
            let (image, mask) = scans[i % scans.len()].clone();
            StudyCase {
                case_ref: format!("{prefix}_{i:03}"),
                image,
                mask,
            }
        })
        .collect()
}

pub fn keys_and_strings(v: &Value, out: &mut Vec<String>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                out.push(k.clone());
                keys_and_strings(x, out);
            }
        }
        Value::Array(a) => a.iter().for_each(|x| keys_and_strings(x, out)),
        Value::String(s) => out.push(s.clone()),
        _ => {}
    }
}
