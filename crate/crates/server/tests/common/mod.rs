#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use pmt_server::http::DEFAULT_BODY_LIMIT;
use pmt_server::{router, Engine};
use tower::ServiceExt;

pub const BOUNDARY: &str = "pmt-test-boundary";

pub fn fixture(name: &str) -> Vec<u8> {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name);
    std::fs::read(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

pub fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/i70_patching.csv")
}

pub struct Part<'a> {
    pub name: &'a str,
    pub file_name: Option<&'a str>,
    pub bytes: &'a [u8],
}

pub fn multipart(parts: &[Part<'_>]) -> Vec<u8> {
    let mut body = Vec::new();
    for p in parts {
        body.extend_from_slice(format!("--{BOUNDARY}\r\n").as_bytes());
        match p.file_name {
            Some(f) => body.extend_from_slice(
                format!(
                    "Content-Disposition: form-data; name=\"{}\"; filename=\"{f}\"\r\nContent-Type: text/csv\r\n\r\n",
                    p.name
                )
                .as_bytes(),
            ),
            None => body.extend_from_slice(format!("Content-Disposition: form-data; name=\"{}\"\r\n\r\n", p.name).as_bytes()),
        }
        body.extend_from_slice(p.bytes);
        body.extend_from_slice(b"\r\n");
    }
    body.extend_from_slice(format!("--{BOUNDARY}--\r\n").as_bytes());
    body
}

pub fn dataset_body(fwd: &[u8], segments: &[u8], class: &str, id: Option<&str>) -> Vec<u8> {
    let mut parts = vec![
        Part {
            name: "fwd",
            file_name: Some("fwd.csv"),
            bytes: fwd,
        },
        Part {
            name: "segments",
            file_name: Some("segments.csv"),
            bytes: segments,
        },
        Part {
            name: "class",
            file_name: None,
            bytes: class.as_bytes(),
        },
        Part {
            name: "units",
            file_name: None,
            bytes: b"si",
        },
    ];
    if let Some(id) = id {
        parts.push(Part {
            name: "id",
            file_name: None,
            bytes: id.as_bytes(),
        });
    }
    multipart(&parts)
}

pub struct TestApp {
    pub dir: tempfile::TempDir,
    pub router: Router,
}

impl TestApp {
    pub fn new() -> Self {
        Self::with_limit(DEFAULT_BODY_LIMIT)
    }

    pub fn with_limit(limit: usize) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let engine = Engine::open(dir.path()).unwrap();
        TestApp {
            router: router(Arc::new(engine), limit),
            dir,
        }
    }

    pub async fn send(
        &self,
        method: Method,
        uri: &str,
        content_type: Option<&str>,
        body: Vec<u8>,
    ) -> (StatusCode, Vec<u8>) {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(ct) = content_type {
            req = req.header("content-type", ct);
        }
        let resp = self
            .router
            .clone()
            .oneshot(req.body(Body::from(body)).unwrap())
            .await
            .unwrap();
        let status = resp.status();
        let bytes = resp
            .into_body()
            .collect()
            .await
            .unwrap()
            .to_bytes()
            .to_vec();
        (status, bytes)
    }

    pub async fn get(&self, uri: &str) -> (StatusCode, Vec<u8>) {
        self.send(Method::GET, uri, None, Vec::new()).await
    }

    pub async fn get_json(&self, uri: &str) -> (StatusCode, serde_json::Value) {
        let (s, b) = self.get(uri).await;
        (
            s,
            serde_json::from_slice(&b)
                .unwrap_or_else(|e| panic!("{uri}: {e}: {}", String::from_utf8_lossy(&b))),
        )
    }

    pub async fn json(
        &self,
        method: Method,
        uri: &str,
        body: serde_json::Value,
    ) -> (StatusCode, serde_json::Value) {
        let (s, b) = self
            .send(
                method,
                uri,
                Some("application/json"),
                serde_json::to_vec(&body).unwrap(),
            )
            .await;
        (
            s,
            serde_json::from_slice(&b).unwrap_or(serde_json::Value::Null),
        )
    }

    pub async fn post_dataset(&self, body: Vec<u8>) -> (StatusCode, serde_json::Value) {
        let ct = format!("multipart/form-data; boundary={BOUNDARY}");
        let (s, b) = self.send(Method::POST, "/datasets", Some(&ct), body).await;
        (
            s,
            serde_json::from_slice(&b).unwrap_or(serde_json::Value::Null),
        )
    }

    pub async fn ingest_i70(&self) -> String {
        let (s, v) = self
            .post_dataset(dataset_body(
                &fixture("i70_fwd.csv"),
                &fixture("i70_segments.csv"),
                "interstate",
                Some("i70"),
            ))
            .await;
        assert_eq!(s, StatusCode::CREATED, "{v}");
        v["manifest"]["id"].as_str().unwrap().to_string()
    }
}
