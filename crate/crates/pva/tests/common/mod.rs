#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use pva::http::router;
use pva::RoundService;
use reqwest::{Client, StatusCode};
use serde_json::{json, Value};
use tokio::task::JoinHandle;

/// A service bound to an ephemeral local port.
pub struct TestServer {
    pub addr: SocketAddr,
    pub client: Client,
    task: JoinHandle<()>,
}

impl TestServer {
    pub async fn start(dir: &Path) -> TestServer {
        let service = Arc::new(RoundService::open(dir).expect("open data dir"));
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        let task = tokio::spawn(async move {
            axum::serve(listener, router(service)).await.unwrap();
        });
        TestServer {
            addr,
            client: Client::new(),
            task,
        }
    }

    pub fn stop(self) {
        self.task.abort();
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{}", self.addr, path)
    }

    pub async fn post(&self, path: &str, body: Value) -> (StatusCode, String) {
        let resp = self.client.post(self.url(path)).json(&body).send().await.unwrap();
        let status = resp.status();
        (status, resp.text().await.unwrap())
    }

    pub async fn get(&self, path: &str) -> (StatusCode, String) {
        let resp = self.client.get(self.url(path)).send().await.unwrap();
        let status = resp.status();
        (status, resp.text().await.unwrap())
    }

    pub async fn create(&self, pi: u64, nu: u64, alpha: u64, stopping: Value) -> String {
        let (status, body) = self
            .post(
                "/rounds",
                json!({
                    "request": "label the image",
                    "payoffs": {"base": 5, "pi": pi, "nu": nu, "alpha": alpha},
                    "stopping": stopping,
                    "seed": 11,
                }),
            )
            .await;
        assert_eq!(status, StatusCode::CREATED, "{body}");
        parse(&body)["round_id"].as_str().unwrap().to_owned()
    }

    pub async fn join(&self, round: &str) -> String {
        let (status, body) = self.post(&format!("/rounds/{round}/join"), json!({})).await;
        assert_eq!(status, StatusCode::OK, "{body}");
        parse(&body)["token"].as_str().unwrap().to_owned()
    }

    pub async fn act(&self, round: &str, token: &str, action: Value) -> (StatusCode, String) {
        let mut body = action;
        body["token"] = json!(token);
        self.post(&format!("/rounds/{round}/actions"), body).await
    }
}

pub fn parse(body: &str) -> Value {
    serde_json::from_str(body).unwrap_or_else(|e| panic!("not JSON ({e}): {body}"))
}

/// Keys that would reveal what other workers did.
pub const SECRET_KEYS: [&str; 7] = ["votes", "tallies", "tally", "vote_count", "counts", "workers", "payouts"];

/// Every secret key found anywhere in `v`.
pub fn secret_keys(v: &Value) -> Vec<String> {
    let mut found = Vec::new();
    walk(v, &mut found);
    found
}

fn walk(v: &Value, found: &mut Vec<String>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                if SECRET_KEYS.contains(&k.as_str()) {
                    found.push(k.clone());
                }
                walk(child, found);
            }
        }
        Value::Array(items) => items.iter().for_each(|c| walk(c, found)),
        _ => {}
    }
}

pub fn propose(text: &str) -> Value {
    json!({"kind": "propose", "text": text})
}

pub fn vote(id: &str) -> Value {
    json!({"kind": "vote", "contribution_id": id})
}

pub fn abstain() -> Value {
    json!({"kind": "abstain"})
}
