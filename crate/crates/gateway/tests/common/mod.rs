#![allow(dead_code)]

use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::body::Body;
use axum::http::{HeaderMap, Request, StatusCode};
use axum::Router;
use payroll_core::clock::ManualClock;
use payroll_gateway::{Gateway, GatewayConfig, RequestLog, Role, VersionWeights};
use serde_json::Value;
use tower::ServiceExt;

pub const ADMIN: &str = "root-token";
pub const E1: &str = "e1-token";
pub const E2: &str = "e2-token";

pub struct Harness {
    pub gateway: Gateway,
    pub app: Router,
    pub clock: ManualClock,
    pub log: Arc<Mutex<Vec<String>>>,
    rt: tokio::runtime::Runtime,
    _dir: tempfile::TempDir,
}

pub struct Reply {
    pub status: StatusCode,
    pub headers: HeaderMap,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| {
            panic!("body is not JSON ({e}): {}", String::from_utf8_lossy(&self.body))
        })
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers.get(name).and_then(|v| v.to_str().ok())
    }

    pub fn code(&self) -> String {
        self.json()["code"].as_str().unwrap_or_default().to_string()
    }
}

impl Harness {
    pub fn new(traffic: VersionWeights) -> Harness {
        let dir = tempfile::tempdir().unwrap();
        let mut config = GatewayConfig {
            store_dir: dir.path().join("store"),
            traffic,
            ..GatewayConfig::default()
        };
        config.cache.ttl_secs = 60;
        config.queue.backoff_ms = vec![0];
        config.tokens.insert(ADMIN.into(), Role::Admin);
        config.tokens.insert(E1.into(), "employee:e1".parse().unwrap());
        config.tokens.insert(E2.into(), "employee:e2".parse().unwrap());
        let clock = ManualClock::new();
        let (log, lines) = RequestLog::in_memory();
        let gateway = Gateway::open_with(&config, Arc::new(clock.clone()), log).unwrap();
        let app = gateway.router();
        let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
        Harness { gateway, app, clock, log: lines, rt, _dir: dir }
    }

    pub fn call(&self, method: &str, path: &str, token: Option<&str>, body: Option<Value>) -> Reply {
        self.call_as(method, path, token, None, body)
    }

    pub fn call_as(
        &self,
        method: &str,
        path: &str,
        token: Option<&str>,
        client: Option<&str>,
        body: Option<Value>,
    ) -> Reply {
        let mut req = Request::builder().method(method).uri(path);
        if let Some(t) = token {
            req = req.header("authorization", format!("Bearer {t}"));
        }
        if let Some(c) = client {
            req = req.header("x-client-id", c);
        }
        let body = match body {
            Some(v) => {
                req = req.header("content-type", "application/json");
                Body::from(serde_json::to_vec(&v).unwrap())
            }
            None => Body::empty(),
        };
        let req = req.body(body).unwrap();
        self.rt.block_on(async {
            let resp = self.app.clone().oneshot(req).await.unwrap();
            let status = resp.status();
            let headers = resp.headers().clone();
            let body = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap().to_vec();
            Reply { status, headers, body }
        })
    }

    /// Runs the queued jobs to completion.
    pub fn settle(&self) {
        self.gateway.wait_idle();
    }

    /// Figure 2 employee and approved 45-hour card for 2021-06.
    pub fn seed_fig2(&self) {
        let r = self.call(
            "POST",
            "/v1/employees",
            Some(ADMIN),
            Some(serde_json::json!({
                "id": "e1",
                "name": "Regular Employee",
                "compensation": {"kind": "hourly_rate", "rate": {"amount_minor": 250000, "currency": "NGN"}}
            })),
        );
        assert_eq!(r.status, StatusCode::CREATED, "{}", String::from_utf8_lossy(&r.body));
        let r = self.call(
            "POST",
            "/v1/timecards",
            Some(ADMIN),
            Some(serde_json::json!({"employee_id": "e1", "period": "2021-06", "hours": "45.00", "approved": true})),
        );
        assert_eq!(r.status, StatusCode::CREATED, "{}", String::from_utf8_lossy(&r.body));
    }

    pub fn run(&self, period: &str, supersede: bool) -> Reply {
        self.call(
            "POST",
            "/v1/payroll/runs",
            Some(ADMIN),
            Some(serde_json::json!({"period": period, "ruleset_id": "FIG2-NG", "supersede": supersede})),
        )
    }

    pub fn advance(&self, by: Duration) {
        self.clock.advance(by);
    }
}

impl Drop for Harness {
    fn drop(&mut self) {
        self.gateway.shutdown();
    }
}
