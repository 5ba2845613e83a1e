//! Blocking JSON client for the gateway.

use std::time::Duration;

use reqwest::blocking::{Client, Response};
use reqwest::Method;
use serde_json::Value;

use crate::error::CliError;

pub struct ApiClient {
    base: String,
    token: Option<String>,
    http: Client,
}

impl ApiClient {
    pub fn new(base: &str, token: Option<String>) -> Result<ApiClient, CliError> {
        let http = Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| CliError::Transport(e.to_string()))?;
        Ok(ApiClient { base: base.trim_end_matches('/').to_string(), token, http })
    }

    pub fn get(&self, path: &str) -> Result<Value, CliError> {
        self.send(Method::GET, path, None)
    }

    pub fn post(&self, path: &str, body: &Value) -> Result<Value, CliError> {
        self.send(Method::POST, path, Some(body))
    }

    pub fn patch(&self, path: &str, body: &Value) -> Result<Value, CliError> {
        self.send(Method::PATCH, path, Some(body))
    }

    pub fn put(&self, path: &str, body: &Value) -> Result<Value, CliError> {
        self.send(Method::PUT, path, Some(body))
    }

    pub fn send(&self, method: Method, path: &str, body: Option<&Value>) -> Result<Value, CliError> {
        let mut req = self.http.request(method, format!("{}{path}", self.base));
        if let Some(token) = &self.token {
            req = req.bearer_auth(token);
        }
        if let Some(body) = body {
            req = req.json(body);
        }
        let resp = req.send().map_err(|e| CliError::Transport(e.to_string()))?;
        decode(resp)
    }
}

fn decode(resp: Response) -> Result<Value, CliError> {
    let status = resp.status();
    let bytes = resp.bytes().map_err(|e| CliError::Transport(e.to_string()))?;
    let value: Option<Value> = serde_json::from_slice(&bytes).ok();
    if status.is_success() {
        return value.ok_or_else(|| CliError::Other(format!("server sent non-JSON body ({status})")));
    }
    let field = |name: &str| {
        value.as_ref().and_then(|v| v[name].as_str()).map(str::to_string)
    };
    Err(CliError::Api {
        status: status.as_u16(),
        code: field("code").unwrap_or_else(|| format!("Http{}", status.as_u16())),
        message: field("message").unwrap_or_else(|| String::from_utf8_lossy(&bytes).into_owned()),
    })
}
