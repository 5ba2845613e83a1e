//! HTTP front end for the payroll service.
//!
//! Every route except `/healthz` needs `Authorization: Bearer <token>`.
//! Each authenticated request is assigned an app version by sticky weighted
//! routing and answered with an `X-App-Version` header; statement and
//! history reads also carry `X-Cache: HIT|MISS`. Errors are JSON
//! `{code, message}`.

pub mod app;
pub mod auth;
pub mod config;
pub mod error;
pub mod reqlog;
pub mod routing;
pub mod server;
pub mod versions;

pub use app::{
    AppState, EmployeePatch, HistoryResponse, Metrics, NewEmployee, NewTimeCard, RunAccepted,
    RunRequest, RunView, StatementResponse, TrafficBody, HEADER_CACHE, HEADER_CLIENT,
    HEADER_VERSION,
};
pub use auth::{AuthError, Principal, Role, TokenTable};
pub use config::GatewayConfig;
pub use error::{ApiError, ErrorBody};
pub use reqlog::{RequestLog, RequestRecord};
pub use routing::{RouteError, TrafficTable, VersionWeights};
pub use server::{Gateway, GatewayError, ServerHandle};
pub use versions::{AppVersion, VersionRegistry, V1, V2};
