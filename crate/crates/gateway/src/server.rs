//! Wires store, cache, queue, workers and autoscaler behind the router.

use std::net::SocketAddr;
use std::sync::mpsc::{self, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use payroll_cache::{statement_prefix, Cache, CacheConfig, HISTORY_PREFIX};
use payroll_core::clock::{Clock, SystemClock};
use payroll_core::RuleSetCatalog;
use payroll_datastore::{Store, StoreError};
use payroll_taskqueue::{
    Autoscaler, JobQueue, PayrollRunHandler, PolicyError, QueueConfig, WorkerPool,
};
use thiserror::Error;

use crate::app::{router, AppState, RequestCounters};
use crate::auth::TokenTable;
use crate::config::GatewayConfig;
use crate::reqlog::RequestLog;
use crate::routing::{RouteError, TrafficTable};
use crate::versions::VersionRegistry;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("scaling policy: {0}")]
    Policy(#[from] PolicyError),
    #[error("traffic weights: {0}")]
    Traffic(#[from] RouteError),
    #[error("config: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub struct Gateway {
    state: Arc<AppState>,
    pool: Arc<WorkerPool>,
    scaler: Arc<Mutex<Autoscaler>>,
    tick: Duration,
    ticker: Mutex<Option<(mpsc::Sender<()>, JoinHandle<()>)>>,
}

impl Gateway {
    /// Opens the store and starts the worker pool at the policy minimum.
    pub fn open(config: &GatewayConfig) -> Result<Gateway, GatewayError> {
        let log = match &config.request_log {
            Some(path) => RequestLog::to_file(path)?,
            None => RequestLog::discard(),
        };
        Gateway::open_with(config, Arc::new(SystemClock::default()), log)
    }

    pub fn open_with(
        config: &GatewayConfig,
        clock: Arc<dyn Clock>,
        log: RequestLog,
    ) -> Result<Gateway, GatewayError> {
        let versions = VersionRegistry::builtin();
        config.traffic.validate(versions.labels())?;
        let policy = config.scaling.policy();
        let scaler = Autoscaler::new(policy)?;
        if config.cache.capacity == 0 {
            return Err(GatewayError::Config("cache.capacity must be at least 1".into()));
        }

        let mut catalog = RuleSetCatalog::default();
        for set in &config.rulesets {
            catalog.insert(set.clone());
        }
        let catalog = Arc::new(catalog);
        std::fs::create_dir_all(&config.store_dir)?;
        let store = Arc::new(Store::open(&config.store_dir)?);
        let cache = Arc::new(Cache::new(
            CacheConfig {
                capacity: config.cache.capacity,
                default_ttl: Duration::from_secs(config.cache.ttl_secs),
            },
            clock.clone(),
        ));
        let queue = Arc::new(JobQueue::new(
            QueueConfig {
                capacity: config.queue.capacity,
                max_attempts: config.queue.max_attempts.max(1),
                backoff: config.queue.backoff_ms.iter().map(|&ms| Duration::from_millis(ms)).collect(),
            },
            clock,
        ));

        let invalidate = cache.clone();
        let handler = PayrollRunHandler::new(store.clone(), catalog.clone()).on_appended(Arc::new(
            move |run| {
                invalidate.invalidate(&statement_prefix(&run.period.to_string()));
                invalidate.invalidate(HISTORY_PREFIX);
            },
        ));
        let pool = Arc::new(WorkerPool::start(queue.clone(), Arc::new(handler), policy.min_workers));

        let state = Arc::new(AppState {
            store,
            cache,
            queue,
            catalog,
            tokens: TokenTable::new(config.tokens.clone()),
            traffic: TrafficTable::new(config.traffic.clone()),
            versions,
            log,
            requests: RequestCounters::default(),
        });
        Ok(Gateway {
            state,
            pool,
            scaler: Arc::new(Mutex::new(scaler)),
            tick: config.scaling.tick(),
            ticker: Mutex::new(None),
        })
    }

    pub fn state(&self) -> &Arc<AppState> {
        &self.state
    }

    pub fn router(&self) -> axum::Router {
        router(self.state.clone())
    }

    pub fn workers(&self) -> usize {
        self.pool.workers()
    }

    /// One autoscaler step against the current queue depth.
    pub fn autoscale_tick(&self) -> usize {
        scale_once(&self.scaler, &self.pool, &self.state.queue)
    }

    /// Runs [`Self::autoscale_tick`] on a background thread every tick interval.
    pub fn start_autoscaler(&self) {
        let mut ticker = self.ticker.lock().unwrap_or_else(|e| e.into_inner());
        if ticker.is_some() {
            return;
        }
        let (tx, rx) = mpsc::channel::<()>();
        let (scaler, pool, queue, tick) =
            (self.scaler.clone(), self.pool.clone(), self.state.queue.clone(), self.tick);
        let thread = std::thread::spawn(move || loop {
            match rx.recv_timeout(tick) {
                Err(RecvTimeoutError::Timeout) => {
                    scale_once(&scaler, &pool, &queue);
                }
                _ => break,
            }
        });
        *ticker = Some((tx, thread));
    }

    /// Blocks until every queued job has finished.
    pub fn wait_idle(&self) {
        self.pool.wait_idle();
    }

    pub fn shutdown(&self) {
        if let Some((tx, thread)) = self.ticker.lock().unwrap_or_else(|e| e.into_inner()).take() {
            let _ = tx.send(());
            let _ = thread.join();
        }
        self.pool.shutdown();
    }
}

fn scale_once(scaler: &Mutex<Autoscaler>, pool: &WorkerPool, queue: &JobQueue) -> usize {
    let mut scaler = scaler.lock().unwrap_or_else(|e| e.into_inner());
    let current = pool.workers();
    let next = scaler.tick(queue.depth(), current);
    if next != current {
        log::info!("autoscaler: {current} -> {next} workers (depth {})", queue.depth());
        pool.set_workers(next);
    }
    next
}

/// A gateway serving HTTP on its own runtime thread.
pub struct ServerHandle {
    addr: SocketAddr,
    gateway: Arc<Gateway>,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<JoinHandle<std::io::Result<()>>>,
}

impl ServerHandle {
    /// Binds `listen` (port 0 picks a free port) and serves until stopped.
    pub fn start(gateway: Gateway, listen: &str) -> Result<ServerHandle, GatewayError> {
        let listener = std::net::TcpListener::bind(listen)?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let gateway = Arc::new(gateway);
        gateway.start_autoscaler();
        let app = gateway.router();
        let (tx, rx) = tokio::sync::oneshot::channel::<()>();
        let thread = std::thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(listener)?;
                axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        let _ = rx.await;
                    })
                    .await
            })
        });
        Ok(ServerHandle { addr, gateway, shutdown: Some(tx), thread: Some(thread) })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn gateway(&self) -> &Gateway {
        &self.gateway
    }

    /// Blocks until the server exits.
    pub fn join(mut self) -> std::io::Result<()> {
        let result = self.thread.take().map_or(Ok(()), |t| t.join().unwrap_or(Ok(())));
        self.gateway.shutdown();
        result
    }

    pub fn stop(mut self) {
        self.stop_inner();
    }

    fn stop_inner(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
        self.gateway.shutdown();
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.stop_inner();
    }
}
