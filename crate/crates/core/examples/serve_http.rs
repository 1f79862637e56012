//! Serves the fixture exercises over HTTP with an in-memory event log.
//!
//! ```text
//! cargo run --example serve_http
//! curl localhost:8080/exercises
//! curl -X POST localhost:8080/exercises/countdown/submissions \
//!      -H 'content-type: application/json' \
//!      -d '{"student":"ana","payload":{"code":"read n while n > 0 { print n n = n - 1 }"}}'
//! ```

use std::sync::Arc;

use exforge::service::{router, Registry, Service, ServiceConfig};
use exforge::stats::EventLog;

#[tokio::main]
async fn main() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/exercises");
    let config = ServiceConfig { admin_token: std::env::var("EXFORGE_ADMIN_TOKEN").ok(), ..ServiceConfig::default() };
    let registry = Registry::load_dir(dir.as_ref(), &config.runners).expect("fixtures load");
    let service = Arc::new(Service::new(registry, EventLog::in_memory(), config));

    let addr = std::env::var("ADDR").unwrap_or_else(|_| "127.0.0.1:8080".into());
    let listener = tokio::net::TcpListener::bind(&addr).await.expect("bind");
    println!("listening on http://{addr}");
    axum::serve(listener, router(service)).await.unwrap();
}
