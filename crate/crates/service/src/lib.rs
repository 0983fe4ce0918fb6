//! HTTP completion service (`POST /v1/completion`, `GET /healthz`) and a
//! blocking client for it.

pub mod args;
pub mod client;
pub mod server;

pub use args::{BackendKind, ServeArgs};
pub use client::{HttpCompleter, RemoteBackend};
pub use server::{router, AppState, GenerateRequest, Health, MAX_BODY_BYTES};
