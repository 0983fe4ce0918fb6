//! Stdio language server: JSON-RPC 2.0 framing plus a driver that feeds
//! editor events into the completion orchestrator.

pub mod server;
pub mod transport;

pub use server::{run, LspArgs, ServerOptions};
pub use transport::{read_message, write_message};
