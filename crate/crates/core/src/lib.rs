//! Code completion core: prompt construction, decoding backends, the
//! editor-side orchestration state machine, telemetry and offline backtests.

pub mod backend;
pub mod backtest;
pub mod config;
pub mod error;
pub mod ngram;
pub mod orchestrator;
pub mod pipeline;
pub mod prompt;
pub mod synth;
pub mod telemetry;
pub mod tokenize;

pub use backend::{Completion, CompletionBackend, ConstantBackend, DecodeParams, OracleBackend, Strategy};
pub use config::PromptConfig;
pub use error::{BackendError, BacktestError, ModelFileError, PromptError, TelemetryError};
pub use ngram::{build_ngram, NGramModel};
pub use pipeline::{Completer, CompletionError, CompletionRequest, CompletionResponse, LocalCompleter};
pub use prompt::{build_inference_input, CursorContext, FileMeta, Language, LcmInput, MASK_TOKEN};
pub use tokenize::{detokenize, tokenize, CodeToken, TokenKind, TriggerSet};
