//! Trace and catalog files, the LLM-backed generator and the experiment
//! runner behind the `agent-guide` command.

pub mod experiment;
pub mod files;
pub mod llm;
pub mod report;

pub use experiment::{run_experiment, ExperimentConfig, GeneratorKind};
pub use files::{read_catalog, read_profiles, read_trace, write_catalog, write_trace, FileError};
pub use llm::{ChatMessage, ChatTransport, HttpTransport, LlmEndpointConfig, LlmError, LlmGenerator};
pub use report::{ExperimentReport, ProfileAverage, ReportFormat, ReportRow};
