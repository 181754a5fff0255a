//! Streaming latency and real-time factor measurement.
//!
//! Engines are black boxes spoken to over a small framed protocol (see
//! [`protocol`]). Each measured run records when every chunk arrived and how
//! much audio it carried; reports average those runs. A schedule replay mode
//! drives the same arithmetic from a file on a virtual clock.

mod harness;
pub mod protocol;
mod record;

use std::time::Duration;

use thiserror::Error;

pub use harness::{run_bench, run_once, BenchConfig, DEFAULT_TIMEOUT};
pub use record::{
    chunk_rtfs, render_latency, replay_schedule, rtf, ChunkEvent, LatencyReport, RunRecord, Schedule,
};

#[derive(Debug, Error)]
pub enum LatencyError {
    #[error("audio duration must be positive")]
    ZeroDuration,
    #[error("protocol error: {0}")]
    Protocol(String),
    /// The stream ended inside a frame or before the end marker.
    #[error("protocol error: stream ended before the end marker")]
    UnexpectedEof,
    #[error("engine exited with {status} before the end marker{}", stderr_suffix(.stderr))]
    EngineCrashed { status: String, stderr: String },
    #[error("engine did not finish within {0:?}")]
    Timeout(Duration),
    #[error("could not start engine `{command}`: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error("engine i/o: {0}")]
    Io(#[source] std::io::Error),
    #[error("schedule line {line}: {reason}")]
    Schedule { line: usize, reason: String },
    #[error("invalid benchmark configuration: {0}")]
    InvalidConfig(String),
    #[error("run produced no audio chunks")]
    NoChunks,
}

impl LatencyError {
    /// Framing problems, including streams cut short by a clean exit.
    pub fn is_protocol(&self) -> bool {
        matches!(self, LatencyError::Protocol(_) | LatencyError::UnexpectedEof)
    }
}

fn stderr_suffix(stderr: &str) -> String {
    let tail = stderr.trim();
    if tail.is_empty() {
        String::new()
    } else {
        format!(": {}", tail.lines().last().unwrap_or(tail))
    }
}
