//! Wall-clock benchmarking of engine processes.

use std::io::{BufReader, Read, Write};
use std::process::{Child, Command, ExitStatus, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use super::protocol::{payload_duration_s, read_frame, read_handshake};
use super::{ChunkEvent, LatencyError, LatencyReport, RunRecord};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    /// Program followed by its arguments.
    pub command: Vec<String>,
    pub text: String,
    pub runs: usize,
    /// Count the first run instead of discarding it as warm-up.
    pub include_warmup: bool,
    /// Per-run limit covering start-up, generation and exit.
    pub timeout: Duration,
}

impl BenchConfig {
    pub fn new(command: Vec<String>, text: impl Into<String>) -> Self {
        Self { command, text: text.into(), runs: 1, include_warmup: false, timeout: DEFAULT_TIMEOUT }
    }

    fn validate(&self) -> Result<(), LatencyError> {
        if self.command.is_empty() {
            return Err(LatencyError::InvalidConfig("empty engine command".into()));
        }
        if self.runs == 0 {
            return Err(LatencyError::InvalidConfig("runs must be at least 1".into()));
        }
        if self.text.contains('\n') {
            return Err(LatencyError::InvalidConfig("text must be a single line".into()));
        }
        if self.timeout.is_zero() {
            return Err(LatencyError::InvalidConfig("timeout must be positive".into()));
        }
        Ok(())
    }
}

enum Event {
    Handshake(u32),
    Chunk(u32, Instant),
    End(Instant),
    Failed(LatencyError),
}

fn reader_loop(stdout: impl Read, tx: mpsc::Sender<Event>) {
    let mut r = BufReader::new(stdout);
    match read_handshake(&mut r) {
        Ok(sr) => {
            if tx.send(Event::Handshake(sr)).is_err() {
                return;
            }
        }
        Err(e) => {
            let _ = tx.send(Event::Failed(e));
            return;
        }
    }
    loop {
        let event = match read_frame(&mut r) {
            Ok(0) => Event::End(Instant::now()),
            Ok(len) => Event::Chunk(len, Instant::now()),
            Err(e) => Event::Failed(e),
        };
        let done = !matches!(event, Event::Chunk(..));
        if tx.send(event).is_err() || done {
            return;
        }
    }
}

/// A running engine that is killed when dropped.
struct Engine {
    child: Child,
    stderr: Option<thread::JoinHandle<String>>,
}

impl Engine {
    fn wait_until(&mut self, deadline: Instant) -> Option<ExitStatus> {
        loop {
            if let Ok(Some(status)) = self.child.try_wait() {
                return Some(status);
            }
            if Instant::now() >= deadline {
                return None;
            }
            thread::sleep(Duration::from_millis(5));
        }
    }

    fn stderr(&mut self) -> String {
        let _ = self.child.kill();
        let _ = self.child.wait();
        self.stderr.take().and_then(|h| h.join().ok()).unwrap_or_default()
    }

    /// Turns a stream cut short into a crash report when the engine exited
    /// with a failure status.
    fn classify(&mut self, err: LatencyError, deadline: Instant) -> LatencyError {
        if !matches!(err, LatencyError::UnexpectedEof | LatencyError::Io(_)) {
            return err;
        }
        match self.wait_until(deadline) {
            Some(status) if !status.success() => {
                LatencyError::EngineCrashed { status: status.to_string(), stderr: self.stderr() }
            }
            _ => err,
        }
    }
}

impl Drop for Engine {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn recv(rx: &Receiver<Event>, deadline: Instant, timeout: Duration) -> Result<Event, LatencyError> {
    let left = deadline.saturating_duration_since(Instant::now());
    match rx.recv_timeout(left) {
        Ok(e) => Ok(e),
        Err(RecvTimeoutError::Timeout) => Err(LatencyError::Timeout(timeout)),
        Err(RecvTimeoutError::Disconnected) => Err(LatencyError::UnexpectedEof),
    }
}

/// One request against a fresh engine process.
pub fn run_once(config: &BenchConfig) -> Result<RunRecord, LatencyError> {
    config.validate()?;
    let deadline = Instant::now() + config.timeout;
    let mut child = Command::new(&config.command[0])
        .args(&config.command[1..])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|source| LatencyError::Spawn { command: config.command.join(" "), source })?;
    let stdout = child.stdout.take().expect("piped stdout");
    let mut stdin = child.stdin.take().expect("piped stdin");
    let mut stderr_pipe = child.stderr.take().expect("piped stderr");
    let stderr = thread::spawn(move || {
        let mut s = String::new();
        let _ = stderr_pipe.read_to_string(&mut s);
        s
    });
    let mut engine = Engine { child, stderr: Some(stderr) };

    let (tx, rx) = mpsc::channel();
    thread::spawn(move || reader_loop(stdout, tx));

    let sample_rate = match recv(&rx, deadline, config.timeout)? {
        Event::Handshake(sr) => sr,
        Event::Failed(e) => return Err(engine.classify(e, deadline)),
        _ => unreachable!("frames are only read after the handshake"),
    };

    let sent = Instant::now();
    // A failed write means the engine already went away; the reader reports why.
    let _ = stdin.write_all(format!("{}\n", config.text).as_bytes()).and_then(|_| stdin.flush());
    drop(stdin);

    let mut chunks = Vec::new();
    let total_time_s = loop {
        match recv(&rx, deadline, config.timeout)? {
            Event::Chunk(len, at) => chunks.push(ChunkEvent {
                index: chunks.len() + 1,
                arrival_s: at.saturating_duration_since(sent).as_secs_f64(),
                audio_duration_s: payload_duration_s(len, sample_rate),
            }),
            Event::End(at) => break at.saturating_duration_since(sent).as_secs_f64(),
            Event::Failed(e) => return Err(engine.classify(e, deadline)),
            Event::Handshake(_) => unreachable!("handshake is read once"),
        }
    };
    RunRecord::new(sample_rate, chunks, total_time_s)
}

/// Runs the engine `runs` times, one fresh process per run. Unless
/// `include_warmup` is set, an extra first run is made and discarded.
pub fn run_bench(config: &BenchConfig) -> Result<LatencyReport, LatencyError> {
    config.validate()?;
    if !config.include_warmup {
        run_once(config)?;
    }
    let records = (0..config.runs).map(|_| run_once(config)).collect::<Result<Vec<_>, _>>()?;
    LatencyReport::from_runs(records)
}
