//! Scripted streaming engine for exercising the latency harness.
//!
//! Speaks the chunk protocol on stdout. In `ok` mode it reads the text line,
//! then emits one chunk per schedule line at `<arrival_ms>` after the text
//! arrived, each carrying `<audio_ms>` of silence. The other modes misbehave
//! in one specific way each.

use std::io::{self, BufRead, Read, Write};
use std::path::PathBuf;
use std::thread;
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use clap::{Parser, ValueEnum};

use voxgauge::latency::protocol::{self, MAGIC};
use voxgauge::latency::Schedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Ok,
    /// Valid handshake, then a frame with the wrong magic.
    BadMagic,
    /// Frame header promising more payload than is sent, then exit 0.
    Truncated,
    /// Odd payload length.
    OddLength,
    /// Chunks but no end marker.
    NoEnd,
    /// Garbage instead of the handshake line.
    NoHandshake,
    /// One chunk, then exit with status 3.
    Crash,
    /// Handshake, then never writes again.
    Hang,
    /// Never writes anything.
    Silent,
    /// Copies `--raw-file` to stdout verbatim.
    Raw,
}

#[derive(Debug, Parser)]
#[command(name = "voxgauge-mock-engine")]
struct Args {
    #[arg(long, value_enum, default_value_t = Mode::Ok)]
    mode: Mode,
    /// `<arrival_ms> <audio_ms>` lines; one immediate 100 ms chunk if absent.
    #[arg(long)]
    schedule: Option<PathBuf>,
    #[arg(long, default_value_t = 16_000)]
    sample_rate: u32,
    #[arg(long)]
    raw_file: Option<PathBuf>,
}

fn main() -> Result<()> {
    let args = Args::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match args.mode {
        Mode::Raw => {
            let path = args.raw_file.context("--raw-file is required in raw mode")?;
            out.write_all(&std::fs::read(path)?)?;
            out.flush()?;
            return Ok(());
        }
        Mode::Silent => sleep_forever(),
        Mode::NoHandshake => {
            out.write_all(b"HELLO 16000\n")?;
            out.flush()?;
            return Ok(());
        }
        _ => {}
    }

    protocol::write_handshake(&mut out, args.sample_rate)?;
    out.flush()?;
    let mut text = String::new();
    io::stdin().lock().read_line(&mut text)?;
    let start = Instant::now();

    let chunk = |ms: f64| vec![0i16; (ms * args.sample_rate as f64 / 1000.0).round() as usize];
    match args.mode {
        Mode::Hang => sleep_forever(),
        Mode::BadMagic => {
            out.write_all(b"JUNK")?;
            out.write_all(&8u32.to_le_bytes())?;
            out.write_all(&[0u8; 8])?;
        }
        Mode::Truncated => {
            out.write_all(MAGIC)?;
            out.write_all(&3200u32.to_le_bytes())?;
            out.write_all(&[0u8; 100])?;
        }
        Mode::OddLength => {
            out.write_all(MAGIC)?;
            out.write_all(&3u32.to_le_bytes())?;
            out.write_all(&[0u8; 3])?;
            protocol::write_end(&mut out)?;
        }
        Mode::Crash => {
            protocol::write_frame(&mut out, &chunk(100.0))?;
            out.flush()?;
            eprintln!("mock engine: simulated crash");
            std::process::exit(3);
        }
        Mode::Ok | Mode::NoEnd => {
            let schedule = match &args.schedule {
                Some(path) => Schedule::load(path)?,
                None => Schedule { chunks: vec![(0.0, 100.0)] },
            };
            for &(arrival_ms, audio_ms) in &schedule.chunks {
                let due = Duration::from_secs_f64(arrival_ms / 1000.0);
                if let Some(wait) = due.checked_sub(start.elapsed()) {
                    thread::sleep(wait);
                }
                protocol::write_frame(&mut out, &chunk(audio_ms))?;
                out.flush()?;
            }
            if args.mode == Mode::Ok {
                protocol::write_end(&mut out)?;
            }
        }
        Mode::Raw | Mode::Silent | Mode::NoHandshake => unreachable!(),
    }
    out.flush()?;
    // Drain stdin so the harness never sees a broken pipe.
    io::copy(&mut io::stdin().lock().take(1 << 20), &mut io::sink())?;
    Ok(())
}

fn sleep_forever() -> ! {
    loop {
        thread::sleep(Duration::from_secs(3600));
    }
}
