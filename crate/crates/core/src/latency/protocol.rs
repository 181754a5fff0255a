//! The chunk wire protocol.
//!
//! ```text
//! engine -> harness   NEUBENCH 1 <sample_rate>\n
//! harness -> engine   <text>\n
//! engine -> harness   ("CHNK" <u32 LE length> <16-bit LE mono PCM>)* "CHNK" 0u32
//! ```

use std::io::{self, BufRead, Read, Write};

use super::LatencyError;

pub const MAGIC: &[u8; 4] = b"CHNK";
pub const HANDSHAKE_PREFIX: &str = "NEUBENCH 1 ";
const MAX_HANDSHAKE_LEN: u64 = 256;

fn protocol(msg: impl Into<String>) -> LatencyError {
    LatencyError::Protocol(msg.into())
}

/// Reads and validates the handshake line, returning the sample rate.
pub fn read_handshake<R: BufRead>(reader: &mut R) -> Result<u32, LatencyError> {
    let mut line = Vec::new();
    reader.by_ref().take(MAX_HANDSHAKE_LEN).read_until(b'\n', &mut line).map_err(LatencyError::Io)?;
    if line.last() != Some(&b'\n') {
        if (line.len() as u64) < MAX_HANDSHAKE_LEN {
            return Err(LatencyError::UnexpectedEof);
        }
        return Err(protocol("missing handshake line"));
    }
    let text = std::str::from_utf8(&line[..line.len() - 1]).map_err(|_| protocol("handshake is not UTF-8"))?;
    let rate = text
        .strip_prefix(HANDSHAKE_PREFIX)
        .ok_or_else(|| protocol(format!("bad handshake {text:?}")))?;
    match rate.parse::<u32>() {
        Ok(sr) if sr > 0 => Ok(sr),
        _ => Err(protocol(format!("bad sample rate in handshake {text:?}"))),
    }
}

pub fn write_handshake<W: Write>(w: &mut W, sample_rate: u32) -> io::Result<()> {
    writeln!(w, "{HANDSHAKE_PREFIX}{sample_rate}")
}

/// Fills `buf` completely. `Ok(false)` means EOF before the first byte.
fn read_exact_or_eof<R: Read>(reader: &mut R, buf: &mut [u8]) -> Result<bool, LatencyError> {
    let mut filled = 0;
    while filled < buf.len() {
        match reader.read(&mut buf[filled..]) {
            Ok(0) if filled == 0 => return Ok(false),
            Ok(0) => return Err(LatencyError::UnexpectedEof),
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(LatencyError::Io(e)),
        }
    }
    Ok(true)
}

/// Reads one frame header and skips its payload, returning the payload
/// length in bytes. A length of zero is the end marker.
pub fn read_frame<R: Read>(reader: &mut R) -> Result<u32, LatencyError> {
    let mut header = [0u8; 8];
    if !read_exact_or_eof(reader, &mut header)? {
        return Err(LatencyError::UnexpectedEof);
    }
    if &header[..4] != MAGIC {
        return Err(protocol(format!("bad frame magic {:02x?}", &header[..4])));
    }
    let len = u32::from_le_bytes([header[4], header[5], header[6], header[7]]);
    if len % 2 != 0 {
        return Err(protocol(format!("odd payload length {len} for 16-bit PCM")));
    }
    let copied = io::copy(&mut reader.by_ref().take(len as u64), &mut io::sink()).map_err(LatencyError::Io)?;
    if copied != len as u64 {
        return Err(LatencyError::UnexpectedEof);
    }
    Ok(len)
}

pub fn write_frame<W: Write>(w: &mut W, pcm: &[i16]) -> io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&((pcm.len() * 2) as u32).to_le_bytes())?;
    let bytes: Vec<u8> = pcm.iter().flat_map(|s| s.to_le_bytes()).collect();
    w.write_all(&bytes)
}

pub fn write_end<W: Write>(w: &mut W) -> io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&0u32.to_le_bytes())
}

/// Seconds of audio in a payload of 16-bit mono samples.
pub fn payload_duration_s(payload_bytes: u32, sample_rate: u32) -> f64 {
    payload_bytes as f64 / (2.0 * sample_rate as f64)
}
