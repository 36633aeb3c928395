//! Alice's classical message to Bob.
//!
//! Frame layout:
//!
//! ```text
//! magic "XBEL" | version (1) | n | ceil(2n/8) payload bytes
//! ```
//!
//! The payload packs one 2-bit code per slot, slot 0 first, starting at the
//! most significant bit. Codes are Ψ⁺=00, Ψ⁻=01, Φ⁺=10, Φ⁻=11. Unused
//! trailing bits must be zero.

use std::io::{ErrorKind, Read, Write};

use crate::bell::BellKind;
use crate::error::{Error, Result};

pub const FRAME_MAGIC: [u8; 4] = *b"XBEL";
pub const FRAME_VERSION: u8 = 1;
pub const HEADER_LEN: usize = 6;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassicalMessage {
    pub outcome: Vec<BellKind>,
}

fn payload_len(n: usize) -> usize {
    (2 * n).div_ceil(8)
}

impl ClassicalMessage {
    pub fn new(outcome: Vec<BellKind>) -> Result<Self> {
        if outcome.is_empty() || outcome.len() > u8::MAX as usize {
            return Err(Error::ArityError {
                expected: outcome.len().clamp(1, u8::MAX as usize),
                got: outcome.len(),
            });
        }
        Ok(ClassicalMessage { outcome })
    }

    pub fn n(&self) -> usize {
        self.outcome.len()
    }

    pub fn encode(&self) -> Vec<u8> {
        let n = self.n();
        let mut frame = Vec::with_capacity(HEADER_LEN + payload_len(n));
        frame.extend_from_slice(&FRAME_MAGIC);
        frame.push(FRAME_VERSION);
        frame.push(n as u8);
        let mut payload = vec![0u8; payload_len(n)];
        for (m, kind) in self.outcome.iter().enumerate() {
            let bit = 2 * m;
            payload[bit / 8] |= kind.code() << (6 - bit % 8);
        }
        frame.extend_from_slice(&payload);
        frame
    }

    /// Decodes exactly one frame occupying all of `bytes`.
    pub fn decode(bytes: &[u8], expected_n: usize) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::ProtocolViolation(format!(
                "frame of {} bytes is shorter than the header",
                bytes.len()
            )));
        }
        let n = check_header(&bytes[..HEADER_LEN], expected_n)?;
        let body = &bytes[HEADER_LEN..];
        if body.len() != payload_len(n) {
            return Err(Error::ProtocolViolation(format!(
                "payload is {} bytes, expected {} for n = {n}",
                body.len(),
                payload_len(n)
            )));
        }
        decode_payload(body, n)
    }

    pub fn write_to<W: Write + ?Sized>(&self, w: &mut W) -> Result<()> {
        w.write_all(&self.encode())?;
        w.flush()?;
        Ok(())
    }

    /// Reads one frame from a stream. End of stream before a full frame is
    /// reported as [`Error::SessionAborted`].
    pub fn read_from<R: Read + ?Sized>(r: &mut R, expected_n: usize) -> Result<Self> {
        let mut header = [0u8; HEADER_LEN];
        read_full(r, &mut header, "header")?;
        let n = check_header(&header, expected_n)?;
        let mut body = vec![0u8; payload_len(n)];
        read_full(r, &mut body, "payload")?;
        decode_payload(&body, n)
    }
}

fn read_full<R: Read + ?Sized>(r: &mut R, buf: &mut [u8], part: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        ErrorKind::UnexpectedEof => {
            Error::SessionAborted(format!("channel closed while reading the frame {part}"))
        }
        _ => Error::from(e),
    })
}

fn check_header(header: &[u8], expected_n: usize) -> Result<usize> {
    if header[..4] != FRAME_MAGIC {
        return Err(Error::ProtocolViolation(format!(
            "bad magic {:02x?}",
            &header[..4]
        )));
    }
    if header[4] != FRAME_VERSION {
        return Err(Error::ProtocolViolation(format!(
            "unsupported frame version {}",
            header[4]
        )));
    }
    let n = header[5] as usize;
    if n != expected_n {
        return Err(Error::ProtocolViolation(format!(
            "frame carries {n} outcomes, expected {expected_n}"
        )));
    }
    Ok(n)
}

fn decode_payload(body: &[u8], n: usize) -> Result<ClassicalMessage> {
    let outcome = (0..n)
        .map(|m| {
            let bit = 2 * m;
            let code = (body[bit / 8] >> (6 - bit % 8)) & 0b11;
            BellKind::from_code(code).expect("two-bit code")
        })
        .collect();
    let used_bits = 2 * n;
    if used_bits % 8 != 0 {
        let last = body[body.len() - 1];
        let spare_mask = (1u8 << (8 - used_bits % 8)) - 1;
        if last & spare_mask != 0 {
            return Err(Error::ProtocolViolation("nonzero padding bits".into()));
        }
    }
    ClassicalMessage::new(outcome)
}
