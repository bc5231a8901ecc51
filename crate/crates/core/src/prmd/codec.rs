//! "PECS" v1 record encoding.
//!
//! ```text
//! offset  size  field
//!      0     4  magic, ASCII "PECS" (0x50 0x45 0x43 0x53)
//!      4     1  version = 1
//!      5     1  step mode (0 literal_eq1, 1 mean_exact)
//!      6     2  cr            u16 LE
//!      8     4  seed          u32 LE
//!     12     4  original_len  u32 LE
//!     16     4  sample_rate   u32 LE
//!     20     1  channel code
//!     21     4  value count   u32 LE
//!     25   4·n  values        f32 LE
//!  25+4n     4  CRC-32 (IEEE) of all preceding bytes, u32 LE
//! ```

use thiserror::Error;

use super::{CompressedRecord, PrmdError};
use crate::prng::{StepMode, StepPolicy};
use crate::signal::Channel;

pub const MAGIC: [u8; 4] = *b"PECS";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 25;
const CRC_LEN: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported record version {0}")]
    UnsupportedVersion(u8),
    #[error("record truncated: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("unknown step mode code {0}")]
    UnknownMode(u8),
    #[error("unknown channel code {0}")]
    UnknownChannel(u8),
    #[error("{0} trailing bytes after checksum")]
    TrailingBytes(usize),
    #[error("invalid record: {0}")]
    Invalid(#[from] PrmdError),
}

pub fn write_record(record: &CompressedRecord) -> Vec<u8> {
    let n = record.values().len();
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * n + CRC_LEN);
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(record.policy().mode().code());
    out.extend_from_slice(&(record.policy().cr() as u16).to_le_bytes());
    out.extend_from_slice(&record.seed().to_le_bytes());
    out.extend_from_slice(&(record.original_len() as u32).to_le_bytes());
    out.extend_from_slice(&record.sample_rate_hz().to_le_bytes());
    out.push(record.channel().code());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    for v in record.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

fn u16_at(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([bytes[at], bytes[at + 1]])
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

/// Decodes a record. Checks run in order: magic, version, length, checksum,
/// field codes, and finally the value count against the regenerated pattern.
pub fn read_record(bytes: &[u8]) -> Result<CompressedRecord, CodecError> {
    if bytes.len() < MAGIC.len() {
        return Err(CodecError::Truncated {
            needed: HEADER_LEN + CRC_LEN,
            available: bytes.len(),
        });
    }
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(CodecError::BadMagic(magic));
    }
    if bytes.len() < 5 {
        return Err(CodecError::Truncated {
            needed: HEADER_LEN + CRC_LEN,
            available: bytes.len(),
        });
    }
    if bytes[4] != VERSION {
        return Err(CodecError::UnsupportedVersion(bytes[4]));
    }
    if bytes.len() < HEADER_LEN {
        return Err(CodecError::Truncated {
            needed: HEADER_LEN + CRC_LEN,
            available: bytes.len(),
        });
    }
    let count = u32_at(bytes, 21) as usize;
    let total = HEADER_LEN + 4 * count + CRC_LEN;
    if bytes.len() < total {
        return Err(CodecError::Truncated {
            needed: total,
            available: bytes.len(),
        });
    }
    if bytes.len() > total {
        return Err(CodecError::TrailingBytes(bytes.len() - total));
    }
    let body = &bytes[..total - CRC_LEN];
    let stored = u32_at(bytes, total - CRC_LEN);
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(CodecError::ChecksumMismatch { stored, computed });
    }

    let mode = StepMode::from_code(bytes[5]).ok_or(CodecError::UnknownMode(bytes[5]))?;
    let cr = u16_at(bytes, 6) as u32;
    let seed = u32_at(bytes, 8);
    let original_len = u32_at(bytes, 12) as usize;
    let sample_rate_hz = u32_at(bytes, 16);
    let channel = Channel::from_code(bytes[20]).ok_or(CodecError::UnknownChannel(bytes[20]))?;
    let values = body[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let policy = StepPolicy::new(mode, cr).map_err(PrmdError::from)?;
    Ok(CompressedRecord::new(
        values,
        seed,
        policy,
        original_len,
        sample_rate_hz,
        channel,
    )?)
}
