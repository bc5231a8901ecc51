//! Pseudo-random moving decimation.
//!
//! A record carries only the generator seed, the step policy and the original
//! length; the retained index set is regenerated on demand and never stored.

mod codec;

pub use codec::{read_record, write_record, CodecError, HEADER_LEN, MAGIC, VERSION};

use thiserror::Error;

use crate::prng::{PrngError, StepPolicy, XorShift32};
use crate::signal::{Channel, Signal, SignalError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrmdError {
    #[error(transparent)]
    Prng(#[from] PrngError),
    #[error("original length must be at least 2 (got {0})")]
    TooShort(usize),
    #[error("original length {0} exceeds the 32-bit record field")]
    TooLong(usize),
    #[error("record holds {actual} values but its pattern retains {expected}")]
    CountMismatch { expected: usize, actual: usize },
    #[error("chunk length must be at least 1")]
    ZeroChunkLen,
}

/// Retained positions for one (seed, policy, length) triple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingPattern {
    indices: Vec<usize>,
    seed: u32,
    policy: StepPolicy,
    original_len: usize,
}

impl SamplingPattern {
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn seed(&self) -> u32 {
        self.seed
    }

    pub fn policy(&self) -> StepPolicy {
        self.policy
    }

    pub fn original_len(&self) -> usize {
        self.original_len
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn gather(&self, samples: &[f64]) -> Vec<f64> {
        self.indices.iter().map(|&i| samples[i]).collect()
    }
}

fn check_len(original_len: usize) -> Result<(), PrmdError> {
    if original_len < 2 {
        return Err(PrmdError::TooShort(original_len));
    }
    if original_len > u32::MAX as usize {
        return Err(PrmdError::TooLong(original_len));
    }
    Ok(())
}

/// Walks the step sequence from index 0 until the next index would fall off
/// the end of the signal.
pub fn build_pattern(seed: u32, policy: StepPolicy, original_len: usize) -> Result<SamplingPattern, PrmdError> {
    check_len(original_len)?;
    let mut rng = XorShift32::new(seed)?;
    let mut indices = Vec::with_capacity((original_len as f64 / policy.mean_step()) as usize + 2);
    let mut idx = 0usize;
    while idx < original_len {
        indices.push(idx);
        idx += rng.next_step(policy) as usize;
    }
    Ok(SamplingPattern {
        indices,
        seed,
        policy,
        original_len,
    })
}

/// Decimated samples plus everything needed to regenerate their positions.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedRecord {
    values: Vec<f32>,
    seed: u32,
    policy: StepPolicy,
    original_len: usize,
    sample_rate_hz: u32,
    channel: Channel,
}

impl CompressedRecord {
    /// Assembles a record, checking the value count against the regenerated
    /// pattern.
    pub fn new(
        values: Vec<f32>,
        seed: u32,
        policy: StepPolicy,
        original_len: usize,
        sample_rate_hz: u32,
        channel: Channel,
    ) -> Result<Self, PrmdError> {
        let pattern = build_pattern(seed, policy, original_len)?;
        if pattern.len() != values.len() {
            return Err(PrmdError::CountMismatch {
                expected: pattern.len(),
                actual: values.len(),
            });
        }
        Ok(Self {
            values,
            seed,
            policy,
            original_len,
            sample_rate_hz,
            channel,
        })
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn seed(&self) -> u32 {
        self.seed
    }

    pub fn policy(&self) -> StepPolicy {
        self.policy
    }

    pub fn original_len(&self) -> usize {
        self.original_len
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    pub fn pattern(&self) -> SamplingPattern {
        build_pattern(self.seed, self.policy, self.original_len)
            .expect("record invariants were checked at construction")
    }

    /// Original length over retained count.
    pub fn achieved_cr(&self) -> f64 {
        self.original_len as f64 / self.values.len() as f64
    }

    pub fn values_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64).collect()
    }
}

/// Chunk-at-a-time decimator. Generator state persists across chunk
/// boundaries, so output is identical to a whole-signal gather.
#[derive(Debug, Clone)]
pub struct StreamingDecimator {
    rng: XorShift32,
    policy: StepPolicy,
    next_keep: usize,
    consumed: usize,
}

impl StreamingDecimator {
    pub fn new(seed: u32, policy: StepPolicy) -> Result<Self, PrmdError> {
        Ok(Self {
            rng: XorShift32::new(seed)?,
            policy,
            next_keep: 0,
            consumed: 0,
        })
    }

    /// Appends the retained samples of `chunk` to `out`.
    pub fn push_chunk(&mut self, chunk: &[f64], out: &mut Vec<f32>) {
        let end = self.consumed + chunk.len();
        while self.next_keep < end {
            out.push(chunk[self.next_keep - self.consumed] as f32);
            self.next_keep += self.rng.next_step(self.policy) as usize;
        }
        self.consumed = end;
    }

    pub fn consumed(&self) -> usize {
        self.consumed
    }
}

/// Decimates a whole signal.
pub fn compress(signal: &Signal, seed: u32, policy: StepPolicy) -> Result<CompressedRecord, PrmdError> {
    let pattern = build_pattern(seed, policy, signal.len())?;
    let samples = signal.samples();
    let values = pattern.indices().iter().map(|&i| samples[i] as f32).collect();
    Ok(CompressedRecord {
        values,
        seed,
        policy,
        original_len: signal.len(),
        sample_rate_hz: signal.sample_rate_hz(),
        channel: signal.channel(),
    })
}

/// Decimates a signal delivered in `chunk_len` buffers.
pub fn compress_streaming(
    signal: &Signal,
    seed: u32,
    policy: StepPolicy,
    chunk_len: usize,
) -> Result<CompressedRecord, PrmdError> {
    check_len(signal.len())?;
    let chunks = signal.chunks(chunk_len).map_err(|e| match e {
        SignalError::ZeroChunkLen => PrmdError::ZeroChunkLen,
        _ => PrmdError::TooShort(signal.len()),
    })?;
    let mut decimator = StreamingDecimator::new(seed, policy)?;
    let mut values = Vec::new();
    for chunk in chunks {
        decimator.push_chunk(chunk, &mut values);
    }
    Ok(CompressedRecord {
        values,
        seed,
        policy,
        original_len: signal.len(),
        sample_rate_hz: signal.sample_rate_hz(),
        channel: signal.channel(),
    })
}
