//! Uniformly sampled waveforms, PCM file I/O and the chunked delivery model
//! used by the streaming decimator.

use std::fmt;
use std::io;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sample rate used for heart-sound (PCG) acquisition.
pub const PCG_RATE_HZ: u32 = 4000;
/// Sample rate used for respiratory-sound acquisition.
pub const RESPIRATORY_RATE_HZ: u32 = 8000;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("input not found: {0}")]
    NotFound(String),
    #[error("unreadable waveform file: {0}")]
    Unreadable(String),
    #[error("unsupported encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("empty payload")]
    EmptyPayload,
    #[error("empty signal")]
    EmptySignal,
    #[error("sample rate must be positive")]
    ZeroSampleRate,
    #[error("channel index {index} out of range for a {channels}-channel file")]
    ChannelOutOfRange { index: u16, channels: u16 },
    #[error("chunk length must be at least 1")]
    ZeroChunkLen,
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("unsupported bit depth {0} (expected 16 or 32)")]
    UnsupportedBitDepth(u16),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

/// Kind of physiological source a waveform came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Pcg,
    Respiratory,
    Biopotential,
    Ppg,
    ImuAxis,
    Generic,
}

impl Channel {
    pub const ALL: [Channel; 6] = [
        Channel::Pcg,
        Channel::Respiratory,
        Channel::Biopotential,
        Channel::Ppg,
        Channel::ImuAxis,
        Channel::Generic,
    ];

    /// Stable one-byte code used by the record format.
    pub fn code(self) -> u8 {
        match self {
            Channel::Pcg => 0,
            Channel::Respiratory => 1,
            Channel::Biopotential => 2,
            Channel::Ppg => 3,
            Channel::ImuAxis => 4,
            Channel::Generic => 5,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::Pcg => "pcg",
            Channel::Respiratory => "respiratory",
            Channel::Biopotential => "biopotential",
            Channel::Ppg => "ppg",
            Channel::ImuAxis => "imu_axis",
            Channel::Generic => "generic",
        }
    }

    /// Preset acquisition rate, for the channels that have one.
    pub fn preset_rate_hz(self) -> Option<u32> {
        match self {
            Channel::Pcg => Some(PCG_RATE_HZ),
            Channel::Respiratory => Some(RESPIRATORY_RATE_HZ),
            _ => None,
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Channel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown channel '{s}'"))
    }
}

/// A uniformly sampled real-valued waveform, amplitudes nominally in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    sample_rate_hz: u32,
    channel: Channel,
}

impl Signal {
    /// Builds a signal at an arbitrary rate.
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32, channel: Channel) -> Result<Self, SignalError> {
        if sample_rate_hz == 0 {
            return Err(SignalError::ZeroSampleRate);
        }
        if samples.is_empty() {
            return Err(SignalError::EmptySignal);
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(SignalError::NonFinite(i));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
            channel,
        })
    }

    /// Builds a signal at the channel's preset acquisition rate (4 kHz for
    /// PCG, 8 kHz for respiratory). Channels without a preset fall back to
    /// `fallback_rate_hz`.
    pub fn preset(samples: Vec<f64>, channel: Channel, fallback_rate_hz: u32) -> Result<Self, SignalError> {
        let rate = channel.preset_rate_hz().unwrap_or(fallback_rate_hz);
        Self::new(samples, rate, channel)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    /// Splits the samples into consecutive slices of `chunk_len`; the last
    /// one may be short.
    pub fn chunks(&self, chunk_len: usize) -> Result<ChunkStream<'_>, SignalError> {
        ChunkStream::new(self, chunk_len)
    }
}

/// Fixed-size buffer delivery over a signal, the way a DMA double buffer
/// hands samples to the main core.
#[derive(Debug, Clone)]
pub struct ChunkStream<'a> {
    source: &'a Signal,
    chunk_len: usize,
    pos: usize,
}

impl<'a> ChunkStream<'a> {
    pub fn new(source: &'a Signal, chunk_len: usize) -> Result<Self, SignalError> {
        if chunk_len == 0 {
            return Err(SignalError::ZeroChunkLen);
        }
        if source.is_empty() {
            return Err(SignalError::EmptySignal);
        }
        Ok(Self {
            source,
            chunk_len,
            pos: 0,
        })
    }

    pub fn chunk_len(&self) -> usize {
        self.chunk_len
    }

    /// Number of chunks the stream emits in total.
    pub fn chunk_count(&self) -> usize {
        self.source.len().div_ceil(self.chunk_len)
    }
}

impl<'a> Iterator for ChunkStream<'a> {
    type Item = &'a [f64];

    fn next(&mut self) -> Option<Self::Item> {
        let samples = self.source.samples();
        if self.pos >= samples.len() {
            return None;
        }
        let end = (self.pos + self.chunk_len).min(samples.len());
        let chunk = &samples[self.pos..end];
        self.pos = end;
        Some(chunk)
    }
}

/// Reads one channel of a 16- or 32-bit integer PCM RIFF file and scales it
/// to [-1, 1] by the type's maximum magnitude (32768 or 2^31).
pub fn load_signal(path: &Path, channel: Channel, channel_index: u16) -> Result<Signal, SignalError> {
    if !path.exists() {
        return Err(SignalError::NotFound(path.display().to_string()));
    }
    let reader = hound::WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) => SignalError::Io(io),
        hound::Error::Unsupported => SignalError::UnsupportedEncoding("unsupported wav layout".into()),
        other => SignalError::Unreadable(other.to_string()),
    })?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int {
        return Err(SignalError::UnsupportedEncoding("floating-point PCM".into()));
    }
    if spec.bits_per_sample != 16 && spec.bits_per_sample != 32 {
        return Err(SignalError::UnsupportedEncoding(format!(
            "{}-bit integer PCM",
            spec.bits_per_sample
        )));
    }
    if spec.channels == 0 || spec.channels > 2 {
        return Err(SignalError::UnsupportedEncoding(format!("{} channels", spec.channels)));
    }
    if channel_index >= spec.channels {
        return Err(SignalError::ChannelOutOfRange {
            index: channel_index,
            channels: spec.channels,
        });
    }

    let stride = spec.channels as usize;
    let offset = channel_index as usize;
    let scale = if spec.bits_per_sample == 16 {
        32768.0
    } else {
        2_147_483_648.0
    };
    let raw: Vec<i32> = reader
        .into_samples::<i32>()
        .collect::<Result<_, _>>()
        .map_err(|e| SignalError::Unreadable(e.to_string()))?;
    let samples: Vec<f64> = raw
        .iter()
        .skip(offset)
        .step_by(stride)
        .map(|&v| v as f64 / scale)
        .collect();
    if samples.is_empty() {
        return Err(SignalError::EmptyPayload);
    }
    Signal::new(samples, spec.sample_rate, channel)
}

/// Writes a mono integer PCM file. Values are clamped to the representable
/// range after scaling, so anything outside [-1, 1) saturates.
pub fn write_signal(path: &Path, signal: &Signal, bits: u16) -> Result<(), SignalError> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate_hz(),
        bits_per_sample: bits,
        sample_format: hound::SampleFormat::Int,
    };
    let map_err = |e: hound::Error| match e {
        hound::Error::IoError(io) => SignalError::Io(io),
        other => SignalError::Unreadable(other.to_string()),
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(map_err)?;
    match bits {
        16 => {
            for &v in signal.samples() {
                writer.write_sample(quantize_i16(v)).map_err(map_err)?;
            }
        }
        32 => {
            for &v in signal.samples() {
                writer.write_sample(quantize_i32(v)).map_err(map_err)?;
            }
        }
        other => return Err(SignalError::UnsupportedBitDepth(other)),
    }
    writer.finalize().map_err(map_err)
}

fn quantize_i16(v: f64) -> i16 {
    (v * 32768.0).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

fn quantize_i32(v: f64) -> i32 {
    (v * 2_147_483_648.0)
        .round()
        .clamp(i32::MIN as f64, i32::MAX as f64) as i32
}
