//! Classical sparse reconstruction of decimated records in an orthonormal
//! DCT synthesis basis.
//!
//! The record's pattern is regenerated from its seed, a matrix-free
//! measurement operator (`gather ∘ IDCT`) is built over it, a greedy solver
//! finds a K-sparse coefficient vector and the estimate is its synthesis.
//! Long recordings can be split into fixed frames, each solved on its own.

mod dct;
mod operator;
mod solvers;

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use thiserror::Error;

pub use dct::OrthoDct;
pub use operator::MeasurementOperator;
pub use solvers::{cosamp, omp, SparseSolution};

use crate::prmd::CompressedRecord;
use crate::signal::{Signal, SignalError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReconError {
    #[error("sparsity K must be at least 1")]
    ZeroSparsity,
    #[error("ill-posed: K={k} must be below the measurement count {measurements}")]
    IllPosed { k: usize, measurements: usize },
    #[error("expected {expected} measurements, got {actual}")]
    MeasurementLength { expected: usize, actual: usize },
    #[error("measurements contain non-finite values")]
    NonFiniteMeasurements,
    #[error("invalid operator: {0}")]
    InvalidOperator(String),
    #[error("frame length {frame_len} too short; need at least {min} for this record")]
    FrameTooShort { frame_len: usize, min: usize },
    #[error("max_iter must be at least 1")]
    ZeroIterations,
    #[error("tolerance must be non-negative")]
    NegativeTolerance,
    #[error("the external reconstructor is not embedded; export embeddings instead")]
    ExternalAlgorithm,
    #[error("could not build output signal: {0}")]
    Output(String),
}

impl From<SignalError> for ReconError {
    fn from(e: SignalError) -> Self {
        ReconError::Output(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Algorithm {
    #[default]
    Cosamp,
    Omp,
    /// Hand-off to a learned reconstructor via embedding export.
    External,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Cosamp => "cosamp",
            Algorithm::Omp => "omp",
            Algorithm::External => "external",
        })
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cosamp" => Ok(Algorithm::Cosamp),
            "omp" => Ok(Algorithm::Omp),
            "external" => Ok(Algorithm::External),
            other => Err(format!("unknown algorithm '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructorChoice {
    pub algorithm: Algorithm,
    /// Sparsity budget (per frame when framing is on).
    pub k: usize,
    pub max_iter: usize,
    /// Relative residual at which a solver stops.
    pub tol: f64,
    /// `None` solves the whole record as one transform.
    pub frame_len: Option<usize>,
}

impl Default for ReconstructorChoice {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Cosamp,
            k: 32,
            max_iter: 100,
            tol: 1e-9,
            frame_len: None,
        }
    }
}

impl ReconstructorChoice {
    pub fn cosamp(k: usize) -> Self {
        Self {
            k,
            ..Self::default()
        }
    }

    pub fn omp(k: usize) -> Self {
        Self {
            algorithm: Algorithm::Omp,
            k,
            ..Self::default()
        }
    }

    pub fn with_frame_len(mut self, frame_len: usize) -> Self {
        self.frame_len = Some(frame_len);
        self
    }
}

/// Output of [`reconstruct_detailed`]: the estimate and one solution per frame.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub signal: Signal,
    pub frames: Vec<FrameSolution>,
}

#[derive(Debug, Clone)]
pub struct FrameSolution {
    pub start: usize,
    pub len: usize,
    pub solution: SparseSolution,
}

impl Reconstruction {
    /// False if any frame stopped on max_iter or stagnation above `tol`.
    pub fn all_converged(&self) -> bool {
        self.frames.iter().all(|f| f.solution.converged)
    }

    pub fn ridge_used(&self) -> bool {
        self.frames.iter().any(|f| f.solution.ridge_used)
    }

    /// `frame,iteration,residual` rows, one per accepted solver iteration.
    pub fn write_diagnostics_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "frame,iteration,residual")?;
        for (fi, f) in self.frames.iter().enumerate() {
            for (it, r) in f.solution.residual_history.iter().enumerate() {
                writeln!(w, "{fi},{it},{r:.12e}")?;
            }
        }
        Ok(())
    }
}

fn solve(op: &MeasurementOperator, y: &[f64], k: usize, choice: &ReconstructorChoice) -> Result<SparseSolution, ReconError> {
    match choice.algorithm {
        Algorithm::Cosamp => cosamp(op, y, k, choice.max_iter, choice.tol),
        Algorithm::Omp => omp(op, y, k, choice.tol),
        Algorithm::External => Err(ReconError::ExternalAlgorithm),
    }
}

/// Frame boundaries covering `[0, n)`; a tail shorter than half a frame is
/// merged into the frame before it.
fn frame_bounds(n: usize, frame_len: usize) -> Vec<(usize, usize)> {
    let mut bounds = Vec::new();
    let mut start = 0;
    while start < n {
        let end = (start + frame_len).min(n);
        bounds.push((start, end));
        start = end;
    }
    if bounds.len() > 1 {
        let (s, e) = bounds[bounds.len() - 1];
        if e - s < frame_len / 2 {
            bounds.pop();
            bounds.last_mut().unwrap().1 = e;
        }
    }
    bounds
}

pub fn reconstruct(record: &CompressedRecord, choice: &ReconstructorChoice) -> Result<Signal, ReconError> {
    reconstruct_detailed(record, choice).map(|r| r.signal)
}

/// Rebuilds the retained positions from the record's seed and solves for the
/// sparse DCT representation. Hitting `max_iter` is not an error; check
/// [`Reconstruction::all_converged`].
pub fn reconstruct_detailed(record: &CompressedRecord, choice: &ReconstructorChoice) -> Result<Reconstruction, ReconError> {
    if choice.algorithm == Algorithm::External {
        return Err(ReconError::ExternalAlgorithm);
    }
    if choice.k == 0 {
        return Err(ReconError::ZeroSparsity);
    }
    if choice.max_iter == 0 {
        return Err(ReconError::ZeroIterations);
    }
    if !(choice.tol >= 0.0) {
        return Err(ReconError::NegativeTolerance);
    }

    let pattern = record.pattern();
    let n = record.original_len();
    let y = record.values_f64();
    let m = y.len();
    let frame_len = choice.frame_len.filter(|&f| f < n);

    let (samples, frames) = match frame_len {
        None => {
            if choice.k >= m {
                return Err(ReconError::IllPosed { k: choice.k, measurements: m });
            }
            let op = MeasurementOperator::from_pattern(&pattern);
            let solution = solve(&op, &y, choice.k, choice)?;
            let samples = op.synthesize(&solution.coeffs);
            (samples, vec![FrameSolution { start: 0, len: n, solution }])
        }
        Some(frame_len) => {
            let min = 2 * record.policy().max_step() as usize;
            if frame_len < min {
                return Err(ReconError::FrameTooShort { frame_len, min });
            }
            if choice.k >= m {
                return Err(ReconError::IllPosed { k: choice.k, measurements: m });
            }
            let indices = pattern.indices();
            let mut samples = vec![0.0; n];
            let mut frames = Vec::new();
            for (start, end) in frame_bounds(n, frame_len) {
                let lo = indices.partition_point(|&i| i < start);
                let hi = indices.partition_point(|&i| i < end);
                let local: Vec<usize> = indices[lo..hi].iter().map(|&i| i - start).collect();
                let m_f = local.len();
                let k_f = choice.k.min(m_f / 2).max(1);
                let op = MeasurementOperator::new(local, end - start)?;
                let solution = solve(&op, &y[lo..hi], k_f, choice)?;
                samples[start..end].copy_from_slice(&op.synthesize(&solution.coeffs));
                frames.push(FrameSolution {
                    start,
                    len: end - start,
                    solution,
                });
            }
            (samples, frames)
        }
    };

    let signal = Signal::new(samples, record.sample_rate_hz(), record.channel())?;
    Ok(Reconstruction { signal, frames })
}
