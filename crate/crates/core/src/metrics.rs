//! Reconstruction fidelity: compression ratio, relative RMSE and Pearson
//! correlation.

use std::io::{self, Write};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("lengths must be positive (original {original}, compressed {compressed})")]
    ZeroLength { original: usize, compressed: usize },
    #[error("length mismatch: reference {reference}, estimate {estimate}")]
    LengthMismatch { reference: usize, estimate: usize },
    #[error("reference signal is all zeros")]
    ZeroReference,
    #[error("correlation undefined for a constant input")]
    ConstantInput,
    #[error("correlation needs at least 2 samples")]
    TooShort,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsReport {
    pub cr_achieved: f64,
    pub rrmse: f64,
    pub cc: f64,
}

impl MetricsReport {
    pub fn evaluate(reference: &[f64], estimate: &[f64], cr_achieved: f64) -> Result<Self, MetricsError> {
        Ok(Self {
            cr_achieved,
            rrmse: rrmse(reference, estimate)?,
            cc: pearson_cc(reference, estimate)?,
        })
    }
}

/// Size of the initial signal over size of the compressed signal.
pub fn compression_ratio(original_len: usize, compressed_len: usize) -> Result<f64, MetricsError> {
    if original_len == 0 || compressed_len == 0 {
        return Err(MetricsError::ZeroLength {
            original: original_len,
            compressed: compressed_len,
        });
    }
    Ok(original_len as f64 / compressed_len as f64)
}

fn check_lengths(reference: &[f64], estimate: &[f64]) -> Result<(), MetricsError> {
    if reference.len() != estimate.len() {
        return Err(MetricsError::LengthMismatch {
            reference: reference.len(),
            estimate: estimate.len(),
        });
    }
    Ok(())
}

/// sqrt( Σ(ŝ - s)² / Σ s² )
pub fn rrmse(reference: &[f64], estimate: &[f64]) -> Result<f64, MetricsError> {
    check_lengths(reference, estimate)?;
    let energy: f64 = reference.iter().map(|s| s * s).sum();
    if energy == 0.0 {
        return Err(MetricsError::ZeroReference);
    }
    let err: f64 = reference
        .iter()
        .zip(estimate)
        .map(|(s, e)| (e - s) * (e - s))
        .sum();
    Ok((err / energy).sqrt())
}

/// cov(s, ŝ) / (σ(s) σ(ŝ)), population normalisation throughout.
pub fn pearson_cc(reference: &[f64], estimate: &[f64]) -> Result<f64, MetricsError> {
    check_lengths(reference, estimate)?;
    let n = reference.len();
    if n < 2 {
        return Err(MetricsError::TooShort);
    }
    let is_constant = |v: &[f64]| v.iter().all(|x| *x == v[0]);
    if is_constant(reference) || is_constant(estimate) {
        return Err(MetricsError::ConstantInput);
    }
    let nf = n as f64;
    let mean_a = reference.iter().sum::<f64>() / nf;
    let mean_b = estimate.iter().sum::<f64>() / nf;
    let (mut cov, mut var_a, mut var_b) = (0.0, 0.0, 0.0);
    for (a, b) in reference.iter().zip(estimate) {
        let da = a - mean_a;
        let db = b - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if var_a == 0.0 || var_b == 0.0 {
        return Err(MetricsError::ConstantInput);
    }
    let cc = (cov / nf) / ((var_a / nf).sqrt() * (var_b / nf).sqrt());
    Ok(cc.clamp(-1.0, 1.0))
}

pub const CSV_HEADER: &str = "signal_id,cr,rrmse,cc";

/// One `signal_id,cr,rrmse,cc` row.
pub fn write_csv_row<W: Write>(mut w: W, signal_id: &str, report: &MetricsReport) -> io::Result<()> {
    writeln!(
        w,
        "{},{:.6},{:.9},{:.9}",
        signal_id, report.cr_achieved, report.rrmse, report.cc
    )
}
