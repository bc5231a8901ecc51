//! Embedding vectors: pseudo-random sub-selections of a decimated record,
//! each linearly interpolated onto a fixed uniform grid. This is the input
//! contract of a learned reconstructor, which itself lives outside this crate
//! behind [`ExternalReconstructor`].

use std::io::{self, Write};

use thiserror::Error;

use crate::prmd::CompressedRecord;
use crate::prng::{PrngError, XorShift32};

/// Grid length expected by the reference learned reconstructor.
pub const DEFAULT_GRID_LEN: usize = 34_976;
pub const DEFAULT_EMBEDDINGS: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmbeddingError {
    #[error("need at least 2 retained values (got {0})")]
    TooFewValues(usize),
    #[error("need at least 2 points to interpolate (got {0})")]
    TooFewPoints(usize),
    #[error("number of embeddings must be at least 1")]
    ZeroEmbeddings,
    #[error("grid length must be at least 2 (got {0})")]
    GridTooShort(usize),
    #[error("times must be strictly increasing (at point {0})")]
    NonMonotoneTimes(usize),
    #[error(transparent)]
    Prng(#[from] PrngError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    pub vectors: Vec<Vec<f64>>,
    pub embed_seed: u32,
    pub source_len: usize,
    /// Number of record pairs each embedding kept before interpolation.
    pub kept_counts: Vec<usize>,
}

impl EmbeddingSet {
    pub fn n_embeddings(&self) -> usize {
        self.vectors.len()
    }

    pub fn grid_len(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }

    /// One column per embedding, header `emb0,emb1,...`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let header: Vec<String> = (0..self.vectors.len()).map(|i| format!("emb{i}")).collect();
        writeln!(w, "{}", header.join(","))?;
        for row in 0..self.grid_len() {
            let mut first = true;
            for v in &self.vectors {
                if !first {
                    w.write_all(b",")?;
                }
                write!(w, "{:.9e}", v[row])?;
                first = false;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// A learned reconstructor consuming embedding vectors, e.g. a CNN served
/// by another process.
pub trait ExternalReconstructor {
    type Error;

    /// Returns the estimate at the record's original sample positions.
    fn reconstruct(&self, embeddings: &EmbeddingSet, record: &CompressedRecord) -> Result<Vec<f64>, Self::Error>;
}

/// Seed for embedding `i`: the `i`-th element of the sequence
/// `embed_seed, embed_seed+1, ...` (wrapping) with zero skipped.
fn embedding_seed(embed_seed: u32, i: usize) -> u32 {
    let base = embed_seed as u64;
    let raw = base + i as u64;
    // Zero is hit once per wrap; it sits at 2^32 in the unwrapped sequence.
    let skipped = if raw >= 1 << 32 { 1 } else { 0 };
    ((raw + skipped) % (1 << 32)) as u32
}

/// Splits `record` into `n` embeddings. Each pair is kept independently with
/// probability 1/n by its embedding's own generator; the first and last pairs
/// are always kept so interpolation spans the record.
pub fn make_embeddings(
    record: &CompressedRecord,
    n: usize,
    embed_seed: u32,
    grid_len: usize,
) -> Result<EmbeddingSet, EmbeddingError> {
    let values = record.values();
    if values.len() < 2 {
        return Err(EmbeddingError::TooFewValues(values.len()));
    }
    if n == 0 {
        return Err(EmbeddingError::ZeroEmbeddings);
    }
    if grid_len < 2 {
        return Err(EmbeddingError::GridTooShort(grid_len));
    }
    XorShift32::new(embed_seed)?;

    let fs = record.sample_rate_hz() as f64;
    let pattern = record.pattern();
    let indices = pattern.indices();
    let t_end = (record.original_len() - 1) as f64 / fs;
    let last = values.len() - 1;

    let mut vectors = Vec::with_capacity(n);
    let mut kept_counts = Vec::with_capacity(n);
    for e in 0..n {
        let mut rng = XorShift32::new(embedding_seed(embed_seed, e))?;
        let mut points = Vec::with_capacity(values.len() / n + 2);
        for (j, (&idx, &v)) in indices.iter().zip(values).enumerate() {
            // Draw for every pair so the stream position never depends on
            // which pairs were forced.
            let draw = rng.next_u32();
            let keep = j == 0 || j == last || (draw as u64 * n as u64) >> 32 == 0;
            if keep {
                points.push((idx as f64 / fs, v as f64));
            }
        }
        kept_counts.push(points.len());
        vectors.push(interpolate_on_span(&points, 0.0, t_end, grid_len)?);
    }
    Ok(EmbeddingSet {
        vectors,
        embed_seed,
        source_len: record.original_len(),
        kept_counts,
    })
}

/// Interpolates onto `grid_len` uniform points spanning the first to the
/// last point's time.
pub fn interpolate_to_grid(points: &[(f64, f64)], grid_len: usize) -> Result<Vec<f64>, EmbeddingError> {
    if points.len() < 2 {
        return Err(EmbeddingError::TooFewPoints(points.len()));
    }
    let t0 = points[0].0;
    let t1 = points[points.len() - 1].0;
    interpolate_on_span(points, t0, t1, grid_len)
}

/// Piecewise-linear interpolation at `grid_len` uniform times over
/// `[t0, t1]`. Grid times outside the points' span take the nearest endpoint
/// value.
pub fn interpolate_on_span(
    points: &[(f64, f64)],
    t0: f64,
    t1: f64,
    grid_len: usize,
) -> Result<Vec<f64>, EmbeddingError> {
    if points.len() < 2 {
        return Err(EmbeddingError::TooFewPoints(points.len()));
    }
    if grid_len < 2 {
        return Err(EmbeddingError::GridTooShort(grid_len));
    }
    if let Some(i) = points.windows(2).position(|w| !(w[0].0 < w[1].0)) {
        return Err(EmbeddingError::NonMonotoneTimes(i + 1));
    }
    let dt = (t1 - t0) / (grid_len - 1) as f64;
    let (first, last) = (points[0], points[points.len() - 1]);
    let mut seg = 0usize;
    let out = (0..grid_len)
        .map(|g| {
            let t = if g == grid_len - 1 { t1 } else { t0 + g as f64 * dt };
            if t <= first.0 {
                return first.1;
            }
            if t >= last.0 {
                return last.1;
            }
            while points[seg + 1].0 < t {
                seg += 1;
            }
            let (ta, va) = points[seg];
            let (tb, vb) = points[seg + 1];
            if t == tb {
                return vb;
            }
            va + (vb - va) * (t - ta) / (tb - ta)
        })
        .collect();
    Ok(out)
}
