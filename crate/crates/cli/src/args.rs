use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use physioedge::budget::Transport;
use physioedge::embedding::{DEFAULT_EMBEDDINGS, DEFAULT_GRID_LEN};
use physioedge::recon::Algorithm;
use physioedge::{Channel, StepMode};

#[derive(Debug, Parser)]
#[command(
    name = "physioedge",
    version,
    about = "Compress, reconstruct and evaluate physiological signals; simulate multi-node clock sync"
)]
pub struct Cli {
    /// Flat key=value file of flag defaults; flags given on the command line win
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decimate a PCM wav file into a PECS record
    Compress(CompressArgs),
    /// Rebuild a waveform from a PECS record
    Reconstruct(ReconstructArgs),
    /// Score an estimate against a reference waveform
    Evaluate(EvaluateArgs),
    /// Simulate sync-word clock correction across edge nodes
    Syncsim(SyncsimArgs),
    /// Print link data rate and transmission power for a compression ratio
    Budget(BudgetArgs),
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct CompressArgs {
    /// Input PCM wav (16- or 32-bit integer)
    pub input: PathBuf,
    /// Output PECS record
    pub output: PathBuf,
    /// Target compression ratio (mean step size)
    #[arg(long, default_value_t = 10)]
    pub cr: u32,
    /// Nonzero generator seed
    #[arg(long, env = "PHYSIOEDGE_SEED", default_value_t = 1)]
    pub seed: u32,
    /// Step mapping: mean_exact or literal_eq1
    #[arg(long, default_value = "mean_exact")]
    pub policy: StepMode,
    /// Channel tag stored in the record
    #[arg(long, default_value = "generic")]
    pub channel: Channel,
    /// Which interleaved wav channel to read
    #[arg(long, default_value_t = 0)]
    pub channel_index: u16,
    /// Feed the decimator in buffers of this many samples
    #[arg(long)]
    pub chunk_len: Option<usize>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct ReconstructArgs {
    /// Input PECS record
    pub input: PathBuf,
    /// Output wav, or the embedding CSV when --algo external
    pub output: PathBuf,
    /// cosamp, omp, or external (export embeddings for a learned model)
    #[arg(long, default_value = "cosamp")]
    pub algo: Algorithm,
    /// Sparsity budget per frame
    #[arg(long, default_value_t = 32)]
    pub k: usize,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    /// Relative residual tolerance
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Samples per independently solved frame; 0 solves the whole record at once
    #[arg(long, default_value_t = 2048)]
    pub frame_len: usize,
    /// Output bit depth (16 or 32)
    #[arg(long, default_value_t = 16)]
    pub bits: u16,
    /// Reference wav; prints a signal_id,cr,rrmse,cc row
    #[arg(long, value_name = "REF")]
    pub metrics_against: Option<PathBuf>,
    /// Append the metrics row to this CSV (header written when new)
    #[arg(long, requires = "metrics_against")]
    pub metrics_out: Option<PathBuf>,
    /// Identifier for the metrics row (default: input file stem)
    #[arg(long)]
    pub signal_id: Option<String>,
    /// Per-iteration residuals as frame,iteration,residual CSV
    #[arg(long, value_name = "CSV")]
    pub diagnostics: Option<PathBuf>,
    /// Number of embedding vectors (external only)
    #[arg(long, default_value_t = DEFAULT_EMBEDDINGS)]
    pub embeddings: usize,
    /// First embedding seed (external only)
    #[arg(long, default_value_t = 1)]
    pub embed_seed: u32,
    /// Points per embedding vector (external only)
    #[arg(long, default_value_t = DEFAULT_GRID_LEN)]
    pub grid_len: usize,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct EvaluateArgs {
    /// Reference wav
    pub reference: PathBuf,
    /// Estimate wav
    pub estimate: PathBuf,
    /// PECS record the estimate came from; supplies the achieved CR
    #[arg(long, conflicts_with = "cr")]
    pub record: Option<PathBuf>,
    /// Compression ratio to report when no record is given
    #[arg(long, default_value_t = 1.0)]
    pub cr: f64,
    #[arg(long)]
    pub signal_id: Option<String>,
    /// Append the row to this CSV (header written when new)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct SyncsimArgs {
    /// Trace CSV (event_index,true_time,node,corrected_ts,pairwise_err)
    pub output: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub nodes: usize,
    /// Simulated duration
    #[arg(long, default_value_t = 10.0)]
    pub minutes: f64,
    /// Clock offsets in ppm: one value for every node, or one per node (comma separated)
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub ppm: String,
    /// Detection jitter in µs: none, calibrated, uniform:LO,HI or gaussian:MEAN,STD
    #[arg(long, default_value = "calibrated")]
    pub jitter: String,
    #[arg(long, env = "PHYSIOEDGE_SEED", default_value_t = 1)]
    pub seed: u64,
    /// Sync broadcast interval in seconds
    #[arg(long, default_value_t = 5.0)]
    pub interval: f64,
    /// Parse latency range in ms, LO,HI
    #[arg(long, default_value = "0.1,50")]
    pub parse_latency: String,
    /// Sampling rate for the single-sample check, Hz
    #[arg(long, default_value_t = 8000.0)]
    pub sample_rate: f64,
    /// Spacing of the physical events every node timestamps, seconds
    #[arg(long, default_value_t = 0.1)]
    pub event_interval: f64,
    /// Largest |ppm| accepted
    #[arg(long, default_value_t = 10.0)]
    pub max_ppm: f64,
    /// Summary JSON (default: output with .json extension)
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// SVG histogram of pairwise errors (default: output with .svg extension)
    #[arg(long)]
    pub histogram: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct BudgetArgs {
    /// wifi or bluetooth; both when omitted
    #[arg(long)]
    pub transport: Option<Transport>,
    #[arg(long, default_value_t = 1.0)]
    pub cr: f64,
}
