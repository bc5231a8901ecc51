//! Discrete-event simulation of sync-word timestamp correction.
//!
//! A timekeeper with an ideal clock broadcasts its time every
//! `sync_interval_s`. Each edge node latches its local clock when the sync
//! word is detected, parses the packet some time later, and from then on
//! stamps data with `timestamp + (local_now - latched_local)`. Parse latency
//! therefore cancels; what remains is detection jitter plus oscillator drift
//! accumulated since the last latch.
//!
//! Node 0 is the reference receiver: it detects the sync word with no added
//! lag. Every other node's detection lags node 0 by an independent draw from
//! the detection-jitter distribution, which is what a pin-toggle comparison
//! between two receivers measures.
//!
//! Radio propagation delay is taken as zero.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

pub const DEFAULT_SYNC_INTERVAL_S: f64 = 5.0;
pub const DEFAULT_EVENT_INTERVAL_S: f64 = 0.1;
pub const DEFAULT_MAX_PPM: f64 = 10.0;
/// 12 MHz crystal multiplied up to the 150 MHz core clock.
pub const DEFAULT_NOMINAL_HZ: f64 = 150e6;
const TRUNCATION_SIGMAS: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SyncError {
    #[error("need at least 2 edge nodes (got {0})")]
    TooFewNodes(usize),
    #[error("duration {duration_s} s is shorter than the sync interval {interval_s} s")]
    DurationTooShort { duration_s: f64, interval_s: f64 },
    #[error("{0} must be positive and finite")]
    NonPositive(&'static str),
    #[error("expected {expected} clock models, got {actual}")]
    ClockCount { expected: usize, actual: usize },
    #[error("node {node}: |ppm| = {ppm} exceeds bound {bound}")]
    PpmOutOfBounds { node: usize, ppm: f64, bound: f64 },
    #[error("invalid jitter distribution: {0}")]
    InvalidDistribution(String),
    #[error("worst-case detect + parse latency {latency_s} s does not fit in the sync interval {interval_s} s")]
    LatencyExceedsInterval { latency_s: f64, interval_s: f64 },
    #[error("trace contains no timestamped events")]
    EmptyTrace,
}

/// Oscillator of one edge node: `local(t) = phase + (1 + ppm·1e-6)·t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClockModel {
    pub nominal_hz: f64,
    pub ppm_offset: f64,
    pub phase_offset_s: f64,
}

impl Default for ClockModel {
    fn default() -> Self {
        Self {
            nominal_hz: DEFAULT_NOMINAL_HZ,
            ppm_offset: 0.0,
            phase_offset_s: 0.0,
        }
    }
}

impl ClockModel {
    pub fn with_ppm(ppm_offset: f64) -> Self {
        Self {
            ppm_offset,
            ..Self::default()
        }
    }

    pub fn rate(&self) -> f64 {
        1.0 + self.ppm_offset * 1e-6
    }

    pub fn local_time(&self, true_time_s: f64) -> f64 {
        self.phase_offset_s + self.rate() * true_time_s
    }

    /// Seconds of error accumulated per second of true time.
    pub fn drift_per_second(&self) -> f64 {
        self.ppm_offset.abs() * 1e-6
    }
}

/// Latency distribution, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JitterDist {
    None,
    Uniform { lo: f64, hi: f64 },
    /// Normal, truncated to ±4σ and to non-negative values.
    Gaussian { mean: f64, std: f64 },
}

impl JitterDist {
    fn validate(&self) -> Result<(), SyncError> {
        match *self {
            JitterDist::None => Ok(()),
            JitterDist::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi >= lo) {
                    return Err(SyncError::InvalidDistribution(format!(
                        "uniform({lo}, {hi}) needs 0 <= lo <= hi"
                    )));
                }
                Ok(())
            }
            JitterDist::Gaussian { mean, std } => {
                if !(mean.is_finite() && std.is_finite() && std >= 0.0) {
                    return Err(SyncError::InvalidDistribution(format!(
                        "gaussian({mean}, {std}) needs finite mean and std >= 0"
                    )));
                }
                let (_, hi) = self.support();
                if hi < 0.0 {
                    return Err(SyncError::InvalidDistribution(format!(
                        "gaussian({mean}, {std}) has no non-negative support within 4 sigma"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Closed interval the draws fall in.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            JitterDist::None => (0.0, 0.0),
            JitterDist::Uniform { lo, hi } => (lo, hi),
            JitterDist::Gaussian { mean, std } => (
                (mean - TRUNCATION_SIGMAS * std).max(0.0),
                mean + TRUNCATION_SIGMAS * std,
            ),
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            JitterDist::None => 0.0,
            JitterDist::Uniform { lo, hi } => {
                if hi > lo {
                    rng.random_range(lo..=hi)
                } else {
                    lo
                }
            }
            JitterDist::Gaussian { mean, std } => {
                if std == 0.0 {
                    return mean;
                }
                let (lo, hi) = self.support();
                loop {
                    let z: f64 = rng.sample(StandardNormal);
                    let v = mean + std * z;
                    if v >= lo && v <= hi {
                        return v;
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JitterModel {
    /// Sync-word detection lag of nodes 1.. relative to node 0.
    pub detect: JitterDist,
    /// Uniform delay between detection and packet parsing.
    pub parse_latency_range_s: (f64, f64),
}

impl Default for JitterModel {
    fn default() -> Self {
        Self {
            detect: JitterDist::None,
            parse_latency_range_s: (1e-4, 50e-3),
        }
    }
}

impl JitterModel {
    /// Detection lag fitted to a 2.65 µs median / 2.06 µs spread between two
    /// receivers.
    pub fn calibrated() -> Self {
        Self {
            detect: JitterDist::Gaussian {
                mean: 2.65e-6,
                std: 2.06e-6,
            },
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub n_edge_nodes: usize,
    pub sync_interval_s: f64,
    pub duration_s: f64,
    pub rng_seed: u64,
    /// Rate for the single-sample criterion.
    pub sample_rate_hz: f64,
    /// Spacing of the co-occurring physical events every node timestamps.
    pub event_interval_s: f64,
    pub max_ppm: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_edge_nodes: 2,
            sync_interval_s: DEFAULT_SYNC_INTERVAL_S,
            duration_s: 600.0,
            rng_seed: 1,
            sample_rate_hz: 8000.0,
            event_interval_s: DEFAULT_EVENT_INTERVAL_S,
            max_ppm: DEFAULT_MAX_PPM,
        }
    }
}

impl SimConfig {
    fn validate(&self, clocks: &[ClockModel], jitter: &JitterModel) -> Result<(), SyncError> {
        if self.n_edge_nodes < 2 {
            return Err(SyncError::TooFewNodes(self.n_edge_nodes));
        }
        for (name, v) in [
            ("sync_interval_s", self.sync_interval_s),
            ("duration_s", self.duration_s),
            ("sample_rate_hz", self.sample_rate_hz),
            ("event_interval_s", self.event_interval_s),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SyncError::NonPositive(name));
            }
        }
        if self.duration_s < self.sync_interval_s {
            return Err(SyncError::DurationTooShort {
                duration_s: self.duration_s,
                interval_s: self.sync_interval_s,
            });
        }
        if clocks.len() != self.n_edge_nodes {
            return Err(SyncError::ClockCount {
                expected: self.n_edge_nodes,
                actual: clocks.len(),
            });
        }
        for (node, c) in clocks.iter().enumerate() {
            if !(c.ppm_offset.abs() <= self.max_ppm) {
                return Err(SyncError::PpmOutOfBounds {
                    node,
                    ppm: c.ppm_offset,
                    bound: self.max_ppm,
                });
            }
            if !(c.nominal_hz.is_finite() && c.nominal_hz > 0.0) {
                return Err(SyncError::NonPositive("nominal_hz"));
            }
            if !c.phase_offset_s.is_finite() {
                return Err(SyncError::InvalidDistribution("non-finite phase offset".into()));
            }
        }
        jitter.detect.validate()?;
        let (lo, hi) = jitter.parse_latency_range_s;
        JitterDist::Uniform { lo, hi }.validate()?;
        let worst = jitter.detect.support().1 + hi;
        if worst >= self.sync_interval_s {
            return Err(SyncError::LatencyExceedsInterval {
                latency_s: worst,
                interval_s: self.sync_interval_s,
            });
        }
        Ok(())
    }
}

/// One node's handling of one sync broadcast.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SyncEvent {
    pub sync_index: usize,
    /// True time the timekeeper emitted the sync word (= its timestamp).
    pub true_time_s: f64,
    pub node_id: usize,
    pub detect_true_time_s: f64,
    pub latched_local_time_s: f64,
    pub parse_true_time_s: f64,
    /// `timestamp + (parse_local - latched_local)`: the node's corrected
    /// time at the moment it finished parsing.
    pub corrected_timestamp_s: f64,
}

/// A physical event every node timestamped.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventSample {
    pub event_index: usize,
    pub true_time_s: f64,
    pub corrected_s: Vec<f64>,
    /// Spread (max - min) of the nodes' corrected timestamps.
    pub pairwise_err_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyncTrace {
    pub sync_events: Vec<SyncEvent>,
    pub samples: Vec<EventSample>,
    /// Per broadcast, spread of the nodes' detection times.
    pub response_diffs_s: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceSummary {
    pub median_response_diff_s: f64,
    pub std_response_diff_s: f64,
    pub max_response_diff_s: f64,
    pub max_pairwise_err_s: f64,
    /// `None` when the nodes never disagree.
    pub max_fs_hz: Option<f64>,
    pub sample_rate_hz: f64,
    pub single_sample_pass: bool,
    pub sync_count: usize,
    pub event_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleMargin {
    pub max_err_s: f64,
    /// 1 / max_err; infinite for a zero error.
    pub max_fs_hz: f64,
    pub pass: bool,
}

/// `pass` iff the error is below one sample period at `sample_rate_hz`.
pub fn margin_from_error(max_err_s: f64, sample_rate_hz: f64) -> SampleMargin {
    SampleMargin {
        max_err_s,
        max_fs_hz: 1.0 / max_err_s,
        pass: max_err_s < 1.0 / sample_rate_hz,
    }
}

pub fn single_sample_margin(trace: &SyncTrace, sample_rate_hz: f64) -> Result<SampleMargin, SyncError> {
    if trace.samples.is_empty() {
        return Err(SyncError::EmptyTrace);
    }
    Ok(margin_from_error(trace.max_pairwise_err(), sample_rate_hz))
}

impl SyncTrace {
    pub fn max_pairwise_err(&self) -> f64 {
        self.samples.iter().map(|s| s.pairwise_err_s).fold(0.0, f64::max)
    }

    pub fn summary(&self, sample_rate_hz: f64) -> Result<TraceSummary, SyncError> {
        let margin = single_sample_margin(self, sample_rate_hz)?;
        let diffs = &self.response_diffs_s;
        Ok(TraceSummary {
            median_response_diff_s: median(diffs),
            std_response_diff_s: std_dev(diffs),
            max_response_diff_s: diffs.iter().copied().fold(0.0, f64::max),
            max_pairwise_err_s: margin.max_err_s,
            max_fs_hz: margin.max_fs_hz.is_finite().then_some(margin.max_fs_hz),
            sample_rate_hz,
            single_sample_pass: margin.pass,
            sync_count: diffs.len(),
            event_count: self.samples.len(),
        })
    }

    /// `event_index,true_time,node,corrected_ts,pairwise_err`, one row per
    /// node per event.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "event_index,true_time,node,corrected_ts,pairwise_err")?;
        for s in &self.samples {
            for (node, ts) in s.corrected_s.iter().enumerate() {
                writeln!(
                    w,
                    "{},{:.9},{},{:.12},{:.12e}",
                    s.event_index, s.true_time_s, node, ts, s.pairwise_err_s
                )?;
            }
        }
        Ok(())
    }
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    }
}

/// Population standard deviation.
pub fn std_dev(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

// Ties at equal times resolve in this order, so a data event coinciding with
// a parse is stamped with the pre-parse offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EventKind {
    Physical { index: usize },
    Detect { node: usize, sync: usize },
    Parse { node: usize, sync: usize },
}

#[derive(Debug, Clone, Copy)]
struct Scheduled {
    time: f64,
    kind: EventKind,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // Reversed: BinaryHeap is a max-heap and we want the earliest first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.kind.cmp(&self.kind))
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct NodeState {
    /// Added to local time to get timekeeper time; `None` before first parse.
    offset: Option<f64>,
    latched: Option<(usize, f64)>,
}

/// Runs the simulation. Identical inputs give bit-identical traces.
pub fn run_simulation(config: &SimConfig, clocks: &[ClockModel], jitter: &JitterModel) -> Result<SyncTrace, SyncError> {
    config.validate(clocks, jitter)?;
    let n = config.n_edge_nodes;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut queue = BinaryHeap::new();

    // Broadcast schedule and all random draws are fixed up front, in
    // (sync, node) order, so the stream does not depend on queue ordering.
    let n_syncs = (config.duration_s / config.sync_interval_s).ceil() as usize;
    let mut emit_times = Vec::with_capacity(n_syncs);
    let mut detect_times = Vec::with_capacity(n_syncs);
    let mut response_diffs = Vec::with_capacity(n_syncs);
    let (parse_lo, parse_hi) = jitter.parse_latency_range_s;
    let parse_dist = JitterDist::Uniform {
        lo: parse_lo,
        hi: parse_hi,
    };
    for sync in 0.. {
        let t_emit = sync as f64 * config.sync_interval_s;
        if t_emit >= config.duration_s {
            break;
        }
        let mut detects = Vec::with_capacity(n);
        for node in 0..n {
            let lag = if node == 0 { 0.0 } else { jitter.detect.sample(&mut rng) };
            let parse_delay = parse_dist.sample(&mut rng);
            let t_detect = t_emit + lag;
            detects.push(t_detect);
            queue.push(Scheduled {
                time: t_detect,
                kind: EventKind::Detect { node, sync },
            });
            queue.push(Scheduled {
                time: t_detect + parse_delay,
                kind: EventKind::Parse { node, sync },
            });
        }
        let lo = detects.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = detects.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        response_diffs.push(hi - lo);
        emit_times.push(t_emit);
        detect_times.push(detects);
    }

    let n_physical = (config.duration_s / config.event_interval_s + 1e-9).floor() as usize;
    for index in 1..=n_physical {
        queue.push(Scheduled {
            time: index as f64 * config.event_interval_s,
            kind: EventKind::Physical { index },
        });
    }

    let mut nodes = vec![NodeState::default(); n];
    let mut sync_events = Vec::new();
    let mut samples = Vec::new();
    while let Some(ev) = queue.pop() {
        match ev.kind {
            EventKind::Detect { node, sync } => {
                nodes[node].latched = Some((sync, clocks[node].local_time(ev.time)));
            }
            EventKind::Parse { node, sync } => {
                let (latched_sync, latched_local) = nodes[node]
                    .latched
                    .expect("parse is always scheduled after its detection");
                debug_assert_eq!(latched_sync, sync);
                let timestamp = emit_times[sync];
                let parse_local = clocks[node].local_time(ev.time);
                nodes[node].offset = Some(timestamp - latched_local);
                sync_events.push(SyncEvent {
                    sync_index: sync,
                    true_time_s: timestamp,
                    node_id: node,
                    detect_true_time_s: detect_times[sync][node],
                    latched_local_time_s: latched_local,
                    parse_true_time_s: ev.time,
                    corrected_timestamp_s: timestamp + (parse_local - latched_local),
                });
            }
            EventKind::Physical { index } => {
                let stamps: Option<Vec<f64>> = nodes
                    .iter()
                    .zip(clocks)
                    .map(|(state, clock)| state.offset.map(|off| clock.local_time(ev.time) + off))
                    .collect();
                // Skipped until every node has parsed its first sync.
                let Some(corrected_s) = stamps else { continue };
                let lo = corrected_s.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = corrected_s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                samples.push(EventSample {
                    event_index: index,
                    true_time_s: ev.time,
                    corrected_s,
                    pairwise_err_s: hi - lo,
                });
            }
        }
    }

    Ok(SyncTrace {
        sync_events,
        samples,
        response_diffs_s: response_diffs,
    })
}
