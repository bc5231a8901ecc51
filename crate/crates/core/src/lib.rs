//! Software model of a compressive-sensing biosensor node.
//!
//! - [`signal`]: waveforms, PCM I/O, chunked delivery.
//! - [`prng`]: XorShift32 and the step-size mapping.
//! - [`prmd`]: pseudo-random moving decimation and the PECS record format.
//! - [`embedding`]: embedding vectors for a learned reconstructor.
//! - [`recon`]: CoSaMP / OMP reconstruction in a DCT basis.
//! - [`metrics`]: CR, RRMSE, Pearson CC.
//! - [`sync`]: multi-node clock synchronization simulator.
//! - [`budget`]: link data rates and transmission power lookup.

// `!(x >= 0.0)` style checks are used on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod budget;
pub mod embedding;
pub mod metrics;
pub mod prmd;
pub mod prng;
pub mod recon;
pub mod signal;
pub mod sync;

pub use prmd::{build_pattern, compress, read_record, write_record, CompressedRecord, SamplingPattern};
pub use prng::{StepMode, StepPolicy, XorShift32};
pub use signal::{Channel, Signal};
