//! Estimating video-decoder power draw from coarse battery-level transitions.
//!
//! The crate covers the whole measurement chain: the estimator formulas
//! ([`metrics`]), a campaign engine that drives a device through every
//! decoder and bitstream ([`session`]), a deterministic simulated device used as
//! ground truth ([`sim`]), the cleaning and aggregation pipeline
//! ([`pipeline`]) and figure-style reports ([`report`]).

// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assets;
pub mod checkpoint;
pub mod device;
pub mod fixtures;
pub mod jsonl;
pub mod metrics;
pub mod par;
pub mod pipeline;
pub mod report;
pub mod session;
pub mod sim;
pub mod stats;
pub mod submission;
pub mod sweep;
pub mod trace;
pub mod types;

pub use metrics::{
    check_validity, compute_decode_speed, compute_delta_decode, compute_delta_play,
    compute_delta_seq, MeasurementWindow, MetricsError, ValidityVerdict,
};
pub use par::Execution;
pub use submission::{DecoderRecord, PairKey, RawSample, SampleKey, Submission, SubmissionStatus};
pub use types::{
    DecoderDescriptor, DecoderKind, DeviceProfile, PowerMetrics, Resolution, Standard, VideoAsset,
};
