//! Interfaces to the device under test.
//!
//! A real client would back these with the platform battery service and codec
//! list. This crate ships a closed-form simulator ([`crate::sim`]) and a
//! replay-from-trace device ([`crate::trace`]).

use thiserror::Error;

use crate::types::{DecoderDescriptor, DeviceProfile, VideoAsset};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProbeError {
    #[error("device powered off")]
    DeviceOff,
    #[error("recorded trace exhausted at t={0:.3}s")]
    TraceExhausted(f64),
    #[error("probe unavailable: {0}")]
    Unavailable(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("decoder `{decoder}` failed to open: {reason}")]
    OpenFailed { decoder: String, reason: String },
    #[error("decode failed: {0}")]
    DecodeFailed(String),
    #[error("no decoder open")]
    NotOpen,
    #[error(transparent)]
    Probe(#[from] ProbeError),
}

/// Battery and clock readings.
pub trait DeviceProbe {
    /// Integer battery percentage as reported by the platform.
    fn battery_level(&mut self) -> Result<u8, ProbeError>;
    fn is_charging(&mut self) -> Result<bool, ProbeError>;
    /// Identity and battery properties; `battery_level` and `charging` reflect the current state.
    fn profile(&mut self) -> Result<DeviceProfile, ProbeError>;
    /// Monotonic time in seconds.
    fn now(&self) -> f64;
    /// Idle with the display on for `seconds`.
    fn wait(&mut self, seconds: f64) -> Result<(), ProbeError>;
}

/// Position of a decoded frame within the decode loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FramePosition {
    /// How many times the bitstream had been fully decoded before this frame.
    pub iteration: u64,
    /// Index of the decoded frame within the bitstream.
    pub frame: u64,
}

/// Loop-decodes one bitstream at a time.
///
/// Frame indices advance `0..n_seq` and wrap to 0 with the iteration counter incremented.
pub trait DecoderHarness {
    fn decoders(&self) -> Vec<DecoderDescriptor>;
    fn open(&mut self, decoder: &DecoderDescriptor, asset: &VideoAsset) -> Result<(), HarnessError>;
    fn decode_next_frame(&mut self) -> Result<FramePosition, HarnessError>;
    /// Rewinds to frame 0 of iteration 0.
    fn reset(&mut self) -> Result<(), HarnessError>;
    fn close(&mut self);
}

/// A device that can both report its battery and run decoders.
pub trait Device: DeviceProbe + DecoderHarness {}

impl<T: DeviceProbe + DecoderHarness + ?Sized> Device for T {}

/// Tracks loop position for harness implementations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub(crate) struct LoopCursor {
    pub iteration: u64,
    pub frame: u64,
}

impl LoopCursor {
    /// Returns the position of the frame being decoded and advances past it.
    pub fn step(&mut self, n_seq: u64) -> FramePosition {
        let pos = FramePosition {
            iteration: self.iteration,
            frame: self.frame,
        };
        self.frame += 1;
        if self.frame == n_seq {
            self.frame = 0;
            self.iteration += 1;
        }
        pos
    }
}
