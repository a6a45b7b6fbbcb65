//! Replay of a recorded battery-level timeline.
//!
//! A trace holds the device profile, the decoders with their decoding speeds and
//! a piecewise-constant level timeline. Replay ignores what the engine does to
//! the battery: levels come from the timeline, and time advances by one frame
//! interval per decoded frame or by the requested idle duration.
//!
//! On disk a trace is line-delimited JSON: a header line followed by one line per
//! level event.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::{
    DecoderHarness, DeviceProbe, FramePosition, HarnessError, LoopCursor, ProbeError,
};
use crate::types::{DecoderDescriptor, DeviceProfile, VideoAsset};

pub const TRACE_FORMAT: &str = "decwatt-trace";
pub const TRACE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelEvent {
    /// Monotonic time at which the level took effect, seconds.
    pub t: f64,
    pub level: u8,
    pub charging: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceDecoder {
    pub descriptor: DecoderDescriptor,
    pub speed_fps: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub per_asset: BTreeMap<String, f64>,
    #[serde(default)]
    pub fail_open: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceTrace {
    pub profile: DeviceProfile,
    pub decoders: Vec<TraceDecoder>,
    /// Time at which the recording stops.
    pub end_s: f64,
    pub events: Vec<LevelEvent>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("trace line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("trace: {0}")]
    Format(String),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "kebab-case")]
enum TraceLine {
    Header {
        format: String,
        version: u32,
        profile: DeviceProfile,
        decoders: Vec<TraceDecoder>,
        end_s: f64,
    },
    Level(LevelEvent),
}

impl DeviceTrace {
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<(), TraceError> {
        let header = TraceLine::Header {
            format: TRACE_FORMAT.into(),
            version: TRACE_VERSION,
            profile: self.profile.clone(),
            decoders: self.decoders.clone(),
            end_s: self.end_s,
        };
        serde_json::to_writer(&mut out, &header).map_err(|e| TraceError::Json { line: 1, source: e })?;
        out.write_all(b"\n")?;
        for (i, e) in self.events.iter().enumerate() {
            serde_json::to_writer(&mut out, &TraceLine::Level(*e))
                .map_err(|source| TraceError::Json { line: i + 2, source })?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self, TraceError> {
        let mut header = None;
        let mut events = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: TraceLine =
                serde_json::from_str(&line).map_err(|source| TraceError::Json { line: i + 1, source })?;
            match parsed {
                TraceLine::Header {
                    format,
                    version,
                    profile,
                    decoders,
                    end_s,
                } => {
                    if format != TRACE_FORMAT || version != TRACE_VERSION {
                        return Err(TraceError::Format(format!(
                            "unsupported trace {format} v{version}"
                        )));
                    }
                    if header.is_some() {
                        return Err(TraceError::Format("duplicate header".into()));
                    }
                    header = Some((profile, decoders, end_s));
                }
                TraceLine::Level(e) => events.push(e),
            }
        }
        let (profile, decoders, end_s) =
            header.ok_or_else(|| TraceError::Format("missing header".into()))?;
        if events.is_empty() {
            return Err(TraceError::Format("no level events".into()));
        }
        if events.windows(2).any(|w| w[1].t < w[0].t) {
            return Err(TraceError::Format("level events out of order".into()));
        }
        Ok(DeviceTrace {
            profile,
            decoders,
            end_s,
            events,
        })
    }
}

#[derive(Debug, Clone)]
struct ReplayDecode {
    n_seq: u64,
    frame_time: f64,
    cursor: LoopCursor,
}

/// Device that answers probe queries from a recorded trace.
#[derive(Debug, Clone)]
pub struct ReplayDevice {
    trace: DeviceTrace,
    time_s: f64,
    active: Option<ReplayDecode>,
}

impl ReplayDevice {
    pub fn new(trace: DeviceTrace) -> Self {
        let start = trace.events.first().map_or(0.0, |e| e.t);
        ReplayDevice {
            trace,
            time_s: start,
            active: None,
        }
    }

    fn event_at(&self) -> Result<&LevelEvent, ProbeError> {
        if self.time_s > self.trace.end_s {
            return Err(ProbeError::TraceExhausted(self.time_s));
        }
        let idx = self.trace.events.partition_point(|e| e.t <= self.time_s);
        self.trace
            .events
            .get(idx.saturating_sub(1))
            .ok_or(ProbeError::TraceExhausted(self.time_s))
    }

    fn advance(&mut self, dt: f64) -> Result<(), ProbeError> {
        self.time_s += dt;
        if self.time_s > self.trace.end_s {
            return Err(ProbeError::TraceExhausted(self.time_s));
        }
        Ok(())
    }
}

impl DeviceProbe for ReplayDevice {
    fn battery_level(&mut self) -> Result<u8, ProbeError> {
        self.event_at().map(|e| e.level)
    }

    fn is_charging(&mut self) -> Result<bool, ProbeError> {
        self.event_at().map(|e| e.charging)
    }

    fn profile(&mut self) -> Result<DeviceProfile, ProbeError> {
        let e = *self.event_at()?;
        let mut p = self.trace.profile.clone();
        p.battery_level = f64::from(e.level);
        p.charging = e.charging;
        Ok(p)
    }

    fn now(&self) -> f64 {
        self.time_s
    }

    fn wait(&mut self, seconds: f64) -> Result<(), ProbeError> {
        self.advance(seconds)
    }
}

impl DecoderHarness for ReplayDevice {
    fn decoders(&self) -> Vec<DecoderDescriptor> {
        self.trace.decoders.iter().map(|d| d.descriptor.clone()).collect()
    }

    fn open(&mut self, decoder: &DecoderDescriptor, asset: &VideoAsset) -> Result<(), HarnessError> {
        let d = self
            .trace
            .decoders
            .iter()
            .find(|d| d.descriptor.name == decoder.name)
            .ok_or_else(|| HarnessError::OpenFailed {
                decoder: decoder.name.clone(),
                reason: "not present in trace".into(),
            })?;
        if d.fail_open {
            return Err(HarnessError::OpenFailed {
                decoder: decoder.name.clone(),
                reason: "recorded as failing to open".into(),
            });
        }
        let speed = d.per_asset.get(&asset.name).copied().unwrap_or(d.speed_fps);
        if !(speed > 0.0) {
            return Err(HarnessError::OpenFailed {
                decoder: decoder.name.clone(),
                reason: "non-positive recorded speed".into(),
            });
        }
        self.active = Some(ReplayDecode {
            n_seq: asset.n_seq,
            frame_time: 1.0 / speed,
            cursor: LoopCursor::default(),
        });
        Ok(())
    }

    fn decode_next_frame(&mut self) -> Result<FramePosition, HarnessError> {
        let (dt, n_seq) = match &self.active {
            Some(a) => (a.frame_time, a.n_seq),
            None => return Err(HarnessError::NotOpen),
        };
        self.advance(dt)?;
        let a = self.active.as_mut().ok_or(HarnessError::NotOpen)?;
        Ok(a.cursor.step(n_seq))
    }

    fn reset(&mut self) -> Result<(), HarnessError> {
        let a = self.active.as_mut().ok_or(HarnessError::NotOpen)?;
        a.cursor = LoopCursor::default();
        Ok(())
    }

    fn close(&mut self) {
        self.active = None;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{DecoderKind, Standard};

    fn trace() -> DeviceTrace {
        DeviceTrace {
            profile: DeviceProfile {
                model: "m".into(),
                manufacturer: "x".into(),
                serial_number: "s".into(),
                build_host: "h".into(),
                battery_capacity_mah: 3000.0,
                voltage_v: 3.8,
                battery_level: 80.0,
                os_version: "10".into(),
                charging: false,
            },
            decoders: vec![TraceDecoder {
                descriptor: DecoderDescriptor {
                    name: "d".into(),
                    standard: Standard::Vp8,
                    kind: DecoderKind::Software,
                    vendor: "Google".into(),
                },
                speed_fps: 100.0,
                per_asset: BTreeMap::new(),
                fail_open: false,
            }],
            end_s: 100.0,
            events: vec![
                LevelEvent { t: 0.0, level: 80, charging: false },
                LevelEvent { t: 10.0, level: 79, charging: false },
                LevelEvent { t: 20.5, level: 78, charging: false },
            ],
        }
    }

    #[test]
    fn file_round_trip() {
        let t = trace();
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        let back = DeviceTrace::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn replay_follows_timeline() {
        let mut dev = ReplayDevice::new(trace());
        assert_eq!(dev.battery_level().unwrap(), 80);
        dev.wait(10.0).unwrap();
        assert_eq!(dev.battery_level().unwrap(), 79);
        dev.wait(10.4).unwrap();
        assert_eq!(dev.battery_level().unwrap(), 79);
        dev.wait(0.2).unwrap();
        assert_eq!(dev.battery_level().unwrap(), 78);
        assert!(matches!(dev.wait(100.0), Err(ProbeError::TraceExhausted(_))));
    }

    #[test]
    fn rejects_headerless_trace() {
        let text = "{\"record\":\"level\",\"t\":0.0,\"level\":50,\"charging\":false}\n";
        assert!(matches!(
            DeviceTrace::read_from(text.as_bytes()),
            Err(TraceError::Format(_))
        ));
    }
}
