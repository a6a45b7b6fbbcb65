//! Domain types shared by the estimator, the session engine and the dataset tools.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Video compression standards exercised by the test bitstreams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Standard {
    #[serde(rename = "AV1")]
    Av1,
    #[serde(rename = "HEVC")]
    Hevc,
    #[serde(rename = "VP9")]
    Vp9,
    #[serde(rename = "H.264")]
    H264,
    #[serde(rename = "VP8")]
    Vp8,
    #[serde(rename = "MPEG-4")]
    Mpeg4,
}

impl Standard {
    pub const ALL: [Standard; 6] = [
        Standard::Av1,
        Standard::Hevc,
        Standard::Vp9,
        Standard::H264,
        Standard::Vp8,
        Standard::Mpeg4,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Standard::Av1 => "AV1",
            Standard::Hevc => "HEVC",
            Standard::Vp9 => "VP9",
            Standard::H264 => "H.264",
            Standard::Vp8 => "VP8",
            Standard::Mpeg4 => "MPEG-4",
        }
    }
}

impl fmt::Display for Standard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Standard {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match norm.as_str() {
            "av1" => Ok(Standard::Av1),
            "hevc" | "h265" => Ok(Standard::Hevc),
            "vp9" => Ok(Standard::Vp9),
            "h264" | "avc" => Ok(Standard::H264),
            "vp8" => Ok(Standard::Vp8),
            "mpeg4" => Ok(Standard::Mpeg4),
            _ => Err(ParseEnumError {
                kind: "standard",
                value: s.to_string(),
            }),
        }
    }
}

/// Implementation class of a decoder as exposed by the platform codec list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderKind {
    Hardware,
    Software,
    Hybrid,
}

impl DecoderKind {
    pub const ALL: [DecoderKind; 3] = [
        DecoderKind::Hardware,
        DecoderKind::Software,
        DecoderKind::Hybrid,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DecoderKind::Hardware => "hardware",
            DecoderKind::Software => "software",
            DecoderKind::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DecoderKind {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hardware" | "hw" => Ok(DecoderKind::Hardware),
            "software" | "sw" => Ok(DecoderKind::Software),
            "hybrid" => Ok(DecoderKind::Hybrid),
            _ => Err(ParseEnumError {
                kind: "decoder kind",
                value: s.to_string(),
            }),
        }
    }
}

/// Resolution class of a test sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resolution {
    Sd,
    Hd,
    Fhd,
}

impl Resolution {
    pub const ALL: [Resolution; 3] = [Resolution::Sd, Resolution::Hd, Resolution::Fhd];

    /// Classifies a frame size by its height: up to 480 lines is SD, up to 720 is HD.
    pub fn classify(width: u32, height: u32) -> Resolution {
        let lines = height.min(width);
        if lines <= 480 {
            Resolution::Sd
        } else if lines <= 720 {
            Resolution::Hd
        } else {
            Resolution::Fhd
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Resolution::Sd => "sd",
            Resolution::Hd => "hd",
            Resolution::Fhd => "fhd",
        }
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Resolution {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sd" => Ok(Resolution::Sd),
            "hd" => Ok(Resolution::Hd),
            "fhd" | "fullhd" | "full-hd" => Ok(Resolution::Fhd),
            _ => Err(ParseEnumError {
                kind: "resolution",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {kind} `{value}`")]
pub struct ParseEnumError {
    pub kind: &'static str,
    pub value: String,
}

/// A test bitstream: one sequence encoded with one standard.
///
/// The perceptual descriptors are carried as opaque metadata and never recomputed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoAsset {
    pub name: String,
    pub width: u32,
    pub height: u32,
    /// Frame rate required for playback.
    pub fps: f64,
    /// Number of frames in the bitstream.
    pub n_seq: u64,
    pub standard: Standard,
    #[serde(default)]
    pub si_mean: f64,
    #[serde(default)]
    pub ti_mean: f64,
    #[serde(default)]
    pub bitrate_kbps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gop_seconds: Option<f64>,
}

impl VideoAsset {
    pub fn resolution(&self) -> Resolution {
        Resolution::classify(self.width, self.height)
    }

    pub fn pixels(&self) -> u64 {
        u64::from(self.width) * u64::from(self.height)
    }

    /// Ascending by frame size, then by name.
    pub fn cmp_by_size(&self, other: &Self) -> Ordering {
        self.pixels()
            .cmp(&other.pixels())
            .then_with(|| self.name.cmp(&other.name))
            .then_with(|| self.standard.cmp(&other.standard))
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err(format!("asset `{}`: fps must be positive", self.name));
        }
        if self.n_seq == 0 {
            return Err(format!("asset `{}`: n_seq must be positive", self.name));
        }
        if self.width == 0 || self.height == 0 {
            return Err(format!("asset `{}`: frame size must be positive", self.name));
        }
        Ok(())
    }
}

/// Device identity and battery properties reported by the platform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub model: String,
    pub manufacturer: String,
    pub serial_number: String,
    pub build_host: String,
    /// Battery capacity in mAh.
    pub battery_capacity_mah: f64,
    pub voltage_v: f64,
    /// Current battery level in percent.
    pub battery_level: f64,
    pub os_version: String,
    pub charging: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DecoderDescriptor {
    pub name: String,
    pub standard: Standard,
    pub kind: DecoderKind,
    pub vendor: String,
}

/// Estimated power and speed figures for one decoder on one bitstream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerMetrics {
    /// Battery percent consumed per full decode of the bitstream.
    pub delta_seq: f64,
    /// Average decoding speed, frames per second.
    pub speed_fps: f64,
    /// Battery percent consumed per hour of real-time playback.
    pub delta_play: f64,
    /// Decoder-only current draw, milliamps.
    pub delta_decode_ma: f64,
    /// Display-on idle baseline used, percent per hour.
    pub delta_screen: f64,
}
