//! Test-bitstream catalogues.
//!
//! A catalogue file lists sequences; each sequence expands into one
//! [`VideoAsset`] per compression standard it was encoded with.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{Standard, VideoAsset};

#[derive(Debug, Error)]
pub enum AssetError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: toml::de::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceEntry {
    pub name: String,
    pub width: u32,
    pub height: u32,
    pub fps: f64,
    pub n_seq: u64,
    #[serde(default)]
    pub si_mean: f64,
    #[serde(default)]
    pub ti_mean: f64,
    #[serde(default)]
    pub bitrate_kbps: f64,
    #[serde(default)]
    pub gop_seconds: Option<f64>,
    pub standards: Vec<Standard>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Catalogue {
    #[serde(default)]
    pub sequence: Vec<SequenceEntry>,
}

impl Catalogue {
    pub fn expand(&self) -> Result<Vec<VideoAsset>, AssetError> {
        let mut out = Vec::new();
        for s in &self.sequence {
            for &standard in &s.standards {
                let a = VideoAsset {
                    name: s.name.clone(),
                    width: s.width,
                    height: s.height,
                    fps: s.fps,
                    n_seq: s.n_seq,
                    standard,
                    si_mean: s.si_mean,
                    ti_mean: s.ti_mean,
                    bitrate_kbps: s.bitrate_kbps,
                    gop_seconds: s.gop_seconds,
                };
                a.validate().map_err(AssetError::Invalid)?;
                out.push(a);
            }
        }
        Ok(out)
    }
}

pub fn parse_catalogue(text: &str, origin: &str) -> Result<Vec<VideoAsset>, AssetError> {
    let cat: Catalogue = toml::from_str(text).map_err(|source| AssetError::Parse {
        path: origin.to_string(),
        source,
    })?;
    cat.expand()
}

/// Loads every `*.toml` catalogue in `dir`, in file-name order.
pub fn load_dir(dir: &Path) -> Result<Vec<VideoAsset>, AssetError> {
    let io = |source| AssetError::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    files.sort();
    let mut assets = Vec::new();
    for f in files {
        let text = std::fs::read_to_string(&f).map_err(|source| AssetError::Io {
            path: f.display().to_string(),
            source,
        })?;
        assets.extend(parse_catalogue(&text, &f.display().to_string())?);
    }
    if assets.is_empty() {
        return Err(AssetError::Invalid(format!("no assets found in {}", dir.display())));
    }
    Ok(assets)
}

/// The three reference sequences (SD, HD, Full HD at 25 fps), encoded for every standard.
///
/// Frame counts are not part of the published descriptors; 500 frames (20 s) is assumed.
pub fn reference_sequences() -> Vec<VideoAsset> {
    let seq = |name: &str, width, height, si, ti, kbps| SequenceEntry {
        name: name.into(),
        width,
        height,
        fps: 25.0,
        n_seq: 500,
        si_mean: si,
        ti_mean: ti,
        bitrate_kbps: kbps,
        gop_seconds: Some(2.0),
        standards: Standard::ALL.to_vec(),
    };
    Catalogue {
        sequence: vec![
            seq("shakewalk", 640, 480, 0.058, 124.76, 2560.0),
            seq("tractor", 1280, 720, 0.071, 100.57, 5120.0),
            seq("zombie", 1920, 1080, 0.073, 104.66, 12288.0),
        ],
    }
    .expand()
    .expect("reference catalogue is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Resolution;

    #[test]
    fn reference_catalogue_covers_all_standards() {
        let assets = reference_sequences();
        assert_eq!(assets.len(), 18);
        let zombie: Vec<_> = assets.iter().filter(|a| a.name == "zombie").collect();
        assert_eq!(zombie.len(), 6);
        assert!(zombie.iter().all(|a| a.resolution() == Resolution::Fhd));
        assert_eq!(zombie[0].bitrate_kbps, 12288.0);
    }

    #[test]
    fn shipped_catalogue_matches_reference() {
        let text = include_str!("../../../assets/sequences.toml");
        let assets = parse_catalogue(text, "sequences.toml").unwrap();
        assert_eq!(assets, reference_sequences());
    }

    #[test]
    fn invalid_entry_is_rejected() {
        let text = r#"
[[sequence]]
name = "bad"
width = 640
height = 480
fps = 0.0
n_seq = 10
standards = ["VP8"]
"#;
        assert!(matches!(parse_catalogue(text, "x"), Err(AssetError::Invalid(_))));
    }
}
