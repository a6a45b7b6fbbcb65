//! Deterministic datasets for tests, benches and demos.
//!
//! Records are built from a physical description (display current, decoder
//! current, decode speed, capacity) by constructing the measurement window
//! the estimator would have observed, so every record recomputes exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assets::reference_sequences;
use crate::metrics::MeasurementWindow;
use crate::pipeline::{flatten, RecordRef, SampleRecord};
use crate::sim::SimConfig;
use crate::submission::{
    completeness_ratio, DecoderRecord, RawSample, RecordFlags, SampleKey, Submission, SubmissionStatus,
};
use crate::types::{
    DecoderDescriptor, DecoderKind, DeviceProfile, PowerMetrics, Standard, VideoAsset,
};

/// Simulator settings for the repeated-measurement experiment.
pub const REPEATABILITY_TOML: &str = include_str!("../../../configs/sim/repeatability.toml");

/// Device `index` of the repeatability experiment.
///
/// Devices share the shipped config and differ only in serial number and
/// noise seed, which is the config seed plus the index.
pub fn repeatability_device(index: u64) -> SimConfig {
    let mut c = SimConfig::from_toml(REPEATABILITY_TOML).expect("shipped config parses");
    c.noise.seed += index;
    c.profile.serial_number = format!("SIM-A70-{:04}", index + 1);
    c
}

/// Start levels of the ten repeated runs, from 90 % down to 27 %.
pub const REPEAT_START_LEVELS: [u8; 10] = [90, 83, 76, 69, 62, 55, 48, 41, 34, 27];

/// Physical description of one measurement.
#[derive(Debug, Clone, Copy)]
pub struct Physics {
    pub capacity_mah: f64,
    pub screen_ma: f64,
    pub decode_ma: f64,
    pub speed_fps: f64,
    pub start_level: f64,
    pub drop: f64,
}

/// The window a device obeying `p` would report, anchored at t = 100 s.
pub fn window_for(p: &Physics, asset: &VideoAsset) -> MeasurementWindow {
    let pct_per_s = (p.screen_ma + p.decode_ma) / p.capacity_mah * 100.0 / 3600.0;
    let elapsed = p.drop / pct_per_s;
    let frames = (p.speed_fps * elapsed).round().max(1.0) as u64;
    MeasurementWindow {
        level_start: p.start_level,
        level_end: p.start_level - p.drop,
        time_start: 100.0,
        time_end: 100.0 + elapsed,
        iter_start: 0,
        iter_end: frames / asset.n_seq,
        frame_start: 0,
        frame_end: frames % asset.n_seq,
        seq_frames: asset.n_seq,
    }
}

pub fn record_for(p: &Physics, decoder: &DecoderDescriptor, asset: &VideoAsset) -> DecoderRecord {
    let delta_screen = p.screen_ma / p.capacity_mah * 100.0;
    DecoderRecord::from_window(
        decoder.clone(),
        asset.clone(),
        window_for(p, asset),
        delta_screen,
        p.capacity_mah,
    )
    .expect("fixture window is valid")
}

pub fn profile(model: &str, manufacturer: &str, serial: &str, capacity_mah: f64) -> DeviceProfile {
    DeviceProfile {
        model: model.to_string(),
        manufacturer: manufacturer.to_string(),
        serial_number: serial.to_string(),
        build_host: "build-01".to_string(),
        battery_capacity_mah: capacity_mah,
        voltage_v: 3.85,
        battery_level: 80.0,
        os_version: "10".to_string(),
        charging: false,
    }
}

pub fn complete_submission(profile: DeviceProfile, records: Vec<DecoderRecord>, available: u32) -> Submission {
    let tested = records.len();
    Submission {
        campaign_id: format!("fixture-{}", profile.serial_number),
        profile,
        records,
        available_pairs: available,
        completeness: completeness_ratio(tested, available as usize),
        client_time_s: 0.0,
        status: SubmissionStatus::Complete,
    }
}

fn clip_asset(name: &str) -> VideoAsset {
    VideoAsset {
        name: name.to_string(),
        width: 640,
        height: 480,
        fps: 25.0,
        n_seq: 500,
        standard: Standard::H264,
        si_mean: 0.0,
        ti_mean: 0.0,
        bitrate_kbps: 0.0,
        gop_seconds: None,
    }
}

/// A record carrying the given playback and decoder figures verbatim.
///
/// The window is a placeholder; use [`record_for`] when recomputation matters.
pub fn record_with_play(
    model: &str,
    serial: &str,
    decoder: &str,
    asset: &str,
    delta_play: f64,
    delta_decode_ma: f64,
) -> SampleRecord {
    let asset = clip_asset(asset);
    let p = Physics {
        capacity_mah: 4000.0,
        screen_ma: 150.0,
        decode_ma: 300.0,
        speed_fps: 100.0,
        start_level: 80.0,
        drop: 3.0,
    };
    SampleRecord {
        sample: SampleKey {
            serial_hash: serial.to_string(),
            build_host: "build-01".to_string(),
        },
        model: model.to_string(),
        manufacturer: "Fixture".to_string(),
        capacity_mah: p.capacity_mah,
        profile_charging: false,
        record: DecoderRecord {
            decoder: DecoderDescriptor {
                name: decoder.to_string(),
                standard: Standard::H264,
                kind: DecoderKind::Hardware,
                vendor: "generic".to_string(),
            },
            window: window_for(&p, &asset),
            asset,
            metrics: PowerMetrics {
                delta_seq: 0.1,
                speed_fps: 100.0,
                delta_play,
                delta_decode_ma,
                delta_screen: 3.75,
            },
            flags: RecordFlags {
                suspect: delta_decode_ma <= 0.0,
                ..RecordFlags::default()
            },
        },
    }
}

fn decoder(name: &str, standard: Standard, kind: DecoderKind, vendor: &str) -> DecoderDescriptor {
    DecoderDescriptor {
        name: name.to_string(),
        standard,
        kind,
        vendor: vendor.to_string(),
    }
}

/// Decoders present on every model of the crafted fixture.
pub fn fixture_decoders() -> Vec<DecoderDescriptor> {
    vec![
        decoder("c2.hw.avc.decoder", Standard::H264, DecoderKind::Hardware, "qcom"),
        decoder("c2.hw.hevc.decoder", Standard::Hevc, DecoderKind::Hardware, "qcom"),
        decoder("c2.hw.vp9.decoder", Standard::Vp9, DecoderKind::Hardware, "qcom"),
        decoder("c2.sw.mpeg4.decoder", Standard::Mpeg4, DecoderKind::Software, "android"),
    ]
}

pub fn ten_model_names() -> Vec<String> {
    [
        "Aster 5", "Bellis X", "Corvid 2", "Dunlin S", "Egret Go", "Fulmar 8", "Gannet Pro", "Heron Lite",
        "Ibis M", "Jacana 3",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

/// Index into [`fixture_decoders`] of each model's intended winner.
/// Three models are won by the software MPEG-4 decoder.
const WINNERS: [usize; 10] = [0, 3, 1, 0, 3, 2, 0, 1, 3, 0];

/// Planted outliers: (model index, device index, decoder index, resolution index).
const OUTLIERS: [(usize, usize, usize, usize); 3] = [(2, 1, 2, 1), (6, 2, 1, 0), (8, 0, 0, 2)];

const DEVICES_PER_MODEL: usize = 3;

fn fixture_physics(model: usize, device: usize, dec: usize, res: usize) -> Physics {
    // Decoder currents ranked so that WINNERS[model] is cheapest and the
    // remaining decoders follow at fixed gaps.
    let winner = WINNERS[model];
    let rank = (dec + 4 - winner) % 4;
    let res_scale = [1.0, 1.5, 2.2][res];
    let mut decode_ma = (120.0 + 70.0 * rank as f64) * res_scale * (1.0 + 0.004 * (device as f64 - 1.0));
    if OUTLIERS.contains(&(model, device, dec, res)) {
        decode_ma *= 4.0;
    }
    // A slow VP9 decoder at Full HD on some models where it cannot win anyway.
    let speed_fps = if dec == 2 && res == 2 && winner != 2 && model % 2 == 1 {
        20.0
    } else {
        220.0 - 15.0 * res as f64
    };
    Physics {
        capacity_mah: 3000.0 + 250.0 * model as f64,
        screen_ma: 150.0,
        decode_ma,
        speed_fps,
        start_level: 80.0,
        drop: 3.0,
    }
}

/// Submissions of the crafted 10-model fixture: three devices per model,
/// four decoders each measured at SD, HD and Full HD.
pub fn ten_model_samples() -> Vec<RawSample> {
    let assets = reference_sequences();
    let decoders = fixture_decoders();
    let names = ten_model_names();
    let mut out = Vec::new();
    for (m, name) in names.iter().enumerate() {
        for d in 0..DEVICES_PER_MODEL {
            let serial = format!("FX{m:02}{d}");
            let p0 = fixture_physics(m, d, 0, 0);
            let prof = profile(name, "Fixture", &serial, p0.capacity_mah);
            let mut records = Vec::new();
            for (k, dec) in decoders.iter().enumerate() {
                let mut mine: Vec<&VideoAsset> = assets.iter().filter(|a| a.standard == dec.standard).collect();
                mine.sort_by(|a, b| a.cmp_by_size(b));
                for (r, a) in mine.iter().enumerate() {
                    records.push(record_for(&fixture_physics(m, d, k, r), dec, a));
                }
            }
            let available = records.len() as u32;
            out.push(RawSample {
                key: SampleKey {
                    serial_hash: serial.clone(),
                    build_host: "build-01".to_string(),
                },
                submission: complete_submission(prof, records, available),
            });
        }
    }
    out
}

pub fn ten_model_records() -> Vec<SampleRecord> {
    flatten(&ten_model_samples())
}

/// References of the records planted as outliers in [`ten_model_samples`].
pub fn planted_outliers() -> Vec<RecordRef> {
    let assets = reference_sequences();
    let decoders = fixture_decoders();
    let mut out: Vec<RecordRef> = OUTLIERS
        .iter()
        .map(|&(m, d, k, r)| {
            let mut mine: Vec<&VideoAsset> = assets.iter().filter(|a| a.standard == decoders[k].standard).collect();
            mine.sort_by(|a, b| a.cmp_by_size(b));
            RecordRef {
                sample: SampleKey {
                    serial_hash: format!("FX{m:02}{d}"),
                    build_host: "build-01".to_string(),
                },
                decoder: decoders[k].name.clone(),
                asset: mine[r].name.clone(),
            }
        })
        .collect();
    out.sort();
    out
}

/// Randomized but reproducible crowd-style submissions, one per device.
///
/// Devices share models in groups of up to nine; each device measures a
/// random subset of a decoder pool on every matching reference bitstream.
pub fn synthetic_samples(n: usize, seed: u64) -> Vec<RawSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let assets = reference_sequences();
    let pool: Vec<(DecoderDescriptor, f64, f64)> = vec![
        (decoder("c2.qti.avc.decoder", Standard::H264, DecoderKind::Hardware, "qti"), 110.0, 240.0),
        (decoder("c2.qti.hevc.decoder", Standard::Hevc, DecoderKind::Hardware, "qti"), 130.0, 220.0),
        (decoder("c2.qti.vp9.decoder", Standard::Vp9, DecoderKind::Hardware, "qti"), 140.0, 200.0),
        (decoder("c2.exynos.h264.decoder", Standard::H264, DecoderKind::Hardware, "exynos"), 120.0, 230.0),
        (decoder("c2.mtk.hevc.decoder", Standard::Hevc, DecoderKind::Hybrid, "mtk"), 170.0, 150.0),
        (decoder("c2.android.avc.decoder", Standard::H264, DecoderKind::Software, "android"), 320.0, 90.0),
        (decoder("c2.android.hevc.decoder", Standard::Hevc, DecoderKind::Software, "android"), 380.0, 60.0),
        (decoder("c2.android.vp8.decoder", Standard::Vp8, DecoderKind::Software, "android"), 300.0, 110.0),
        (decoder("c2.android.vp9.decoder", Standard::Vp9, DecoderKind::Software, "android"), 360.0, 70.0),
        (decoder("c2.android.av1.decoder", Standard::Av1, DecoderKind::Software, "android"), 450.0, 40.0),
        (decoder("c2.android.mpeg4.decoder", Standard::Mpeg4, DecoderKind::Software, "android"), 200.0, 160.0),
    ];
    let manufacturers = ["Samsung", "Xiaomi", "Huawei", "Motorola", "Google", "OnePlus"];
    let mut out = Vec::with_capacity(n);
    let mut model_no = 0usize;
    let mut left_in_model = 0usize;
    let mut model_caps = (0.0, 0.0);
    for i in 0..n {
        if left_in_model == 0 {
            model_no += 1;
            left_in_model = rng.random_range(1..=9);
            model_caps = (rng.random_range(2500.0..5500.0), rng.random_range(0.8..1.3));
        }
        left_in_model -= 1;
        let (capacity, efficiency) = model_caps;
        let manufacturer = manufacturers[model_no % manufacturers.len()];
        let model = format!("{manufacturer} M{model_no:03}");
        let serial = format!("SYN{i:05}");
        let screen = rng.random_range(100.0..250.0);
        let mut records = Vec::new();
        let mut available = 0u32;
        for (dec, base_ma, base_fps) in &pool {
            let mut mine: Vec<&VideoAsset> = assets.iter().filter(|a| a.standard == dec.standard).collect();
            mine.sort_by(|a, b| a.cmp_by_size(b));
            available += mine.len() as u32;
            if !rng.random_bool(0.8) {
                continue;
            }
            for (r, a) in mine.iter().enumerate() {
                let scale = [1.0, 1.6, 2.4][r];
                let p = Physics {
                    capacity_mah: capacity,
                    screen_ma: screen,
                    decode_ma: base_ma * efficiency * scale * rng.random_range(0.97..1.03),
                    speed_fps: base_fps / scale * rng.random_range(0.95..1.05),
                    start_level: rng.random_range(30..=90) as f64,
                    drop: 3.0,
                };
                records.push(record_for(&p, dec, a));
            }
        }
        if records.is_empty() {
            let (dec, base_ma, base_fps) = &pool[0];
            let a = assets.iter().find(|a| a.standard == dec.standard).unwrap();
            let p = Physics {
                capacity_mah: capacity,
                screen_ma: screen,
                decode_ma: *base_ma,
                speed_fps: *base_fps,
                start_level: 60.0,
                drop: 3.0,
            };
            records.push(record_for(&p, dec, a));
        }
        let mut prof = profile(&model, manufacturer, &serial, capacity);
        prof.build_host = format!("build-{:02}", i % 7);
        out.push(RawSample {
            key: SampleKey {
                serial_hash: serial,
                build_host: prof.build_host.clone(),
            },
            submission: complete_submission(prof, records, available),
        });
    }
    out
}
