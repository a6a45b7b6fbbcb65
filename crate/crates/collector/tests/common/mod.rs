use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use decwatt_core::fixtures::synthetic_samples;
use decwatt_core::submission::completeness_ratio;
use decwatt_core::{Submission, SubmissionStatus};

/// A device's submission cut down to its first `k` records.
pub fn truncated(full: &Submission, k: usize) -> Submission {
    let mut s = full.clone();
    s.records.truncate(k);
    s.completeness = completeness_ratio(s.records.len(), s.available_pairs as usize);
    s.status = match k {
        0 => SubmissionStatus::Cancelled,
        k if k == full.records.len() => full.status,
        _ => SubmissionStatus::Partial,
    };
    s.client_time_s = k as f64;
    s
}

/// Interleaved partial, repeated and final uploads from `devices` devices.
pub fn workload(n: usize, devices: usize, seed: u64) -> Vec<Submission> {
    let pool = synthetic_samples(devices, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    (0..n)
        .map(|_| {
            let full = &pool[rng.random_range(0..pool.len())].submission;
            let k = rng.random_range(0..=full.records.len());
            truncated(full, k)
        })
        .collect()
}
