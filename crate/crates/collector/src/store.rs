//! Sample store: an append-only ingest log and the current state derived from it.
//!
//! Every schema-valid submission is appended to the log with a sequence number,
//! whatever its verdict. The index keeps one [`StoredSample`] per device identity
//! and is a pure function of the log, so replaying the log into an empty store
//! reproduces it byte for byte.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use decwatt_core::{DecoderKind, RawSample, SampleKey, Standard, Submission, SubmissionStatus};

/// Prefix marking a serial number that is already a salted hash.
pub const HASH_PREFIX: &str = "sha256:";

/// Relative tolerance when checking stored metrics against their window.
const RECOMPUTE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    AcceptedNew,
    SupersededPrevious,
    RejectedDuplicate,
    RejectedInvalid,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub reason: String,
}

impl FieldError {
    fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        FieldError {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReceipt {
    pub verdict: Verdict,
    /// Log sequence number; absent for rejected-invalid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seq: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<FieldError>,
}

impl IngestReceipt {
    fn invalid(errors: Vec<FieldError>) -> Self {
        IngestReceipt {
            verdict: Verdict::RejectedInvalid,
            seq: None,
            sample: None,
            errors,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("storage failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt log {path} line {line}: {reason}")]
    Corrupt { path: String, line: usize, reason: String },
}

impl StoreError {
    /// Storage failures leave no visible state change and may be retried.
    pub fn is_retriable(&self) -> bool {
        matches!(self, StoreError::Io { .. })
    }
}

/// One line of the ingest log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub seq: u64,
    pub key: SampleKey,
    pub submission: Submission,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredSample {
    pub key: SampleKey,
    pub submission: Submission,
    /// Submissions received for this key, including rejected duplicates.
    pub history: u32,
    /// Holds at least one fully measured pair, so it is exported.
    pub accepted: bool,
    /// Sequence number of the submission currently held.
    pub seq: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletenessRow {
    pub model: String,
    pub sample: String,
    pub completeness: f64,
    pub status: SubmissionStatus,
    pub accepted: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportFilter {
    #[serde(default)]
    pub standard: Option<Standard>,
    #[serde(default)]
    pub kind: Option<DecoderKind>,
    #[serde(default)]
    pub model: Option<String>,
}

impl ExportFilter {
    pub fn is_empty(&self) -> bool {
        self.standard.is_none() && self.kind.is_none() && self.model.is_none()
    }
}

/// Salted SHA-256 of a serial number, or the input unchanged if it is already hashed.
pub fn hash_serial(salt: &str, serial: &str) -> String {
    if serial.starts_with(HASH_PREFIX) {
        return serial.to_string();
    }
    let mut h = Sha256::new();
    h.update(salt.as_bytes());
    h.update([0u8]);
    h.update(serial.as_bytes());
    format!("{HASH_PREFIX}{}", hex::encode(h.finalize()))
}

/// Field-level problems with a submission; empty when it is acceptable.
pub fn validate(s: &Submission) -> Vec<FieldError> {
    let mut errs = Vec::new();
    let p = &s.profile;
    if p.serial_number.trim().is_empty() {
        errs.push(FieldError::new("profile.serial_number", "must not be empty"));
    }
    if p.build_host.trim().is_empty() {
        errs.push(FieldError::new("profile.build_host", "must not be empty"));
    }
    if p.model.trim().is_empty() {
        errs.push(FieldError::new("profile.model", "must not be empty"));
    }
    if !(p.battery_capacity_mah.is_finite() && p.battery_capacity_mah > 0.0) {
        errs.push(FieldError::new("profile.battery_capacity_mah", "must be a positive number"));
    }
    if !(s.completeness.is_finite() && (0.0..=1.0).contains(&s.completeness)) {
        errs.push(FieldError::new("completeness", "must lie in [0, 1]"));
    }
    let tested = s.tested_pairs();
    if tested > s.available_pairs as usize {
        errs.push(FieldError::new(
            "available_pairs",
            format!("{} tested pairs exceed {} available", tested, s.available_pairs),
        ));
    } else if (s.completeness - s.expected_completeness()).abs() > 1e-12 {
        errs.push(FieldError::new(
            "completeness",
            format!("{} does not equal {tested}/{}", s.completeness, s.available_pairs),
        ));
    }
    if s.records.is_empty() && s.status != SubmissionStatus::Cancelled {
        errs.push(FieldError::new("records", "must not be empty unless the campaign was cancelled"));
    }
    if !s.client_time_s.is_finite() {
        errs.push(FieldError::new("client_time_s", "must be finite"));
    }
    if s.campaign_id.trim().is_empty() {
        errs.push(FieldError::new("campaign_id", "must not be empty"));
    }
    let mut seen = std::collections::BTreeSet::new();
    for (i, r) in s.records.iter().enumerate() {
        if !r.flags.partial && !seen.insert(r.pair()) {
            errs.push(FieldError::new(format!("records[{i}]"), format!("pair {} appears twice", r.pair())));
        }
        if r.decoder.standard != r.asset.standard {
            errs.push(FieldError::new(
                format!("records[{i}].asset.standard"),
                "does not match the decoder standard",
            ));
        }
        if p.battery_capacity_mah > 0.0 && !r.is_consistent(p.battery_capacity_mah, RECOMPUTE_TOL) {
            errs.push(FieldError::new(
                format!("records[{i}].metrics"),
                "do not recompute from the measurement window",
            ));
        }
    }
    errs
}

/// Parses a request body, mapping decode errors to field errors.
pub fn parse_submission(body: &[u8]) -> Result<Submission, Vec<FieldError>> {
    serde_json::from_slice(body).map_err(|e| {
        let msg = e.to_string();
        let field = msg
            .split_once("missing field `")
            .and_then(|(_, rest)| rest.split_once('`'))
            .map(|(f, _)| f.to_string())
            .unwrap_or_else(|| "body".to_string());
        vec![FieldError::new(field, msg)]
    })
}

/// Append-only log file with all-or-nothing line writes.
#[derive(Debug)]
struct LogFile {
    path: PathBuf,
    file: File,
    len: u64,
}

impl LogFile {
    fn append(&mut self, line: &[u8]) -> Result<(), StoreError> {
        let io = |source| StoreError::Io {
            path: self.path.display().to_string(),
            source,
        };
        let res = self
            .file
            .write_all(line)
            .and_then(|_| self.file.flush())
            .and_then(|_| self.file.sync_data());
        if let Err(e) = res {
            // hide the torn line from readers and from the next append
            let _ = self.file.set_len(self.len);
            return Err(io(e));
        }
        self.len += line.len() as u64;
        Ok(())
    }
}

pub const LOG_FILE: &str = "ingest.log.jsonl";
pub const INDEX_FILE: &str = "index.jsonl";

#[derive(Debug)]
pub struct Store {
    salt: String,
    next_seq: u64,
    log: Vec<LogEntry>,
    index: BTreeMap<SampleKey, StoredSample>,
    dir: Option<PathBuf>,
    file: Option<LogFile>,
}

impl Store {
    pub fn in_memory(salt: &str) -> Self {
        Store {
            salt: salt.to_string(),
            next_seq: 0,
            log: Vec::new(),
            index: BTreeMap::new(),
            dir: None,
            file: None,
        }
    }

    /// Opens (or creates) a store in `dir`, rebuilding the index from the log.
    pub fn open(dir: &Path, salt: &str) -> Result<Self, StoreError> {
        let io = |p: &Path| {
            let path = p.display().to_string();
            move |source| StoreError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let log_path = dir.join(LOG_FILE);
        let mut store = Store::in_memory(salt);
        // device nodes and the like have nothing to replay
        if log_path.metadata().is_ok_and(|m| m.is_file()) {
            let f = File::open(&log_path).map_err(io(&log_path))?;
            for (i, line) in BufReader::new(f).lines().enumerate() {
                let line = line.map_err(io(&log_path))?;
                if line.trim().is_empty() {
                    continue;
                }
                let entry: LogEntry = serde_json::from_str(&line).map_err(|e| StoreError::Corrupt {
                    path: log_path.display().to_string(),
                    line: i + 1,
                    reason: e.to_string(),
                })?;
                store.apply(entry);
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&log_path)
            .map_err(io(&log_path))?;
        let len = file.metadata().map_err(io(&log_path))?.len();
        store.file = Some(LogFile {
            path: log_path,
            file,
            len,
        });
        store.dir = Some(dir.to_path_buf());
        Ok(store)
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    pub fn get(&self, key: &SampleKey) -> Option<&StoredSample> {
        self.index.get(key)
    }

    pub fn samples(&self) -> impl Iterator<Item = &StoredSample> {
        self.index.values()
    }

    pub fn key_for(&self, s: &Submission) -> SampleKey {
        SampleKey {
            serial_hash: hash_serial(&self.salt, &s.profile.serial_number),
            build_host: s.profile.build_host.clone(),
        }
    }

    /// Verdict the index would give `submission` under `key`, without side effects.
    fn judge(&self, key: &SampleKey, s: &Submission) -> Verdict {
        match self.index.get(key) {
            None => Verdict::AcceptedNew,
            Some(old) => {
                let more_complete = s.completeness > old.submission.completeness;
                // two finished campaigns that disagree: the latest wins and the conflict is logged
                let conflicting = s.status == SubmissionStatus::Complete
                    && old.submission.status == SubmissionStatus::Complete
                    && s.completeness == old.submission.completeness
                    && *s != old.submission;
                if more_complete || conflicting {
                    Verdict::SupersededPrevious
                } else {
                    Verdict::RejectedDuplicate
                }
            }
        }
    }

    /// Applies a log entry to the index; the single state transition of the store.
    fn apply(&mut self, entry: LogEntry) -> Verdict {
        let verdict = self.judge(&entry.key, &entry.submission);
        match verdict {
            Verdict::AcceptedNew => {
                self.index.insert(
                    entry.key.clone(),
                    StoredSample {
                        key: entry.key.clone(),
                        accepted: entry.submission.tested_pairs() > 0,
                        submission: entry.submission.clone(),
                        history: 1,
                        seq: entry.seq,
                    },
                );
            }
            Verdict::SupersededPrevious => {
                let s = self.index.get_mut(&entry.key).expect("judged present");
                if s.submission.completeness == entry.submission.completeness {
                    tracing::warn!(
                        sample = %entry.key.redacted(),
                        kept_seq = entry.seq,
                        dropped_seq = s.seq,
                        "conflicting complete submissions; keeping the latest"
                    );
                }
                s.submission = entry.submission.clone();
                s.accepted = s.submission.tested_pairs() > 0;
                s.history += 1;
                s.seq = entry.seq;
            }
            Verdict::RejectedDuplicate => {
                self.index.get_mut(&entry.key).expect("judged present").history += 1;
            }
            Verdict::RejectedInvalid => unreachable!("invalid submissions are never logged"),
        }
        self.next_seq = self.next_seq.max(entry.seq + 1);
        self.log.push(entry);
        verdict
    }

    /// Validates, hashes the serial, logs and indexes one submission.
    pub fn ingest(&mut self, mut s: Submission) -> Result<IngestReceipt, StoreError> {
        let errors = validate(&s);
        if !errors.is_empty() {
            return Ok(IngestReceipt::invalid(errors));
        }
        let key = self.key_for(&s);
        s.profile.serial_number = key.serial_hash.clone();
        let entry = LogEntry {
            seq: self.next_seq,
            key,
            submission: s,
        };
        if let Some(f) = self.file.as_mut() {
            let mut line = serde_json::to_vec(&entry).expect("log entries serialize");
            line.push(b'\n');
            f.append(&line)?;
        }
        let seq = entry.seq;
        let sample = entry.key.redacted();
        let verdict = self.apply(entry);
        Ok(IngestReceipt {
            verdict,
            seq: Some(seq),
            sample: Some(sample),
            errors: Vec::new(),
        })
    }

    /// Parses and ingests a raw request body.
    pub fn ingest_bytes(&mut self, body: &[u8]) -> Result<IngestReceipt, StoreError> {
        match parse_submission(body) {
            Ok(s) => self.ingest(s),
            Err(errors) => Ok(IngestReceipt::invalid(errors)),
        }
    }

    /// One row per stored sample, least complete first.
    pub fn completeness_report(&self) -> Vec<CompletenessRow> {
        let mut rows: Vec<(&SampleKey, CompletenessRow)> = self
            .index
            .values()
            .map(|s| {
                (
                    &s.key,
                    CompletenessRow {
                        model: s.submission.profile.model.clone(),
                        sample: s.key.redacted(),
                        completeness: s.submission.completeness,
                        status: s.submission.status,
                        accepted: s.accepted,
                    },
                )
            })
            .collect();
        rows.sort_by(|a, b| a.1.completeness.total_cmp(&b.1.completeness).then_with(|| a.0.cmp(b.0)));
        rows.into_iter().map(|(_, r)| r).collect()
    }

    /// Accepted samples in key order, records narrowed by the filter.
    pub fn export_raw(&self, filter: &ExportFilter) -> Vec<RawSample> {
        self.index
            .values()
            .filter(|s| s.accepted)
            .filter(|s| filter.model.as_ref().is_none_or(|m| &s.submission.profile.model == m))
            .filter_map(|s| {
                let mut sub = s.submission.clone();
                if filter.standard.is_some() || filter.kind.is_some() {
                    sub.records.retain(|r| {
                        filter.standard.is_none_or(|st| r.decoder.standard == st)
                            && filter.kind.is_none_or(|k| r.decoder.kind == k)
                    });
                    if sub.records.is_empty() {
                        return None;
                    }
                }
                Some(RawSample {
                    key: s.key.clone(),
                    submission: sub,
                })
            })
            .collect()
    }

    pub fn export_bytes(&self, filter: &ExportFilter) -> Vec<u8> {
        decwatt_core::jsonl::to_bytes(&self.export_raw(filter))
    }

    pub fn index_bytes(&self) -> Vec<u8> {
        decwatt_core::jsonl::to_bytes(&self.index.values().collect::<Vec<_>>())
    }

    pub fn log_bytes(&self) -> Vec<u8> {
        decwatt_core::jsonl::to_bytes(&self.log)
    }

    /// Rebuilds a store from a log, as a fresh process would.
    pub fn replay(salt: &str, log: &[LogEntry]) -> Store {
        let mut s = Store::in_memory(salt);
        for e in log {
            s.apply(e.clone());
        }
        s
    }

    /// Writes the derived index next to the log (atomically).
    pub fn write_index(&self) -> Result<(), StoreError> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let path = dir.join(INDEX_FILE);
        let tmp = dir.join(format!("{INDEX_FILE}.tmp"));
        let io = |source| StoreError::Io {
            path: path.display().to_string(),
            source,
        };
        fs::write(&tmp, self.index_bytes()).map_err(io)?;
        fs::rename(&tmp, &path).map_err(io)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use decwatt_core::fixtures;

    fn sub(serial: &str, host: &str, records: usize, available: u32) -> Submission {
        let mut s = fixtures::ten_model_samples().remove(0).submission;
        s.records.truncate(records);
        s.available_pairs = available;
        s.completeness = decwatt_core::submission::completeness_ratio(records, available as usize);
        s.status = if records as u32 == available {
            SubmissionStatus::Complete
        } else {
            SubmissionStatus::Partial
        };
        s.profile.serial_number = serial.into();
        s.profile.build_host = host.into();
        s
    }

    #[test]
    fn first_submission_is_new() {
        let mut st = Store::in_memory("salt");
        let r = st.ingest(sub("SN123", "hostA", 6, 12)).unwrap();
        assert_eq!(r.verdict, Verdict::AcceptedNew);
        assert_eq!(r.seq, Some(0));
    }

    #[test]
    fn higher_completeness_supersedes() {
        let mut st = Store::in_memory("salt");
        st.ingest(sub("SN123", "hostA", 6, 12)).unwrap();
        let r = st.ingest(sub("SN123", "hostA", 12, 12)).unwrap();
        assert_eq!(r.verdict, Verdict::SupersededPrevious);
        let s = st.samples().next().unwrap();
        assert_eq!(s.submission.completeness, 1.0);
        assert_eq!(s.history, 2);
        let r = st.ingest(sub("SN123", "hostA", 6, 12)).unwrap();
        assert_eq!(r.verdict, Verdict::RejectedDuplicate);
        assert_eq!(st.samples().next().unwrap().submission.completeness, 1.0);
    }

    #[test]
    fn identical_resubmission_is_duplicate() {
        let mut st = Store::in_memory("salt");
        st.ingest(sub("SN1", "h", 12, 12)).unwrap();
        let r = st.ingest(sub("SN1", "h", 12, 12)).unwrap();
        assert_eq!(r.verdict, Verdict::RejectedDuplicate);
        assert_eq!(st.len(), 1);
    }

    #[test]
    fn conflicting_complete_submissions_keep_latest() {
        let mut st = Store::in_memory("salt");
        st.ingest(sub("SN1", "h", 12, 12)).unwrap();
        let mut other = sub("SN1", "h", 12, 12);
        other.campaign_id = "second".into();
        let r = st.ingest(other).unwrap();
        assert_eq!(r.verdict, Verdict::SupersededPrevious);
        assert_eq!(st.samples().next().unwrap().submission.campaign_id, "second");
    }

    #[test]
    fn build_host_separates_devices() {
        let mut st = Store::in_memory("salt");
        st.ingest(sub("SN1", "a", 12, 12)).unwrap();
        assert_eq!(st.ingest(sub("SN1", "b", 12, 12)).unwrap().verdict, Verdict::AcceptedNew);
    }

    #[test]
    fn serials_are_stored_hashed() {
        let mut st = Store::in_memory("pepper");
        st.ingest(sub("SN-RAW-1", "h", 12, 12)).unwrap();
        assert!(!String::from_utf8(st.log_bytes()).unwrap().contains("SN-RAW-1"));
        assert!(!String::from_utf8(st.index_bytes()).unwrap().contains("SN-RAW-1"));
        let h = hash_serial("pepper", "SN-RAW-1");
        assert_eq!(hash_serial("pepper", &h), h);
        assert_ne!(hash_serial("salt", "SN-RAW-1"), h);
    }

    #[test]
    fn invalid_submissions_carry_field_reasons() {
        let mut st = Store::in_memory("salt");
        let mut s = sub("", "h", 6, 12);
        s.completeness = 0.9;
        let r = st.ingest(s).unwrap();
        assert_eq!(r.verdict, Verdict::RejectedInvalid);
        let fields: Vec<_> = r.errors.iter().map(|e| e.field.as_str()).collect();
        assert!(fields.contains(&"profile.serial_number"));
        assert!(fields.contains(&"completeness"));
        assert!(st.is_empty());
        assert!(st.log().is_empty());

        let r = st.ingest_bytes(br#"{"campaign_id":"x"}"#).unwrap();
        assert_eq!(r.verdict, Verdict::RejectedInvalid);
        assert_eq!(r.errors[0].field, "profile");
    }

    #[test]
    fn tampered_metrics_are_invalid() {
        let mut s = sub("SN1", "h", 12, 12);
        s.records[3].metrics.delta_play *= 1.01;
        let errs = validate(&s);
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].field, "records[3].metrics");
    }

    #[test]
    fn cancelled_without_records_is_stored_but_not_exported() {
        let mut st = Store::in_memory("salt");
        let mut s = sub("SN1", "h", 0, 12);
        s.status = SubmissionStatus::Cancelled;
        assert_eq!(st.ingest(s).unwrap().verdict, Verdict::AcceptedNew);
        assert!(!st.samples().next().unwrap().accepted);
        assert!(st.export_raw(&ExportFilter::default()).is_empty());
    }

    #[test]
    fn completeness_listing_is_ascending() {
        let mut st = Store::in_memory("salt");
        assert!(st.completeness_report().is_empty());
        st.ingest(sub("A", "h", 12, 12)).unwrap();
        st.ingest(sub("B", "h", 4, 12)).unwrap();
        let rows = st.completeness_report();
        assert_eq!(rows.iter().map(|r| r.completeness).collect::<Vec<_>>(), [4.0 / 12.0, 1.0]);
    }

    #[test]
    fn export_filters_records() {
        let mut st = Store::in_memory("salt");
        for s in fixtures::ten_model_samples() {
            st.ingest(s.submission).unwrap();
        }
        let av1 = st.export_raw(&ExportFilter {
            standard: Some(Standard::Mpeg4),
            ..Default::default()
        });
        assert_eq!(av1.len(), 30);
        assert!(av1
            .iter()
            .flat_map(|s| &s.submission.records)
            .all(|r| r.decoder.standard == Standard::Mpeg4));
        let none = st.export_raw(&ExportFilter {
            standard: Some(Standard::Av1),
            ..Default::default()
        });
        assert!(none.is_empty());
        assert_eq!(st.export_raw(&ExportFilter::default()).len(), 30);
    }

    #[test]
    fn persisted_store_reopens_identically() {
        let dir = tempfile::tempdir().unwrap();
        let mut st = Store::open(dir.path(), "salt").unwrap();
        st.ingest(sub("A", "h", 6, 12)).unwrap();
        st.ingest(sub("A", "h", 12, 12)).unwrap();
        st.ingest(sub("B", "h", 3, 12)).unwrap();
        st.write_index().unwrap();
        let index = st.index_bytes();
        drop(st);
        let mut again = Store::open(dir.path(), "salt").unwrap();
        assert_eq!(again.index_bytes(), index);
        assert_eq!(fs::read(dir.path().join(INDEX_FILE)).unwrap(), index);
        assert_eq!(again.ingest(sub("C", "h", 1, 12)).unwrap().seq, Some(3));
    }
}
