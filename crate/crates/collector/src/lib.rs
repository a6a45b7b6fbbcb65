//! Collector for crowd-sourced decoder power samples.
//!
//! Devices post [`Submission`](decwatt_core::Submission)s; the [`store`]
//! deduplicates them per device identity and the [`server`] exposes ingest,
//! completeness and export endpoints over HTTP.

pub mod server;
pub mod store;

pub use server::{router, AppState};
pub use store::{
    hash_serial, validate, CompletenessRow, ExportFilter, FieldError, IngestReceipt, LogEntry, Store, StoreError,
    StoredSample, Verdict,
};
