use std::net::SocketAddr;
use std::path::PathBuf;

use anyhow::Context;
use clap::Parser;
use tracing_subscriber::EnvFilter;

use decwatt_collector::{router, AppState, Store};

/// Collects decoder power submissions from devices.
#[derive(Debug, Parser)]
#[command(name = "decwatt-collector", version)]
struct Args {
    /// Address to listen on.
    #[arg(long, env = "DECWATT_LISTEN", default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    /// Directory for the ingest log and index; in-memory when omitted.
    #[arg(long, env = "DECWATT_DATA_DIR")]
    data_dir: Option<PathBuf>,
    /// Salt mixed into serial-number hashes.
    #[arg(long, env = "DECWATT_SALT", hide_env_values = true)]
    salt: String,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    let args = Args::parse();
    let store = match &args.data_dir {
        Some(dir) => Store::open(dir, &args.salt).with_context(|| format!("opening {}", dir.display()))?,
        None => Store::in_memory(&args.salt),
    };
    tracing::info!(samples = store.len(), entries = store.log().len(), "store ready");
    let state = AppState::new(store);
    let listener = tokio::net::TcpListener::bind(args.listen)
        .await
        .with_context(|| format!("binding {}", args.listen))?;
    tracing::info!(addr = %args.listen, "listening");
    axum::serve(listener, router(state.clone()))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    let store = state.store.lock().expect("store lock poisoned");
    store.write_index().context("writing index snapshot")?;
    tracing::info!("index written, shutting down");
    Ok(())
}
