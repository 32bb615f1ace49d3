use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use songwell_core::session::write_transcript;
use songwell_service::{
    http, replay, BackendKind, EngineArgs, FileStore, MemoryStore, ReplayError, SessionService, Store,
};

#[derive(Debug, Parser)]
#[command(name = "songwell", version, about = "Guided songwriting sessions: server, export and replay")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Serve the HTTP API.
    Serve {
        #[arg(long, env = "SONGWELL_ADDR", default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Directory of session logs.
        #[arg(long, env = "SONGWELL_DATA_DIR", default_value = "data")]
        data_dir: PathBuf,
        /// Keep sessions in memory only.
        #[arg(long)]
        memory: bool,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Write a stored session's transcript as JSONL.
    Export {
        session: String,
        #[arg(long, env = "SONGWELL_DATA_DIR", default_value = "data")]
        data_dir: PathBuf,
        /// Output file; standard output when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Rebuild a transcript, re-run its messages and compare the final states.
    /// Exits 0 on a match, 1 on a difference and 2 when the transcript or script is unusable.
    Replay {
        transcript: PathBuf,
        #[command(flatten)]
        engine: EngineArgs,
    },
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    match Cli::parse().command {
        Command::Serve { addr, data_dir, memory, engine } => serve(addr, data_dir, memory, engine),
        Command::Export { session, data_dir, out } => export(&session, data_dir, out),
        Command::Replay { transcript, engine } => run_replay(transcript, engine),
    }
}

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn serve(addr: SocketAddr, data_dir: PathBuf, memory: bool, args: EngineArgs) -> ExitCode {
    let engine = match args.build() {
        Ok(e) => Arc::new(e),
        Err(e) => return fail(2, e),
    };
    let store: Arc<dyn Store> = if memory {
        Arc::new(MemoryStore::default())
    } else {
        match FileStore::open(&data_dir) {
            Ok(s) => Arc::new(s),
            Err(e) => return fail(2, e),
        }
    };
    let service = match SessionService::new(engine, store) {
        Ok(s) => Arc::new(s),
        Err(e) => return fail(2, e),
    };
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(r) => r,
        Err(e) => return fail(1, e),
    };
    let result = runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        tracing::info!(addr = %listener.local_addr()?, backend = ?args.backend, "listening");
        axum::serve(listener, http::router(service))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(1, e),
    }
}

fn export(session: &str, data_dir: PathBuf, out: Option<PathBuf>) -> ExitCode {
    let records = match FileStore::open(data_dir).and_then(|s| s.load(session)) {
        Ok(Some(r)) => r,
        Ok(None) => return fail(1, format!("session `{session}` not found")),
        Err(e) => return fail(1, e),
    };
    let text = write_transcript(&records);
    let written = match out {
        Some(path) => fs::write(path, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    };
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(1, e),
    }
}

fn run_replay(path: PathBuf, mut args: EngineArgs) -> ExitCode {
    if args.script.is_some() && args.backend == BackendKind::Simulated {
        args.backend = BackendKind::Scripted;
    }
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => return fail(2, format!("{}: {e}", path.display())),
    };
    let engine = match args.build() {
        Ok(e) => e,
        Err(e) => return fail(2, e),
    };
    match replay(&engine, &text) {
        Ok(report) if report.matches() => {
            let s = &report.replayed;
            println!(
                "match: {} records, {} turns, {} at {}, {} song(s)",
                report.replayed_records.len(),
                s.history.len(),
                serde_json::to_string(&s.status).unwrap_or_default().trim_matches('"'),
                s.current_step,
                s.artifacts.songs.len()
            );
            ExitCode::SUCCESS
        }
        Ok(report) => {
            println!("mismatch:");
            for line in &report.differences {
                println!("  {line}");
            }
            ExitCode::from(1)
        }
        Err(e @ (ReplayError::Parse(_) | ReplayError::Fold(_) | ReplayError::ScriptedMiss { .. })) => fail(2, e),
        Err(e) => fail(1, e),
    }
}
