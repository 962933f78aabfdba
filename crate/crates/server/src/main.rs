use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use pmt_core::domain::RoadClass;
use pmt_core::ingest::{SourceFile, UnitSystem};
use pmt_core::reliability::ReliabilityPair;
use pmt_server::engine::{parse_band_spec, IngestRequest, LaneFilter};
use pmt_server::http::DEFAULT_BODY_LIMIT;
use pmt_server::{router, Engine, EngineError};

#[derive(Parser)]
#[command(name = "pmt", version, about = "Pavement patching management tool")]
struct Cli {
    /// Directory holding datasets and threshold overrides.
    #[arg(long, env = "PMT_DATA_DIR", default_value = "pmt-data", global = true)]
    data_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and store an FWD file and a segment file as one dataset.
    Ingest {
        #[arg(long)]
        fwd: PathBuf,
        #[arg(long)]
        segments: PathBuf,
        /// state, us or interstate.
        #[arg(long)]
        class: RoadClass,
        #[arg(long, default_value = "si")]
        units: UnitSystem,
        #[arg(long)]
        id: Option<String>,
    },
    /// Show or derive threshold bands.
    #[command(subcommand)]
    Thresholds(ThresholdsCommand),
    /// Write the patching table for a route.
    Suggest {
        #[arg(long)]
        route: String,
        #[arg(long)]
        direction: Option<String>,
        #[arg(long)]
        lane: Option<String>,
        /// What-if bands, e.g. iri:0.5:1.0,d0:100:200. Not stored.
        #[arg(long)]
        thresholds: Option<String>,
        /// Output file; `-` for stdout.
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value_t = DEFAULT_BODY_LIMIT)]
        body_limit: usize,
    },
}

#[derive(Subcommand)]
enum ThresholdsCommand {
    /// Derive bands from a stored dataset.
    Derive {
        #[arg(long)]
        dataset: String,
        /// Reliability levels, e.g. 90,95. Defaults to the class pair.
        #[arg(long, value_parser = parse_pair)]
        pair: Option<ReliabilityPair>,
        /// Store the result as the class override.
        #[arg(long)]
        install: bool,
    },
    /// Print the effective bands for a class.
    Show {
        #[arg(long)]
        class: RoadClass,
    },
}

fn parse_pair(s: &str) -> Result<ReliabilityPair, String> {
    let (lo, hi) = s.split_once(',').ok_or("expected LOWER,UPPER")?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("'{v}': {e}"));
    ReliabilityPair::new(num(lo)?, num(hi)?).map_err(|e| e.to_string())
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<(), EngineError> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v).map_err(|e| EngineError::Io(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn read(path: &PathBuf) -> Result<Vec<u8>, EngineError> {
    std::fs::read(path).map_err(|e| EngineError::Io(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), EngineError> {
    let engine = Engine::open(&cli.data_dir)?;
    match cli.command {
        Command::Ingest {
            fwd,
            segments,
            class,
            units,
            id,
        } => {
            let (fwd_bytes, seg_bytes) = (read(&fwd)?, read(&segments)?);
            let (fwd_name, seg_name) = (fwd.display().to_string(), segments.display().to_string());
            let outcome = engine.ingest(IngestRequest {
                fwd: SourceFile {
                    path: &fwd_name,
                    bytes: &fwd_bytes,
                },
                segments: SourceFile {
                    path: &seg_name,
                    bytes: &seg_bytes,
                },
                road_class: class,
                units,
                id: id.as_deref(),
            })?;
            print_json(&outcome)
        }
        Command::Thresholds(ThresholdsCommand::Derive {
            dataset,
            pair,
            install,
        }) => {
            let set = engine.derive(&dataset, pair)?;
            if install {
                engine.install(&set, Some(format!("derived from {dataset}")))?;
            }
            print_json(&set)
        }
        Command::Thresholds(ThresholdsCommand::Show { class }) => {
            print_json(&engine.thresholds(class)?)
        }
        Command::Suggest {
            route,
            direction,
            lane,
            thresholds,
            out,
        } => {
            let filter = LaneFilter::parse(direction.as_deref(), lane.as_deref())?;
            let bands = parse_band_spec(thresholds.as_deref().unwrap_or(""))?;
            let csv = engine.patching_csv(&route, filter, &bands)?;
            if out.as_os_str() == "-" {
                std::io::stdout().lock().write_all(&csv)?;
            } else {
                std::fs::write(&out, csv)
                    .map_err(|e| EngineError::Io(format!("{}: {e}", out.display())))?;
            }
            Ok(())
        }
        Command::Serve {
            host,
            port,
            body_limit,
        } => {
            let addr: SocketAddr = format!("{host}:{port}")
                .parse()
                .map_err(|e| EngineError::BadRequest(format!("address {host}:{port}: {e}")))?;
            let app = router(Arc::new(engine), body_limit);
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(addr).await?;
                eprintln!("listening on http://{}", listener.local_addr()?);
                axum::serve(listener, app).await
            })?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
