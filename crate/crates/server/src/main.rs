use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use licensechain::codescan::{hash_function, scan_project, ScanLimits};
use licensechain::ledger::{verify_serialized, SystemClock};
use licensechain::licensing::{parse_license_id, CompatibilityMatrix};
use licensechain::registry::load_wallet_config;
use licensechain::service::{seed_demo, MatchScope, Platform, PlatformConfig, UploadVerdict, DEMO_WALLETS};

#[derive(Parser)]
#[command(
    name = "licensechain",
    version,
    about = "License-compliance registry backed by an append-only contract chain"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
        /// JSON file mapping usernames to wallet addresses.
        #[arg(long, env = "LICENSECHAIN_WALLETS")]
        wallets: PathBuf,
        #[arg(long, default_value = "licensechain-data")]
        data_dir: PathBuf,
        /// Compatibility matrix to use instead of the built-in one.
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Scope::All)]
        match_scope: Scope,
    },
    /// Print every detected function as `path<TAB>language<TAB>name<TAB>sha256`.
    Scan {
        /// Directory or ZIP archive.
        path: PathBuf,
    },
    /// Check whether code under one license may be released under another.
    Check {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
    /// Chain maintenance.
    Chain {
        #[command(subcommand)]
        command: ChainCommand,
    },
    /// Seed a data directory with the LGPL-2.1 derivative scenario.
    Demo {
        #[arg(long, default_value = "licensechain-demo")]
        data_dir: PathBuf,
    },
}

#[derive(Subcommand)]
enum ChainCommand {
    /// Re-verify every block of the persisted chain.
    Verify {
        #[arg(long, default_value = "licensechain-data")]
        data_dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Scope {
    /// Match uploads against every registered project.
    All,
    /// Match only against projects the uploader has downloaded.
    Downloaded,
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "licensechain=info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Serve { port, bind, wallets, data_dir, matrix, match_scope } => {
            let wallets = load_wallet_config(&wallets)?;
            let matrix = load_matrix(matrix.as_deref())?;
            let config = PlatformConfig {
                match_scope: match match_scope {
                    Scope::All => MatchScope::AllProjects,
                    Scope::Downloaded => MatchScope::DownloadedByUser,
                },
                ..Default::default()
            };
            let platform = Platform::open(&data_dir, wallets, Arc::new(matrix), config, Arc::new(SystemClock))
                .with_context(|| format!("opening {}", data_dir.display()))?;
            serve(Arc::new(platform), &bind, port)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Scan { path } => {
            let scan = scan_project(&path, &ScanLimits::default())?;
            for span in &scan.spans {
                println!("{}\t{}\t{}\t{}", span.file_path, span.language, span.name, hash_function(span).0);
            }
            eprintln!(
                "{} functions ({} distinct) in {} files, {} skipped",
                scan.spans.len(),
                scan.hashes.len(),
                scan.files_scanned,
                scan.files_skipped
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { from, to, matrix } => {
            let matrix = load_matrix(matrix.as_deref())?;
            let (from, to) = (parse_license_id(&from)?, parse_license_id(&to)?);
            if from == to || matrix.is_compatible(from, to) {
                println!("ALLOW {from} -> {to}");
                return Ok(ExitCode::SUCCESS);
            }
            let allowed: Vec<&str> = matrix.compatible_with(from).into_iter().map(|l| l.as_str()).collect();
            println!("DENY {from} -> {to}");
            println!("compatible with {from}: {}", allowed.join(", "));
            Ok(ExitCode::from(1))
        }
        Command::Chain { command: ChainCommand::Verify { data_dir } } => {
            let path = data_dir.join("chain.jsonl");
            let bytes = std::fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
            let report = verify_serialized(&bytes);
            for check in report.blocks.iter().filter(|c| !c.ok()) {
                println!("block {}: {}", check.index, check.reason.as_deref().unwrap_or("invalid"));
            }
            if report.valid {
                println!("OK {} blocks", report.blocks.len());
                Ok(ExitCode::SUCCESS)
            } else {
                println!("INVALID");
                Ok(ExitCode::from(1))
            }
        }
        Command::Demo { data_dir } => demo(&data_dir),
    }
}

fn load_matrix(path: Option<&Path>) -> Result<CompatibilityMatrix> {
    Ok(match path {
        Some(p) => CompatibilityMatrix::load(p)?,
        None => CompatibilityMatrix::shipped(),
    })
}

fn serve(platform: Arc<Platform>, bind: &str, port: u16) -> Result<()> {
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((bind, port)).await?;
        tracing::info!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, licensechain_server::router(platform))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}

fn demo(data_dir: &Path) -> Result<ExitCode> {
    if data_dir.join("chain.jsonl").exists() {
        bail!("{} already holds a chain; pick an empty directory", data_dir.display());
    }
    std::fs::create_dir_all(data_dir)?;
    let wallets_path = data_dir.join("wallets.json");
    let wallets: serde_json::Map<String, serde_json::Value> =
        DEMO_WALLETS.iter().map(|(u, w)| ((*u).to_owned(), (*w).into())).collect();
    std::fs::write(&wallets_path, serde_json::to_string_pretty(&wallets)? + "\n")?;
    let platform = Platform::open(
        data_dir,
        load_wallet_config(&wallets_path)?,
        Arc::new(CompatibilityMatrix::shipped()),
        PlatformConfig::default(),
        Arc::new(SystemClock),
    )?;
    let out = seed_demo(&platform)?;
    println!("alice registered {} under LGPL-2.1", out.original);
    println!("bob downloaded it (agreement in block {})", out.download_block);
    println!("bob uploads a derivative under Apache-2.0:");
    println!("{}", serde_json::to_string_pretty(&out.rejected)?);
    println!("bob uploads it again under LGPL-2.1:");
    println!("{}", serde_json::to_string_pretty(&out.accepted)?);
    if !matches!(out.accepted, UploadVerdict::Accepted { .. }) {
        bail!("demo derivative was not accepted");
    }
    println!(
        "serve it with: licensechain serve --data-dir {} --wallets {}",
        data_dir.display(),
        wallets_path.display()
    );
    Ok(ExitCode::SUCCESS)
}
