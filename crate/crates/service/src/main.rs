use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context;
use clap::{Parser, Subcommand};

use rd_service::{App, ServiceConfig, SystemClock};
use rhythm_dungeon::games::dungeon::{play_trace, DungeonSession};
use rhythm_dungeon::harness::{run_scenario, Scenario};
use rhythm_dungeon::ledger::Chain;
use rhythm_dungeon::{canonical, rhythm, GenesisState};

#[derive(Parser)]
#[command(name = "rd", about = "Rhythm dungeon simulator, ledger tools and live server")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bot simulations.
    Sim {
        #[command(subcommand)]
        command: SimCommand,
    },
    /// Chain file tools.
    Ledger {
        #[command(subcommand)]
        command: LedgerCommand,
    },
    /// Plays one deterministic dungeon session from a recorded trace and
    /// prints its event log as JSON lines.
    Play {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, default_value = "Player")]
        name: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        origin_ms: u64,
        /// Chain to fetch enemies from; none means every enemy is generated.
        #[arg(long)]
        chain: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        p_fetch_percent: u8,
        #[arg(long, default_value_t = 10_000)]
        max_windows: usize,
    },
    /// Serves live sessions and ledger browsing over HTTP.
    Serve {
        #[arg(long)]
        port: u16,
        /// `chain_<id>.ndjson`; created if missing, appended on upload.
        #[arg(long)]
        chain: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        p_fetch_percent: u8,
    },
}

#[derive(Subcommand)]
enum SimCommand {
    /// Runs a scenario and writes chain files plus metrics.json.
    Run {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum LedgerCommand {
    /// Checks heights, links, digests, timestamps, nonces and encoding.
    Verify { file: PathBuf },
    /// Replays the chain and prints the state digest.
    Replay { file: PathBuf },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Sim { command: SimCommand::Run { scenario, out } } => {
            let s = Scenario::load(&scenario).with_context(|| format!("loading {}", scenario.display()))?;
            let result = run_scenario(&s)?;
            for path in result.write_to(&out)? {
                println!("wrote {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Ledger { command: LedgerCommand::Verify { file } } => match Chain::load(&file) {
            Ok(chain) => {
                println!("ok: {} blocks, {} transactions", chain.len(), chain.tx_count());
                Ok(ExitCode::SUCCESS)
            }
            Err(e) => {
                println!("invalid: {e}");
                Ok(ExitCode::FAILURE)
            }
        },
        Command::Ledger { command: LedgerCommand::Replay { file } } => {
            let chain = Chain::load(&file)?;
            println!("{}", chain.replay()?.state_digest());
            Ok(ExitCode::SUCCESS)
        }
        Command::Play { trace, name, seed, origin_ms, chain, p_fetch_percent, max_windows } => {
            let trace = rhythm::load_trace(&trace)?;
            let state = match chain {
                Some(path) => Chain::load(&path)?.replay()?,
                None => GenesisState::new([0]),
            };
            let session = DungeonSession::start(&name, seed, origin_ms, p_fetch_percent)?;
            let (session, events) = play_trace(session, &state, &trace, None, max_windows);
            for e in &events {
                println!("{}", canonical::to_string(e)?);
            }
            eprintln!(
                "{:?} in room {} at level {}",
                session.phase, session.room_index, session.character.level
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve { port, chain, seed, p_fetch_percent } => {
            let config = ServiceConfig { seed, p_fetch_percent, ..ServiceConfig::default() };
            let app = App::open(&chain, Arc::new(SystemClock::new()), config)?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
                eprintln!("serving {} on {}", chain.display(), listener.local_addr()?);
                axum::serve(listener, app.router()).await?;
                Ok::<_, anyhow::Error>(())
            })?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
