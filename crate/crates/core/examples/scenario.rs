//! A whole multi-chain simulation from a TOML scenario, with its metrics.

use rhythm_dungeon::harness::{run_scenario, Scenario};

const SCENARIO: &str = r#"
chains = 2
players = 6
sessions_per_player = 30
bot_accuracy_percent = 95
bot_jitter_us = 20000
p_fetch_percent = 60
master_seed = 2024
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = Scenario::from_toml(SCENARIO)?;
    let run = run_scenario(&scenario)?;
    for chain in &run.chains {
        println!(
            "chain {}: {} blocks, {} transactions, digest {}",
            chain.chain_id,
            chain.len(),
            chain.tx_count(),
            chain.replay()?.state_digest()
        );
    }
    println!("{}", serde_json::to_string_pretty(&run.metrics)?);

    let dir = tempfile::tempdir()?;
    for path in run.write_to(dir.path())? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
