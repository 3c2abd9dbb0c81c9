//! A bot plays the Rhythm Dungeon: synthetic presses are judged window by
//! window until it dies or retires, and the survivor is uploaded.

use rhythm_dungeon::games::dungeon::{Phase, SessionEvent};
use rhythm_dungeon::harness::bot::{bot_dungeon, BotProfile};
use rhythm_dungeon::{ChainWriter, GenesisState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let state = GenesisState::new([0]);
    let profile = BotProfile { accuracy_percent: 97, jitter_us: 15_000, p_fetch_percent: 0, max_rooms: 1 };
    let run = bot_dungeon(&state, "Metronome", 15, profile)?;

    for event in &run.events {
        match event {
            SessionEvent::EnemySpawned { room, enemy, bpm, .. } => {
                println!("room {room}: {} (level {}) at {bpm} bpm", enemy.name, enemy.level)
            }
            SessionEvent::WindowJudged { window_index, action, player_health, enemy_health, .. } => {
                println!("  window {window_index:>3}: {action:?} -> {player_health} vs {enemy_health}")
            }
        }
    }
    println!("mistakes: {:?}", run.tally());
    println!("{:?} in room {}, {} presses", run.session.phase, run.session.room_index, run.inputs.len());

    if run.session.phase == Phase::Retired {
        let mut writer = ChainWriter::new(0);
        let receipt = writer.submit("bot", run.session.finish_and_upload()?)?;
        println!("upload: {receipt:?}");
    }
    Ok(())
}
