//! Multi-chain simulations driven by bots.
//!
//! A [`Scenario`] fans its master seed out into per-player, per-session
//! seeds. Sessions run in a fixed (session, player) order; each round of
//! sessions is sealed as one block per chain, so the output depends on the
//! seed alone.

pub mod bot;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::characters::Weakness;
use crate::games::adventure::{self, AdventureError};
use crate::games::last_trip::{self, Choice, CHAPTERS};
use crate::games::dungeon::SessionEvent;
use crate::games::Provenance;
use crate::genesis::{ChainId, GameTag, GenesisState, Receipt, BLOOD_MOON_PERIOD};
use crate::ledger::{Chain, ChainWriter, LedgerError, PersistError};
use crate::rhythm::MistakeTally;
use crate::rng;

use bot::{bot_dungeon, BotProfile};

/// Bots retire once they reach this room.
pub const BOT_ROOM_CAP: u64 = 6;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub chains: u64,
    pub players: u64,
    pub sessions_per_player: u64,
    pub bot_accuracy_percent: u8,
    #[serde(alias = "bot_jitter_µs")]
    pub bot_jitter_us: u64,
    pub p_fetch_percent: u8,
    pub master_seed: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    ConfigInvalid(String),
    #[error("scenario file: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Persist(#[from] PersistError),
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: &str| Err(ScenarioError::ConfigInvalid(m.to_owned()));
        if self.chains == 0 {
            return bad("chains must be at least 1");
        }
        if self.players == 0 {
            return bad("players must be at least 1");
        }
        if self.sessions_per_player == 0 {
            return bad("sessions_per_player must be at least 1");
        }
        if self.bot_accuracy_percent > 100 {
            return bad("bot_accuracy_percent must be within 0..=100");
        }
        if self.p_fetch_percent > 100 {
            return bad("p_fetch_percent must be within 0..=100");
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = toml::from_str(text).map_err(|e| ScenarioError::ConfigInvalid(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    fn profile(&self) -> BotProfile {
        BotProfile {
            accuracy_percent: self.bot_accuracy_percent,
            jitter_us: self.bot_jitter_us,
            p_fetch_percent: self.p_fetch_percent,
            max_rooms: BOT_ROOM_CAP,
        }
    }
}

/// Figures recomputable from the chains alone.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerMetrics {
    pub blocks: u64,
    pub transactions: u64,
    pub rejections: u64,
    pub uploads_per_game: BTreeMap<GameTag, u64>,
    /// Weakness stamped on uploaded characters: the per-player mistake
    /// histogram as the ledger sees it.
    pub weakness_histogram: BTreeMap<Weakness, u64>,
    pub dark_lord_defeats: BTreeMap<ChainId, u64>,
    pub blood_moons_triggered: BTreeMap<ChainId, u64>,
    pub blood_moons_resolved: BTreeMap<ChainId, u64>,
    pub adam_levels: BTreeMap<ChainId, u32>,
}

impl LedgerMetrics {
    pub fn from_chains<'a>(chains: impl IntoIterator<Item = &'a Chain>) -> Result<Self, LedgerError> {
        let mut m = LedgerMetrics::default();
        for chain in chains {
            let state = chain.replay()?;
            m.add(chain, &state);
        }
        Ok(m)
    }

    fn add(&mut self, chain: &Chain, state: &GenesisState) {
        let id = chain.chain_id;
        self.blocks += chain.len() as u64;
        self.transactions += chain.tx_count() as u64;
        self.rejections += state.rejections().len() as u64;
        for record in state.characters().values() {
            *self.uploads_per_game.entry(record.origin_game).or_default() += 1;
            *self.weakness_histogram.entry(record.character.weakness).or_default() += 1;
        }
        let defeats = state.dark_lord_defeats(id).unwrap_or(0);
        self.dark_lord_defeats.insert(id, defeats);
        self.blood_moons_triggered.insert(id, defeats / BLOOD_MOON_PERIOD);
        let resolved = state.blood_moon_log().iter().filter(|r| r.home_chain == id).count() as u64;
        self.blood_moons_resolved.insert(id, resolved);
        self.adam_levels.insert(id, state.adam(id).map_or(0, |a| a.level));
    }
}

/// Figures only the running simulation can see: enemy spawns and raw
/// judgements are not written to the ledger.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Telemetry {
    pub sessions: u64,
    pub enemies_spawned: u64,
    pub fetch_attempts_hit: u64,
    /// Hits per thousand spawns.
    pub fetch_hit_rate_permille: u64,
    pub mistake_histogram: MistakeTally,
    pub dark_lord_battles: u64,
    pub dark_lord_skipped_no_summon: u64,
    pub mean_rooms_cleared_milli: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    pub ledger: LedgerMetrics,
    pub telemetry: Telemetry,
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub chains: Vec<Chain>,
    pub metrics: Metrics,
}

impl ScenarioRun {
    /// Writes `chain_<id>.ndjson` per chain and `metrics.json` into `dir`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, ScenarioError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        for chain in &self.chains {
            paths.push(chain.save_to_dir(dir)?);
        }
        let metrics = dir.join("metrics.json");
        let mut text = serde_json::to_string_pretty(&self.metrics).expect("metrics serialize");
        text.push('\n');
        std::fs::write(&metrics, text)?;
        paths.push(metrics);
        Ok(paths)
    }
}

/// The game played by `player` in its `session`-th session.
pub fn game_for(player: u64, session: u64) -> GameTag {
    match (player + session) % 3 {
        0 => GameTag::RhythmDungeon,
        1 => GameTag::LastTrip,
        _ => GameTag::AdamsAdventure,
    }
}

fn submitter(player: u64) -> String {
    format!("player-{player}")
}

fn last_trip_policy(seed: u64) -> Vec<Choice> {
    let mut s = seed;
    (0..CHAPTERS).map(|_| Choice::ALL[rng::below(&mut s, 4) as usize]).collect()
}

struct Runner {
    profile: BotProfile,
    writers: Vec<ChainWriter>,
    telemetry: Telemetry,
    dungeon_sessions: u64,
    rooms_cleared: u64,
}

impl Runner {
    fn note_dungeon(&mut self, run: &bot::BotRun) {
        self.telemetry.sessions += 1;
        self.dungeon_sessions += 1;
        self.rooms_cleared += run.session.room_index;
        self.telemetry.mistake_histogram.merge(&run.tally());
        for e in &run.events {
            if let SessionEvent::EnemySpawned { provenance, .. } = e {
                self.telemetry.enemies_spawned += 1;
                if matches!(provenance, Provenance::Fetched(_)) {
                    self.telemetry.fetch_attempts_hit += 1;
                }
            }
        }
    }

    fn play(&mut self, player: u64, session: u64, seed: u64, chain: usize) -> Result<(), ScenarioError> {
        let who = submitter(player);
        let chain_id = self.writers[chain].chain_id();
        let name = format!("Bot {player}-{session}");
        match game_for(player, session) {
            GameTag::RhythmDungeon => {
                let run = bot_dungeon(self.writers[chain].state(), &name, seed, self.profile)
                    .expect("bot names are valid");
                self.note_dungeon(&run);
                let call = run.session.finish_and_upload().expect("bot sessions finish");
                self.writers[chain].submit(&who, call)?;
            }
            GameTag::LastTrip => {
                self.telemetry.sessions += 1;
                let policy = last_trip_policy(rng::derive(seed, 5));
                let out = last_trip::last_trip_run_with_rivals(self.writers[chain].state(), seed, &policy)
                    .expect("policy has one choice per chapter");
                if let Some(call) = out.upload {
                    self.writers[chain].submit(&who, call)?;
                }
            }
            GameTag::AdamsAdventure => {
                let run = bot_dungeon(self.writers[chain].state(), &name, seed, self.profile)
                    .expect("bot names are valid");
                self.note_dungeon(&run);
                for call in adventure::complete_adventure(run.session, chain_id).expect("bot sessions finish") {
                    self.writers[chain].submit(&who, call)?;
                }
                self.dark_lord(&who, chain, rng::derive(seed, 2))?;
                self.blood_moons(&who, chain, rng::derive(seed, 3))?;
            }
        }
        Ok(())
    }

    fn dark_lord(&mut self, who: &str, chain: usize, seed: u64) -> Result<(), ScenarioError> {
        let chain_id = self.writers[chain].chain_id();
        match adventure::dark_lord_battle(self.writers[chain].state(), chain_id, seed) {
            Ok(out) => {
                self.telemetry.dark_lord_battles += 1;
                for call in out.calls {
                    self.writers[chain].submit(who, call)?;
                }
            }
            Err(AdventureError::NoSummon) => self.telemetry.dark_lord_skipped_no_summon += 1,
            Err(e) => unreachable!("dark lord battle on a known chain: {e}"),
        }
        Ok(())
    }

    /// Resolves every Blood Moon pending on `chain` right away.
    fn blood_moons(&mut self, who: &str, chain: usize, seed: u64) -> Result<(), ScenarioError> {
        let home = self.writers[chain].chain_id();
        let mut k = 0;
        while self.writers[chain].state().pending_blood_moons(home) > 0 {
            let states = self.writers.iter().map(|w| (w.chain_id(), w.state()));
            let call = adventure::blood_moon(states, home, rng::derive(seed, k)).expect("pending blood moon");
            let receipt = self.writers[chain].submit(who, call)?;
            debug_assert!(matches!(receipt, Receipt::BloodMoonRecorded { .. }));
            k += 1;
        }
        Ok(())
    }
}

/// Runs a whole scenario. Every chain is verified and replayed against the
/// writer's live state before returning.
pub fn run_scenario(s: &Scenario) -> Result<ScenarioRun, ScenarioError> {
    s.validate()?;
    let mut runner = Runner {
        profile: s.profile(),
        writers: (0..s.chains).map(ChainWriter::new).collect(),
        telemetry: Telemetry::default(),
        dungeon_sessions: 0,
        rooms_cleared: 0,
    };
    let player_seeds: Vec<u64> = (0..s.players).map(|p| rng::derive(s.master_seed, p)).collect();

    for session in 0..s.sessions_per_player {
        for player in 0..s.players {
            let seed = rng::derive(player_seeds[player as usize], session);
            let chain = (player % s.chains) as usize;
            runner.play(player, session, seed, chain)?;
        }
        for w in &mut runner.writers {
            w.commit(session + 1)?;
        }
    }

    let mut t = runner.telemetry;
    t.fetch_hit_rate_permille = (t.fetch_attempts_hit * 1000).checked_div(t.enemies_spawned).unwrap_or(0);
    t.mean_rooms_cleared_milli = (runner.rooms_cleared * 1000).checked_div(runner.dungeon_sessions).unwrap_or(0);

    let mut ledger = LedgerMetrics::default();
    let mut chains = Vec::new();
    for w in runner.writers {
        let chain = w.chain().clone();
        chain.verify().map_err(LedgerError::InvalidChain)?;
        let replayed = chain.replay()?;
        assert_eq!(replayed.state_digest(), w.state().state_digest(), "writer state equals replay");
        ledger.add(&chain, &replayed);
        chains.push(chain);
    }
    Ok(ScenarioRun { chains, metrics: Metrics { ledger, telemetry: t } })
}

/// Mean rooms reached by a solo bot over `seeds`, in thousandths.
pub fn mean_rooms_milli(accuracy_percent: u8, jitter_us: u64, seeds: impl IntoIterator<Item = u64>) -> u64 {
    let state = GenesisState::new([0]);
    let profile = BotProfile { accuracy_percent, jitter_us, p_fetch_percent: 0, max_rooms: BOT_ROOM_CAP };
    let (mut total, mut n) = (0, 0);
    for seed in seeds {
        total += bot_dungeon(&state, "Bot", seed, profile).expect("valid name").session.room_index;
        n += 1;
    }
    total * 1000 / n.max(1)
}
