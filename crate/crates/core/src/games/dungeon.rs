//! Rhythm Dungeon: room-by-room rhythm battles with permadeath.

use serde::{Deserialize, Serialize};

use crate::characters::{Attribute, Character, CharacterError, Weakness};
use crate::combat::{Action, BattleState, Combatant, TurnReport};
use crate::games::{generate_enemy, upload_call, Provenance};
use crate::genesis::{ContractCall, GameTag, GenesisState};
use crate::rhythm::{self, BeatGrid, Button, InputEvent, Judgement, MistakeTally};
use crate::rng;

/// Tempo used before the first enemy is met.
pub const OPENING_BPM: u32 = 80;
pub const XP_PER_ENEMY_LEVEL: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Exploring,
    InBattle,
    Dead,
    Retired,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SessionError {
    #[error("session is over")]
    SessionOver,
    #[error("session is still active")]
    SessionActive,
    #[error("not allowed during a battle")]
    InBattle,
    #[error(transparent)]
    Character(#[from] CharacterError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DungeonSession {
    pub character: Character,
    /// Health carried between rooms.
    pub health: u32,
    pub room_index: u64,
    pub battle: Option<BattleState>,
    pub provenance: Option<Provenance>,
    pub grid: BeatGrid,
    /// Next window of `grid` to be judged.
    pub window_index: u64,
    pub tally: MistakeTally,
    pub seed: u64,
    pub p_fetch_percent: u8,
    pub phase: Phase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WindowOutcome {
    Continue,
    EnemyDefeated { xp: u64, level_up: bool },
    PlayerDied,
}

/// One line of the session event log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SessionEvent {
    EnemySpawned {
        room: u64,
        provenance: Provenance,
        enemy: Character,
        bpm: u32,
        origin_ms: u64,
    },
    WindowJudged {
        room: u64,
        window_index: u64,
        bpm: u32,
        expected: [Button; 4],
        judgements: [Judgement; 4],
        action: Action,
        stance: Option<Weakness>,
        report: TurnReport,
        player_health: u32,
        enemy_health: u32,
        outcome: WindowOutcome,
    },
}

impl DungeonSession {
    /// A fresh base character at the dungeon entrance.
    pub fn start(name: &str, seed: u64, origin_ms: u64, p_fetch_percent: u8) -> Result<Self, SessionError> {
        let character = Character::create_base(name)?;
        Ok(DungeonSession {
            health: character.max_health(),
            character,
            room_index: 0,
            battle: None,
            provenance: None,
            grid: BeatGrid::new(OPENING_BPM, origin_ms),
            window_index: 0,
            tally: MistakeTally::default(),
            seed,
            p_fetch_percent: p_fetch_percent.min(100),
            phase: Phase::Exploring,
        })
    }

    pub fn is_finished(&self) -> bool {
        matches!(self.phase, Phase::Dead | Phase::Retired)
    }

    pub fn enemy(&self) -> Option<&Combatant> {
        self.battle.as_ref().map(|b| &b.enemy)
    }

    /// Exploring spawns the next enemy (inputs are ignored); in battle the
    /// inputs are judged as the current window and the resulting action is
    /// resolved.
    pub fn step(
        &self,
        state: &GenesisState,
        window_inputs: &[InputEvent],
        stance: Option<Weakness>,
    ) -> Result<(DungeonSession, Vec<SessionEvent>), SessionError> {
        match self.phase {
            Phase::Exploring => Ok(self.spawn(state)),
            Phase::InBattle => Ok(self.fight(window_inputs, stance)),
            Phase::Dead | Phase::Retired => Err(SessionError::SessionOver),
        }
    }

    fn spawn(&self, state: &GenesisState) -> (DungeonSession, Vec<SessionEvent>) {
        let mut next = self.clone();
        let enemy_seed = rng::derive(self.seed, self.room_index);
        let (enemy, provenance) = generate_enemy(state, self.character.level, enemy_seed, self.p_fetch_percent);
        let bpm = rhythm::tempo_for_tier(enemy.character.level);
        // The new grid starts where the next unplayed window would have.
        let origin_ms = self.grid.window_span(self.window_index).0.div_ceil(1000);
        next.grid = BeatGrid::new(bpm, origin_ms);
        next.window_index = 0;
        let player = Combatant::new(self.character.clone()).with_health(self.health);
        next.battle = Some(BattleState::new(player, enemy.clone(), rng::derive(enemy_seed, 1)));
        next.provenance = Some(provenance);
        next.phase = Phase::InBattle;
        let event = SessionEvent::EnemySpawned {
            room: self.room_index,
            provenance,
            enemy: enemy.character,
            bpm,
            origin_ms,
        };
        (next, vec![event])
    }

    fn fight(&self, inputs: &[InputEvent], stance: Option<Weakness>) -> (DungeonSession, Vec<SessionEvent>) {
        let mut trace = inputs.to_vec();
        trace.sort_by_key(|e| e.at_us);

        let mut next = self.clone();
        let window = self.window_index;
        let expected = rhythm::intended_pattern(&self.grid, window, &trace);
        let judged = rhythm::judge_window(&self.grid, window, expected, &trace);
        let action = rhythm::decode_action(&judged.beats);
        next.tally.merge(&judged.tally);

        let mut battle = self.battle.clone().expect("in battle");
        battle.player.stance = stance;
        let (battle, report) = battle.resolve_player_action(action).expect("battle is live while InBattle");
        next.window_index += 1;
        next.health = battle.player.current_health;

        let enemy_level = battle.enemy.character.level;
        let outcome = if battle.enemy.is_dead() {
            let xp = XP_PER_ENEMY_LEVEL * u64::from(enemy_level);
            let before = next.character.level;
            next.character = next.character.clone().grant_xp(xp);
            let level_up = next.character.level > before;
            if level_up {
                next.health = next.character.max_health();
            }
            next.room_index += 1;
            next.phase = Phase::Exploring;
            next.battle = None;
            WindowOutcome::EnemyDefeated { xp, level_up }
        } else if battle.player.is_dead() {
            next.phase = Phase::Dead;
            next.battle = Some(battle.clone());
            WindowOutcome::PlayerDied
        } else {
            next.battle = Some(battle.clone());
            WindowOutcome::Continue
        };

        let event = SessionEvent::WindowJudged {
            room: self.room_index,
            window_index: window,
            bpm: self.grid.bpm,
            expected,
            judgements: judged.beats,
            action,
            stance,
            report,
            player_health: battle.player.current_health,
            enemy_health: battle.enemy.current_health,
            outcome,
        };
        (next, vec![event])
    }

    /// Spends a skill point between battles. Vitality also heals the five
    /// points of max health it adds.
    pub fn allocate(&self, attribute: Attribute) -> Result<DungeonSession, SessionError> {
        match self.phase {
            Phase::Exploring => {}
            Phase::InBattle => return Err(SessionError::InBattle),
            Phase::Dead | Phase::Retired => return Err(SessionError::SessionOver),
        }
        let mut next = self.clone();
        next.character = self.character.clone().allocate_point(attribute)?;
        if attribute == Attribute::Vitality {
            next.health += 5;
        }
        Ok(next)
    }

    /// Leaves the dungeon alive. Only possible between battles.
    pub fn retire(&self) -> Result<DungeonSession, SessionError> {
        match self.phase {
            Phase::Exploring => Ok(DungeonSession { phase: Phase::Retired, ..self.clone() }),
            Phase::InBattle => Err(SessionError::InBattle),
            Phase::Dead | Phase::Retired => Err(SessionError::SessionOver),
        }
    }

    /// Stamps the weakness from the mistake tally and produces the upload
    /// call. Consumes the session: the character cannot be played again.
    pub fn finish_and_upload(self) -> Result<ContractCall, SessionError> {
        Ok(upload_call(self.into_finished_character()?, GameTag::RhythmDungeon))
    }

    /// The finished character with its weakness marked.
    pub fn into_finished_character(self) -> Result<Character, SessionError> {
        if !self.is_finished() {
            return Err(SessionError::SessionActive);
        }
        let mut character = self.character;
        character.weakness = rhythm::weakness_from_tally(&self.tally);
        Ok(character)
    }
}

/// Splits a whole-session trace into the presses belonging to window
/// `window` of `grid`.
pub fn window_slice<'a>(grid: &BeatGrid, window: u64, trace: &'a [InputEvent]) -> &'a [InputEvent] {
    let (start, end) = grid.window_span(window);
    let lo = trace.partition_point(|e| e.at_us < start);
    let hi = trace.partition_point(|e| e.at_us < end);
    &trace[lo..hi]
}

/// Runs a session from a recorded trace until the trace is exhausted, the
/// character dies, or `max_windows` windows have been judged. A session
/// still exploring at the end is retired.
pub fn play_trace(
    mut session: DungeonSession,
    state: &GenesisState,
    trace: &[InputEvent],
    stance: Option<Weakness>,
    max_windows: usize,
) -> (DungeonSession, Vec<SessionEvent>) {
    let mut events = Vec::new();
    let last_press = trace.last().map_or(0, |e| e.at_us);
    let mut judged = 0;
    while !session.is_finished() && judged < max_windows {
        if session.phase == Phase::InBattle {
            if session.grid.window_span(session.window_index).0 > last_press {
                break;
            }
            judged += 1;
        }
        let inputs = window_slice(&session.grid, session.window_index, trace);
        let (next, mut evs) = session.step(state, inputs, stance).expect("live session");
        session = next;
        events.append(&mut evs);
    }
    (session, events)
}
