//! Live sessions and their offline replay.
//!
//! Every operation the server applies to a session is logged together with
//! the chain height it read from, so the whole session can be re-run from
//! the log and the chain file alone.

use serde::{Deserialize, Serialize};
use tokio::sync::broadcast;

use rhythm_dungeon::characters::Attribute;
use rhythm_dungeon::combat::Combatant;
use rhythm_dungeon::games::dungeon::{DungeonSession, Phase, SessionError, SessionEvent};
use rhythm_dungeon::games::Provenance;
use rhythm_dungeon::ledger::{Chain, LedgerError};
use rhythm_dungeon::{Character, InputEvent, MistakeTally, Receipt, Weakness};

/// Parameters a session was started with.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionStart {
    pub name: String,
    pub seed: u64,
    pub origin_ms: u64,
    pub p_fetch_percent: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SessionOp {
    /// A dungeon step; inputs are in server time.
    Step { inputs: Vec<InputEvent>, stance: Option<Weakness> },
    Allocate { attribute: Attribute },
    Retire,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoggedOp {
    pub op: SessionOp,
    /// Blocks in the served chain when the op was applied.
    pub chain_height: u64,
}

/// What the streaming channel announces for each battle window, in the
/// client's clock.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Announcement {
    pub room: u64,
    pub window_index: u64,
    pub bpm: u32,
    pub window_start_us: i64,
    pub beat_times_us: [i64; 4],
    pub capture_deadline_us: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub phase: Phase,
    pub room_index: u64,
    pub character: Character,
    pub health: u32,
    pub enemy: Option<Combatant>,
    pub provenance: Option<Provenance>,
    pub tally: MistakeTally,
    pub clock_offset_us: i64,
    /// Present while a battle window is open.
    pub schedule: Option<Announcement>,
    pub upload: Option<Receipt>,
}

#[derive(Debug)]
pub struct LiveSession {
    pub id: String,
    pub start: SessionStart,
    pub session: DungeonSession,
    /// Client clock minus server clock.
    pub clock_offset_us: i64,
    pub ops: Vec<LoggedOp>,
    pub events: Vec<SessionEvent>,
    pub upload: Option<Receipt>,
    announce: broadcast::Sender<Announcement>,
}

impl LiveSession {
    pub fn new(id: String, start: SessionStart, clock_offset_us: i64) -> Result<Self, SessionError> {
        let session = DungeonSession::start(&start.name, start.seed, start.origin_ms, start.p_fetch_percent)?;
        let (announce, _) = broadcast::channel(64);
        Ok(LiveSession { id, start, session, clock_offset_us, ops: Vec::new(), events: Vec::new(), upload: None, announce })
    }

    pub fn to_client(&self, server_us: u64) -> i64 {
        server_us as i64 + self.clock_offset_us
    }

    pub fn schedule(&self) -> Option<Announcement> {
        if self.session.phase != Phase::InBattle {
            return None;
        }
        let g = &self.session.grid;
        let w = self.session.window_index;
        Some(Announcement {
            room: self.session.room_index,
            window_index: w,
            bpm: g.bpm,
            window_start_us: self.to_client(g.window_span(w).0),
            beat_times_us: g.judged_beats(w).map(|t| self.to_client(t)),
            capture_deadline_us: self.to_client(g.capture_deadline_us(w)),
        })
    }

    pub fn view(&self) -> SessionView {
        let s = &self.session;
        SessionView {
            session_id: self.id.clone(),
            phase: s.phase,
            room_index: s.room_index,
            character: s.character.clone(),
            health: s.health,
            enemy: s.enemy().cloned(),
            provenance: s.provenance,
            tally: s.tally,
            clock_offset_us: self.clock_offset_us,
            schedule: self.schedule(),
            upload: self.upload.clone(),
        }
    }

    pub fn subscribe(&self) -> broadcast::Receiver<Announcement> {
        self.announce.subscribe()
    }

    /// Applies `op` read against `chain_state`, logging it.
    pub fn apply(
        &mut self,
        op: SessionOp,
        chain_state: &rhythm_dungeon::GenesisState,
        chain_height: u64,
    ) -> Result<Vec<SessionEvent>, SessionError> {
        let (next, events) = apply_op(&self.session, &op, chain_state)?;
        self.session = next;
        self.events.extend(events.iter().cloned());
        self.ops.push(LoggedOp { op, chain_height });
        if let Some(a) = self.schedule() {
            // Nobody listening is fine.
            let _ = self.announce.send(a);
        }
        Ok(events)
    }
}

fn apply_op(
    session: &DungeonSession,
    op: &SessionOp,
    state: &rhythm_dungeon::GenesisState,
) -> Result<(DungeonSession, Vec<SessionEvent>), SessionError> {
    match op {
        SessionOp::Step { inputs, stance } => session.step(state, inputs, *stance),
        SessionOp::Allocate { attribute } => Ok((session.allocate(*attribute)?, Vec::new())),
        SessionOp::Retire => Ok((session.retire()?, Vec::new())),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("op reads chain height {height} but the chain has {len} blocks")]
    ChainTooShort { height: u64, len: usize },
}

/// Re-runs a logged session offline against `chain`.
pub fn replay_session(
    start: &SessionStart,
    ops: &[LoggedOp],
    chain: &Chain,
) -> Result<(DungeonSession, Vec<SessionEvent>), ReplayError> {
    let mut session = DungeonSession::start(&start.name, start.seed, start.origin_ms, start.p_fetch_percent)?;
    let mut events = Vec::new();
    let mut cached: Option<(u64, rhythm_dungeon::GenesisState)> = None;
    for logged in ops {
        let height = logged.chain_height;
        if (height as usize) > chain.len() {
            return Err(ReplayError::ChainTooShort { height, len: chain.len() });
        }
        if cached.as_ref().map(|(h, _)| *h) != Some(height) {
            cached = Some((height, chain.replay_prefix(height as usize)?));
        }
        let state = &cached.as_ref().expect("just filled").1;
        let (next, evs) = apply_op(&session, &logged.op, state)?;
        session = next;
        events.extend(evs);
    }
    Ok((session, events))
}
