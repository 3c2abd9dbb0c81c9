//! Scripted players: synthetic input traces and a simple battle policy.

use crate::characters::{Attribute, Weakness};
use crate::combat::{Action, BattleState};
use crate::games::dungeon::{DungeonSession, Phase, SessionError, SessionEvent};
use crate::genesis::GenesisState;
use crate::rhythm::{pattern_for, BeatGrid, Button, InputEvent, MistakeTally};
use crate::rng;

const BUTTONS: [Button; 4] = [Button::L, Button::D, Button::U, Button::R];

/// Presses for the four judged beats of window `window`.
///
/// Per beat, with probability `accuracy_percent` the intended button lands
/// uniformly within `±jitter_us` of the target. Otherwise one of three
/// mistakes, chosen uniformly: no press, a wrong button (same timing
/// error), or the intended button pushed out to `±(w_hit, T/2]`.
///
/// Every random draw is taken for every beat regardless of branch, so two
/// traces from one seed at different accuracies differ only on the beats
/// whose accuracy roll flips.
pub fn synth_trace(
    grid: &BeatGrid,
    window: u64,
    intended: [Button; 4],
    accuracy_percent: u8,
    jitter_us: u64,
    seed: u64,
) -> Vec<InputEvent> {
    let hit = grid.hit_window_us();
    let reach = grid.reach_us();
    let mut s = seed;
    let mut out = Vec::with_capacity(4);
    for (&target, &button) in grid.judged_beats(window).iter().zip(&intended) {
        let roll = rng::below(&mut s, 100);
        let jitter = rng::below(&mut s, 2 * jitter_us + 1) as i64 - jitter_us as i64;
        let kind = rng::below(&mut s, 3);
        let other = rng::below(&mut s, 3) as usize;
        let magnitude = hit + 1 + rng::below(&mut s, reach - hit);
        let early = rng::below(&mut s, 2) == 0;

        let jittered = target.saturating_add_signed(jitter);
        if roll < u64::from(accuracy_percent.min(100)) {
            out.push(InputEvent::new(jittered, button));
            continue;
        }
        match kind {
            0 => {}
            1 => {
                let wrong = BUTTONS.iter().filter(|b| **b != button).nth(other).copied().expect("three others");
                out.push(InputEvent::new(jittered, wrong));
            }
            _ => {
                let at = if early { target.saturating_sub(magnitude) } else { target + magnitude };
                out.push(InputEvent::new(at, button));
            }
        }
    }
    out.sort_by_key(|e| e.at_us);
    out
}

/// Charges when a charged hit out-damages two plain ones, otherwise
/// attacks. Never dodges.
pub fn bot_action(battle: &BattleState) -> Action {
    let player = &battle.player;
    let strength = player.character.strength;
    let armor = battle.enemy.character.armor;
    let plain = strength.saturating_sub(armor).max(1);
    let charged = (2 * strength).saturating_sub(armor).max(1);
    if !player.charged && charged > 2 * plain {
        Action::Charge
    } else {
        Action::Attack
    }
}

/// Aims at the enemy's recorded weakness, if it has one.
pub fn bot_stance(battle: &BattleState) -> Option<Weakness> {
    match battle.enemy.character.weakness {
        Weakness::None => None,
        w => Some(w),
    }
}

/// Spends every unspent point on the career attribute, falling through the
/// attribute order once it is capped.
pub fn allocate_greedy(session: &DungeonSession) -> DungeonSession {
    let mut session = session.clone();
    let first = session.character.career().attribute();
    let start = Attribute::ALL.iter().position(|a| *a == first).expect("known attribute");
    while session.character.unspent_skill_points > 0 {
        let next = (0..4)
            .map(|k| Attribute::ALL[(start + k) % 4])
            .find_map(|a| session.allocate(a).ok());
        match next {
            Some(s) => session = s,
            None => break,
        }
    }
    session
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BotProfile {
    pub accuracy_percent: u8,
    pub jitter_us: u64,
    pub p_fetch_percent: u8,
    /// The bot retires on reaching this room.
    pub max_rooms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BotRun {
    pub session: DungeonSession,
    pub events: Vec<SessionEvent>,
    /// Every press the bot made, in time order across all windows.
    pub inputs: Vec<InputEvent>,
}

impl BotRun {
    pub fn tally(&self) -> MistakeTally {
        self.session.tally
    }
}

/// Plays a whole dungeon session until death or retirement.
pub fn bot_dungeon(
    state: &GenesisState,
    name: &str,
    seed: u64,
    profile: BotProfile,
) -> Result<BotRun, SessionError> {
    let mut session = DungeonSession::start(name, rng::derive(seed, 0), 0, profile.p_fetch_percent)?;
    let trace_seed = rng::derive(seed, 1);
    let mut windows = 0;
    let mut events = Vec::new();
    let mut inputs = Vec::new();
    loop {
        match session.phase {
            Phase::Exploring => {
                session = allocate_greedy(&session);
                if session.room_index >= profile.max_rooms {
                    session = session.retire()?;
                    continue;
                }
                let (next, mut evs) = session.step(state, &[], None)?;
                session = next;
                events.append(&mut evs);
            }
            Phase::InBattle => {
                let battle = session.battle.as_ref().expect("in battle");
                let pattern = pattern_for(bot_action(battle)).expect("bots never stumble on purpose");
                let stance = bot_stance(battle);
                let trace = synth_trace(
                    &session.grid,
                    session.window_index,
                    pattern,
                    profile.accuracy_percent,
                    profile.jitter_us,
                    rng::derive(trace_seed, windows),
                );
                windows += 1;
                let (next, mut evs) = session.step(state, &trace, stance)?;
                session = next;
                events.append(&mut evs);
                inputs.extend(trace);
            }
            Phase::Dead | Phase::Retired => break,
        }
    }
    Ok(BotRun { session, events, inputs })
}
