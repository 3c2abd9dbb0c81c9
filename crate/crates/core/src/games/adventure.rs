//! Adam's Adventure: three battle modes around the per-chain shared hero.
//!
//! - Battle of Adventure: a dungeon-style run whose finished character is
//!   uploaded and whose career attribute grows Adam by one point.
//! - Battle of Dark Lord: Adam and one summoned Last Trip character duel
//!   the Dark Lord in turn; a victory advances the chain's defeat counter.
//! - Battle of Blood Moon: every 30th defeat lets the home Adam challenge
//!   the Adams of all other chains.

use serde::{Deserialize, Serialize};

use crate::characters::{Attribute, Character, LEVEL_CAP};
use crate::combat::{auto_battle, AutoBattleOutcome, Combatant, Side};
use crate::games::dungeon::{DungeonSession, SessionError};
use crate::games::{procedural_character, upload_call};
use crate::genesis::{
    AdamGrowthPayload, BloodMoonResult, ChainId, CharacterId, ContractCall, DarkLordDefeatPayload, Duel,
    DuelWinner, GameTag, GenesisState,
};
use crate::rng;

pub const DARK_LORD_BASE_LEVEL: u64 = 5;
pub const DEFEATS_PER_DARK_LORD_LEVEL: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AdventureMode {
    BattleOfAdventure,
    BattleOfDarkLord,
    BattleOfBloodMoon,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AdventureError {
    #[error("no Last Trip character to summon")]
    NoSummon,
    #[error("unknown chain {0}")]
    UnknownChain(ChainId),
    #[error("no Blood Moon pending on chain {0}")]
    NotTriggered(ChainId),
    #[error(transparent)]
    Session(#[from] SessionError),
}

/// A mode played on a chain by one character.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdventureSession {
    pub character: Character,
    pub mode: AdventureMode,
    pub chain_id: ChainId,
}

/// Ends a Battle of Adventure run: uploads the adventurer and grows the
/// chain's Adam by one point in the adventurer's career attribute.
pub fn complete_adventure(session: DungeonSession, chain_id: ChainId) -> Result<Vec<ContractCall>, AdventureError> {
    let character = session.into_finished_character()?;
    let attribute = character.career().attribute();
    Ok(vec![
        upload_call(character, GameTag::AdamsAdventure),
        ContractCall::AccumulateAdamGrowth(AdamGrowthPayload { chain_id, attribute }),
    ])
}

/// `5 + defeats / 5`, held at the level cap from 75 defeats on.
pub fn dark_lord_level(defeats: u64) -> u32 {
    let level = DARK_LORD_BASE_LEVEL.saturating_add(defeats / DEFEATS_PER_DARK_LORD_LEVEL);
    level.min(u64::from(LEVEL_CAP)) as u32
}

pub fn dark_lord(defeats: u64) -> Character {
    procedural_character("Dark Lord", dark_lord_level(defeats), Attribute::Armor)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DarkLordOutcome {
    pub chain_id: ChainId,
    pub party: Vec<AdventureSession>,
    pub summoned: CharacterId,
    pub dark_lord_level: u32,
    pub duels: Vec<AutoBattleOutcome>,
    pub victory: bool,
    /// A `RecordDarkLordDefeat` on victory, otherwise empty.
    pub calls: Vec<ContractCall>,
}

/// Adam plus one Last Trip character summoned near Adam's level duel the
/// Dark Lord one after the other; the Dark Lord's health carries over.
pub fn dark_lord_battle(state: &GenesisState, chain_id: ChainId, seed: u64) -> Result<DarkLordOutcome, AdventureError> {
    let adam = state.adam(chain_id).ok_or(AdventureError::UnknownChain(chain_id))?;
    let defeats = state.dark_lord_defeats(chain_id).ok_or(AdventureError::UnknownChain(chain_id))?;
    let (summoned, record) = state
        .read_character_from(adam.level, rng::derive(seed, 0), GameTag::LastTrip)
        .or_else(|| state.nearest_from(adam.level, GameTag::LastTrip))
        .ok_or(AdventureError::NoSummon)?;

    let party: Vec<AdventureSession> = [adam.clone(), record.character.clone()]
        .into_iter()
        .map(|character| AdventureSession { character, mode: AdventureMode::BattleOfDarkLord, chain_id })
        .collect();

    let lord = dark_lord(defeats);
    let level = lord.level;
    let mut boss = Combatant::new(lord);
    let mut duels = Vec::new();
    for (i, member) in party.iter().enumerate() {
        let out = auto_battle(&Combatant::new(member.character.clone()), &boss, rng::derive(seed, 1 + i as u64));
        boss = out.b.clone();
        let won = out.winner == Side::A;
        duels.push(out);
        if won {
            break;
        }
    }

    let victory = boss.is_dead();
    let calls = if victory {
        vec![ContractCall::RecordDarkLordDefeat(DarkLordDefeatPayload { chain_id, defeat_index: defeats + 1 })]
    } else {
        Vec::new()
    };
    Ok(DarkLordOutcome { chain_id, party, summoned, dark_lord_level: level, duels, victory, calls })
}

/// The home chain's Adam fights every other chain's Adam in ascending
/// chain order, fully healed before each duel.
pub fn blood_moon<'a>(
    states: impl IntoIterator<Item = (ChainId, &'a GenesisState)>,
    home_chain: ChainId,
    seed: u64,
) -> Result<ContractCall, AdventureError> {
    let mut chains: Vec<(ChainId, &GenesisState)> = states.into_iter().collect();
    chains.sort_by_key(|(id, _)| *id);
    let home_state = chains
        .iter()
        .find(|(id, _)| *id == home_chain)
        .map(|(_, s)| *s)
        .ok_or(AdventureError::UnknownChain(home_chain))?;
    if home_state.pending_blood_moons(home_chain) == 0 {
        return Err(AdventureError::NotTriggered(home_chain));
    }
    let home = Combatant::new(home_state.adam(home_chain).ok_or(AdventureError::UnknownChain(home_chain))?.clone());

    let mut duels = Vec::new();
    for (i, (chain, state)) in chains.iter().filter(|(id, _)| *id != home_chain).enumerate() {
        let rival = Combatant::new(state.adam(*chain).ok_or(AdventureError::UnknownChain(*chain))?.clone());
        let out = auto_battle(&home, &rival, rng::derive(seed, i as u64));
        duels.push(Duel {
            opponent_chain: *chain,
            winner: if out.winner == Side::A { DuelWinner::Home } else { DuelWinner::Opponent },
            rounds: out.rounds,
        });
    }
    Ok(ContractCall::BloodMoonResult(BloodMoonResult { home_chain, duels }))
}
