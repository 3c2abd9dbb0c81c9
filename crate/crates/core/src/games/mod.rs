//! The three game flows over the shared contract.
//!
//! Every game reaches the contract the same way: it reads through
//! [`GenesisState`] and writes by emitting [`ContractCall`]s. Nothing else
//! crosses game boundaries.

pub mod adventure;
pub mod dungeon;
pub mod last_trip;

use serde::{Deserialize, Serialize};

use crate::characters::{Attribute, Character};
use crate::combat::Combatant;
use crate::genesis::{CharacterId, ContractCall, GameTag, GenesisState, UploadPayload};
use crate::rng;

/// Where an enemy came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Fetched(CharacterId),
    Procedural,
}

const FOE_NAMES: [&str; 8] = [
    "Bone Drummer",
    "Hollow Knight",
    "Mire Hag",
    "Ash Wolf",
    "Grave Piper",
    "Rust Golem",
    "Night Lute",
    "Cinder Imp",
];

/// A character of `level` (clamped to `1..=20`) whose skill points are
/// spent one at a time, cycling through the attributes from `first`.
pub fn procedural_character(name: &str, level: u32, first: Attribute) -> Character {
    let mut c = Character::create_base(name).expect("procedural names are valid");
    c.level = level.clamp(1, crate::characters::LEVEL_CAP);
    c.unspent_skill_points = 3 * (c.level - 1);
    let start = Attribute::ALL.iter().position(|a| *a == first).expect("known attribute");
    let mut k = start;
    while c.unspent_skill_points > 0 {
        let attribute = Attribute::ALL[k % 4];
        k += 1;
        if c.get(attribute) < crate::characters::ATTRIBUTE_CAP {
            c = c.allocate_point(attribute).expect("point available, below cap");
        }
    }
    c
}

/// Spawns an enemy for a player of `player_level`. With probability
/// `p_fetch_percent / 100` the contract is asked for a level-matched
/// character; otherwise, or if none matches, one is generated.
///
/// Four generator draws are always taken, so the procedural branch does not
/// depend on whether a fetch was attempted.
pub fn generate_enemy(
    state: &GenesisState,
    player_level: u32,
    seed: u64,
    p_fetch_percent: u8,
) -> (Combatant, Provenance) {
    assert!(player_level >= 1, "player level starts at 1");
    let mut s = seed;
    let roll = rng::below(&mut s, 100);
    let read_seed = rng::next(&mut s);
    let first = Attribute::ALL[rng::below(&mut s, 4) as usize];
    let name = FOE_NAMES[rng::below(&mut s, FOE_NAMES.len() as u64) as usize];

    if roll < u64::from(p_fetch_percent.min(100)) {
        if let Some((id, record)) = state.read_character(player_level, read_seed, None) {
            return (Combatant::new(record.character.clone()), Provenance::Fetched(id));
        }
    }
    let level = player_level.min(crate::characters::LEVEL_CAP);
    (Combatant::new(procedural_character(name, level, first)), Provenance::Procedural)
}

/// The one way any game writes a character to the contract.
pub fn upload_call(character: Character, origin_game: GameTag) -> ContractCall {
    ContractCall::UploadCharacter(UploadPayload { character, origin_game })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn procedural_characters_are_valid() {
        for level in 1..=20 {
            for first in Attribute::ALL {
                let c = procedural_character("Foe", level, first);
                assert_eq!(c.validate(), Ok(()));
                assert_eq!(c.unspent_skill_points, 0);
                assert_eq!(c.level, level);
            }
        }
        let c = procedural_character("Foe", 2, Attribute::Luck);
        assert_eq!((c.strength, c.armor, c.luck, c.vitality), (4, 2, 3, 3));
    }

    #[test]
    fn empty_store_is_always_procedural() {
        let state = GenesisState::new([0]);
        for seed in 0..50 {
            let (enemy, prov) = generate_enemy(&state, 3, seed, 100);
            assert_eq!(prov, Provenance::Procedural);
            assert_eq!(enemy.character.level, 3);
            assert_eq!(enemy.current_health, enemy.max_health());
        }
    }

    #[test]
    fn fetch_probability_extremes() {
        let mut state = GenesisState::new([0]);
        let mut two = Character::create_base("Mira").unwrap().grant_xp(50);
        two = two.allocate_point(Attribute::Luck).unwrap();
        state.upload_character(two.clone(), GameTag::LastTrip, 0).unwrap();
        for seed in 0..50 {
            assert_eq!(generate_enemy(&state, 2, seed, 0).1, Provenance::Procedural);
            let (enemy, prov) = generate_enemy(&state, 2, seed, 100);
            assert_eq!(prov, Provenance::Fetched(0));
            assert_eq!(enemy.character, two);
            assert_eq!(enemy.stance, None);
        }
    }

    #[test]
    fn fetch_rate_tracks_probability() {
        let mut state = GenesisState::new([0]);
        state.upload_character(Character::create_base("Mira").unwrap(), GameTag::LastTrip, 0).unwrap();
        let fetched = (0..10_000u64)
            .filter(|&s| generate_enemy(&state, 1, rng::derive(1, s), 30).1 != Provenance::Procedural)
            .count();
        assert!((2_800..3_200).contains(&fetched), "{fetched}");
    }
}
