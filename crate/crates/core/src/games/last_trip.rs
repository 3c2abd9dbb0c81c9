//! Last Trip: a ten-chapter storybook. Each chapter adds one attribute
//! point; the run ends with a single automatic battle, and a winner is
//! uploaded.

use serde::{Deserialize, Serialize};

use crate::characters::{Attribute, Character, BASE_ATTRIBUTE_SUM, POINTS_PER_LEVEL};
use crate::combat::{auto_battle, AutoBattleOutcome, Combatant, Side};
use crate::games::{procedural_character, upload_call};
use crate::genesis::{CharacterId, ContractCall, GameTag, GenesisState};
use crate::rng;

pub const CHAPTERS: u8 = 10;

const TRAVELER_NAMES: [&str; 6] = ["Wren", "Osric", "Talia", "Bram", "Sefa", "Ilo"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Choice {
    /// +strength
    Train,
    /// +armor
    Fortify,
    /// +luck
    Explore,
    /// +vitality
    Rest,
}

impl Choice {
    pub const ALL: [Choice; 4] = [Choice::Train, Choice::Fortify, Choice::Explore, Choice::Rest];

    pub fn attribute(self) -> Attribute {
        match self {
            Choice::Train => Attribute::Strength,
            Choice::Fortify => Attribute::Armor,
            Choice::Explore => Attribute::Luck,
            Choice::Rest => Attribute::Vitality,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TripPhase {
    Choosing,
    FinalBattle,
    Won,
    Lost,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LastTripError {
    #[error("a policy needs exactly {CHAPTERS} choices, got {0}")]
    BadPolicy(usize),
    #[error("no chapter left to choose in phase {0:?}")]
    NotChoosing(TripPhase),
    #[error("final battle is not available in phase {0:?}")]
    NotAtFinalBattle(TripPhase),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LastTripSession {
    pub character: Character,
    pub chapter: u8,
    pub phase: TripPhase,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LastTripOutcome {
    pub session: LastTripSession,
    pub opponent: Combatant,
    pub rival: Option<CharacterId>,
    pub battle: AutoBattleOutcome,
    /// Present only for a won run.
    pub upload: Option<ContractCall>,
}

impl LastTripSession {
    pub fn new(name: &str) -> Result<Self, crate::characters::CharacterError> {
        Ok(LastTripSession {
            character: Character::create_base(name)?,
            chapter: 0,
            phase: TripPhase::Choosing,
        })
    }

    /// Plays one chapter: +1 on the chosen attribute, then the level is
    /// re-derived so the budget identity holds (surplus becomes unspent).
    pub fn choose(&mut self, choice: Choice) -> Result<(), LastTripError> {
        if self.phase != TripPhase::Choosing {
            return Err(LastTripError::NotChoosing(self.phase));
        }
        let c = &mut self.character;
        match choice.attribute() {
            Attribute::Strength => c.strength += 1,
            Attribute::Armor => c.armor += 1,
            Attribute::Luck => c.luck += 1,
            Attribute::Vitality => c.vitality += 1,
        }
        self.chapter += 1;
        let earned = u32::from(self.chapter);
        c.level = 1 + earned.div_ceil(POINTS_PER_LEVEL);
        c.unspent_skill_points = BASE_ATTRIBUTE_SUM + POINTS_PER_LEVEL * (c.level - 1) - (BASE_ATTRIBUTE_SUM + earned);
        if self.chapter == CHAPTERS {
            self.phase = TripPhase::FinalBattle;
        }
        Ok(())
    }

    /// Fights the final battle against `rival` if given, otherwise against
    /// a procedural foe one level below the traveler.
    pub fn final_battle(mut self, rival: Option<(CharacterId, Character)>, seed: u64) -> Result<LastTripOutcome, LastTripError> {
        if self.phase != TripPhase::FinalBattle {
            return Err(LastTripError::NotAtFinalBattle(self.phase));
        }
        let mut s = seed;
        let first = Attribute::ALL[rng::below(&mut s, 4) as usize];
        let battle_seed = rng::next(&mut s);
        let (rival_id, opponent) = match rival {
            Some((id, c)) => (Some(id), Combatant::new(c)),
            None => {
                let level = self.character.level.saturating_sub(1).max(1);
                (None, Combatant::new(procedural_character("Gatekeeper", level, first)))
            }
        };
        let battle = auto_battle(&Combatant::new(self.character.clone()), &opponent, battle_seed);
        let won = battle.winner == Side::A;
        self.phase = if won { TripPhase::Won } else { TripPhase::Lost };
        let upload = won.then(|| upload_call(self.character.clone(), GameTag::LastTrip));
        Ok(LastTripOutcome { session: self, opponent, rival: rival_id, battle, upload })
    }
}

/// Traveler name for a run seed.
pub fn traveler_name(seed: u64) -> String {
    let mut s = seed;
    let base = TRAVELER_NAMES[rng::below(&mut s, TRAVELER_NAMES.len() as u64) as usize];
    format!("{base} {}", rng::below(&mut s, 1000))
}

/// A whole run: ten chapters from `policy`, then the final battle against
/// a procedural foe.
pub fn last_trip_run(seed: u64, policy: &[Choice]) -> Result<LastTripOutcome, LastTripError> {
    run(seed, policy, None)
}

/// As [`last_trip_run`], but the final opponent is a character from
/// another game when the contract has one at a matching level.
pub fn last_trip_run_with_rivals(
    state: &GenesisState,
    seed: u64,
    policy: &[Choice],
) -> Result<LastTripOutcome, LastTripError> {
    let level = 1 + u32::from(CHAPTERS).div_ceil(POINTS_PER_LEVEL);
    let rival = summon_rival(state, level, rng::derive(seed, 7));
    run(seed, policy, rival)
}

fn run(seed: u64, policy: &[Choice], rival: Option<(CharacterId, Character)>) -> Result<LastTripOutcome, LastTripError> {
    if policy.len() != usize::from(CHAPTERS) {
        return Err(LastTripError::BadPolicy(policy.len()));
    }
    let mut session = LastTripSession::new(&traveler_name(seed)).expect("generated names are valid");
    for &choice in policy {
        session.choose(choice)?;
    }
    session.final_battle(rival, rng::derive(seed, 1))
}

/// Last Trip's read path: a character from any other game within one level.
pub fn summon_rival(state: &GenesisState, level: u32, seed: u64) -> Option<(CharacterId, Character)> {
    state
        .read_character(level, seed, Some(GameTag::LastTrip))
        .map(|(id, r)| (id, r.character.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_trains() {
        let out = last_trip_run(3, &[Choice::Train; 10]).unwrap();
        let c = &out.session.character;
        assert_eq!(c.strength, 13);
        assert_eq!((c.level, c.unspent_skill_points), (5, 2));
        assert_eq!(c.validate(), Ok(()));
    }

    #[test]
    fn every_chapter_keeps_the_identity() {
        let mut s = LastTripSession::new("Wren").unwrap();
        for (i, choice) in Choice::ALL.iter().cycle().take(10).enumerate() {
            s.choose(*choice).unwrap();
            assert_eq!(s.character.validate(), Ok(()), "after chapter {}", i + 1);
        }
        assert_eq!(s.phase, TripPhase::FinalBattle);
        assert_eq!(s.choose(Choice::Rest), Err(LastTripError::NotChoosing(TripPhase::FinalBattle)));
    }

    #[test]
    fn policy_length_is_checked() {
        assert_eq!(last_trip_run(0, &[Choice::Rest; 9]).unwrap_err(), LastTripError::BadPolicy(9));
        assert_eq!(last_trip_run(0, &[Choice::Rest; 11]).unwrap_err(), LastTripError::BadPolicy(11));
    }

    #[test]
    fn runs_are_deterministic_and_winners_upload() {
        let policy = [
            Choice::Train,
            Choice::Rest,
            Choice::Train,
            Choice::Fortify,
            Choice::Explore,
            Choice::Train,
            Choice::Rest,
            Choice::Train,
            Choice::Fortify,
            Choice::Train,
        ];
        let mut wins = 0;
        for seed in 0..40 {
            let a = last_trip_run(seed, &policy).unwrap();
            let b = last_trip_run(seed, &policy).unwrap();
            assert_eq!(a, b);
            match &a.upload {
                Some(ContractCall::UploadCharacter(p)) => {
                    wins += 1;
                    assert_eq!(a.session.phase, TripPhase::Won);
                    assert_eq!(p.origin_game, GameTag::LastTrip);
                    let mut state = GenesisState::new([0]);
                    assert!(state.upload_character(p.character.clone(), p.origin_game, 0).is_ok());
                }
                Some(_) => unreachable!(),
                None => assert_eq!(a.session.phase, TripPhase::Lost),
            }
        }
        assert!(wins > 0);
    }

    #[test]
    fn rivals_come_from_other_games() {
        let mut state = GenesisState::new([0]);
        let mut rd = Character::create_base("Drummer").unwrap().grant_xp(50 + 100 + 150 + 200);
        while rd.unspent_skill_points > 0 {
            rd = rd.allocate_point(Attribute::Armor).unwrap();
        }
        assert_eq!(rd.level, 5);
        state.upload_character(rd.clone(), GameTag::LastTrip, 0).unwrap();
        assert!(summon_rival(&state, 5, 1).is_none());
        state.upload_character(rd.clone(), GameTag::RhythmDungeon, 0).unwrap();
        assert_eq!(summon_rival(&state, 5, 1), Some((1, rd)));
        let out = last_trip_run_with_rivals(&state, 2, &[Choice::Explore; 10]).unwrap();
        assert_eq!(out.rival, Some(1));
    }
}
