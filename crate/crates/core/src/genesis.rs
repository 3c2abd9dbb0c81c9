//! The Genesis contract: a deterministic state machine over transactions.
//!
//! It stores validated characters from any game, keeps one shared hero
//! (Adam) and one Dark Lord defeat counter per chain, and logs Blood Moon
//! results. Every game has the same read and write access.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::canonical::{self, Digest};
use crate::characters::{self, Attribute, Character, RecordError, Rule};
use crate::ledger::{Transaction, TxKind};

pub const BLOOD_MOON_PERIOD: u64 = 30;

pub type CharacterId = u64;
pub type ChainId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GameTag {
    RhythmDungeon,
    LastTrip,
    AdamsAdventure,
}

impl GameTag {
    pub const ALL: [GameTag; 3] = [GameTag::RhythmDungeon, GameTag::LastTrip, GameTag::AdamsAdventure];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharacterRecord {
    pub character: Character,
    pub origin_game: GameTag,
    /// Height of the block carrying the upload.
    pub uploaded_at: u64,
    /// Always true: fetching re-uses a character rather than consuming it.
    pub alive_in_store: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DuelWinner {
    Home,
    Opponent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Duel {
    pub opponent_chain: ChainId,
    pub winner: DuelWinner,
    pub rounds: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BloodMoonResult {
    pub home_chain: ChainId,
    pub duels: Vec<Duel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UploadPayload {
    pub character: Character,
    pub origin_game: GameTag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DarkLordDefeatPayload {
    pub chain_id: ChainId,
    /// The counter value this defeat produces; must be exactly one more
    /// than the stored counter.
    pub defeat_index: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdamGrowthPayload {
    pub chain_id: ChainId,
    pub attribute: Attribute,
}

/// A typed contract call, before it is wrapped into a [`Transaction`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ContractCall {
    UploadCharacter(UploadPayload),
    RecordDarkLordDefeat(DarkLordDefeatPayload),
    AccumulateAdamGrowth(AdamGrowthPayload),
    BloodMoonResult(BloodMoonResult),
}

impl ContractCall {
    pub fn kind(&self) -> TxKind {
        match self {
            ContractCall::UploadCharacter(_) => TxKind::UploadCharacter,
            ContractCall::RecordDarkLordDefeat(_) => TxKind::RecordDarkLordDefeat,
            ContractCall::AccumulateAdamGrowth(_) => TxKind::AccumulateAdamGrowth,
            ContractCall::BloodMoonResult(_) => TxKind::BloodMoonResult,
        }
    }

    pub fn payload(&self) -> Value {
        let v = match self {
            ContractCall::UploadCharacter(p) => serde_json::to_value(p),
            ContractCall::RecordDarkLordDefeat(p) => serde_json::to_value(p),
            ContractCall::AccumulateAdamGrowth(p) => serde_json::to_value(p),
            ContractCall::BloodMoonResult(p) => serde_json::to_value(p),
        };
        v.expect("payload types serialize infallibly")
    }

    pub fn into_transaction(self, submitter: impl Into<String>, nonce: u64) -> Transaction {
        Transaction {
            kind: self.kind(),
            payload: self.payload(),
            submitter: submitter.into(),
            nonce,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
pub enum GenesisError {
    #[error("invalid character: rule {0}")]
    InvalidCharacter(Rule),
    #[error("unknown chain {0}")]
    UnknownChain(ChainId),
    #[error("malformed {kind:?} payload: {detail}")]
    MalformedPayload { kind: TxKind, detail: String },
    #[error("defeat index {got} does not follow counter {current}")]
    StaleDefeat { current: u64, got: u64 },
    #[error("no untaken Blood Moon trigger on chain {0}")]
    NotTriggered(ChainId),
}

/// Result of applying one transaction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Receipt {
    Uploaded { character_id: CharacterId },
    DarkLordDefeated { chain_id: ChainId, defeats: u64, blood_moon_triggered: bool },
    AdamGrew { chain_id: ChainId, level: u32 },
    BloodMoonRecorded { home_chain: ChainId },
    Rejected(GenesisError),
}

impl Receipt {
    pub fn is_rejected(&self) -> bool {
        matches!(self, Receipt::Rejected(_))
    }
}

/// Bookkeeping entry for a transaction that was recorded but had no effect.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub height: u64,
    pub index: u64,
    pub reason: GenesisError,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GenesisState {
    characters: BTreeMap<CharacterId, CharacterRecord>,
    adam: BTreeMap<ChainId, Character>,
    dark_lord_defeats: BTreeMap<ChainId, u64>,
    blood_moon_log: Vec<BloodMoonResult>,
    rejections: Vec<Rejection>,
}

impl GenesisState {
    /// Empty store with a base Adam and a zero counter for each chain.
    pub fn new(chains: impl IntoIterator<Item = ChainId>) -> Self {
        let mut state = GenesisState::default();
        for chain in chains {
            state.adam.insert(chain, base_adam());
            state.dark_lord_defeats.insert(chain, 0);
        }
        state
    }

    pub fn characters(&self) -> &BTreeMap<CharacterId, CharacterRecord> {
        &self.characters
    }

    pub fn character(&self, id: CharacterId) -> Option<&CharacterRecord> {
        self.characters.get(&id)
    }

    pub fn adam(&self, chain: ChainId) -> Option<&Character> {
        self.adam.get(&chain)
    }

    pub fn chains(&self) -> impl Iterator<Item = ChainId> + '_ {
        self.adam.keys().copied()
    }

    pub fn dark_lord_defeats(&self, chain: ChainId) -> Option<u64> {
        self.dark_lord_defeats.get(&chain).copied()
    }

    pub fn blood_moon_log(&self) -> &[BloodMoonResult] {
        &self.blood_moon_log
    }

    pub fn rejections(&self) -> &[Rejection] {
        &self.rejections
    }

    /// Blood Moons triggered on `chain` that have no logged result yet.
    pub fn pending_blood_moons(&self, chain: ChainId) -> u64 {
        let triggered = self.dark_lord_defeats(chain).unwrap_or(0) / BLOOD_MOON_PERIOD;
        let resolved = self.blood_moon_log.iter().filter(|r| r.home_chain == chain).count() as u64;
        triggered.saturating_sub(resolved)
    }

    /// Canonical JSON of the whole state; readable by anyone.
    pub fn snapshot_json(&self) -> String {
        canonical::to_string(self).expect("state is integer-only")
    }

    pub fn state_digest(&self) -> Digest {
        canonical::digest(self).expect("state is integer-only")
    }

    /// Stores `character` if it passes validation and returns its id.
    pub fn upload_character(
        &mut self,
        character: Character,
        origin_game: GameTag,
        height: u64,
    ) -> Result<CharacterId, GenesisError> {
        characters::validate_character(&character).map_err(GenesisError::InvalidCharacter)?;
        let id = self.characters.len() as CharacterId;
        self.characters.insert(
            id,
            CharacterRecord { character, origin_game, uploaded_at: height, alive_in_store: true },
        );
        Ok(id)
    }

    /// Picks a record within one level of `player_level`, uniformly by
    /// `seed mod count` over candidates in id order.
    pub fn read_character(
        &self,
        player_level: u32,
        rng_seed: u64,
        exclude_origin: Option<GameTag>,
    ) -> Option<(CharacterId, &CharacterRecord)> {
        self.pick(player_level, rng_seed, |r| Some(r.origin_game) != exclude_origin)
    }

    /// Like [`read_character`](Self::read_character) but restricted to one
    /// origin game.
    pub fn read_character_from(
        &self,
        player_level: u32,
        rng_seed: u64,
        origin: GameTag,
    ) -> Option<(CharacterId, &CharacterRecord)> {
        self.pick(player_level, rng_seed, |r| r.origin_game == origin)
    }

    /// Nearest-level record from `origin`, lowest id on ties.
    pub fn nearest_from(&self, level: u32, origin: GameTag) -> Option<(CharacterId, &CharacterRecord)> {
        self.characters
            .iter()
            .filter(|(_, r)| r.alive_in_store && r.origin_game == origin)
            .min_by_key(|(id, r)| (r.character.level.abs_diff(level), **id))
            .map(|(id, r)| (*id, r))
    }

    fn pick(
        &self,
        player_level: u32,
        rng_seed: u64,
        filter: impl Fn(&CharacterRecord) -> bool,
    ) -> Option<(CharacterId, &CharacterRecord)> {
        assert!(player_level >= 1, "player level starts at 1");
        let candidates: Vec<_> = self
            .characters
            .iter()
            .filter(|(_, r)| r.alive_in_store && r.character.level.abs_diff(player_level) <= 1 && filter(r))
            .collect();
        if candidates.is_empty() {
            return None;
        }
        let (id, record) = candidates[(rng_seed % candidates.len() as u64) as usize];
        Some((*id, record))
    }

    /// Increments the chain's Dark Lord counter. Returns true when the new
    /// value is a positive multiple of 30.
    pub fn record_dark_lord_defeat(&mut self, chain: ChainId) -> Result<bool, GenesisError> {
        let counter = self.dark_lord_defeats.get_mut(&chain).ok_or(GenesisError::UnknownChain(chain))?;
        *counter += 1;
        Ok(*counter % BLOOD_MOON_PERIOD == 0)
    }

    /// Adds one point to the chain's Adam and recomputes its level as
    /// `1 + (sum - 9) / 3`.
    pub fn accumulate_adam_growth(&mut self, chain: ChainId, attribute: Attribute) -> Result<u32, GenesisError> {
        let adam = self.adam.get_mut(&chain).ok_or(GenesisError::UnknownChain(chain))?;
        grow_adam(adam, attribute);
        Ok(adam.level)
    }

    /// Applies one transaction. Invalid transactions change nothing except
    /// the rejection log.
    pub fn apply_transaction(&mut self, tx: &Transaction, height: u64, index: u64) -> Receipt {
        let receipt = match self.try_apply(tx, height) {
            Ok(receipt) => receipt,
            Err(reason) => Receipt::Rejected(reason),
        };
        if let Receipt::Rejected(reason) = &receipt {
            self.rejections.push(Rejection { height, index, reason: reason.clone() });
        }
        receipt
    }

    fn try_apply(&mut self, tx: &Transaction, height: u64) -> Result<Receipt, GenesisError> {
        let malformed = |detail: String| GenesisError::MalformedPayload { kind: tx.kind, detail };
        match tx.kind {
            TxKind::UploadCharacter => {
                let (raw, origin) = split_upload(&tx.payload).map_err(malformed)?;
                let character = characters::check_record(raw).map_err(|e| match e {
                    RecordError::Invalid(rule) => GenesisError::InvalidCharacter(rule),
                    RecordError::Malformed(detail) => malformed(detail),
                })?;
                let character_id = self.upload_character(character, origin, height)?;
                Ok(Receipt::Uploaded { character_id })
            }
            TxKind::RecordDarkLordDefeat => {
                let p: DarkLordDefeatPayload = decode(&tx.payload).map_err(malformed)?;
                let current = self.dark_lord_defeats(p.chain_id).ok_or(GenesisError::UnknownChain(p.chain_id))?;
                if p.defeat_index != current + 1 {
                    return Err(GenesisError::StaleDefeat { current, got: p.defeat_index });
                }
                let blood_moon_triggered = self.record_dark_lord_defeat(p.chain_id)?;
                Ok(Receipt::DarkLordDefeated { chain_id: p.chain_id, defeats: p.defeat_index, blood_moon_triggered })
            }
            TxKind::AccumulateAdamGrowth => {
                let p: AdamGrowthPayload = decode(&tx.payload).map_err(malformed)?;
                let level = self.accumulate_adam_growth(p.chain_id, p.attribute)?;
                Ok(Receipt::AdamGrew { chain_id: p.chain_id, level })
            }
            TxKind::BloodMoonResult => {
                let p: BloodMoonResult = decode(&tx.payload).map_err(malformed)?;
                if !self.adam.contains_key(&p.home_chain) {
                    return Err(GenesisError::UnknownChain(p.home_chain));
                }
                if self.pending_blood_moons(p.home_chain) == 0 {
                    return Err(GenesisError::NotTriggered(p.home_chain));
                }
                let home_chain = p.home_chain;
                self.blood_moon_log.push(p);
                Ok(Receipt::BloodMoonRecorded { home_chain })
            }
        }
    }
}

/// Adam's starting point on every chain.
pub fn base_adam() -> Character {
    Character::create_base("Adam").expect("constant name is valid")
}

fn grow_adam(adam: &mut Character, attribute: Attribute) {
    match attribute {
        Attribute::Strength => adam.strength += 1,
        Attribute::Armor => adam.armor += 1,
        Attribute::Luck => adam.luck += 1,
        Attribute::Vitality => adam.vitality += 1,
    }
    adam.level = adam_level(adam.attribute_sum());
}

/// `1 + floor((sum - 9) / 3)`.
pub fn adam_level(attribute_sum: u64) -> u32 {
    let surplus = attribute_sum.saturating_sub(u64::from(characters::BASE_ATTRIBUTE_SUM));
    1 + (surplus / u64::from(characters::POINTS_PER_LEVEL)) as u32
}

fn decode<T: serde::de::DeserializeOwned>(payload: &Value) -> Result<T, String> {
    serde_json::from_value(payload.clone()).map_err(|e| e.to_string())
}

fn split_upload(payload: &Value) -> Result<(&Value, GameTag), String> {
    let obj = payload.as_object().ok_or("payload is not an object")?;
    if obj.len() != 2 {
        return Err("upload payload takes exactly character and origin_game".into());
    }
    let raw = obj.get("character").ok_or("missing character")?;
    let origin = obj.get("origin_game").ok_or("missing origin_game")?;
    let origin: GameTag = serde_json::from_value(origin.clone()).map_err(|e| e.to_string())?;
    Ok((raw, origin))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn upload_tx(c: &Character, origin: GameTag, nonce: u64) -> Transaction {
        ContractCall::UploadCharacter(UploadPayload { character: c.clone(), origin_game: origin })
            .into_transaction("alice", nonce)
    }

    fn leveled(name: &str, level: u32) -> Character {
        let mut c = Character::create_base(name).unwrap();
        c.level = level;
        c.unspent_skill_points = 3 * (level - 1);
        c
    }

    #[test]
    fn upload_assigns_dense_ids() {
        let mut s = GenesisState::new([0]);
        let hero = Character::create_base("hero").unwrap();
        assert_eq!(s.upload_character(hero.clone(), GameTag::RhythmDungeon, 0), Ok(0));
        assert_eq!(s.upload_character(hero, GameTag::LastTrip, 3), Ok(1));
        assert_eq!(s.character(1).unwrap().uploaded_at, 3);
    }

    #[test]
    fn upload_rejects_budget_violation_without_change() {
        let mut s = GenesisState::new([0]);
        let mut bad = leveled("bad", 3);
        bad.unspent_skill_points = 0;
        bad.strength = 8; // sum 14, needs 15
        let before = s.clone();
        assert_eq!(
            s.upload_character(bad, GameTag::RhythmDungeon, 0),
            Err(GenesisError::InvalidCharacter(Rule::AttributeBudget))
        );
        assert_eq!(s, before);
    }

    #[test]
    fn read_character_cases() {
        let mut s = GenesisState::new([0]);
        assert!(s.read_character(1, 42, None).is_none());

        s.upload_character(leveled("two", 2), GameTag::LastTrip, 0).unwrap();
        for seed in [0, 1, 42, u64::MAX] {
            assert_eq!(s.read_character(2, seed, None).unwrap().0, 0);
        }
        assert!(s.read_character(4, 0, None).is_none());
        assert!(s.read_character(2, 0, Some(GameTag::LastTrip)).is_none());

        for level in [1, 2, 3, 2, 9] {
            s.upload_character(leveled("x", level), GameTag::RhythmDungeon, 1).unwrap();
        }
        // Candidates for level 2 in id order: 0,1,2,3,4 (levels 2,1,2,3,2).
        let candidates: Vec<u64> = s
            .characters()
            .iter()
            .filter(|(_, r)| r.character.level.abs_diff(2) <= 1)
            .map(|(id, _)| *id)
            .collect();
        assert_eq!(candidates, vec![0, 1, 2, 3, 4]);
        let expect = candidates[(42 % candidates.len() as u64) as usize];
        for _ in 0..3 {
            assert_eq!(s.read_character(2, 42, None).unwrap().0, expect);
        }
        assert_eq!(expect, 2);
    }

    #[test]
    fn dark_lord_counter_and_blood_moon_flag() {
        let mut s = GenesisState::new([0]);
        let mut flags = Vec::new();
        for _ in 0..300 {
            flags.push(s.record_dark_lord_defeat(0).unwrap());
        }
        for (i, f) in flags.iter().enumerate() {
            assert_eq!(*f, (i as u64 + 1) % 30 == 0, "after defeat {}", i + 1);
        }
        assert_eq!(s.record_dark_lord_defeat(9), Err(GenesisError::UnknownChain(9)));
    }

    #[test]
    fn adam_growth_levels() {
        let mut s = GenesisState::new([0]);
        assert_eq!(s.accumulate_adam_growth(0, Attribute::Strength), Ok(1));
        assert_eq!(s.adam(0).unwrap().strength, 4);
        assert_eq!(s.accumulate_adam_growth(0, Attribute::Armor), Ok(1));
        // sum 11 + luck = 12 -> level 2
        assert_eq!(s.accumulate_adam_growth(0, Attribute::Luck), Ok(2));

        let mut s = GenesisState::new([0]);
        let mut level = 0;
        for _ in 0..30 {
            level = s.accumulate_adam_growth(0, Attribute::Vitality).unwrap();
        }
        // sum 9 + 30 = 39: 1 + 30 / 3 = 11
        assert_eq!(level, 11);
        assert_eq!(s.accumulate_adam_growth(5, Attribute::Luck), Err(GenesisError::UnknownChain(5)));
    }

    #[test]
    fn apply_dispatch() {
        let mut s = GenesisState::new([0]);
        let hero = Character::create_base("hero").unwrap();
        assert_eq!(
            s.apply_transaction(&upload_tx(&hero, GameTag::RhythmDungeon, 0), 0, 0),
            Receipt::Uploaded { character_id: 0 }
        );
        assert_eq!(s.characters().len(), 1);

        for i in 0..29 {
            s.record_dark_lord_defeat(0).unwrap();
            assert_eq!(s.dark_lord_defeats(0), Some(i + 1));
        }
        let defeat = ContractCall::RecordDarkLordDefeat(DarkLordDefeatPayload { chain_id: 0, defeat_index: 30 })
            .into_transaction("bob", 0);
        assert_eq!(
            s.apply_transaction(&defeat, 1, 0),
            Receipt::DarkLordDefeated { chain_id: 0, defeats: 30, blood_moon_triggered: true }
        );
        // Replaying the same defeat index is stale.
        assert!(s.apply_transaction(&defeat, 1, 1).is_rejected());
        assert_eq!(s.dark_lord_defeats(0), Some(30));
    }

    #[test]
    fn malformed_payloads_are_no_ops() {
        let s0 = GenesisState::new([0]);
        let cases = [
            (TxKind::UploadCharacter, json!({"character": 3, "origin_game": "LastTrip"})),
            (TxKind::UploadCharacter, json!({"origin_game": "LastTrip"})),
            (TxKind::UploadCharacter, json!([1, 2])),
            (TxKind::RecordDarkLordDefeat, json!({"chain_id": "zero"})),
            (TxKind::AccumulateAdamGrowth, json!({"chain_id": 0, "attribute": "charm"})),
            (TxKind::BloodMoonResult, json!({"home_chain": 0, "duels": []})),
        ];
        for (kind, payload) in cases {
            let mut s = s0.clone();
            let tx = Transaction { kind, payload, submitter: "m".into(), nonce: 0 };
            assert!(s.apply_transaction(&tx, 0, 0).is_rejected(), "{kind:?}");
            assert_eq!(s.characters(), s0.characters());
            assert_eq!(s.adam(0), s0.adam(0));
            assert_eq!(s.dark_lord_defeats(0), Some(0));
            assert!(s.blood_moon_log().is_empty());
            assert_eq!(s.rejections().len(), 1);
        }
    }

    #[test]
    fn upload_payload_reports_first_rule() {
        let mut s = GenesisState::new([0]);
        let mut v = serde_json::to_value(Character::create_base("hero").unwrap()).unwrap();
        v["weakness"] = "Clumsy".into();
        let tx = Transaction {
            kind: TxKind::UploadCharacter,
            payload: json!({"character": v, "origin_game": "AdamsAdventure"}),
            submitter: "m".into(),
            nonce: 0,
        };
        assert_eq!(
            s.apply_transaction(&tx, 0, 0),
            Receipt::Rejected(GenesisError::InvalidCharacter(Rule::WeaknessTag))
        );
    }

    #[test]
    fn blood_moon_needs_a_trigger() {
        let mut s = GenesisState::new([0, 1]);
        let result = BloodMoonResult { home_chain: 0, duels: vec![] };
        let tx = ContractCall::BloodMoonResult(result.clone()).into_transaction("x", 0);
        assert_eq!(
            s.apply_transaction(&tx, 0, 0),
            Receipt::Rejected(GenesisError::NotTriggered(0))
        );
        for _ in 0..30 {
            s.record_dark_lord_defeat(0).unwrap();
        }
        assert_eq!(s.pending_blood_moons(0), 1);
        assert_eq!(s.apply_transaction(&tx, 0, 1), Receipt::BloodMoonRecorded { home_chain: 0 });
        assert_eq!(s.pending_blood_moons(0), 0);
        assert!(s.apply_transaction(&tx, 0, 2).is_rejected());
        assert_eq!(s.blood_moon_log(), &[result]);
    }

    #[test]
    fn snapshot_is_public_canonical_json() {
        let mut s = GenesisState::new([0]);
        s.upload_character(Character::create_base("hero").unwrap(), GameTag::LastTrip, 0).unwrap();
        let text = s.snapshot_json();
        let back: GenesisState = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.state_digest(), s.state_digest());
        assert!(!text.contains(' '));
    }
}
