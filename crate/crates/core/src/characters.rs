//! The interoperable character: attributes, levelling, careers and the
//! validity predicate shared with the contract.

use std::fmt;

use serde::{Deserialize, Serialize};

pub const BASE_ATTRIBUTE_SUM: u32 = 9;
pub const POINTS_PER_LEVEL: u32 = 3;
pub const LEVEL_CAP: u32 = 20;
pub const ATTRIBUTE_CAP: u32 = 50;
pub const NAME_MAX_CHARS: usize = 24;
pub const XP_PER_LEVEL_STEP: u64 = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attribute {
    Strength,
    Armor,
    Luck,
    Vitality,
}

impl Attribute {
    /// Listing order; also the career tie-break order.
    pub const ALL: [Attribute; 4] = [
        Attribute::Strength,
        Attribute::Armor,
        Attribute::Luck,
        Attribute::Vitality,
    ];

    pub fn career(self) -> Career {
        match self {
            Attribute::Strength => Career::Warrior,
            Attribute::Armor => Career::Guardian,
            Attribute::Luck => Career::Gambler,
            Attribute::Vitality => Career::Survivor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Career {
    Warrior,
    Guardian,
    Gambler,
    Survivor,
}

impl Career {
    pub fn attribute(self) -> Attribute {
        match self {
            Career::Warrior => Attribute::Strength,
            Career::Guardian => Attribute::Armor,
            Career::Gambler => Attribute::Luck,
            Career::Survivor => Attribute::Vitality,
        }
    }
}

/// The mistake category stamped on a character at upload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Weakness {
    Early,
    Late,
    WrongButton,
    Miss,
    None,
}

impl Weakness {
    pub const ALL: [Weakness; 5] = [
        Weakness::Early,
        Weakness::Late,
        Weakness::WrongButton,
        Weakness::Miss,
        Weakness::None,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Weakness::Early => "Early",
            Weakness::Late => "Late",
            Weakness::WrongButton => "WrongButton",
            Weakness::Miss => "Miss",
            Weakness::None => "None",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|w| w.tag() == tag)
    }
}

/// Contract validation rules, in checking order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rule {
    LevelRange,
    AttributeRange,
    AttributeBudget,
    WeaknessTag,
    NameFormat,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CharacterError {
    #[error("name must be 1..=24 printable characters")]
    BadName,
    #[error("no unspent skill points")]
    NoPoints,
    #[error("{0:?} is already at the cap of {ATTRIBUTE_CAP}")]
    AttributeCap(Attribute),
}

/// A character. `career` and `max_health` are derived from the attributes
/// and never stored; the wire form carries `career` for readers but it is
/// ignored on input.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "CharacterWire", try_from = "CharacterWire")]
pub struct Character {
    pub name: String,
    pub level: u32,
    pub xp: u64,
    pub strength: u32,
    pub armor: u32,
    pub luck: u32,
    pub vitality: u32,
    pub weakness: Weakness,
    pub unspent_skill_points: u32,
}

impl Character {
    /// A fresh level-1 character.
    pub fn create_base(name: &str) -> Result<Self, CharacterError> {
        if !name_is_valid(name) {
            return Err(CharacterError::BadName);
        }
        Ok(Character {
            name: name.to_owned(),
            level: 1,
            xp: 0,
            strength: 3,
            armor: 2,
            luck: 2,
            vitality: 2,
            weakness: Weakness::None,
            unspent_skill_points: 0,
        })
    }

    pub fn max_health(&self) -> u32 {
        20 + 5 * self.vitality
    }

    pub fn career(&self) -> Career {
        determine_career(self)
    }

    pub fn get(&self, attribute: Attribute) -> u32 {
        match attribute {
            Attribute::Strength => self.strength,
            Attribute::Armor => self.armor,
            Attribute::Luck => self.luck,
            Attribute::Vitality => self.vitality,
        }
    }

    fn get_mut(&mut self, attribute: Attribute) -> &mut u32 {
        match attribute {
            Attribute::Strength => &mut self.strength,
            Attribute::Armor => &mut self.armor,
            Attribute::Luck => &mut self.luck,
            Attribute::Vitality => &mut self.vitality,
        }
    }

    pub fn attribute_sum(&self) -> u64 {
        Attribute::ALL.iter().map(|&a| u64::from(self.get(a))).sum()
    }

    /// Adds experience, levelling up while `xp >= 50 * level`. Each level
    /// grants three skill points. At the level cap further experience is
    /// discarded and `xp` stays 0.
    pub fn grant_xp(mut self, amount: u64) -> Self {
        self.xp = self.xp.saturating_add(amount);
        while self.level < LEVEL_CAP && self.xp >= XP_PER_LEVEL_STEP * u64::from(self.level) {
            self.xp -= XP_PER_LEVEL_STEP * u64::from(self.level);
            self.level += 1;
            self.unspent_skill_points += POINTS_PER_LEVEL;
        }
        if self.level >= LEVEL_CAP {
            self.xp = 0;
        }
        self
    }

    /// Spends one skill point on `attribute`.
    pub fn allocate_point(mut self, attribute: Attribute) -> Result<Self, CharacterError> {
        if self.unspent_skill_points == 0 {
            return Err(CharacterError::NoPoints);
        }
        let slot = self.get_mut(attribute);
        if *slot >= ATTRIBUTE_CAP {
            return Err(CharacterError::AttributeCap(attribute));
        }
        *slot += 1;
        self.unspent_skill_points -= 1;
        Ok(self)
    }

    /// Checks the contract rules; `Err` carries the first violated rule.
    pub fn validate(&self) -> Result<(), Rule> {
        validate_character(self)
    }
}

/// Argmax over (strength, armor, luck, vitality); ties go to the earlier one.
pub fn determine_career(c: &Character) -> Career {
    let mut best = Attribute::Strength;
    for a in Attribute::ALL {
        if c.get(a) > c.get(best) {
            best = a;
        }
    }
    best.career()
}

pub fn name_is_valid(name: &str) -> bool {
    let count = name.chars().count();
    (1..=NAME_MAX_CHARS).contains(&count) && !name.chars().any(char::is_control)
}

pub fn validate_character(c: &Character) -> Result<(), Rule> {
    check_rules(&CharacterWire::from(c.clone()))
}

/// Parses an untrusted character record (e.g. a transaction payload) and
/// validates it. Unknown weakness tags surface as [`Rule::WeaknessTag`]
/// rather than as a decode failure.
pub fn check_record(value: &serde_json::Value) -> Result<Character, RecordError> {
    let wire: CharacterWire =
        serde_json::from_value(value.clone()).map_err(|e| RecordError::Malformed(e.to_string()))?;
    check_rules(&wire).map_err(RecordError::Invalid)?;
    Character::try_from(wire).map_err(RecordError::Invalid)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RecordError {
    #[error("malformed character record: {0}")]
    Malformed(String),
    #[error("character violates rule {0}")]
    Invalid(Rule),
}

fn check_rules(w: &CharacterWire) -> Result<(), Rule> {
    if !(1..=u64::from(LEVEL_CAP)).contains(&w.level) {
        return Err(Rule::LevelRange);
    }
    let attrs = [w.strength, w.armor, w.luck, w.vitality];
    if attrs.iter().any(|a| !(1..=u64::from(ATTRIBUTE_CAP)).contains(a)) {
        return Err(Rule::AttributeRange);
    }
    let budget = u64::from(BASE_ATTRIBUTE_SUM) + u64::from(POINTS_PER_LEVEL) * (w.level - 1);
    let spent: u64 = attrs.iter().sum();
    if spent.checked_add(w.unspent_skill_points) != Some(budget) {
        return Err(Rule::AttributeBudget);
    }
    if Weakness::from_tag(&w.weakness).is_none() {
        return Err(Rule::WeaknessTag);
    }
    if !name_is_valid(&w.name) {
        return Err(Rule::NameFormat);
    }
    Ok(())
}

/// Loosely typed wire form. Numbers are `u64` so out-of-range values reach
/// the rule checks instead of failing to decode.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CharacterWire {
    name: String,
    level: u64,
    xp: u64,
    strength: u64,
    armor: u64,
    luck: u64,
    vitality: u64,
    weakness: String,
    unspent_skill_points: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    career: Option<Career>,
}

impl From<Character> for CharacterWire {
    fn from(c: Character) -> Self {
        let career = Some(c.career());
        CharacterWire {
            name: c.name,
            level: c.level.into(),
            xp: c.xp,
            strength: c.strength.into(),
            armor: c.armor.into(),
            luck: c.luck.into(),
            vitality: c.vitality.into(),
            weakness: c.weakness.tag().to_owned(),
            unspent_skill_points: c.unspent_skill_points.into(),
            career,
        }
    }
}

impl TryFrom<CharacterWire> for Character {
    type Error = Rule;

    // Only representability is enforced here; combat code deliberately
    // builds characters outside the contract rules (e.g. armor 0).
    fn try_from(w: CharacterWire) -> Result<Self, Rule> {
        let small = |v: u64, rule| u32::try_from(v).map_err(|_| rule);
        Ok(Character {
            level: small(w.level, Rule::LevelRange)?,
            strength: small(w.strength, Rule::AttributeRange)?,
            armor: small(w.armor, Rule::AttributeRange)?,
            luck: small(w.luck, Rule::AttributeRange)?,
            vitality: small(w.vitality, Rule::AttributeRange)?,
            unspent_skill_points: small(w.unspent_skill_points, Rule::AttributeBudget)?,
            weakness: Weakness::from_tag(&w.weakness).ok_or(Rule::WeaknessTag)?,
            xp: w.xp,
            name: w.name,
        })
    }
}

impl fmt::Display for Summary<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.0;
        write!(
            f,
            "{} L{} {:?} str {} arm {} lck {} vit {} hp {}",
            c.name,
            c.level,
            c.career(),
            c.strength,
            c.armor,
            c.luck,
            c.vitality,
            c.max_health()
        )
    }
}

/// One-line human summary, used by examples and the CLI.
pub struct Summary<'a>(pub &'a Character);
