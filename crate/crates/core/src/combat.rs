//! Turn-based battle resolution.
//!
//! Damage is `max(1, strength - armor)` with strength doubled when charged,
//! a luck-driven critical hit that doubles it, and a 3/2 bonus when the
//! attacker's stance matches the defender's weakness. Every damage roll
//! draws exactly one splitmix64 output.

use serde::{Deserialize, Serialize};

use crate::characters::{Character, Weakness};
use crate::rng;

pub const CRIT_LUCK_CAP: u32 = 50;
pub const AUTO_BATTLE_ROUND_CAP: u32 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Attack,
    Dodge,
    Charge,
    Stumble,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Combatant {
    pub character: Character,
    pub current_health: u32,
    pub charged: bool,
    pub dodging: bool,
    /// Weakness this combatant's attacks aim at.
    pub stance: Option<Weakness>,
}

impl Combatant {
    /// Full health, no statuses, no stance.
    pub fn new(character: Character) -> Self {
        Combatant {
            current_health: character.max_health(),
            character,
            charged: false,
            dodging: false,
            stance: None,
        }
    }

    pub fn with_health(mut self, health: u32) -> Self {
        self.current_health = health.min(self.character.max_health());
        self
    }

    pub fn with_stance(mut self, stance: Option<Weakness>) -> Self {
        self.stance = stance;
        self
    }

    pub fn is_dead(&self) -> bool {
        self.current_health == 0
    }

    pub fn max_health(&self) -> u32 {
        self.character.max_health()
    }

    fn take(&mut self, amount: u32) {
        self.current_health = self.current_health.saturating_sub(amount);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DamageRoll {
    pub amount: u32,
    pub crit: bool,
    pub exploit: bool,
}

/// Rolls one attack. Returns the roll and the advanced generator state.
/// The caller is responsible for clearing the attacker's `charged` flag.
pub fn damage(attacker: &Combatant, defender: &Combatant, rng_state: u64) -> (DamageRoll, u64) {
    let mut state = rng_state;
    let strength = attacker.character.strength;
    let effective = if attacker.charged { strength.saturating_mul(2) } else { strength };
    let mut amount = effective.saturating_sub(defender.character.armor).max(1);

    let crit_chance = u64::from(attacker.character.luck.min(CRIT_LUCK_CAP));
    let crit = rng::below(&mut state, 100) < crit_chance;
    if crit {
        amount = amount.saturating_mul(2);
    }

    let weakness = defender.character.weakness;
    let exploit = weakness != Weakness::None && attacker.stance == Some(weakness);
    if exploit {
        amount = (u64::from(amount) * 3 / 2).min(u64::from(u32::MAX)) as u32;
    }
    (DamageRoll { amount, crit, exploit }, state)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BattleState {
    pub player: Combatant,
    pub enemy: Combatant,
    pub turn: u64,
    pub rng_state: u64,
}

/// What happened during one resolved turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnReport {
    pub action: Action,
    pub player_hit: Option<DamageRoll>,
    /// `None` if the enemy died first; `Some(None)` if the attack was dodged.
    pub enemy_hit: Option<Option<DamageRoll>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("battle is already over")]
pub struct BattleOver;

impl BattleState {
    pub fn new(player: Combatant, enemy: Combatant, seed: u64) -> Self {
        BattleState { player, enemy, turn: 0, rng_state: seed }
    }

    pub fn is_over(&self) -> bool {
        self.player.is_dead() || self.enemy.is_dead()
    }

    /// Applies the player's action, then an attack-only enemy reply.
    pub fn resolve_player_action(&self, action: Action) -> Result<(BattleState, TurnReport), BattleOver> {
        if self.is_over() {
            return Err(BattleOver);
        }
        let mut next = self.clone();
        let mut report = TurnReport { action, player_hit: None, enemy_hit: None };

        match action {
            Action::Attack => {
                let (roll, rng_state) = damage(&next.player, &next.enemy, next.rng_state);
                next.rng_state = rng_state;
                next.enemy.take(roll.amount);
                next.player.charged = false;
                report.player_hit = Some(roll);
            }
            Action::Dodge => next.player.dodging = true,
            Action::Charge => next.player.charged = true,
            Action::Stumble => {}
        }

        if !next.enemy.is_dead() {
            if next.player.dodging {
                next.player.dodging = false;
                report.enemy_hit = Some(None);
            } else {
                let (roll, rng_state) = damage(&next.enemy, &next.player, next.rng_state);
                next.rng_state = rng_state;
                next.player.take(roll.amount);
                next.enemy.charged = false;
                report.enemy_hit = Some(Some(roll));
            }
        }
        next.turn += 1;
        Ok((next, report))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AutoBattleOutcome {
    pub winner: Side,
    /// Turn pairs started, including a final partial one.
    pub rounds: u32,
    pub a: Combatant,
    pub b: Combatant,
}

/// Seeded battle without rhythm input: `a` and `b` alternate plain attacks,
/// `a` first. After the round cap the higher health fraction wins, `b` on
/// an exact tie. Both combatants must be alive.
pub fn auto_battle(a: &Combatant, b: &Combatant, seed: u64) -> AutoBattleOutcome {
    assert!(!a.is_dead() && !b.is_dead(), "auto_battle needs two living combatants");
    let (mut a, mut b) = (a.clone(), b.clone());
    a.charged = false;
    a.dodging = false;
    b.charged = false;
    b.dodging = false;
    let mut state = seed;

    for round in 1..=AUTO_BATTLE_ROUND_CAP {
        let (roll, s) = damage(&a, &b, state);
        state = s;
        b.take(roll.amount);
        if b.is_dead() {
            return AutoBattleOutcome { winner: Side::A, rounds: round, a, b };
        }
        let (roll, s) = damage(&b, &a, state);
        state = s;
        a.take(roll.amount);
        if a.is_dead() {
            return AutoBattleOutcome { winner: Side::B, rounds: round, a, b };
        }
    }

    // Compare a_hp / a_max against b_hp / b_max without division.
    let a_frac = u64::from(a.current_health) * u64::from(b.max_health());
    let b_frac = u64::from(b.current_health) * u64::from(a.max_health());
    let winner = if a_frac > b_frac { Side::A } else { Side::B };
    AutoBattleOutcome { winner, rounds: AUTO_BATTLE_ROUND_CAP, a, b }
}
