//! Deterministic blockchain-game stack.
//!
//! A hash-chained, replayable ledger hosts the Genesis character contract.
//! Three game engines read and write characters through it:
//!
//! - **Rhythm Dungeon**: a rhythm roguelike where actions are entered as four
//!   timed presses per two-bar window ([`games::dungeon`]).
//! - **Last Trip**: a ten-chapter storybook run ([`games::last_trip`]).
//! - **Adam's Adventure**: adventure, Dark Lord and Blood Moon battle modes
//!   around a per-chain shared hero ([`games::adventure`]).
//!
//! Everything is a pure function of its inputs and seeds, so any chain can be
//! replayed into a byte-identical contract state. See the crate `examples/`
//! directory for one runnable walkthrough per capability.

pub mod canonical;
pub mod characters;
pub mod combat;
pub mod games;
pub mod genesis;
pub mod harness;
pub mod ledger;
pub mod rhythm;
pub mod rng;

pub use canonical::Digest;
pub use characters::{Attribute, Career, Character, Rule, Weakness};
pub use combat::{Action, BattleState, Combatant};
pub use genesis::{CharacterRecord, ContractCall, GameTag, GenesisState, Receipt};
pub use ledger::{Block, Chain, ChainWriter, Transaction};
pub use rhythm::{BeatGrid, Button, InputEvent, Judgement, MistakeTally};
