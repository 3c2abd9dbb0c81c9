//! Turn-based combat: charged attacks, weakness exploits and a seeded
//! auto-battle.

use rhythm_dungeon::combat::{auto_battle, damage};
use rhythm_dungeon::{Action, BattleState, Character, Combatant, Weakness};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut hero = Character::create_base("Hero")?;
    hero.strength = 6;
    hero.luck = 0;
    let mut brute = Character::create_base("Brute")?;
    brute.weakness = Weakness::Late;

    let plain = Combatant::new(hero.clone());
    let exploiting = Combatant::new(hero.clone()).with_stance(Some(Weakness::Late));
    let target = Combatant::new(brute.clone());
    println!("plain hit:      {:?}", damage(&plain, &target, 1).0);
    println!("exploiting hit: {:?}", damage(&exploiting, &target, 1).0);

    let mut battle = BattleState::new(Combatant::new(hero.clone()), Combatant::new(brute.clone()), 42);
    for action in [Action::Charge, Action::Attack, Action::Dodge, Action::Stumble] {
        let (next, report) = battle.resolve_player_action(action)?;
        println!(
            "{action:?}: {:?} / {:?} -> player {} enemy {}",
            report.player_hit, report.enemy_hit, next.player.current_health, next.enemy.current_health
        );
        battle = next;
    }

    let outcome = auto_battle(&Combatant::new(hero), &Combatant::new(brute), 7);
    println!("auto battle: {:?} wins after {} rounds", outcome.winner, outcome.rounds);
    Ok(())
}
