//! Last Trip: ten storybook choices, then a final battle against a rival
//! summoned from another game when the contract has one.

use rhythm_dungeon::games::last_trip::{last_trip_run, last_trip_run_with_rivals, Choice};
use rhythm_dungeon::games::{procedural_character, upload_call};
use rhythm_dungeon::{Attribute, ChainWriter, GameTag};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let policy = [Choice::Train, Choice::Train, Choice::Fortify, Choice::Rest, Choice::Train].repeat(2);

    let solo = last_trip_run(3, &policy)?;
    let c = &solo.session.character;
    println!("{} reaches level {} ({}/{}/{}/{})", c.name, c.level, c.strength, c.armor, c.luck, c.vitality);
    println!("vs procedural foe: {:?} wins", solo.battle.winner);

    // Seed the contract with a dungeon veteran to be summoned as the rival.
    let mut writer = ChainWriter::new(0);
    let veteran = procedural_character("Veteran", 5, Attribute::Armor);
    writer.submit("dungeon", upload_call(veteran, GameTag::RhythmDungeon))?;
    writer.commit(1)?;

    let run = last_trip_run_with_rivals(writer.state(), 3, &policy)?;
    println!("rival {:?}: {:?} wins", run.rival, run.battle.winner);
    if let Some(call) = run.upload {
        println!("upload: {:?}", writer.submit("last-trip", call)?);
    }
    Ok(())
}
