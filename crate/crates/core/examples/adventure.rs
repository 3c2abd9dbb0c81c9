//! Adam's Adventure: adventures grow the chain's shared hero, Adam and a
//! summoned Last Trip ally take on the Dark Lord, and every thirtieth
//! defeat calls a Blood Moon between chains.

use rhythm_dungeon::games::adventure::{blood_moon, complete_adventure, dark_lord_battle};
use rhythm_dungeon::games::dungeon::DungeonSession;
use rhythm_dungeon::games::last_trip::{last_trip_run, Choice};
use rhythm_dungeon::games::upload_call;
use rhythm_dungeon::{ChainWriter, GameTag};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut chains = [ChainWriter::new(0), ChainWriter::new(1)];
    for (id, writer) in chains.iter_mut().enumerate() {
        // A finished Last Trip traveler for the Dark Lord to be fought with.
        let trip = last_trip_run(id as u64, &[Choice::Train; 10])?;
        writer.submit("trip", upload_call(trip.session.character, GameTag::LastTrip))?;
        for round in 0..40u64 {
            let adventurer = DungeonSession::start("Scout", round, 0, 0)?.retire()?;
            for call in complete_adventure(adventurer, id as u64)? {
                writer.submit("adventure", call)?;
            }
            let fight = dark_lord_battle(writer.state(), id as u64, round)?;
            for call in fight.calls {
                writer.submit("dark-lord", call)?;
            }
            writer.commit(round + 1)?;
        }
        let state = writer.state();
        println!(
            "chain {id}: Adam level {}, {} Dark Lord defeats, {} Blood Moon pending",
            state.adam(id as u64).map_or(0, |a| a.level),
            state.dark_lord_defeats(id as u64).unwrap_or(0),
            state.pending_blood_moons(id as u64)
        );
    }

    for home in 0..2u64 {
        let states: Vec<_> = chains.iter().map(|w| (w.chain_id(), w.state())).collect();
        match blood_moon(states, home, 99) {
            Ok(call) => {
                let writer = &mut chains[home as usize];
                println!("chain {home}: {:?}", writer.submit("blood-moon", call)?);
                writer.commit(100)?;
            }
            Err(e) => println!("chain {home}: {e}"),
        }
    }
    Ok(())
}
