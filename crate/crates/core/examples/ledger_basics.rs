//! Submit contract calls, seal blocks, save the chain, then reload, verify
//! and replay it into the same state digest.

use rhythm_dungeon::games::upload_call;
use rhythm_dungeon::{Character, ChainWriter, Chain, GameTag};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut writer = ChainWriter::new(0);
    for (i, name) in ["Ada", "Brann", "Cyra"].into_iter().enumerate() {
        let hero = Character::create_base(name)?;
        let receipt = writer.submit("alice", upload_call(hero, GameTag::RhythmDungeon))?;
        println!("tx {i}: {receipt:?}");
    }
    let block = writer.commit(1_000)?.expect("three pending transactions");
    println!("sealed block {} with digest {}", block.height, block.digest);

    // A malformed character is kept on chain as a rejected transaction.
    let mut cheat = Character::create_base("Cheat")?;
    cheat.strength = 40;
    println!("cheat: {:?}", writer.submit("mallory", upload_call(cheat, GameTag::LastTrip))?);
    writer.commit(2_000)?;

    let dir = tempfile::tempdir()?;
    let path = writer.chain().save_to_dir(dir.path())?;
    let loaded = Chain::load(&path)?;
    let replayed = loaded.replay()?;
    println!("{} blocks, {} transactions", loaded.len(), loaded.tx_count());
    println!("live digest     {}", writer.state().state_digest());
    println!("replayed digest {}", replayed.state_digest());
    assert_eq!(writer.state().state_digest(), replayed.state_digest());
    Ok(())
}
