use rhythm_dungeon::games::adventure::{complete_adventure, dark_lord_battle};
use rhythm_dungeon::games::dungeon::DungeonSession;
use rhythm_dungeon::games::last_trip::{last_trip_run_with_rivals, Choice};
use rhythm_dungeon::games::upload_call;
use rhythm_dungeon::harness::bot::{bot_dungeon, BotProfile};
use rhythm_dungeon::harness::{run_scenario, Scenario};
use rhythm_dungeon::{Chain, ChainWriter, GameTag, Receipt};

#[test]
fn three_games_share_one_chain() {
    let mut writer = ChainWriter::new(0);
    let profile = BotProfile { accuracy_percent: 100, jitter_us: 0, p_fetch_percent: 0, max_rooms: 1 };
    let run = bot_dungeon(writer.state(), "Drummer", 15, profile).unwrap();
    let receipt = writer.submit("rd", run.session.finish_and_upload().unwrap()).unwrap();
    assert!(matches!(receipt, Receipt::Uploaded { .. }), "{receipt:?}");

    let trip = last_trip_run_with_rivals(writer.state(), 1, &[Choice::Train; 10]).unwrap();
    writer.submit("lt", upload_call(trip.session.character, GameTag::LastTrip)).unwrap();
    writer.commit(1).unwrap();

    let scout = DungeonSession::start("Scout", 3, 0, 0).unwrap().retire().unwrap();
    for call in complete_adventure(scout, 0).unwrap() {
        writer.submit("aa", call).unwrap();
    }
    let fight = dark_lord_battle(writer.state(), 0, 9).unwrap();
    for call in fight.calls {
        writer.submit("aa", call).unwrap();
    }
    writer.commit(2).unwrap();

    let chain = Chain::from_ndjson(0, writer.chain().to_ndjson().as_bytes()).unwrap();
    let state = chain.replay().unwrap();
    assert_eq!(state.state_digest(), writer.state().state_digest());
    assert_eq!(state.characters().len(), 3);
    assert!(state.rejections().is_empty());
}

#[test]
fn scenario_files_round_trip() {
    let s = Scenario::from_toml(
        "chains = 3\nplayers = 4\nsessions_per_player = 5\nbot_accuracy_percent = 90\n\
         bot_jitter_us = 10000\np_fetch_percent = 50\nmaster_seed = 77\n",
    )
    .unwrap();
    let run = run_scenario(&s).unwrap();
    let dir = tempfile::tempdir().unwrap();
    run.write_to(dir.path()).unwrap();
    for chain in &run.chains {
        let loaded = Chain::load(dir.path().join(Chain::file_name(chain.chain_id))).unwrap();
        assert_eq!(&loaded, chain);
    }
    let metrics: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("metrics.json")).unwrap()).unwrap();
    // Rounds with nothing to record seal no block.
    let blocks: usize = run.chains.iter().map(Chain::len).sum();
    assert!(blocks > 0 && blocks <= 15);
    assert_eq!(metrics["ledger"]["blocks"], blocks);
}
