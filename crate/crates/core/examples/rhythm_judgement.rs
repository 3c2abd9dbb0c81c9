//! Judge one two-bar window: four presses on the back half of the bar,
//! matched to beats and decoded into an action.

use rhythm_dungeon::rhythm::{decode_action, judge_window, pattern_for};
use rhythm_dungeon::{Action, BeatGrid, Button, InputEvent};

fn main() {
    let grid = BeatGrid::new(120, 0);
    println!(
        "120 bpm: beat every {} us, hit window {} us, reach {} us",
        grid.period_us(),
        grid.hit_window_us(),
        grid.reach_us()
    );
    let attack = pattern_for(Action::Attack).expect("attack has a pattern");
    let beats = grid.judged_beats(0);
    println!("judged beats of window 0: {beats:?}, capture deadline {}", grid.capture_deadline_us(0));

    let takes: [(&str, Vec<InputEvent>); 3] = [
        ("on the beat", beats.iter().zip(attack).map(|(&t, b)| InputEvent::new(t, b)).collect()),
        (
            "sloppy",
            vec![
                InputEvent::new(beats[0] - 40_000, attack[0]),
                InputEvent::new(beats[1] + 200_000, attack[1]),
                InputEvent::new(beats[2], Button::D),
            ],
        ),
        ("silence", Vec::new()),
    ];
    for (label, trace) in takes {
        let judged = judge_window(&grid, 0, attack, &trace);
        println!("{label:>12}: {:?} -> {:?}, {:?}", judged.beats, decode_action(&judged.beats), judged.tally);
    }
}
