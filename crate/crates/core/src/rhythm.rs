//! Beat grid, press judgement, action decoding, mistake tallies and tempo
//! selection.
//!
//! All timing is integer microseconds. An action window spans two bars of
//! four beats: the first bar is a cue bar and the four required presses fall
//! on the beats of the second bar.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::characters::Weakness;
use crate::combat::Action;

pub const BEATS_PER_BAR: u64 = 4;
pub const BARS_PER_ACTION: u64 = 2;
pub const BEATS_PER_WINDOW: u64 = BEATS_PER_BAR * BARS_PER_ACTION;
pub const HIT_WINDOW_CAP_US: u64 = 150_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Button {
    L,
    D,
    U,
    R,
}

impl Button {
    pub const ALL: [Button; 4] = [Button::L, Button::D, Button::U, Button::R];
}

/// Press patterns for the three real actions. Anything else is a stumble.
pub const ACTION_TABLE: [(Action, [Button; 4]); 3] = [
    (Action::Attack, [Button::L, Button::L, Button::R, Button::R]),
    (Action::Dodge, [Button::U, Button::D, Button::U, Button::D]),
    (Action::Charge, [Button::D, Button::D, Button::D, Button::D]),
];

pub fn pattern_for(action: Action) -> Option<[Button; 4]> {
    ACTION_TABLE.iter().find(|(a, _)| *a == action).map(|(_, p)| *p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InputEvent {
    #[serde(rename = "at_us", alias = "at_µs")]
    pub at_us: u64,
    pub button: Button,
}

impl InputEvent {
    pub fn new(at_us: u64, button: Button) -> Self {
        InputEvent { at_us, button }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BeatGrid {
    pub bpm: u32,
    pub origin_ms: u64,
}

impl BeatGrid {
    pub fn new(bpm: u32, origin_ms: u64) -> Self {
        assert!(bpm > 0, "bpm must be positive");
        BeatGrid { bpm, origin_ms }
    }

    /// Beat period, truncated to whole microseconds.
    pub fn period_us(&self) -> u64 {
        60_000_000 / u64::from(self.bpm)
    }

    /// `min(150 ms, T/4)`.
    pub fn hit_window_us(&self) -> u64 {
        HIT_WINDOW_CAP_US.min(self.period_us() / 4)
    }

    /// Outer matching radius, `T/2`.
    pub fn reach_us(&self) -> u64 {
        self.period_us() / 2
    }

    pub fn origin_us(&self) -> u64 {
        self.origin_ms * 1000
    }

    pub fn beat_time_us(&self, beat: u64) -> u64 {
        self.origin_us() + beat * self.period_us()
    }

    /// All eight beat times of window `w`.
    pub fn window_beats(&self, window: u64) -> [u64; BEATS_PER_WINDOW as usize] {
        std::array::from_fn(|i| self.beat_time_us(BEATS_PER_WINDOW * window + i as u64))
    }

    /// The four beats of the action bar of window `w`.
    pub fn judged_beats(&self, window: u64) -> [u64; 4] {
        std::array::from_fn(|i| self.beat_time_us(BEATS_PER_WINDOW * window + BEATS_PER_BAR + i as u64))
    }

    /// Half-open span `[first beat, first beat of next window)`.
    pub fn window_span(&self, window: u64) -> (u64, u64) {
        (
            self.beat_time_us(BEATS_PER_WINDOW * window),
            self.beat_time_us(BEATS_PER_WINDOW * (window + 1)),
        )
    }

    /// Input capture for window `w` closes `T/2` after its last judged beat.
    pub fn capture_deadline_us(&self, window: u64) -> u64 {
        self.judged_beats(window)[3] + self.reach_us()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Judgement {
    Hit(Button),
    Early,
    Late,
    WrongButton,
    Miss,
}

impl Judgement {
    pub fn is_hit(&self) -> bool {
        matches!(self, Judgement::Hit(_))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MistakeTally {
    pub early: u64,
    pub late: u64,
    pub wrong_button: u64,
    pub miss: u64,
}

impl MistakeTally {
    pub fn record(&mut self, judgement: Judgement) {
        match judgement {
            Judgement::Hit(_) => {}
            Judgement::Early => self.early += 1,
            Judgement::Late => self.late += 1,
            Judgement::WrongButton => self.wrong_button += 1,
            Judgement::Miss => self.miss += 1,
        }
    }

    pub fn merge(&mut self, other: &MistakeTally) {
        self.early += other.early;
        self.late += other.late;
        self.wrong_button += other.wrong_button;
        self.miss += other.miss;
    }

    pub fn total(&self) -> u64 {
        self.early + self.late + self.wrong_button + self.miss
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowJudgement {
    pub beats: [Judgement; 4],
    /// Index into the trace of the press consumed by each beat.
    pub consumed: [Option<usize>; 4],
    pub tally: MistakeTally,
}

/// Pairs judged beats with presses. Candidate pairs are those within `T/2`;
/// they are taken greedily by smallest `|dt|`, then earlier press, then
/// earlier beat, each press and beat used at most once.
pub fn match_presses(grid: &BeatGrid, window: u64, trace: &[InputEvent]) -> [Option<(usize, i64)>; 4] {
    let targets = grid.judged_beats(window);
    let reach = grid.reach_us();
    let (lo, hi) = (targets[0].saturating_sub(reach), targets[3] + reach);
    let start = trace.partition_point(|e| e.at_us < lo);

    let mut pairs: Vec<(u64, u64, usize, usize, i64)> = Vec::new();
    for (j, press) in trace.iter().enumerate().skip(start) {
        if press.at_us > hi {
            break;
        }
        for (beat, &target) in targets.iter().enumerate() {
            let dt = press.at_us as i64 - target as i64;
            if dt.unsigned_abs() <= reach {
                pairs.push((dt.unsigned_abs(), press.at_us, j, beat, dt));
            }
        }
    }
    pairs.sort_unstable();

    let mut out = [None; 4];
    let mut used = vec![false; trace.len()];
    for (_, _, j, beat, dt) in pairs {
        if out[beat].is_none() && !used[j] {
            out[beat] = Some((j, dt));
            used[j] = true;
        }
    }
    out
}

/// Judges the four action-bar beats of window `w` against `expected`.
/// `trace` must be sorted by time.
pub fn judge_window(grid: &BeatGrid, window: u64, expected: [Button; 4], trace: &[InputEvent]) -> WindowJudgement {
    debug_assert!(trace.windows(2).all(|w| w[0].at_us <= w[1].at_us), "trace must be sorted");
    let hit = grid.hit_window_us();
    let matched = match_presses(grid, window, trace);
    let mut tally = MistakeTally::default();
    let beats = std::array::from_fn(|i| {
        let judgement = match matched[i] {
            None => Judgement::Miss,
            Some((j, dt)) => classify(dt, hit, trace[j].button, expected[i]),
        };
        tally.record(judgement);
        judgement
    });
    WindowJudgement {
        beats,
        consumed: matched.map(|m| m.map(|(j, _)| j)),
        tally,
    }
}

fn classify(dt: i64, hit_window: u64, pressed: Button, expected: Button) -> Judgement {
    if dt.unsigned_abs() <= hit_window {
        if pressed == expected {
            Judgement::Hit(pressed)
        } else {
            Judgement::WrongButton
        }
    } else if dt < 0 {
        Judgement::Early
    } else {
        Judgement::Late
    }
}

/// The action pattern the player was most plausibly entering: the table row
/// with the fewest disagreements against the matched presses (first row on
/// ties). Used when the caller does not announce an intended action.
pub fn intended_pattern(grid: &BeatGrid, window: u64, trace: &[InputEvent]) -> [Button; 4] {
    let matched = match_presses(grid, window, trace);
    let mismatches = |pattern: &[Button; 4]| {
        matched
            .iter()
            .zip(pattern)
            .filter(|(m, b)| m.map(|(j, _)| trace[j].button) != Some(**b))
            .count()
    };
    ACTION_TABLE
        .iter()
        .min_by_key(|(_, p)| mismatches(p))
        .map(|(_, p)| *p)
        .expect("table is non-empty")
}

/// Maps four judgements to an action. Anything short of four hits forming a
/// table row is a stumble.
pub fn decode_action(judged: &[Judgement; 4]) -> Action {
    let mut pressed = [Button::L; 4];
    for (slot, j) in pressed.iter_mut().zip(judged) {
        match j {
            Judgement::Hit(b) => *slot = *b,
            _ => return Action::Stumble,
        }
    }
    ACTION_TABLE
        .iter()
        .find(|(_, p)| *p == pressed)
        .map_or(Action::Stumble, |(a, _)| *a)
}

/// Most frequent mistake; ties resolve Miss > Late > Early > WrongButton.
pub fn weakness_from_tally(t: &MistakeTally) -> Weakness {
    let ranked = [
        (t.miss, Weakness::Miss),
        (t.late, Weakness::Late),
        (t.early, Weakness::Early),
        (t.wrong_button, Weakness::WrongButton),
    ];
    let mut best = (0, Weakness::None);
    for (count, w) in ranked {
        if count > best.0 {
            best = (count, w);
        }
    }
    best.1
}

/// Difficulty tier 1..=5 for an enemy level; four levels per tier.
pub fn tier_for_level(enemy_level: u32) -> u32 {
    assert!(enemy_level >= 1, "enemy level starts at 1");
    (1 + (enemy_level - 1) / 4).min(5)
}

/// Stronger enemies get quicker music: 80, 100, 120, 140, 160 bpm.
pub fn tempo_for_tier(enemy_level: u32) -> u32 {
    60 + 20 * tier_for_level(enemy_level)
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("trace timestamps decrease at index {0}")]
    Unsorted(usize),
}

pub fn load_trace(path: impl AsRef<Path>) -> Result<Vec<InputEvent>, TraceError> {
    let trace: Vec<InputEvent> = serde_json::from_slice(&std::fs::read(path)?)?;
    if let Some(i) = trace.windows(2).position(|w| w[0].at_us > w[1].at_us) {
        return Err(TraceError::Unsorted(i + 1));
    }
    Ok(trace)
}

pub fn save_trace(path: impl AsRef<Path>, trace: &[InputEvent]) -> Result<(), TraceError> {
    std::fs::write(path, serde_json::to_vec(trace)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const ATTACK: [Button; 4] = [Button::L, Button::L, Button::R, Button::R];

    fn exact(grid: &BeatGrid, w: u64, buttons: [Button; 4]) -> Vec<InputEvent> {
        grid.judged_beats(w)
            .iter()
            .zip(buttons)
            .map(|(&t, b)| InputEvent::new(t, b))
            .collect()
    }

    #[test]
    fn grid_arithmetic() {
        let g = BeatGrid::new(120, 1_000);
        assert_eq!(g.period_us(), 500_000);
        assert_eq!(g.hit_window_us(), 125_000);
        assert_eq!(g.reach_us(), 250_000);
        assert_eq!(g.judged_beats(0)[0], 1_000_000 + 4 * 500_000);
        assert_eq!(g.window_span(2), (1_000_000 + 16 * 500_000, 1_000_000 + 24 * 500_000));
        // 80 bpm: T = 750 ms, T/4 = 187.5 ms so the 150 ms cap applies.
        assert_eq!(BeatGrid::new(80, 0).hit_window_us(), 150_000);
        // Truncation: 60e6 / 7 = 8_571_428.57..
        assert_eq!(BeatGrid::new(7, 0).period_us(), 8_571_428);
    }

    #[test]
    fn exact_presses_are_hits() {
        let g = BeatGrid::new(120, 0);
        let j = judge_window(&g, 3, ATTACK, &exact(&g, 3, ATTACK));
        assert!(j.beats.iter().all(Judgement::is_hit));
        assert_eq!(j.tally.total(), 0);
        assert_eq!(decode_action(&j.beats), Action::Attack);
    }

    #[test]
    fn empty_trace_is_four_misses() {
        let g = BeatGrid::new(100, 0);
        let j = judge_window(&g, 0, ATTACK, &[]);
        assert_eq!(j.beats, [Judgement::Miss; 4]);
        assert_eq!(j.tally.miss, 4);
        assert_eq!(decode_action(&j.beats), Action::Stumble);
    }

    #[test]
    fn late_press_at_130ms() {
        // 120 bpm: w_hit = 125 ms, reach = 250 ms; 125 < 130 <= 250 is Late.
        let g = BeatGrid::new(120, 0);
        let mut trace = exact(&g, 0, ATTACK);
        trace[1].at_us += 130_000;
        let j = judge_window(&g, 0, ATTACK, &trace);
        assert_eq!(j.beats[1], Judgement::Late);
        assert_eq!(j.tally.late, 1);
    }

    #[test]
    fn classification_boundaries() {
        let g = BeatGrid::new(120, 0);
        let target = g.judged_beats(0)[0];
        let at = |offset: i64, b| vec![InputEvent::new((target as i64 + offset) as u64, b)];
        let first = |t: Vec<InputEvent>| judge_window(&g, 0, ATTACK, &t).beats[0];
        assert_eq!(first(at(125_000, Button::L)), Judgement::Hit(Button::L));
        assert_eq!(first(at(-125_000, Button::L)), Judgement::Hit(Button::L));
        assert_eq!(first(at(125_001, Button::L)), Judgement::Late);
        assert_eq!(first(at(-125_001, Button::L)), Judgement::Early);
        assert_eq!(first(at(-250_000, Button::R)), Judgement::Early);
        assert_eq!(first(at(0, Button::U)), Judgement::WrongButton);
        // -250_001 is out of reach of beat 0 and of every other beat.
        assert_eq!(first(at(-250_001, Button::L)), Judgement::Miss);
    }

    #[test]
    fn a_press_is_consumed_once() {
        let g = BeatGrid::new(120, 0);
        let beats = g.judged_beats(0);
        // One press exactly between beats 0 and 1: tie on |dt| goes to the
        // earlier beat, beat 1 gets nothing.
        let mid = (beats[0] + beats[1]) / 2;
        let j = judge_window(&g, 0, ATTACK, &[InputEvent::new(mid, Button::L)]);
        assert_eq!(j.beats[0], Judgement::Late);
        assert_eq!(j.beats[1], Judgement::Miss);
        assert_eq!(j.consumed[0], Some(0));
    }

    #[test]
    fn decode_table() {
        let hits = |p: [Button; 4]| p.map(Judgement::Hit);
        assert_eq!(decode_action(&hits(ATTACK)), Action::Attack);
        assert_eq!(decode_action(&hits([Button::U, Button::D, Button::U, Button::D])), Action::Dodge);
        assert_eq!(decode_action(&hits([Button::D; 4])), Action::Charge);
        assert_eq!(decode_action(&hits([Button::R; 4])), Action::Stumble);
        let mut three = hits(ATTACK);
        three[2] = Judgement::Late;
        assert_eq!(decode_action(&three), Action::Stumble);
    }

    #[test]
    fn intent_follows_the_presses() {
        let g = BeatGrid::new(140, 0);
        let dodge = [Button::U, Button::D, Button::U, Button::D];
        assert_eq!(intended_pattern(&g, 1, &exact(&g, 1, dodge)), dodge);
        let mut sloppy = exact(&g, 1, dodge);
        sloppy[0].button = Button::R;
        assert_eq!(intended_pattern(&g, 1, &sloppy), dodge);
        assert_eq!(intended_pattern(&g, 1, &[]), ATTACK);
    }

    #[test]
    fn weakness_examples() {
        let t = |early, late, wrong_button, miss| MistakeTally { early, late, wrong_button, miss };
        assert_eq!(weakness_from_tally(&t(2, 5, 1, 0)), Weakness::Late);
        assert_eq!(weakness_from_tally(&t(0, 0, 0, 0)), Weakness::None);
        assert_eq!(weakness_from_tally(&t(3, 3, 0, 3)), Weakness::Miss);
        assert_eq!(weakness_from_tally(&t(1, 0, 1, 0)), Weakness::Early);
        assert_eq!(weakness_from_tally(&t(0, 0, 1, 0)), Weakness::WrongButton);
    }

    #[test]
    fn tempo_examples() {
        assert_eq!(tempo_for_tier(1), 80);
        assert_eq!(tempo_for_tier(4), 80);
        assert_eq!(tempo_for_tier(5), 100);
        assert_eq!(tempo_for_tier(17), 160);
        assert_eq!(tempo_for_tier(40), 160);
        assert!((1..100).all(|l| tempo_for_tier(l) <= tempo_for_tier(l + 1)));
    }

    #[test]
    fn trace_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.json");
        let g = BeatGrid::new(100, 5);
        let trace = exact(&g, 0, ATTACK);
        save_trace(&path, &trace).unwrap();
        assert_eq!(load_trace(&path).unwrap(), trace);

        std::fs::write(&path, r#"[{"at_µs":10,"button":"L"},{"at_us":5,"button":"R"}]"#).unwrap();
        assert!(matches!(load_trace(&path), Err(TraceError::Unsorted(1))));
    }

    proptest! {
        #[test]
        fn translation_invariance(
            bpm in 60u32..200,
            window in 0u64..20,
            offsets in proptest::collection::vec((-400_000i64..400_000, 0usize..4), 0..10),
            shift_ms in 0u64..1_000_000,
        ) {
            let g = BeatGrid::new(bpm, 10_000);
            let base = g.judged_beats(window)[0] as i64;
            let mut trace: Vec<InputEvent> = offsets
                .iter()
                .map(|&(o, b)| InputEvent::new((base + o * 3) as u64, Button::ALL[b]))
                .collect();
            trace.sort_by_key(|e| e.at_us);
            let shifted_grid = BeatGrid::new(bpm, 10_000 + shift_ms);
            let shifted: Vec<InputEvent> = trace
                .iter()
                .map(|e| InputEvent::new(e.at_us + shift_ms * 1000, e.button))
                .collect();
            let a = judge_window(&g, window, ATTACK, &trace);
            let b = judge_window(&shifted_grid, window, ATTACK, &shifted);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn hits_respect_the_window_exactly(
            bpm in 40u32..240,
            offsets in proptest::collection::vec(-300_000i64..300_000, 4),
        ) {
            let g = BeatGrid::new(bpm, 0);
            let beats = g.judged_beats(5);
            let mut trace: Vec<InputEvent> = beats
                .iter()
                .zip(&offsets)
                .map(|(&t, &o)| InputEvent::new((t as i64 + o) as u64, Button::L))
                .collect();
            trace.sort_by_key(|e| e.at_us);
            let j = judge_window(&g, 5, [Button::L; 4], &trace);
            for (i, judgement) in j.beats.iter().enumerate() {
                if judgement.is_hit() {
                    let press = trace[j.consumed[i].unwrap()];
                    let dt = press.at_us as i64 - beats[i] as i64;
                    prop_assert!(dt.unsigned_abs() <= g.hit_window_us());
                }
            }
            let mut used: Vec<usize> = j.consumed.iter().flatten().copied().collect();
            let n = used.len();
            used.sort_unstable();
            used.dedup();
            prop_assert_eq!(used.len(), n);
        }
    }
}
